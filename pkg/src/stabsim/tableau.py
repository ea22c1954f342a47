"""
穩定子表格模組

Aaronson-Gottesman 表格：前 n 列為反穩定子、後 n 列為穩定子，
每列以 X、Z 兩個布林向量加上一個符號位元表示。
"""

from typing import Optional, Sequence, Tuple

import numpy as np

from ..errors import CircuitError

SINGLE_QUBIT_GATES = ('H', 'S', 'X', 'Y', 'Z', 'I')
TWO_QUBIT_GATES = ('CNOT',)


def _phase_exponent(x1, z1, x2, z2) -> int:
    # 兩個 Pauli 列相乘時 i 的次方（mod 4 之前的總和）
    g = np.where(x1 & z1, z2.astype(int) - x2.astype(int),
                 np.where(x1, z2 * (2 * x2.astype(int) - 1),
                          np.where(z1, x2 * (1 - 2 * z2.astype(int)), 0)))
    return int(g.sum())


class StabilizerTableau:
    """n 個量子位元的穩定子態，初始為 |0...0>"""

    def __init__(self, n: int):
        if n < 1:
            raise CircuitError(f"量子位元數必須至少為 1，得到 {n}")
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=bool)
        self.z = np.zeros((2 * n, n), dtype=bool)
        self.r = np.zeros(2 * n, dtype=bool)
        self.x[np.arange(n), np.arange(n)] = True
        self.z[n + np.arange(n), np.arange(n)] = True

    def copy(self) -> 'StabilizerTableau':
        other = StabilizerTableau.__new__(StabilizerTableau)
        other.n = self.n
        other.x, other.z, other.r = self.x.copy(), self.z.copy(), self.r.copy()
        return other

    def _check_targets(self, targets: Sequence[int]) -> None:
        if len(set(targets)) != len(targets):
            raise CircuitError(f"目標量子位元重複: {tuple(targets)}")
        for q in targets:
            if not 0 <= q < self.n:
                raise CircuitError(f"量子位元 {q} 超出範圍 0..{self.n - 1}")

    def h(self, a: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, a]
        self.x[:, a], self.z[:, a] = self.z[:, a].copy(), self.x[:, a].copy()

    def s(self, a: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, a]
        self.z[:, a] ^= self.x[:, a]

    def cnot(self, a: int, b: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, b] & ~(self.x[:, b] ^ self.z[:, a])
        self.x[:, b] ^= self.x[:, a]
        self.z[:, a] ^= self.z[:, b]

    def pauli(self, a: int, kind: str) -> None:
        """套用 X、Y、Z，只改變符號"""
        if kind == 'X':
            self.r ^= self.z[:, a]
        elif kind == 'Z':
            self.r ^= self.x[:, a]
        elif kind == 'Y':
            self.r ^= self.x[:, a] ^ self.z[:, a]
        elif kind != 'I':
            raise CircuitError(f"未知的 Pauli: {kind}")

    def _rowsum(self, h: int, i: int) -> None:
        total = 2 * int(self.r[h]) + 2 * int(self.r[i]) + _phase_exponent(
            self.x[i], self.z[i], self.x[h], self.z[h])
        self.r[h] = total % 4 == 2
        self.x[h] ^= self.x[i]
        self.z[h] ^= self.z[i]

    def measure_pauli(self, xs: np.ndarray, zs: np.ndarray,
                      rng: Optional[np.random.Generator] = None) -> Tuple[int, bool]:
        """量測 Pauli 乘積算符 (+1 -> 0, -1 -> 1)

        Args:
            xs: 算符的 X 部分
            zs: 算符的 Z 部分
            rng: 隨機結果時使用；None 時隨機結果一律取 0

        Returns:
            (結果位元, 是否為確定性結果)
        """
        n = self.n
        xs = np.asarray(xs, dtype=bool)
        zs = np.asarray(zs, dtype=bool)
        anti = ((self.x & zs) ^ (self.z & xs)).sum(axis=1) % 2 == 1
        stab_anti = np.flatnonzero(anti[n:])
        if stab_anti.size:
            p = n + int(stab_anti[0])
            for i in np.flatnonzero(anti):
                if i != p:
                    self._rowsum(int(i), p)
            self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p], self.z[p], self.r[p]
            outcome = int(rng.integers(2)) if rng is not None else 0
            self.x[p], self.z[p], self.r[p] = xs, zs, bool(outcome)
            return outcome, False

        # 確定性結果：在暫存列累積對應的穩定子
        scratch = StabilizerTableau.__new__(StabilizerTableau)
        scratch.n = n
        scratch.x = np.vstack([self.x, np.zeros((1, n), dtype=bool)])
        scratch.z = np.vstack([self.z, np.zeros((1, n), dtype=bool)])
        scratch.r = np.append(self.r, False)
        for i in np.flatnonzero(anti[:n]):
            scratch._rowsum(2 * n, n + int(i))
        return int(scratch.r[2 * n]), True

    def measure(self, a: int, rng: Optional[np.random.Generator] = None,
                basis: str = 'Z') -> Tuple[int, bool]:
        """量測單一量子位元（Z 或 X 基底）"""
        self._check_targets([a])
        xs = np.zeros(self.n, dtype=bool)
        zs = np.zeros(self.n, dtype=bool)
        if basis == 'Z':
            zs[a] = True
        elif basis == 'X':
            xs[a] = True
        else:
            raise CircuitError(f"未知的量測基底: {basis}")
        return self.measure_pauli(xs, zs, rng)

    def reset(self, a: int, rng: Optional[np.random.Generator] = None) -> None:
        outcome, _ = self.measure(a, rng)
        if outcome:
            self.pauli(a, 'X')

    def is_symplectic(self) -> bool:
        """反穩定子 i 只與穩定子 i 反交換，其餘列兩兩交換"""
        n = self.n
        x = self.x.astype(np.int64)
        z = self.z.astype(np.int64)
        product = (x @ z.T + z @ x.T) % 2
        expected = np.zeros((2 * n, 2 * n), dtype=np.int64)
        expected[np.arange(n), n + np.arange(n)] = 1
        expected[n + np.arange(n), np.arange(n)] = 1
        return bool(np.array_equal(product, expected))

    def stabilizers(self):
        """以字串列出穩定子，例如 '+XX'"""
        out = []
        for row in range(self.n, 2 * self.n):
            letters = ''.join('IXZY'[int(xb) + 2 * int(zb)]
                              for xb, zb in zip(self.x[row], self.z[row]))
            out.append(('-' if self.r[row] else '+') + letters)
        return out


def apply_clifford(state: StabilizerTableau, gate: str,
                   targets: Sequence[int]) -> StabilizerTableau:
    """以 Clifford 閘共軛所有生成元，原地更新並回傳同一個表格

    Raises:
        CircuitError: 未知的閘、目標數量不符、重複或超出範圍
    """
    targets = tuple(int(q) for q in targets)
    if gate in SINGLE_QUBIT_GATES:
        if len(targets) != 1:
            raise CircuitError(f"{gate} 需要 1 個目標，得到 {targets}")
    elif gate in TWO_QUBIT_GATES:
        if len(targets) != 2:
            raise CircuitError(f"{gate} 需要 2 個目標，得到 {targets}")
    else:
        raise CircuitError(f"未知的閘: {gate}")
    state._check_targets(targets)

    if gate == 'H':
        state.h(targets[0])
    elif gate == 'S':
        state.s(targets[0])
    elif gate == 'CNOT':
        state.cnot(*targets)
    else:
        state.pauli(targets[0], gate)
    return state
