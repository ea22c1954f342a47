"""
Steane 碼電路編譯模組

把邏輯操作（編碼、驗證過的輔助塊、Steane 徵狀擷取、橫向閘）展開成物理操作，
並依磚塊幾何插入彈道移動。時間以每個量子位元的 ASAP 時鐘計算，等待期間插入閒置操作。
"""

import itertools
import logging
from contextlib import contextmanager
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

from ..errors import CircuitError
from ..layout import LogicalQubitTile, STEANE_LEVEL2
from ..params import TechnologyParams, ballistic_latency
from .circuit import (AllOf, AnyOf, CircuitIR, Correct, Differ, Gate, Idle, InjectError,
                      LogicalCheck, Measure, Move, Parity, Reset, Select)
from .codes import (BITFLIP_CHECKS, BITFLIP_LOOKUP, ENCODER_CNOTS, ENCODER_PIVOTS,
                    HAMMING_LOOKUP, STEANE_CHECKS, VERIFICATION_SUPPORTS)
from .engine import FAILURE_KEY

logger = logging.getLogger(__name__)

MAX_PREP_ATTEMPTS = 2
# 第 2 層以上的輔助塊多一次準備機會
MAX_OUTER_PREP_ATTEMPTS = 3
MAX_EXTRACTIONS = 3


@dataclass(frozen=True)
class Block:
    """第 level 層的編碼區塊，qubits 依子區塊連續排列"""
    level: int
    qubits: Tuple[int, ...]

    @property
    def children(self) -> List['Block']:
        size = len(self.qubits) // 7
        return [Block(self.level - 1, self.qubits[i * size:(i + 1) * size]) for i in range(7)]


class SteaneCompiler:
    """遞迴 Steane 碼的電路產生器

    Args:
        params: 技術參數，決定各操作時間
        tile: 磚塊幾何，hop_cells 為第一層區塊之間的移動距離
        max_prep_attempts: 第 1 層輔助塊驗證失敗時最多準備幾次
        max_outer_prep_attempts: 第 2 層以上輔助塊的準備次數上限
        max_extractions: 重複擷取徵狀直到連續兩次相同的上限
    """

    def __init__(self, params: TechnologyParams, tile: LogicalQubitTile = STEANE_LEVEL2,
                 max_prep_attempts: int = MAX_PREP_ATTEMPTS,
                 max_extractions: int = MAX_EXTRACTIONS,
                 max_outer_prep_attempts: int = MAX_OUTER_PREP_ATTEMPTS):
        if min(max_prep_attempts, max_outer_prep_attempts, max_extractions) < 1:
            raise CircuitError("準備次數與擷取次數上限都必須至少為 1")
        self.params = params
        self.tile = tile
        self.max_prep_attempts = max_prep_attempts
        self.max_outer_prep_attempts = max_outer_prep_attempts
        self.max_extractions = max_extractions
        self.circuit = CircuitIR()
        self.nontrivial: Dict[int, List[Tuple[str, Optional[str]]]] = {}
        self.rejections: List[Tuple[str, Optional[str]]] = []
        self.circuit.metadata['nontrivial'] = self.nontrivial
        self.circuit.metadata['rejections'] = self.rejections
        self._clock: Dict[int, float] = {}
        self._free: List[int] = []
        self._size = 0
        self._condition: Optional[str] = None
        self._keys = itertools.count()

    # ---- 暫存器與條件 ----

    def _key(self, prefix: str) -> str:
        return f"{prefix}{next(self._keys)}"

    def _append(self, op):
        return self.circuit.append(op)

    @contextmanager
    def _conditional(self, key: str):
        """區塊內的操作只在 key 為真的 trial 上執行；結束後時鐘回到進入前"""
        outer = self._condition
        if outer is None:
            combined = key
        else:
            combined = self._key('c')
            self._append(AllOf(combined, (outer, key), condition=outer))
        saved = dict(self._clock)
        self._condition = combined
        try:
            yield combined
        finally:
            self._condition = outer
            self._clock.update(saved)

    # ---- 量子位元配置 ----

    def _alloc(self, count: int, start: float = 0.0) -> Tuple[int, ...]:
        qubits = []
        for _ in range(count):
            if self._free:
                q = self._free.pop()
            else:
                q = self._size
                self._size += 1
            self._clock[q] = start
            qubits.append(q)
        return tuple(qubits)

    def _release(self, qubits: Sequence[int]) -> None:
        self._free.extend(reversed(qubits))

    def _sync(self, qubits: Sequence[int]) -> float:
        now = max(self._clock[q] for q in qubits)
        for q in qubits:
            gap = now - self._clock[q]
            if gap > 0:
                self._append(Idle(q, gap, condition=self._condition))
                self._clock[q] = now
        return now

    def _align_ahead(self, ancilla: Block, blocks: Sequence[Block]) -> None:
        """輔助塊提前準備：把整塊的時間平移到資料塊就緒的時刻，不產生等待"""
        ready = max(self._clock[q] for block in blocks for q in block.qubits)
        shift = ready - max(self._clock[q] for q in ancilla.qubits)
        for q in ancilla.qubits:
            self._clock[q] += shift

    # ---- 物理操作 ----

    def _reset(self, q: int, noisy: bool = True) -> None:
        self._append(Reset(q, condition=self._condition, noisy=noisy))
        if noisy:
            self._clock[q] += self.params.single_gate_time

    def _single(self, kind: str, q: int, noisy: bool = True) -> None:
        self._append(Gate(kind, (q,), condition=self._condition, noisy=noisy))
        if noisy:
            self._clock[q] += self.params.single_gate_time

    def _cnot(self, control: int, target: int, turns: int, mover: Optional[int] = None,
              noisy: bool = True) -> None:
        if not noisy:
            self._append(Gate('CNOT', (control, target), condition=self._condition, noisy=False))
            return
        mover = target if mover is None else mover
        self._sync((control, target))
        hop = self.tile.hop_cells
        travel = ballistic_latency(hop, turns, self.params)
        self._append(Move(mover, hop, turns, travel, condition=self._condition))
        self._append(Gate('CNOT', (control, target), condition=self._condition))
        self._append(Move(mover, hop, turns, travel, condition=self._condition))
        elapsed = 2 * travel + 2 * self.params.cooling_time + self.params.double_gate_time
        self._clock[control] += elapsed
        self._clock[target] += elapsed

    def _measure(self, q: int, basis: str, noisy: bool = True) -> str:
        key = self._key('m')
        self._append(Measure(q, basis, key, condition=self._condition, noisy=noisy))
        if noisy:
            self._clock[q] += self.params.measure_time
        return key

    def _measure_block(self, block: Block, basis: str) -> Tuple[str, ...]:
        return tuple(self._measure(q, basis) for q in block.qubits)

    # ---- 古典處理 ----

    def _syndrome(self, bits: Sequence[str]) -> Tuple[str, ...]:
        keys = []
        for support in STEANE_CHECKS:
            key = self._key('s')
            self._append(Parity(key, tuple(bits[i] for i in support), condition=self._condition))
            keys.append(key)
        return tuple(keys)

    def _decode_bits(self, bits: Sequence[str], level: int) -> str:
        """把量測到的 7^level 個位元解碼成一個邏輯位元"""
        if level == 0:
            return bits[0]
        size = len(bits) // 7
        logical = [self._decode_bits(bits[i * size:(i + 1) * size], level - 1) for i in range(7)]
        nonzero = self._key('nz')
        self._append(AnyOf(nonzero, self._syndrome(logical), condition=self._condition))
        value = self._key('l')
        self._append(Parity(value, tuple(logical) + (nonzero,), condition=self._condition))
        return value

    # ---- 邏輯操作 ----

    def logical_gate(self, kind: str, block: Block, noisy: bool = True) -> None:
        """橫向單量子位元閘；第 2 層起每個子區塊做完閘後接一次下層更正"""
        if block.level <= 1:
            for q in block.qubits:
                self._single(kind, q, noisy)
            return
        for child in block.children:
            self.logical_gate(kind, child, noisy)
            if noisy:
                self.error_correct(child)

    def logical_cnot(self, control: Block, target: Block, noisy: bool = True,
                     correct: Sequence[str] = ('control', 'target'),
                     mover: str = 'target') -> None:
        """兩個區塊之間的橫向 CNOT；區塊之間的移動經過兩個轉角"""
        if control.level != target.level:
            raise CircuitError(f"橫向 CNOT 的兩個區塊層級不同: {control.level} 與 {target.level}")
        if control.level == 1:
            for a, b in zip(control.qubits, target.qubits):
                self._cnot(a, b, 2, mover=b if mover == 'target' else a, noisy=noisy)
            return
        for c_child, t_child in zip(control.children, target.children):
            self.logical_cnot(c_child, t_child, noisy, correct, mover)
            if noisy:
                if 'control' in correct:
                    self.error_correct(c_child)
                if 'target' in correct:
                    self.error_correct(t_child)

    def _encode_level1(self, block: Block, state: str, noisy: bool) -> None:
        q = block.qubits
        for pivot in ENCODER_PIVOTS:
            self._single('H', q[pivot], noisy)
        for c, t in ENCODER_CNOTS:
            self._cnot(q[c], q[t], 0, noisy=noisy)
        if state == '+':
            for x in q:
                self._single('H', x, noisy)

    def _encode_outer(self, block: Block, state: str, noisy: bool) -> None:
        children = block.children
        for c, t in ENCODER_CNOTS:
            self.logical_cnot(children[c], children[t], noisy=noisy)
        if state == '+':
            self.logical_gate('H', block, noisy)

    def encode_perfect(self, block: Block, state: str = '0') -> None:
        """無雜訊編碼（重置後的區塊）"""
        if block.level == 0:
            if state == '+':
                self._single('H', block.qubits[0], noisy=False)
        elif block.level == 1:
            self._encode_level1(block, state, noisy=False)
        else:
            for index, child in enumerate(block.children):
                self.encode_perfect(child, '+' if index in ENCODER_PIVOTS else '0')
            self._encode_outer(block, state, noisy=False)

    def _prepare_into(self, block: Block, state: str) -> None:
        if block.level == 1:
            for q in block.qubits:
                self._reset(q)
            self._encode_level1(block, state, noisy=True)
            return
        for index, child in enumerate(block.children):
            self._prepare_verified(child, '+' if index in ENCODER_PIVOTS else '0')
        self._encode_outer(block, state, noisy=True)

    def _verify(self, block: Block, state: str) -> str:
        """|0>_L 檢查 Z 型算符、|+>_L 檢查 X 型算符；回傳拒絕旗標"""
        keys = []
        if block.level == 1:
            for support in VERIFICATION_SUPPORTS:
                start = max(self._clock[block.qubits[i]] for i in support)
                (v,) = self._alloc(1, start)
                self._reset(v)
                if state == '0':
                    for i in support:
                        self._cnot(block.qubits[i], v, 0, mover=v)
                    keys.append(self._measure(v, 'Z'))
                else:
                    self._single('H', v)
                    for i in support:
                        self._cnot(v, block.qubits[i], 0, mover=v)
                    keys.append(self._measure(v, 'X'))
                self._release((v,))
        else:
            children = block.children
            for support in VERIFICATION_SUPPORTS:
                check = self.prepare_ancilla(block.level - 1, state)
                self._align_ahead(check, [children[i] for i in support])
                for i in support:
                    if state == '0':
                        self.logical_cnot(children[i], check, correct=())
                    else:
                        self.logical_cnot(check, children[i], correct=(), mover='control')
                bits = self._measure_block(check, 'Z' if state == '0' else 'X')
                keys.append(self._decode_bits(bits, check.level))
                self._release(check.qubits)
            for child in children:
                self.error_correct(child)
        reject = self._key('reject')
        self._append(AnyOf(reject, tuple(keys), condition=self._condition))
        self.rejections.append((reject, self._condition))
        return reject

    def _prepare_verified(self, block: Block, state: str) -> None:
        self._prepare_into(block, state)
        reject = self._verify(block, state)
        attempts = self.max_prep_attempts if block.level <= 1 else self.max_outer_prep_attempts
        for _ in range(1, attempts):
            with self._conditional(reject):
                self._prepare_into(block, state)
                reject = self._verify(block, state)

    def prepare_ancilla(self, level: int, state: str) -> Block:
        """準備並驗證第 level 層的 |0>_L 或 |+>_L 輔助塊"""
        if state not in ('0', '+'):
            raise CircuitError(f"輔助塊狀態必須是 '0' 或 '+'，得到 {state!r}")
        block = Block(level, self._alloc(7 ** level))
        self._prepare_verified(block, state)
        return block

    def _extract(self, block: Block, kind: str) -> Tuple[str, ...]:
        """Steane 徵狀擷取：kind='X' 偵測 X 錯誤（|+>_L 輔助塊），'Z' 偵測 Z 錯誤（|0>_L）"""
        ancilla = self.prepare_ancilla(block.level, '+' if kind == 'X' else '0')
        self._align_ahead(ancilla, [block])
        if kind == 'X':
            self.logical_cnot(block, ancilla, correct=('control',))
            bits = self._measure_block(ancilla, 'Z')
        else:
            self.logical_cnot(ancilla, block, correct=('target',), mover='control')
            bits = self._measure_block(ancilla, 'X')
        self._release(ancilla.qubits)
        if block.level == 1:
            return self._syndrome(bits)
        size = len(bits) // 7
        logical = [self._decode_bits(bits[i * size:(i + 1) * size], block.level - 1)
                   for i in range(7)]
        return self._syndrome(logical)

    def _agree(self, block: Block, kind: str, previous: Tuple[str, ...],
               remaining: int) -> Tuple[str, ...]:
        if remaining == 0:
            return previous
        current = self._extract(block, kind)
        if remaining == 1:
            return current
        differ = self._key('d')
        self._append(Differ(differ, previous, current, condition=self._condition))
        final = tuple(self._key('f') for _ in current)
        with self._conditional(differ):
            deeper = self._agree(block, kind, current, remaining - 1)
        self._append(Select(final, differ, current, deeper, condition=self._condition))
        return final

    def _correct_half(self, block: Block, kind: str) -> None:
        first = self._extract(block, kind)
        nonzero = self._key('nt')
        self._append(AnyOf(nonzero, first, condition=self._condition))
        self.nontrivial.setdefault(block.level, []).append((nonzero, self._condition))
        if block.level == 1:
            groups = tuple((q,) for q in block.qubits)
        else:
            groups = tuple(child.qubits for child in block.children)
        with self._conditional(nonzero):
            final = self._agree(block, kind, first, self.max_extractions - 1)
            self._append(Correct(groups, final, kind, HAMMING_LOOKUP, condition=self._condition))

    def error_correct(self, block: Block) -> None:
        """先更正 X 錯誤再更正 Z 錯誤；非平凡徵狀時重複擷取直到連續兩次一致"""
        if block.level < 1:
            return
        self._correct_half(block, 'X')
        self._correct_half(block, 'Z')

    # ---- 實驗電路 ----

    def threshold_experiment(self, level: int) -> CircuitIR:
        """完美編碼的邏輯量子位元與參考量子位元成 Bell 對，做一次橫向 H 與一輪更正後比對"""
        if level < 0:
            raise CircuitError(f"層級不可為負: {level}")
        (reference,) = self._alloc(1)
        data = Block(level, self._alloc(7 ** level))
        for q in (reference,) + data.qubits:
            self._reset(q, noisy=False)
        self.encode_perfect(data, '0')
        self._single('H', reference, noisy=False)
        for q in data.qubits:
            self._cnot(reference, q, 0, noisy=False)

        self.logical_gate('H', data)
        self.error_correct(data)

        for q in data.qubits:
            self._single('H', q, noisy=False)
        self._append(LogicalCheck(FAILURE_KEY, data.qubits, reference, 'steane', level))
        self.circuit.metadata.update(
            level=level, data=data.qubits, reference=reference,
            duration_us=max(self._clock[q] for q in data.qubits))
        self.circuit.validate()
        logger.info(f"第 {level} 層門檻電路：{len(self.circuit)} 個操作、"
                    f"{self.circuit.n_qubits} 個量子位元")
        return self.circuit


@lru_cache(maxsize=8)
def threshold_circuit(level: int, params: TechnologyParams,
                      tile: LogicalQubitTile = STEANE_LEVEL2) -> CircuitIR:
    """編譯（並快取）第 level 層的門檻實驗電路；雜訊機率在執行時才套用"""
    return SteaneCompiler(params, tile).threshold_experiment(level)


def bitflip_circuit(injected: Optional[int] = None) -> CircuitIR:
    """三位元翻轉碼驗證電路

    資料 0-2、輔助 3-4、參考 5。每個資料位元經過一個帶雜訊的單位閘
    （或在 injected 位置刻意注入一個 X），之後做無雜訊的徵狀擷取與更正。
    """
    circuit = CircuitIR()
    data, ancilla, reference = (0, 1, 2), (3, 4), 5
    for q in data + ancilla + (reference,):
        circuit.append(Reset(q, noisy=False))
    circuit.append(Gate('H', (reference,), noisy=False))
    for q in data:
        circuit.append(Gate('CNOT', (reference, q), noisy=False))
    if injected is None:
        for q in data:
            circuit.append(Gate('I', (q,)))
    else:
        circuit.append(InjectError(data[injected], 'X'))
    keys = []
    for a, support in zip(ancilla, BITFLIP_CHECKS):
        for i in support:
            circuit.append(Gate('CNOT', (data[i], a), noisy=False))
        key = f'b{a}'
        circuit.append(Measure(a, 'Z', key, noisy=False))
        keys.append(key)
    circuit.append(Correct(tuple((q,) for q in data), tuple(keys), 'X', BITFLIP_LOOKUP))
    circuit.append(LogicalCheck(FAILURE_KEY, data, reference, 'bitflip'))
    circuit.validate()
    return circuit
