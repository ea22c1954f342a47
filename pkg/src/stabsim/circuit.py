"""
電路中介表示模組

CircuitIR 是依時間排序的操作列表。量子操作帶有可選的條件暫存器，
只在該暫存器為真的 trial 上執行；古典操作在暫存器之間計算徵狀與旗標。
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from ..errors import CircuitError
from .tableau import SINGLE_QUBIT_GATES, TWO_QUBIT_GATES


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: Tuple[int, ...]
    condition: Optional[str] = None
    noisy: bool = True


@dataclass(frozen=True)
class Reset:
    qubit: int
    condition: Optional[str] = None
    noisy: bool = True


@dataclass(frozen=True)
class Move:
    """彈道移動 cells 格、經過 turns 個轉角，duration 以 µs 計"""
    qubit: int
    cells: int
    turns: int
    duration: float
    condition: Optional[str] = None


@dataclass(frozen=True)
class Idle:
    qubit: int
    duration: float
    condition: Optional[str] = None


@dataclass(frozen=True)
class Measure:
    qubit: int
    basis: str
    key: str
    condition: Optional[str] = None
    noisy: bool = True


@dataclass(frozen=True)
class InjectError:
    """刻意注入的 Pauli 錯誤（不屬於無雜訊參考電路）"""
    qubit: int
    pauli: str
    condition: Optional[str] = None


@dataclass(frozen=True)
class Parity:
    out: str
    inputs: Tuple[str, ...]
    condition: Optional[str] = None


@dataclass(frozen=True)
class AnyOf:
    out: str
    inputs: Tuple[str, ...]
    condition: Optional[str] = None


@dataclass(frozen=True)
class AllOf:
    out: str
    inputs: Tuple[str, ...]
    condition: Optional[str] = None


@dataclass(frozen=True)
class Differ:
    """兩組暫存器是否有任何一位不同"""
    out: str
    first: Tuple[str, ...]
    second: Tuple[str, ...]
    condition: Optional[str] = None


@dataclass(frozen=True)
class Select:
    """outs[i] = if_true[i] if flag else if_false[i]"""
    outs: Tuple[str, ...]
    flag: str
    if_false: Tuple[str, ...]
    if_true: Tuple[str, ...]
    condition: Optional[str] = None


@dataclass(frozen=True)
class Correct:
    """依徵狀值查表，對 groups 中的一組量子位元套用 Pauli

    lookup[v] 為徵狀整數值 v（syndrome[0] 為最低位）對應的組別，-1 表示不更正。
    """
    groups: Tuple[Tuple[int, ...], ...]
    syndrome: Tuple[str, ...]
    pauli: str
    lookup: Tuple[int, ...]
    condition: Optional[str] = None


@dataclass(frozen=True)
class LogicalCheck:
    """最後一輪完美解碼後與參考量子位元比對，結果寫入 key（True 表示邏輯失效）"""
    key: str
    data: Tuple[int, ...]
    reference: int
    code: str = 'steane'
    level: int = 1
    condition: Optional[str] = None


Operation = Union[Gate, Reset, Move, Idle, Measure, InjectError, Parity, AnyOf, AllOf,
                  Differ, Select, Correct, LogicalCheck]

QUANTUM_OPS = (Gate, Reset, Move, Idle, Measure, InjectError)
CLASSICAL_OPS = (Parity, AnyOf, AllOf, Differ, Select, Correct)


@dataclass
class CircuitIR:
    n_qubits: int = 0
    ops: List[Operation] = field(default_factory=list)
    metadata: Dict = field(default_factory=dict)

    def append(self, op: Operation) -> Operation:
        for q in _qubits_of(op):
            if q < 0:
                raise CircuitError(f"量子位元索引不可為負: {op}")
            self.n_qubits = max(self.n_qubits, q + 1)
        self.ops.append(op)
        return op

    def extend(self, ops) -> None:
        for op in ops:
            self.append(op)

    def __len__(self) -> int:
        return len(self.ops)

    def count(self, op_type) -> int:
        return sum(1 for op in self.ops if isinstance(op, op_type))

    def validate(self) -> None:
        """檢查索引範圍、閘種類，以及暫存器在讀取前已被寫入

        Raises:
            CircuitError: 電路不合法
        """
        written = set()
        for index, op in enumerate(self.ops):
            for q in _qubits_of(op):
                if not 0 <= q < self.n_qubits:
                    raise CircuitError(f"第 {index} 個操作的量子位元 {q} 超出範圍")
            if isinstance(op, Gate):
                expected = 1 if op.kind in SINGLE_QUBIT_GATES else 2 if op.kind in TWO_QUBIT_GATES else 0
                if expected == 0:
                    raise CircuitError(f"第 {index} 個操作使用未知的閘: {op.kind}")
                if len(op.qubits) != expected or len(set(op.qubits)) != expected:
                    raise CircuitError(f"第 {index} 個操作的目標不合法: {op.qubits}")
            if isinstance(op, Measure) and op.basis not in ('X', 'Z'):
                raise CircuitError(f"第 {index} 個操作的量測基底不合法: {op.basis}")
            if isinstance(op, Move) and (op.cells < 0 or op.turns < 0):
                raise CircuitError(f"第 {index} 個操作的移動距離不合法: {op}")
            for key in _reads_of(op):
                if key not in written:
                    raise CircuitError(f"第 {index} 個操作讀取尚未寫入的暫存器: {key}")
            written.update(_writes_of(op))


def _qubits_of(op: Operation) -> Tuple[int, ...]:
    if isinstance(op, Gate):
        return op.qubits
    if isinstance(op, (Reset, Move, Idle, Measure, InjectError)):
        return (op.qubit,)
    if isinstance(op, Correct):
        return tuple(q for group in op.groups for q in group)
    if isinstance(op, LogicalCheck):
        return op.data + (op.reference,)
    return ()


def _reads_of(op: Operation) -> Tuple[str, ...]:
    reads = (op.condition,) if op.condition else ()
    if isinstance(op, (Parity, AnyOf, AllOf)):
        return reads + op.inputs
    if isinstance(op, Differ):
        return reads + op.first + op.second
    if isinstance(op, Select):
        return reads + (op.flag,) + op.if_false + op.if_true
    if isinstance(op, Correct):
        return reads + op.syndrome
    return reads


def _writes_of(op: Operation) -> Tuple[str, ...]:
    if isinstance(op, (Measure, LogicalCheck)):
        return (op.key,)
    if isinstance(op, (Parity, AnyOf, AllOf, Differ)):
        return (op.out,)
    if isinstance(op, Select):
        return op.outs
    return ()
