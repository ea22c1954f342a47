"""
模擬引擎模組

PauliFrameEngine 以 (量子位元, trials) 的布林陣列追蹤相對於無雜訊參考電路的錯誤，
一次模擬一整批 trials；TableauEngine 對每個 trial 維護完整的穩定子表格，作為交叉驗證用的參考。
兩者共用 _Engine 的雜訊注入與古典運算，亂數消耗順序完全相同。
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from ..errors import CircuitError, ModelError
from .circuit import (AllOf, AnyOf, CircuitIR, Correct, Differ, Gate, Idle, InjectError,
                      LogicalCheck, Measure, Move, Parity, Reset, Select)
from .codes import (BITFLIP_CHECKS, BITFLIP_LOOKUP, HAMMING_LOOKUP, STEANE_CHECKS,
                    bitflip_logical, steane_logical)
from .noise import NoiseModel, NoiseSampler
from .tableau import StabilizerTableau, apply_clifford

logger = logging.getLogger(__name__)

FAILURE_KEY = 'failure'
SYMPLECTIC_CHECK_INTERVAL = 1000
_PAULI_NAMES = {(True, False): 'X', (True, True): 'Y', (False, True): 'Z'}


@dataclass
class RunRecord:
    """一次執行的結果：古典暫存器、注入的錯誤與邏輯失效旗標"""
    trials: int
    registers: Dict[str, np.ndarray] = field(default_factory=dict)
    # (操作索引, trial, 量子位元, Pauli)
    errors: List[Tuple[int, int, int, str]] = field(default_factory=list)

    @property
    def failures(self) -> np.ndarray:
        return self.registers.get(FAILURE_KEY, np.zeros(self.trials, dtype=bool))

    @property
    def failure_count(self) -> int:
        return int(self.failures.sum())

    def rate(self, key: str, condition: Optional[str] = None) -> Tuple[int, int]:
        """回傳 (暫存器為真的次數, 有效 trial 數)"""
        values = self.registers.get(key, np.zeros(self.trials, dtype=bool))
        if condition is None:
            return int(values.sum()), self.trials
        active = self.registers.get(condition, np.zeros(self.trials, dtype=bool))
        return int((values & active).sum()), int(active.sum())


class _Engine:
    def __init__(self, circuit: CircuitIR, noise: NoiseModel, rng: np.random.Generator,
                 trials: int, record_errors: bool = False):
        if trials < 1:
            raise CircuitError(f"trials 必須至少為 1，得到 {trials}")
        self.circuit = circuit
        self.noise = noise
        self.trials = trials
        self.sampler = NoiseSampler(noise, rng, trials)
        self.record = RunRecord(trials)
        self.record_errors = record_errors
        self._zeros = np.zeros(trials, dtype=bool)
        self._all = np.ones(trials, dtype=bool)
        self._index = 0
        self._handlers = {
            Gate: self._gate, Reset: self._reset, Move: self._move, Idle: self._idle,
            Measure: self._measure, InjectError: self._inject_error, Parity: self._parity,
            AnyOf: self._any_of, AllOf: self._all_of, Differ: self._differ,
            Select: self._select, Correct: self._correct, LogicalCheck: self._logical_check,
        }

    # 由子類別實作的量子部分
    def apply_gate(self, kind: str, qubits: Tuple[int, ...], mask: np.ndarray) -> None:
        raise NotImplementedError

    def apply_flips(self, qubit: int, fx: np.ndarray, fz: np.ndarray) -> None:
        raise NotImplementedError

    def measure(self, qubit: int, basis: str, mask: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def reset(self, qubit: int, mask: np.ndarray) -> None:
        raise NotImplementedError

    def logical_check(self, op: LogicalCheck, mask: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def after_op(self) -> None:
        pass

    def run(self) -> RunRecord:
        registers = self.record.registers
        for index, op in enumerate(self.circuit.ops):
            self._index = index
            if op.condition is None:
                mask = self._all
            else:
                mask = registers.get(op.condition, self._zeros)
                if not mask.any():
                    continue
            self._handlers[type(op)](op, mask)
            self.after_op()
        return self.record

    def _read(self, key: str) -> np.ndarray:
        return self.record.registers.get(key, self._zeros)

    def _write(self, key: str, value: np.ndarray, mask: np.ndarray) -> None:
        if mask is self._all:
            self.record.registers[key] = np.array(value, dtype=bool)
        else:
            self.record.registers[key] = np.where(mask, value, self._read(key))

    def _inject(self, qubit: int, fx: np.ndarray, fz: np.ndarray, mask: np.ndarray) -> None:
        if mask is not self._all:
            fx = fx & mask
            fz = fz & mask
        hit = fx | fz
        if not hit.any():
            return
        self.apply_flips(qubit, fx, fz)
        if self.record_errors:
            for trial in np.flatnonzero(hit):
                name = _PAULI_NAMES[(bool(fx[trial]), bool(fz[trial]))]
                self.record.errors.append((self._index, int(trial), qubit, name))

    def _gate(self, op: Gate, mask: np.ndarray) -> None:
        self.apply_gate(op.kind, op.qubits, mask)
        if not op.noisy:
            return
        if len(op.qubits) == 1:
            fx, fz = self.sampler.single(self.noise.p_single)
            self._inject(op.qubits[0], fx, fz, mask)
        else:
            first, second = self.sampler.double(self.noise.p_double)
            self._inject(op.qubits[0], *first, mask)
            self._inject(op.qubits[1], *second, mask)

    def _reset(self, op: Reset, mask: np.ndarray) -> None:
        self.reset(op.qubit, mask)
        if op.noisy:
            self._inject(op.qubit, self.sampler.flip(self.noise.p_single), self._zeros, mask)

    def _move(self, op: Move, mask: np.ndarray) -> None:
        fx, fz = self.sampler.single(self.noise.move_probability(op.cells))
        self._inject(op.qubit, fx, fz, mask)
        fx, fz = self.sampler.dephase(self.noise.idle_probability(op.duration))
        self._inject(op.qubit, fx, fz, mask)

    def _idle(self, op: Idle, mask: np.ndarray) -> None:
        fx, fz = self.sampler.dephase(self.noise.idle_probability(op.duration))
        self._inject(op.qubit, fx, fz, mask)

    def _measure(self, op: Measure, mask: np.ndarray) -> None:
        bits = self.measure(op.qubit, op.basis, mask)
        if op.noisy:
            bits = bits ^ self.sampler.flip(self.noise.p_measure)
        self._write(op.key, bits, mask)

    def _inject_error(self, op: InjectError, mask: np.ndarray) -> None:
        fx = mask if op.pauli in ('X', 'Y') else self._zeros
        fz = mask if op.pauli in ('Z', 'Y') else self._zeros
        self._inject(op.qubit, fx, fz, self._all)

    def _parity(self, op: Parity, mask: np.ndarray) -> None:
        value = self._zeros.copy()
        for key in op.inputs:
            value ^= self._read(key)
        self._write(op.out, value, mask)

    def _any_of(self, op: AnyOf, mask: np.ndarray) -> None:
        value = self._zeros.copy()
        for key in op.inputs:
            value |= self._read(key)
        self._write(op.out, value, mask)

    def _all_of(self, op: AllOf, mask: np.ndarray) -> None:
        value = self._all.copy()
        for key in op.inputs:
            value &= self._read(key)
        self._write(op.out, value, mask)

    def _differ(self, op: Differ, mask: np.ndarray) -> None:
        value = self._zeros.copy()
        for a, b in zip(op.first, op.second):
            value |= self._read(a) ^ self._read(b)
        self._write(op.out, value, mask)

    def _select(self, op: Select, mask: np.ndarray) -> None:
        flag = self._read(op.flag)
        for out, a, b in zip(op.outs, op.if_false, op.if_true):
            self._write(out, np.where(flag, self._read(b), self._read(a)), mask)

    def _correct(self, op: Correct, mask: np.ndarray) -> None:
        value = np.zeros(self.trials, dtype=np.int64)
        for bit, key in enumerate(op.syndrome):
            value |= self._read(key).astype(np.int64) << bit
        target = np.asarray(op.lookup, dtype=np.int64)[value]
        for index, group in enumerate(op.groups):
            chosen = mask & (target == index)
            if not chosen.any():
                continue
            fx = chosen if op.pauli in ('X', 'Y') else self._zeros
            fz = chosen if op.pauli in ('Z', 'Y') else self._zeros
            for q in group:
                self.apply_flips(q, fx, fz)

    def _logical_check(self, op: LogicalCheck, mask: np.ndarray) -> None:
        self._write(op.key, self.logical_check(op, mask), mask)


class PauliFrameEngine(_Engine):
    """Pauli frame 引擎：只追蹤錯誤，Clifford 閘以位元運算傳遞"""

    def __init__(self, circuit: CircuitIR, noise: NoiseModel, rng: np.random.Generator,
                 trials: int, record_errors: bool = False):
        super().__init__(circuit, noise, rng, trials, record_errors)
        self.fx = np.zeros((circuit.n_qubits, trials), dtype=bool)
        self.fz = np.zeros((circuit.n_qubits, trials), dtype=bool)

    def apply_gate(self, kind, qubits, mask):
        if kind == 'H':
            q = qubits[0]
            x, z = self.fx[q].copy(), self.fz[q].copy()
            self.fx[q] = np.where(mask, z, x)
            self.fz[q] = np.where(mask, x, z)
        elif kind == 'S':
            q = qubits[0]
            self.fz[q] ^= self.fx[q] & mask
        elif kind == 'CNOT':
            a, b = qubits
            self.fx[b] ^= self.fx[a] & mask
            self.fz[a] ^= self.fz[b] & mask
        # Pauli 閘屬於參考電路，frame 不變

    def apply_flips(self, qubit, fx, fz):
        self.fx[qubit] ^= fx
        self.fz[qubit] ^= fz

    def measure(self, qubit, basis, mask):
        return (self.fx[qubit] if basis == 'Z' else self.fz[qubit]).copy()

    def reset(self, qubit, mask):
        self.fx[qubit] &= ~mask
        self.fz[qubit] &= ~mask

    def logical_check(self, op, mask):
        data = list(op.data)
        if op.code == 'bitflip':
            x_logical = bitflip_logical(self.fx[data])
            z_logical = self.fz[data].sum(axis=0) % 2 == 1
        else:
            x_logical = steane_logical(self.fx[data], op.level)
            z_logical = steane_logical(self.fz[data], op.level)
        ref = op.reference
        return (x_logical ^ self.fx[ref]) | (z_logical ^ self.fz[ref])


class TableauEngine(_Engine):
    """完整穩定子表格引擎，每個 trial 一個表格；量測的隨機結果使用獨立的亂數流"""

    def __init__(self, circuit: CircuitIR, noise: NoiseModel, rng: np.random.Generator,
                 trials: int, outcome_rng: np.random.Generator, record_errors: bool = False):
        super().__init__(circuit, noise, rng, trials, record_errors)
        self.outcome_rng = outcome_rng
        self.tableaus = [StabilizerTableau(max(1, circuit.n_qubits)) for _ in range(trials)]
        self._debug = logger.isEnabledFor(logging.DEBUG)
        self._ops_done = 0

    def apply_gate(self, kind, qubits, mask):
        for trial in np.flatnonzero(mask):
            apply_clifford(self.tableaus[trial], kind, qubits)

    def apply_flips(self, qubit, fx, fz):
        for trial in np.flatnonzero(fx | fz):
            self.tableaus[trial].pauli(qubit, _PAULI_NAMES[(bool(fx[trial]), bool(fz[trial]))])

    def measure(self, qubit, basis, mask):
        bits = np.zeros(self.trials, dtype=bool)
        for trial in np.flatnonzero(mask):
            bits[trial] = bool(self.tableaus[trial].measure(qubit, self.outcome_rng, basis)[0])
        return bits

    def reset(self, qubit, mask):
        for trial in np.flatnonzero(mask):
            self.tableaus[trial].reset(qubit, self.outcome_rng)

    def after_op(self):
        self._ops_done += 1
        if self._debug and self._ops_done % SYMPLECTIC_CHECK_INTERVAL == 0:
            if not all(t.is_symplectic() for t in self.tableaus):
                raise ModelError(f"第 {self._index} 個操作後表格失去辛結構")

    def _measure_product(self, tableau: StabilizerTableau, qubits, basis: str) -> int:
        xs = np.zeros(tableau.n, dtype=bool)
        zs = np.zeros(tableau.n, dtype=bool)
        (xs if basis == 'X' else zs)[list(qubits)] = True
        outcome, deterministic = tableau.measure_pauli(xs, zs, self.outcome_rng)
        if not deterministic:
            logger.debug(f"完美解碼時量到隨機結果: {basis} on {tuple(qubits)}")
        return outcome

    def _decode_steane(self, tableau: StabilizerTableau, qubits: Tuple[int, ...], level: int) -> None:
        if level == 0:
            return
        size = len(qubits) // 7
        children = [qubits[i * size:(i + 1) * size] for i in range(7)]
        for child in children:
            self._decode_steane(tableau, child, level - 1)
        for stabilizer, correction in (('Z', 'X'), ('X', 'Z')):
            value = 0
            for bit, support in enumerate(STEANE_CHECKS):
                block = [q for i in support for q in children[i]]
                value |= self._measure_product(tableau, block, stabilizer) << bit
            target = HAMMING_LOOKUP[value]
            if target >= 0:
                for q in children[target]:
                    tableau.pauli(q, correction)

    def _decode_bitflip(self, tableau: StabilizerTableau, qubits: Tuple[int, ...]) -> None:
        value = 0
        for bit, support in enumerate(BITFLIP_CHECKS):
            value |= self._measure_product(tableau, [qubits[i] for i in support], 'Z') << bit
        target = BITFLIP_LOOKUP[value]
        if target >= 0:
            tableau.pauli(qubits[target], 'X')

    def logical_check(self, op, mask):
        failed = np.zeros(self.trials, dtype=bool)
        for trial in np.flatnonzero(mask):
            tableau = self.tableaus[trial].copy()
            if op.code == 'bitflip':
                self._decode_bitflip(tableau, op.data)
                z_support = (op.data[0],)
            else:
                self._decode_steane(tableau, op.data, op.level)
                z_support = op.data
            xx = self._measure_product(tableau, op.data + (op.reference,), 'X')
            zz = self._measure_product(tableau, z_support + (op.reference,), 'Z')
            failed[trial] = bool(xx or zz)
        return failed


ENGINES = ('frame', 'tableau')


def run_noisy(circuit: CircuitIR, noise: NoiseModel,
              seed: Union[int, np.random.SeedSequence, Tuple[int, ...]], trials: int = 1,
              engine: str = 'frame', record_errors: bool = False) -> RunRecord:
    """以指定雜訊執行電路

    Args:
        circuit: 電路
        noise: 雜訊模型
        seed: 整數、整數序列或 SeedSequence；決定所有亂數
        trials: 一次模擬的 trial 數
        engine: 'frame' 或 'tableau'
        record_errors: 是否記錄每一個注入的錯誤

    Returns:
        執行紀錄；失效旗標在 record.failures
    """
    sequence = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    # 不呼叫 spawn()，同一個 SeedSequence 重複使用時結果不變
    noise_seed, outcome_seed = (
        np.random.SeedSequence(sequence.entropy, spawn_key=sequence.spawn_key + (stream,))
        for stream in (0, 1))
    rng = np.random.default_rng(noise_seed)
    if engine == 'frame':
        runner = PauliFrameEngine(circuit, noise, rng, trials, record_errors)
    elif engine == 'tableau':
        runner = TableauEngine(circuit, noise, rng, trials,
                               np.random.default_rng(outcome_seed), record_errors)
    else:
        raise CircuitError(f"未知的模擬引擎: {engine}，可用 {ENGINES}")
    return runner.run()
