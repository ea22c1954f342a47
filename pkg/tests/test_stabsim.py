import math

import numpy as np
import pandas as pd
import pytest

from src.errors import CircuitError, ConfigError
from src.params import memory_error
from src.stabsim import (CircuitIR, NoiseModel, StabilizerTableau, apply_clifford, bitflip_analytic,
                         bitflip_circuit, bitflip_failure_rate, estimate_crossing,
                         nontrivial_syndrome_rate, run_noisy, threshold_circuit, threshold_sweep)
from src.stabsim.circuit import Gate, Measure, Parity, Reset
from src.stabsim.codes import hamming_logical, hamming_syndrome, steane_logical
from src.stabsim.noise import Channel, NoiseSampler
from src.stabsim.sweep import estimate_failure_rate, is_monotone


def _z(n, *qubits):
    zs = np.zeros(n, dtype=bool)
    zs[list(qubits)] = True
    return np.zeros(n, dtype=bool), zs


def _x(n, *qubits):
    xs = np.zeros(n, dtype=bool)
    xs[list(qubits)] = True
    return xs, np.zeros(n, dtype=bool)


class TestTableau:
    def test_double_hadamard(self):
        state = StabilizerTableau(1)
        apply_clifford(state, 'H', [0])
        apply_clifford(state, 'H', [0])
        assert state.measure(0) == (0, True)

    def test_bell_pair(self):
        state = StabilizerTableau(2)
        apply_clifford(state, 'H', [0])
        apply_clifford(state, 'CNOT', [0, 1])
        assert state.measure_pauli(*_z(2, 0, 1)) == (0, True)
        assert state.measure_pauli(*_x(2, 0, 1)) == (0, True)
        assert sorted(state.stabilizers()) == ['+XX', '+ZZ']

    def test_bit_flip(self):
        state = StabilizerTableau(1)
        apply_clifford(state, 'X', [0])
        assert state.measure(0) == (1, True)

    def test_random_outcome_collapses(self):
        state = StabilizerTableau(1)
        apply_clifford(state, 'H', [0])
        outcome, deterministic = state.measure(0, np.random.default_rng(3))
        assert not deterministic
        assert state.measure(0) == (outcome, True)

    def test_phase_gate(self):
        state = StabilizerTableau(1)
        for gate in ('H', 'S', 'S', 'H'):
            apply_clifford(state, gate, [0])
        # HZH = X，作用在 |0> 上翻轉位元
        assert state.measure(0) == (1, True)

    def test_symplectic_after_random_cliffords(self):
        rng = np.random.default_rng(11)
        state = StabilizerTableau(6)
        for _ in range(300):
            if rng.random() < 0.5:
                a, b = rng.choice(6, size=2, replace=False)
                apply_clifford(state, 'CNOT', [a, b])
            else:
                apply_clifford(state, str(rng.choice(['H', 'S', 'X', 'Z'])), [int(rng.integers(6))])
        assert state.is_symplectic()

    @pytest.mark.parametrize('gate, targets', [('T', [0]), ('CNOT', [1, 1]), ('H', [5]), ('H', [0, 1])])
    def test_invalid_gates(self, gate, targets):
        with pytest.raises(CircuitError):
            apply_clifford(StabilizerTableau(2), gate, targets)

    def test_invalid_gate_is_value_error(self):
        with pytest.raises(ValueError):
            apply_clifford(StabilizerTableau(2), 'CCX', [0, 1])


class TestCircuit:
    def test_read_before_write(self):
        circuit = CircuitIR()
        circuit.append(Reset(0))
        circuit.append(Parity('s', ('m0',)))
        with pytest.raises(CircuitError):
            circuit.validate()

    def test_unknown_gate(self):
        circuit = CircuitIR()
        circuit.append(Gate('T', (0,)))
        with pytest.raises(CircuitError):
            circuit.validate()

    def test_bad_basis(self):
        circuit = CircuitIR()
        circuit.append(Measure(0, 'Y', 'm'))
        with pytest.raises(CircuitError):
            circuit.validate()

    def test_qubit_count_tracks_ops(self):
        circuit = CircuitIR()
        circuit.append(Gate('CNOT', (0, 4)))
        assert circuit.n_qubits == 5


class TestCodes:
    def test_hamming_corrects_single_flip(self):
        bits = np.zeros((7, 7), dtype=bool)
        bits[np.arange(7), np.arange(7)] = True
        assert hamming_syndrome(bits).any(axis=0).all()
        assert not hamming_logical(bits).any()

    def test_two_level_decoding(self):
        bits = np.zeros((49, 1), dtype=bool)
        # 每個子區塊一個翻轉仍可更正
        bits[[0, 8, 16, 24, 32, 40, 48], 0] = True
        assert not steane_logical(bits, 2).any()


class TestNoise:
    def test_invalid_probability(self):
        with pytest.raises(ConfigError):
            NoiseModel(p_single=1.5)

    def test_move_probability(self):
        model = NoiseModel(p_move=1e-6)
        assert model.move_probability(0) == 0.0
        assert model.move_probability(100) == pytest.approx(1e-4, rel=1e-3)

    def test_idle_probability(self, expected):
        model = NoiseModel.from_params(expected)
        assert model.idle_probability(1e6) == pytest.approx(0.05)
        assert model.idle_probability(2.5e5) == pytest.approx(0.5 * memory_error(2.5e5, expected))
        assert NoiseModel.from_params(expected, memory=False).idle_probability(1e6) == 0.0

    def test_with_rate_keeps_move(self, expected):
        model = NoiseModel.from_params(expected).with_rate(1e-3)
        assert model.p_double == 1e-3
        assert model.p_move == expected.p_move

    def test_bitflip_channel_only_flips_x(self):
        sampler = NoiseSampler(NoiseModel(p_single=0.5, channel=Channel.BITFLIP),
                               np.random.default_rng(0), 1000)
        fx, fz = sampler.single(0.5)
        assert fx.any()
        assert not fz.any()


class TestRunNoisy:
    def test_noiseless_run_never_fails(self, expected):
        record = run_noisy(threshold_circuit(1, expected), NoiseModel(), seed=5, trials=64)
        assert record.failure_count == 0

    @pytest.mark.parametrize('position', [0, 1, 2])
    @pytest.mark.parametrize('engine', ['frame', 'tableau'])
    def test_single_injected_flip_is_corrected(self, position, engine):
        record = run_noisy(bitflip_circuit(injected=position), NoiseModel(), seed=0, trials=4,
                           engine=engine)
        assert record.failure_count == 0

    @pytest.mark.slow
    @pytest.mark.parametrize('p', [0.01, 0.05, 0.1])
    def test_bitflip_rate_matches_analytic(self, p):
        rate, _ = bitflip_failure_rate(p, trials=100_000, seed=1)
        expected_rate = bitflip_analytic(p)
        # 以理論值計算標準誤，p=0.01 時失效次數約 30
        stderr = math.sqrt(expected_rate * (1 - expected_rate) / 100_000)
        assert abs(rate - expected_rate) <= 3 * stderr

    def test_bitflip_analytic(self):
        assert bitflip_analytic(0.5) == pytest.approx(0.5)
        assert bitflip_analytic(0.0) == 0.0

    def test_engines_agree_on_bitflip(self):
        noise = NoiseModel(p_single=0.2, channel=Channel.BITFLIP)
        frame = run_noisy(bitflip_circuit(), noise, seed=4, trials=200)
        tableau = run_noisy(bitflip_circuit(), noise, seed=4, trials=200, engine='tableau')
        np.testing.assert_array_equal(frame.failures, tableau.failures)
        assert frame.failure_count > 0

    def test_engines_agree_unencoded(self, expected):
        noise = NoiseModel.from_params(expected).with_rate(0.05)
        circuit = threshold_circuit(0, expected)
        frame = run_noisy(circuit, noise, seed=9, trials=300)
        tableau = run_noisy(circuit, noise, seed=9, trials=300, engine='tableau')
        np.testing.assert_array_equal(frame.failures, tableau.failures)
        assert frame.failure_count > 0

    def test_error_log(self):
        record = run_noisy(bitflip_circuit(injected=1), NoiseModel(), seed=0, trials=2,
                           record_errors=True)
        assert {(trial, qubit, pauli) for _, trial, qubit, pauli in record.errors} == {
            (0, 1, 'X'), (1, 1, 'X')}

    def test_same_seed_same_record(self, expected):
        noise = NoiseModel.from_params(expected).with_rate(3e-3)
        circuit = threshold_circuit(1, expected)
        first = run_noisy(circuit, noise, seed=(2, 7), trials=256)
        second = run_noisy(circuit, noise, seed=(2, 7), trials=256)
        np.testing.assert_array_equal(first.failures, second.failures)

    def test_unknown_engine(self):
        with pytest.raises(CircuitError):
            run_noisy(bitflip_circuit(), NoiseModel(), seed=0, engine='statevector')


class TestSweep:
    def test_table_shape(self, expected):
        table = threshold_sweep(levels=(0, 1), p_grid=[1e-3, 1e-2], trials=200, seed=3,
                                params=expected, batch_size=64)
        assert list(table.columns) == ['p', 'level', 'trials', 'failures', 'failure_rate', 'stderr']
        assert len(table) == 4
        assert (table['trials'] == 200).all()

    def test_unencoded_failures_grow_with_p(self, expected):
        table = threshold_sweep(levels=(0,), p_grid=[1e-3, 1e-2, 1e-1], trials=2000, seed=0,
                                params=expected)
        assert is_monotone(table, 0)
        assert table['failure_rate'].iloc[-1] > table['failure_rate'].iloc[0]

    def test_grid_must_increase(self):
        with pytest.raises(ConfigError):
            threshold_sweep(levels=(1,), p_grid=[1e-3, 1e-4], trials=10)

    def test_zero_trials_rejected(self):
        with pytest.raises(ConfigError):
            threshold_sweep(levels=(1,), p_grid=[1e-3], trials=0)

    def test_unsupported_level(self):
        with pytest.raises(ConfigError):
            threshold_sweep(levels=(3,), p_grid=[1e-3], trials=10)

    def test_crossing_from_sign_change(self):
        grid = [1e-4, 1e-3, 1e-2]
        table = pd.DataFrame({
            'p': grid * 2,
            'level': [1] * 3 + [2] * 3,
            'failure_rate': [1e-5, 1e-3, 1e-1, 1e-7, 5e-4, 2e-1],
            'stderr': [0.0] * 6,
        })
        p_star, low, high = estimate_crossing(table)
        assert (low, high) == (1e-3, 1e-2)
        assert low < p_star < high
        # 在對數座標上線性內插
        t = 5e-4 / (5e-4 + 1e-1)
        assert p_star == pytest.approx(math.exp(math.log(1e-3) + t * math.log(10)))

    def test_no_crossing(self):
        table = pd.DataFrame({'p': [1e-4, 1e-3] * 2, 'level': [1, 1, 2, 2],
                              'failure_rate': [1e-3, 1e-2, 1e-5, 1e-4], 'stderr': [0.0] * 4})
        assert estimate_crossing(table) is None

    def test_zero_failure_tie_is_not_a_crossing(self):
        # 最低格點兩層都沒有失效，之後第 2 層一路高於第 1 層
        table = pd.DataFrame({'p': [3e-4, 1e-3, 4e-3] * 2, 'level': [1] * 3 + [2] * 3,
                              'failure_rate': [0.0, 3e-4, 1e-2, 0.0, 1e-3, 9e-2],
                              'stderr': [0.0] * 6})
        assert estimate_crossing(table) is None

    @pytest.mark.slow
    def test_parallel_matches_sequential(self, expected):
        kwargs = dict(levels=(1,), p_grid=[2e-3, 8e-3], trials=1024, seed=5, params=expected,
                      batch_size=256)
        sequential = threshold_sweep(workers=1, **kwargs)
        parallel = threshold_sweep(workers=2, **kwargs)
        pd.testing.assert_frame_equal(sequential, parallel)


@pytest.mark.slow
def test_engines_agree_level1(expected):
    noise = NoiseModel.from_params(expected).with_rate(1e-2)
    circuit = threshold_circuit(1, expected)
    frame = run_noisy(circuit, noise, seed=21, trials=40)
    tableau = run_noisy(circuit, noise, seed=21, trials=40, engine='tableau')
    np.testing.assert_array_equal(frame.failures, tableau.failures)


@pytest.mark.slow
def test_level1_nontrivial_rate(expected):
    rate, stderr, _, extractions = nontrivial_syndrome_rate(1, expected, trials=100_000, seed=0)
    assert extractions > 0
    assert abs(rate - 3.35e-4) <= 3 * math.hypot(stderr, 0.41e-4)


@pytest.mark.slow
def test_no_level2_failures_at_expected_rates(expected):
    # 各元件用參數組自己的失效機率，含移動與記憶錯誤
    noise = NoiseModel.from_params(expected)
    assert (noise.p_single, noise.p_double, noise.p_move) == (1e-8, 1e-7, 1e-6)
    failures, trials = estimate_failure_rate(2, noise, expected, trials=10_000, seed=0)
    assert trials == 10_000
    assert failures == 0


@pytest.mark.slow
def test_level2_beats_level1_below_crossing(expected):
    table = threshold_sweep(levels=(1, 2), p_grid=[1e-3, 2e-3, 4e-3, 8e-3], trials=20_000,
                            seed=1, params=expected, workers=4)
    crossing = estimate_crossing(table)
    assert crossing is not None
    p_star, low, high = crossing
    assert 3e-4 < p_star < 4e-3
    rates = table.pivot(index='p', columns='level', values='failure_rate')
    below, above = rates[rates.index <= low], rates[rates.index >= high]
    assert (below[2] < below[1]).all()
    assert (above[2] > above[1]).all()
