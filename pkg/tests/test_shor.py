import pytest

from src.ecc import EccTiming, calibrated_timing
from src.errors import ConfigError, ModelError
from src.shor import (CALIBRATION, ShorCircuitModel, calibrate_mexp, circuit_model, ec_step_count,
                      estimate, estimate_report, modexp_latency, qcla_depth, qcla_toffoli_count,
                      qft_steps, resource_table, toffoli_count_from_mexp)

DAYS = {128: 0.9, 512: 5.5, 1024: 13.4, 2048: 32.1}
AREA = {128: 0.11, 512: 0.45, 1024: 0.90, 2048: 1.80}
# 128 位元的磚塊面積算出 0.1135 m²，比公布的兩位有效數字高 3.2%
AREA_TOLERANCE = {128: 0.04, 512: 0.02, 1024: 0.02, 2048: 0.02}


@pytest.mark.parametrize('n, depth', [(128, 28), (2, 4), (1024, 40)])
def test_qcla_depth(n, depth):
    assert qcla_depth(n)['toffoli'] == depth
    assert qcla_depth(n)['cnot'] == 4


def test_qcla_depth_rejects_tiny_adder():
    with pytest.raises(ConfigError):
        qcla_depth(1)


def test_qcla_toffoli_count():
    assert qcla_toffoli_count(128) == 615


def _model(**inputs):
    model = ShorCircuitModel(n_bits=128, logical_qubits=10, toffoli_count=1, total_gates=2)
    for key, value in inputs.items():
        setattr(model, key, value)
    return model


def test_modexp_latency_edges():
    assert modexp_latency(_model(im_calls=0, mac_calls=2, argset_depth=3, p_extra_qubits=4)) == 3 * 4 * 28
    assert modexp_latency(_model(im_calls=5, mac_calls=2, argset_depth=0, p_extra_qubits=0)) == 5 * 2 * 28


def test_modexp_latency_needs_inputs():
    with pytest.raises(ModelError):
        modexp_latency(_model())


def test_mexp_calibration_reproduces_toffoli_count():
    model = calibrate_mexp(128)
    assert model.im_calls == 52
    assert toffoli_count_from_mexp(model) == pytest.approx(CALIBRATION[128][1], rel=0.05)


def test_ec_steps():
    assert ec_step_count(circuit_model(128)) == pytest.approx(1.34e6, rel=1e-3)
    assert ec_step_count(circuit_model(1024)) == pytest.approx(2.03e7, rel=0.01)


def test_no_toffoli_costs_only_qft():
    model = ShorCircuitModel(n_bits=128, logical_qubits=1, toffoli_count=0, total_gates=10)
    assert ec_step_count(model) == pytest.approx(qft_steps(128))


def test_invalid_model_rejected():
    with pytest.raises(ConfigError):
        ShorCircuitModel(n_bits=128, logical_qubits=1, toffoli_count=11, total_gates=10)


def test_estimate_128(expected):
    result = estimate(128, None, expected)
    assert result.runtime_hours == pytest.approx(21, rel=0.05)
    assert result.area_m2 == pytest.approx(0.11, abs=0.005)


def test_estimate_1024_is_feasible(expected):
    result = estimate(1024, None, expected)
    assert result.feasible_at_level2
    assert result.required_steps < result.attainable_steps


def test_trivial_sizes_rejected(expected):
    with pytest.raises(ConfigError):
        estimate(4, None, expected)


def test_runtime_linear_in_latency(expected):
    timing = calibrated_timing(expected)
    doubled = EccTiming(level=2, t_syndrome={k: 2 * v for k, v in timing.t_syndrome.items()},
                        t_logical_gate={k: 2 * v for k, v in timing.t_logical_gate.items()},
                        nontrivial_rate=dict(timing.nontrivial_rate))
    base = estimate(512, timing, expected).runtime_days
    assert estimate(512, doubled, expected).runtime_days == pytest.approx(2 * base)


def test_resource_table_rows(expected):
    table = resource_table(expected)
    assert list(table['n_bits']) == [128, 512, 1024, 2048]
    for _, row in table.iterrows():
        assert row['time_days'] == pytest.approx(DAYS[row['n_bits']], rel=0.05)
        assert row['area_m2'] == pytest.approx(AREA[row['n_bits']], rel=AREA_TOLERANCE[row['n_bits']])


def test_estimates_grow_with_size(expected):
    table = resource_table(expected, [128, 256, 512, 768, 1024, 2048])
    for column in ('logical_qubits', 'toffoli_gates', 'total_gates', 'ec_steps', 'area_m2', 'time_days'):
        assert table[column].is_monotonic_increasing


def test_report_flags_qft_residual(expected):
    report = estimate_report(estimate(128, None, expected))
    assert 'qft_steps_model_residual' in report
    assert report['runtime_days'] == pytest.approx(0.9, rel=0.05)


def test_area_at_128_bits(expected):
    # 37971 個邏輯量子位元，每塊 (36 + 11) × (147 + 12) 格，格距 20 µm
    result = estimate(128, None, expected)
    assert result.area_m2 == pytest.approx(37_971 * 47 * 159 * 4e-10, rel=1e-9)
    assert result.area_m2 == pytest.approx(0.1135, abs=5e-4)


def test_report_states_required_steps_accounting(expected):
    result = estimate(1024, None, expected)
    report = estimate_report(result)
    assert report['required_steps_accounting'] == 'ec_steps x logical_qubits'
    assert report['required_steps'] == pytest.approx(result.ec_steps * result.logical_qubits)
    assert report['required_steps'] == pytest.approx(6.1e12, rel=0.05)
