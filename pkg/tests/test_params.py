import pytest

from src.errors import ConfigError
from src.params import (BUILTIN_PROFILES, ParameterProfile, ballistic_latency, channel_bandwidth,
                        dump_profile, idle_error, load_profile, mean_failure_rate, memory_error,
                        profile_table, resolve_profile)

CUSTOM = """
[profile]
name = lab

[timing]
single_gate_time = 2.0
double_gate_time = 20.0
measure_time = 50.0
movement_time_per_cell = 0.02
split_time = 10.0
cooling_time = 1.0

[memory]
memory_lifetime = 5.0

[failure]
p_single = 1e-6
p_double = 1e-5
p_measure = 1e-6
p_move = 1e-7
"""


def test_builtin_profiles():
    expected = load_profile('expected').params
    assert expected.p_double == 1e-7
    assert expected.double_gate_time == 10.0
    current = load_profile('current').params
    assert current.p_double == 0.03
    assert current.measure_time == 100.0


def test_current_move_failure_stored_per_cell():
    assert BUILTIN_PROFILES['current'].p_move == pytest.approx(0.1)


def test_custom_profile_from_text():
    profile = load_profile(CUSTOM)
    assert profile.name == 'lab'
    assert profile.params.movement_time_per_cell == 0.02
    assert profile.params.cell_pitch == 20.0


def test_negative_probability_rejected():
    with pytest.raises(ConfigError, match='p_single'):
        load_profile(CUSTOM.replace('p_single = 1e-6', 'p_single = -1'))


def test_missing_key_rejected():
    with pytest.raises(ConfigError, match='measure_time'):
        load_profile(CUSTOM.replace('measure_time = 50.0\n', ''))


def test_short_memory_lifetime_rejected(expected):
    with pytest.raises(ConfigError, match='memory_lifetime'):
        expected.replace(memory_lifetime=1e-3)


def test_unknown_profile_rejected():
    with pytest.raises(ConfigError):
        resolve_profile('nonexistent')


def test_resolve_from_profile_path(tmp_path, monkeypatch):
    (tmp_path / 'lab.ini').write_text(CUSTOM, encoding='utf-8')
    monkeypatch.setenv('QLA_PROFILE_PATH', str(tmp_path))
    assert resolve_profile('lab').params.double_gate_time == 20.0


def test_dump_and_reload_identical():
    for name in ('current', 'expected'):
        profile = ParameterProfile(name, BUILTIN_PROFILES[name])
        assert load_profile(dump_profile(profile)).params == profile.params


@pytest.mark.parametrize('distance, turns, latency', [(0, 0, 10.0), (100, 0, 11.0), (100, 2, 31.0)])
def test_ballistic_latency(expected, distance, turns, latency):
    assert ballistic_latency(distance, turns, expected) == pytest.approx(latency)


def test_ballistic_latency_is_affine(expected):
    split = expected.split_time
    combined = ballistic_latency(70, 0, expected) + ballistic_latency(30, 0, expected) - split
    assert ballistic_latency(100, 0, expected) == pytest.approx(combined)


def test_ballistic_latency_rejects_negative(expected):
    with pytest.raises(ConfigError):
        ballistic_latency(-1, 0, expected)


@pytest.mark.parametrize('per_cell, rate', [(0.01, 1e8), (0.02, 5e7), (1.0, 1e6)])
def test_channel_bandwidth(expected, per_cell, rate):
    assert channel_bandwidth(expected.replace(movement_time_per_cell=per_cell)) == pytest.approx(rate)


def test_mean_failure_rate(expected):
    assert mean_failure_rate(expected) == pytest.approx((1e-8 + 1e-7 + 1e-8 + 1e-6) / 4)


def test_memory_error_is_capped(expected):
    assert memory_error(1e6, expected) == pytest.approx(0.1)
    assert memory_error(1e9, expected) == 1.0


def test_idle_error_without_decay():
    assert idle_error(1e6, float('inf')) == 0.0
    assert idle_error(0.0, 10.0) == 0.0
    assert idle_error(2e6, 10.0) == pytest.approx(0.2)


def test_profile_table_has_units():
    rows = profile_table(ParameterProfile('expected', BUILTIN_PROFILES['expected']))
    units = {name: unit for name, _, unit in rows}
    assert units['double_gate_time'] == 'us'
    assert units['memory_lifetime'] == 's'
    assert len(rows) == 12
