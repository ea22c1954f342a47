import json
import os

import pandas as pd
import pytest

from src.main import build_parser, main


def _read(path):
    with open(path, 'rb') as handle:
        return handle.read()


def test_estimate_shor_writes_report(tmp_path):
    out = str(tmp_path)
    assert main(['estimate-shor', '--bits', '128', '--out', out]) == 0

    with open(os.path.join(out, 'shor_128.json'), encoding='utf-8') as handle:
        report = json.load(handle)
    assert report['runtime_days'] == pytest.approx(0.9, abs=0.05)
    assert report['manifest']['command'] == 'estimate-shor'
    assert report['manifest']['seed'] == 0
    assert 'timestamp' not in report['manifest']

    assert os.path.exists(os.path.join(out, 'shor_128.manifest.json'))
    table = pd.read_csv(os.path.join(out, 'shor_128.csv'))
    assert list(table['n_bits']) == [128]


def test_timestamp_flag_records_time(tmp_path):
    assert main(['estimate-shor', '--bits', '128', '--timestamp', '--out', str(tmp_path)]) == 0
    with open(tmp_path / 'shor_128.json', encoding='utf-8') as handle:
        assert 'timestamp' in json.load(handle)['manifest']


def test_same_seed_same_bytes(tmp_path):
    argv = ['spacing-sweep', '--start', '1000', '--stop', '8000', '--step', '1000']
    first, second = tmp_path / 'a', tmp_path / 'b'
    assert main(argv + ['--out', str(first)]) == 0
    assert main(argv + ['--out', str(second)]) == 0
    assert _read(first / 'spacing_sweep.csv') == _read(second / 'spacing_sweep.csv')


def test_schedule_report(tmp_path):
    argv = ['schedule', '--workload', 'saturate', '--bandwidth', '2', '--out', str(tmp_path)]
    assert main(argv) == 0
    with open(tmp_path / 'schedule.json', encoding='utf-8') as handle:
        report = json.load(handle)
    assert report['aggregate_utilization'] == pytest.approx(1.0)
    assert report['missed_deadlines'] == 0
    routes = pd.read_csv(tmp_path / 'schedule_routes.csv')
    assert len(routes) == report['requests']


def test_schedule_from_file(tmp_path):
    source = tmp_path / 'work.txt'
    source.write_text('# 兩個請求\n0,0,0,3,2,0\n0,0,7,6,4,1\n', encoding='utf-8')
    argv = ['schedule', '--workload', str(source), '--out', str(tmp_path / 'out')]
    assert main(argv) == 0
    routes = pd.read_csv(tmp_path / 'out' / 'schedule_routes.csv')
    assert list(routes['pairs']) == [2, 4]


def test_validation_error_exit_code(tmp_path, capsys):
    code = main(['threshold', '--trials', '0', '--points', '2', '--out', str(tmp_path)])
    assert code == 1
    assert capsys.readouterr().err.startswith('error: ConfigError')


def test_unknown_profile(tmp_path, capsys):
    code = main(['params', 'show', '--profile', 'no-such-profile', '--out', str(tmp_path)])
    assert code == 1
    assert 'ConfigError' in capsys.readouterr().err


def test_bad_workers(tmp_path, capsys):
    assert main(['estimate-shor', '--workers', '0', '--out', str(tmp_path)]) == 1
    assert 'workers' in capsys.readouterr().err


@pytest.mark.parametrize('argv', [
    ['no-such-command'],
    [],
    ['schedule', '--grid', '8by8'],
    ['threshold', '--levels', 'one'],
])
def test_usage_errors(argv):
    assert main(argv) == 2


def test_parser_defaults():
    args = build_parser().parse_args(['schedule'])
    assert args.grid == (8, 8)
    assert args.bandwidth == 2
    assert args.seed == 0
    assert args.out == 'out'


@pytest.mark.slow
def test_reproduce_all(tmp_path):
    argv = ['reproduce-all', '--trials', '100', '--points', '3', '--gates', '100',
            '--out', str(tmp_path)]
    assert main(argv) == 0
    for name in ('resource_table.csv', 'threshold.csv', 'spacing_sweep.csv', 'schedule.json'):
        assert (tmp_path / name).exists()
    table = pd.read_csv(tmp_path / 'resource_table.csv')
    assert list(table['n_bits']) == [128, 512, 1024, 2048]


REPRODUCE_ARTIFACTS = ('resource_table.csv', 'resource_table.manifest.json', 'threshold.csv',
                       'threshold.manifest.json', 'spacing_sweep.csv', 'spacing_sweep.manifest.json',
                       'schedule.json')


@pytest.mark.slow
def test_reproduce_all_is_byte_identical(tmp_path):
    # manifest 記錄輸出路徑，兩次執行寫到同一目錄才能逐位元比較
    argv = ['reproduce-all', '--trials', '64', '--points', '3', '--gates', '50', '--seed', '7',
            '--out', str(tmp_path)]
    assert main(argv) == 0
    first = {name: _read(tmp_path / name) for name in REPRODUCE_ARTIFACTS}
    assert main(argv) == 0
    for name in REPRODUCE_ARTIFACTS:
        assert _read(tmp_path / name) == first[name], name


@pytest.mark.slow
def test_threshold_independent_of_workers(tmp_path):
    argv = ['threshold', '--levels', '1,2', '--trials', '200', '--points', '3', '--batch-size', '64',
            '--p-min', '1e-3', '--p-max', '1e-2', '--seed', '3']
    assert main(argv + ['--workers', '1', '--out', str(tmp_path / 'one')]) == 0
    assert main(argv + ['--workers', '2', '--out', str(tmp_path / 'two')]) == 0
    assert _read(tmp_path / 'one' / 'threshold.csv') == _read(tmp_path / 'two' / 'threshold.csv')


def test_ecc_breakdown_is_grouped(tmp_path, capsys):
    assert main(['ecc', '--level', '2', '--out', str(tmp_path)]) == 0
    table = pd.read_csv(tmp_path / 'ecc_level2.csv')
    assert list(table.columns) == ['group', 'stage', 'time_us']
    groups = dict(zip(table['stage'], table['group']))
    assert groups['prep'] == groups['verify'] == 'prep'
    assert groups['interact'] == groups['syndrome_total'] == 'syndrome'
    assert groups['expected_correction'] == 'correction'
    times = dict(zip(table['stage'], table['time_us']))
    assert times['ecc_latency'] == pytest.approx(2 * times['syndrome_total'] + times['expected_correction'])
