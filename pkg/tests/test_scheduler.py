import pytest

from src.errors import ConfigError, ModelError
from src.layout import build_layout
from src.scheduler import (EprRequest, ToffoliGate, ToffoliWorkload, apply_drift, build_channel_graph,
                           expand_toffoli, load_workload, run_toffoli, saturating_workload, schedule,
                           slot_time, toffoli_workload, utilization_report, verify_capacity,
                           window_slots)

WINDOW = 32


@pytest.fixture(scope='module')
def grid():
    return build_layout(8, 8)


@pytest.fixture(scope='module')
def workload(grid):
    return toffoli_workload(grid, gates=500, seed=0, window=WINDOW)


@pytest.fixture(scope='module')
def toffoli_runs(grid, workload):
    return {bandwidth: run_toffoli(workload, build_channel_graph(grid, bandwidth))
            for bandwidth in (1, 2, 3)}


def _one_gate(reserved=()):
    layout = build_layout(3, 7)
    work = ToffoliWorkload(layout, {0: (0, 0), 1: (2, 6), 2: (1, 3)},
                           [ToffoliGate(0, (0, 1), 2, 0)], WINDOW)
    return layout, work


def test_graph_shape(channel_graph):
    assert channel_graph.number_of_nodes() == 24
    assert channel_graph.number_of_edges() == 74
    assert channel_graph.edges[(0, 0), (0, 1)]['cells'] == 141
    assert channel_graph.edges[(0, 0), (1, 0)]['cells'] == 159
    assert channel_graph.edges[(1, 0), (0, 0)]['capacity'] == 2


def test_bandwidth_must_be_positive(grid_8x8):
    with pytest.raises(ConfigError):
        build_channel_graph(grid_8x8, 0)


def test_slot_and_window(expected):
    assert slot_time(100, expected) == pytest.approx(1330.5)
    assert window_slots(100, expected) == WINDOW


def test_single_request_uncontended(channel_graph):
    result = schedule([EprRequest((0, 0), (0, 3), 2, 0, WINDOW)], channel_graph)
    route = result.routes[0]
    assert route.met_deadline
    assert route.path == [(0, 0), (0, 1)]
    assert route.completion_slot == 1


def test_multi_hop_route_is_shortest(channel_graph):
    result = schedule([EprRequest((0, 0), (2, 6), 4, 0, WINDOW)], channel_graph)
    route = result.routes[0]
    assert len(route.path) == 5
    assert route.request_cells == 2 * 141 + 2 * 159
    # 4 對以 2 條通道需要 2 個時槽，再加一個交換時槽
    assert route.completion_slot == 3


def test_local_request_is_immediate(channel_graph):
    route = schedule([EprRequest((3, 0), (3, 1), 5, 7, 7 + WINDOW)], channel_graph).routes[0]
    assert route.met_deadline
    assert route.completion_slot == 7
    assert route.allocations == []


def test_contention_delays_second_request(channel_graph):
    requests = [EprRequest((0, 0), (0, 3), 4, 0, WINDOW), EprRequest((0, 1), (0, 4), 4, 0, WINDOW)]
    result = schedule(requests, channel_graph)
    assert [r.completion_slot for r in result.routes] == [2, 4]
    assert verify_capacity(result)


def test_back_off_to_alternate_endpoint(channel_graph):
    blocker = EprRequest((0, 3), (0, 6), 2, 0, WINDOW)
    flexible = EprRequest((0, 3), (0, 6), 2, 0, WINDOW, alternates=((1, 3),))
    result = schedule([blocker, flexible], channel_graph)
    assert result.routes[1].dst_island == (1, 1)
    assert result.routes[1].completion_slot == 1


def test_disconnected_endpoints(grid_8x8):
    graph = build_channel_graph(grid_8x8)
    graph.remove_edges_from(list(graph.in_edges((0, 0))) + list(graph.out_edges((0, 0))))
    with pytest.raises(ModelError):
        schedule([EprRequest((0, 0), (5, 5), 1, 0, WINDOW)], graph)


@pytest.mark.parametrize('pairs, release, deadline', [(0, 0, 5), (1, 5, 3), (1, -1, 3)])
def test_malformed_request(pairs, release, deadline):
    with pytest.raises(ModelError):
        EprRequest((0, 0), (1, 1), pairs, release, deadline)


def test_endpoint_off_layout(channel_graph):
    with pytest.raises(ConfigError):
        schedule([EprRequest((0, 0), (9, 0), 1, 0, WINDOW)], channel_graph)


def test_empty_workload(channel_graph):
    result = schedule([], channel_graph)
    report = utilization_report(result)
    assert report['aggregate_utilization'] == 0.0
    assert report['hit_rate'] == 1.0


def test_saturating_workload(channel_graph):
    result = schedule(saturating_workload(channel_graph), channel_graph)
    assert result.utilization == pytest.approx(1.0)
    assert result.hit_rate == 1.0
    assert verify_capacity(result)


def test_capacity_violation_detected(channel_graph):
    result = schedule([EprRequest((0, 0), (0, 3), 2, 0, WINDOW)], channel_graph)
    slot, path, _ = result.routes[0].allocations[0]
    result.routes[0].allocations.append((slot, path, 1))
    assert not verify_capacity(result)


def test_toffoli_bandwidth_two_meets_all_deadlines(toffoli_runs):
    result = toffoli_runs[2]
    assert result.hit_rate == 1.0
    assert 0.10 <= result.utilization <= 0.40
    assert verify_capacity(result)


def test_toffoli_bandwidth_one_misses_deadlines(toffoli_runs):
    report = utilization_report(toffoli_runs[1])
    assert report['missed_deadlines'] > 0
    assert verify_capacity(toffoli_runs[1])


def test_more_bandwidth_never_hurts(toffoli_runs):
    assert toffoli_runs[1].hit_rate <= toffoli_runs[2].hit_rate <= toffoli_runs[3].hit_rate


def test_schedule_is_deterministic(grid, workload):
    graph = build_channel_graph(grid, 2)
    first = run_toffoli(workload, graph)
    second = run_toffoli(workload, graph)
    assert [r.allocations for r in first.routes] == [r.allocations for r in second.routes]
    assert first.utilization == second.utilization


def test_workload_is_seeded(grid):
    assert toffoli_workload(grid, gates=20, seed=4).gates == toffoli_workload(grid, gates=20, seed=4).gates
    assert toffoli_workload(grid, gates=20, seed=4).gates != toffoli_workload(grid, gates=20, seed=5).gates


def test_drift_moves_fewer_cells(grid, workload, toffoli_runs):
    baseline = run_toffoli(workload, build_channel_graph(grid, 2), drift=False)
    drifted = toffoli_runs[2]
    assert drifted.qubit_epr_cells <= baseline.qubit_epr_cells
    assert drifted.epr_cells < baseline.epr_cells


@pytest.mark.parametrize('seed', range(4))
def test_drift_never_worse_for_qubit_traffic(grid, seed):
    graph = build_channel_graph(grid, 2)
    work = toffoli_workload(grid, gates=60, seed=seed, window=WINDOW, occupancy=0.5)
    drifted = run_toffoli(work, graph, drift=True)
    baseline = run_toffoli(work, graph, drift=False)
    assert drifted.qubit_epr_cells <= baseline.qubit_epr_cells


def test_single_gate_drift_halves_distance():
    layout, work = _one_gate()
    graph = build_channel_graph(layout)
    drifted = run_toffoli(work, graph, drift=True)
    baseline = run_toffoli(work, graph, drift=False)
    assert drifted.qubit_epr_cells * 2 == baseline.qubit_epr_cells
    assert drifted.drift_map[0] == (1, 2)
    assert drifted.drift_map[1] == (1, 4)


def test_reserved_home_forces_return():
    layout, work = _one_gate()
    positions, returns = apply_drift(work.positions, work.gates[0], layout, work.positions,
                                     reserved_tiles={(0, 0)})
    assert returns == [0]
    assert positions[0] == (0, 0)
    assert positions[1] == (1, 2)
    requests, _ = expand_toffoli(work, build_channel_graph(layout), reserved_tiles={(0, 0)})
    assert [r.qubit for r in requests if r.kind == 'return'] == [0]


def test_load_workload_text():
    text = "# src_row,src_col,dst_row,dst_col,pairs,release\n0,0,0,3,2,0\n\n1,1,2,4,1,3  # late\n"
    requests = load_workload(text, WINDOW)
    assert len(requests) == 2
    assert requests[1].src == (1, 1) and requests[1].dst == (2, 4)
    assert requests[1].deadline == 3 + WINDOW


def test_load_workload_file(tmp_path):
    path = tmp_path / 'jobs.csv'
    path.write_text("0,0,7,7,3,0\n", encoding='utf-8')
    assert load_workload(str(path), WINDOW)[0].pairs_needed == 3


@pytest.mark.parametrize('line', ['0,0,0,3,2', '0,0,a,3,2,0'])
def test_load_workload_rejects_bad_lines(line):
    with pytest.raises(ConfigError):
        load_workload(line + '\n', WINDOW)
