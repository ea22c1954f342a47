"""
EPR 分配排程模組

在傳送島構成的通道圖上，以貪婪法為每個 EPR 請求佔用最短路徑上的可用頻寬。
時間以「每跳 EPR 分配時槽」為單位：通道中點產生的 EPR 對走 spacing/2 格並完成純化。
"""

import os
import math
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from .ecc import calibrated_timing, ecc_latency
from .errors import ConfigError, ModelError
from .interconnect import DEFAULT_TARGET_FIDELITY, purification_rounds, transport_fidelity
from .layout import (STEANE_LEVEL2, TileLayout, island_distance, island_for_tile,
                     manhattan_distance)
from .params import TechnologyParams, ballistic_latency

logger = logging.getLogger(__name__)

Tile = Tuple[int, int]
IslandId = Tuple[int, int]
Edge = Tuple[IslandId, IslandId]

DEFAULT_BANDWIDTH = 2
DEFAULT_SPACING = 100
MAX_RETRIES = 3
# 兩個控制位元送往 hub、六個輔助塊由 hub 送往周圍的島
CONTROL_PAIRS = 16
ANCILLA_PAIRS = 2
ANCILLA_DELIVERIES = 6
GATE_STRIDE_SLOTS = 5
OCCUPANCY = 0.75


@dataclass(frozen=True)
class EprRequest:
    src: Tile
    dst: Tile
    pairs_needed: int
    release_time: int
    deadline: int
    alternates: Tuple[Tile, ...] = ()
    kind: str = 'request'
    qubit: Optional[int] = None

    def __post_init__(self):
        if self.pairs_needed < 1:
            raise ModelError(f"pairs_needed 必須至少為 1，得到 {self.pairs_needed}")
        if self.release_time < 0 or self.deadline < self.release_time:
            raise ModelError(f"請求時間不合法: release={self.release_time}, deadline={self.deadline}")


@dataclass
class RouteRecord:
    request: EprRequest
    src_island: IslandId
    dst_island: IslandId
    path: List[IslandId]
    start_slot: int
    completion_slot: int
    met_deadline: bool
    # (時槽, 路徑, 佔用的通道數)
    allocations: List[Tuple[int, Tuple[IslandId, ...], int]] = field(default_factory=list)
    retries: int = 0
    # 第一段佔用路徑的總格數
    request_cells: int = 0


@dataclass
class ScheduleResult:
    routes: List[RouteRecord]
    bandwidth: int
    window_slots: int
    directed_edges: int
    makespan: int
    lane_slots: Dict[Edge, int]
    drift_map: Dict[int, Tile] = field(default_factory=dict)

    @property
    def utilization(self) -> float:
        if self.makespan == 0 or self.directed_edges == 0:
            return 0.0
        return sum(self.lane_slots.values()) / (self.directed_edges * self.bandwidth * self.makespan)

    @property
    def hit_rate(self) -> float:
        if not self.routes:
            return 1.0
        return sum(r.met_deadline for r in self.routes) / len(self.routes)

    @property
    def epr_cells(self) -> int:
        return sum(r.request.pairs_needed * r.request_cells for r in self.routes)

    @property
    def qubit_epr_cells(self) -> int:
        """邏輯量子位元本身被傳送（含送回）所用的 EPR 格數"""
        return sum(r.request.pairs_needed * r.request_cells for r in self.routes
                   if r.request.kind in ('control', 'return'))


@dataclass(frozen=True)
class ToffoliGate:
    index: int
    controls: Tuple[int, int]
    target: int
    release: int


@dataclass
class ToffoliWorkload:
    layout: TileLayout
    positions: Dict[int, Tile]
    gates: List[ToffoliGate]
    window_slots: int
    control_pairs: int = CONTROL_PAIRS
    ancilla_pairs: int = ANCILLA_PAIRS
    ancilla_deliveries: int = ANCILLA_DELIVERIES


def build_channel_graph(layout: TileLayout, bandwidth: int = DEFAULT_BANDWIDTH) -> nx.DiGraph:
    """傳送島之間的通道圖：同列相鄰島與上下相鄰島互連，每個方向容量為 bandwidth

    Raises:
        ConfigError: bandwidth 小於 1
    """
    if bandwidth < 1:
        raise ConfigError(f"頻寬必須至少為 1，得到 {bandwidth}")
    graph = nx.DiGraph(layout=layout, bandwidth=bandwidth)
    per_row = len(layout.island_columns)
    for row in range(layout.rows):
        for col in range(per_row):
            graph.add_node((row, col))
    for row in range(layout.rows):
        for col in range(per_row):
            here = (row, col)
            for there in ((row, col + 1), (row + 1, col)):
                if there in graph:
                    cells = island_distance(here, there, layout)
                    graph.add_edge(here, there, cells=cells, capacity=bandwidth)
                    graph.add_edge(there, here, cells=cells, capacity=bandwidth)
    logger.debug(f"通道圖：{graph.number_of_nodes()} 個島、{graph.number_of_edges()} 條有向邊")
    return graph


def slot_time(spacing: float, params: TechnologyParams,
              target_fidelity: float = DEFAULT_TARGET_FIDELITY) -> float:
    """一個分配時槽的長度（µs）：走 spacing/2 格加上每跳純化"""
    rounds, _ = purification_rounds(transport_fidelity(spacing, params),
                                    lambda f: f >= target_fidelity, params)
    return (ballistic_latency(spacing / 2, 0, params)
            + rounds * (params.double_gate_time + params.measure_time))


def window_slots(spacing: float, params: TechnologyParams) -> int:
    """一次第二層錯誤更正的時間內有幾個時槽"""
    latency = ecc_latency(2, calibrated_timing(params, STEANE_LEVEL2))
    return max(1, math.floor(latency / slot_time(spacing, params)))


class _Reservations:
    def __init__(self, graph: nx.DiGraph):
        self.graph = graph
        self.bandwidth = graph.graph['bandwidth']
        self.used: Dict[Edge, Dict[int, int]] = defaultdict(lambda: defaultdict(int))

    def free(self, path: Sequence[IslandId], slot: int) -> int:
        return min(self.bandwidth - self.used[edge][slot] for edge in zip(path, path[1:]))

    def claim(self, path: Sequence[IslandId], slot: int, lanes: int) -> None:
        for edge in zip(path, path[1:]):
            self.used[edge][slot] += lanes


class GreedyScheduler:
    """依釋出順序處理請求，每個時槽搶下瓶頸最寬的最短路徑上所有可用通道"""

    def __init__(self, graph: nx.DiGraph, max_retries: int = MAX_RETRIES):
        self.graph = graph
        self.layout: TileLayout = graph.graph['layout']
        self.max_retries = max_retries
        self.reservations = _Reservations(graph)
        self._paths: Dict[Tuple[IslandId, IslandId], List[Tuple[IslandId, ...]]] = {}

    def shortest_paths(self, src: IslandId, dst: IslandId) -> List[Tuple[IslandId, ...]]:
        key = (src, dst)
        if key not in self._paths:
            if src not in self.graph or dst not in self.graph:
                raise ModelError(f"端點不在通道圖上: {src} -> {dst}")
            if not nx.has_path(self.graph, src, dst):
                raise ModelError(f"端點之間沒有通道: {src} -> {dst}")
            paths = nx.all_shortest_paths(self.graph, src, dst, weight='cells')
            self._paths[key] = sorted(tuple(p) for p in paths)
        return self._paths[key]

    def _best_path(self, src: IslandId, dst: IslandId, slot: int):
        best, best_free = None, -1
        for path in self.shortest_paths(src, dst):
            free = self.reservations.free(path, slot)
            if free > best_free:
                best, best_free = path, free
        return best, best_free

    def _path_cells(self, path: Sequence[IslandId]) -> int:
        return sum(self.graph.edges[u, v]['cells'] for u, v in zip(path, path[1:]))

    def route(self, request: EprRequest) -> RouteRecord:
        src = island_for_tile(self.layout, request.src)
        dst = island_for_tile(self.layout, request.dst)
        if src == dst:
            return RouteRecord(request, src, dst, [src], request.release_time,
                               request.release_time, True)

        remaining = request.pairs_needed
        slot = request.release_time
        allocations = []
        retries = 0
        backed_off = False
        while remaining > 0:
            path, free = self._best_path(src, dst, slot)
            if free == 0 and not allocations and not backed_off:
                # 退讓：改用備選終點再試
                backed_off = True
                for alternate in request.alternates[:self.max_retries]:
                    retries += 1
                    alt_dst = island_for_tile(self.layout, alternate)
                    if alt_dst == src:
                        continue
                    alt_path, alt_free = self._best_path(src, alt_dst, slot)
                    if alt_free > 0:
                        dst, path, free = alt_dst, alt_path, alt_free
                        break
            if free > 0:
                lanes = min(free, remaining)
                self.reservations.claim(path, slot, lanes)
                allocations.append((slot, path, lanes))
                remaining -= lanes
            slot += 1

        first_path = allocations[0][1]
        last_slot = allocations[-1][0]
        hops = len(first_path) - 1
        # 多跳時最後再加一個糾纏交換的時槽
        completion = last_slot + 1 + (1 if hops > 1 else 0)
        record = RouteRecord(request, src, dst, list(first_path), allocations[0][0], completion,
                             completion <= request.deadline, allocations, retries)
        record.request_cells = self._path_cells(first_path)
        return record


def schedule(requests: Sequence[EprRequest], graph: nx.DiGraph, spacing: float = DEFAULT_SPACING,
             window: Optional[int] = None, drift_map: Optional[Dict[int, Tile]] = None) -> ScheduleResult:
    """依釋出時間（同時間依輸入順序）排程所有請求

    Args:
        requests: EPR 請求
        graph: build_channel_graph 建立的通道圖
        spacing: 傳送島間距（格），只用於紀錄
        window: 期限視窗（時槽），只用於紀錄
        drift_map: 邏輯量子位元最後的位置

    Returns:
        排程結果

    Raises:
        ModelError: 端點之間沒有通道
        ConfigError: 端點超出版面
    """
    scheduler = GreedyScheduler(graph)
    order = sorted(range(len(requests)), key=lambda i: (requests[i].release_time, i))
    routes = [None] * len(requests)
    for index in order:
        routes[index] = scheduler.route(requests[index])

    lane_slots: Dict[Edge, int] = {edge: 0 for edge in graph.edges}
    for route in routes:
        for _, path, lanes in route.allocations:
            for edge in zip(path, path[1:]):
                lane_slots[edge] += lanes
    makespan = max((r.completion_slot for r in routes), default=0)
    result = ScheduleResult(routes=routes, bandwidth=graph.graph['bandwidth'],
                            window_slots=window or 0, directed_edges=graph.number_of_edges(),
                            makespan=makespan, lane_slots=lane_slots,
                            drift_map=dict(drift_map or {}))
    logger.info(f"排程 {len(routes)} 個請求（島距 {spacing}）：命中率 {result.hit_rate:.3f}，"
                f"使用率 {result.utilization:.3f}")
    return result


def verify_capacity(result: ScheduleResult) -> bool:
    """重播所有佔用，確認每條有向邊每個時槽都不超過頻寬"""
    used: Dict[Tuple[Edge, int], int] = defaultdict(int)
    for route in result.routes:
        for slot, path, lanes in route.allocations:
            for edge in zip(path, path[1:]):
                used[(edge, slot)] += lanes
                if used[(edge, slot)] > result.bandwidth:
                    logger.error(f"邊 {edge} 在時槽 {slot} 超過頻寬 {result.bandwidth}")
                    return False
    return True


def utilization_report(result: ScheduleResult) -> Dict:
    """彙總使用率、每條邊的使用率與期限命中率"""
    per_edge = {}
    if result.makespan:
        per_edge = {f"{u}->{v}": lanes / (result.bandwidth * result.makespan)
                    for (u, v), lanes in sorted(result.lane_slots.items())}
    histogram, bins = np.histogram(list(per_edge.values()) or [0.0], bins=10, range=(0.0, 1.0))
    met = sum(r.met_deadline for r in result.routes)
    return {
        'requests': len(result.routes),
        'met_deadlines': met,
        'missed_deadlines': len(result.routes) - met,
        'hit_rate': result.hit_rate,
        'aggregate_utilization': result.utilization,
        'bandwidth': result.bandwidth,
        'window_slots': result.window_slots,
        'makespan_slots': result.makespan,
        'epr_cells': result.epr_cells,
        'qubit_epr_cells': result.qubit_epr_cells,
        'edge_utilization': per_edge,
        'edge_utilization_histogram': {'bins': [float(b) for b in bins],
                                       'counts': [int(c) for c in histogram]},
    }


def _island_tiles(layout: TileLayout) -> Dict[IslandId, List[Tile]]:
    served = defaultdict(list)
    for row in range(layout.rows):
        for col in range(layout.cols):
            served[island_for_tile(layout, (row, col))].append((row, col))
    return served


def _island_tile(layout: TileLayout, island: IslandId) -> Tile:
    return island[0], layout.island_columns[island[1]]


def apply_drift(drift_map: Dict[int, Tile], gate: ToffoliGate, layout: TileLayout,
                homes: Dict[int, Tile],
                reserved_tiles: Iterable[Tile] = ()) -> Tuple[Dict[int, Tile], List[int]]:
    """閘執行後讓被傳送的控制位元留在 hub 附近

    控制位元移到 hub 島服務範圍內、離目標最近的空磚塊（不佔用任何量子位元的原位）；
    若原位之後被其他請求需要，或 hub 附近沒有空位，就送回原位。

    Args:
        drift_map: 目前位置
        gate: 剛執行的閘
        layout: 版面
        homes: 每個量子位元的原位
        reserved_tiles: 之後的請求需要的磚塊

    Returns:
        (更新後的位置, 需要送回原位的量子位元)
    """
    reserved = set(reserved_tiles)
    positions = dict(drift_map)
    target_tile = positions[gate.target]
    hub = island_for_tile(layout, target_tile)
    served = _island_tiles(layout)[hub]
    home_tiles = set(homes.values())
    returns = []
    for qubit in gate.controls:
        if island_for_tile(layout, positions[qubit]) == hub:
            continue
        taken = set(positions.values()) | home_tiles
        free = [tile for tile in served if tile not in taken]
        if homes[qubit] in reserved or not free:
            positions[qubit] = homes[qubit]
            returns.append(qubit)
            continue
        positions[qubit] = min(free, key=lambda t: (manhattan_distance(t, target_tile, layout), t))
    return positions, returns


def toffoli_workload(layout: TileLayout, gates: int = 500, seed: int = 0,
                     occupancy: float = OCCUPANCY, stride: int = GATE_STRIDE_SLOTS,
                     window: int = 32, control_pairs: int = CONTROL_PAIRS,
                     ancilla_pairs: int = ANCILLA_PAIRS) -> ToffoliWorkload:
    """產生隨機 Toffoli 工作負載（固定種子可重現）

    Raises:
        ConfigError: 佔用率不合法或量子位元少於 3 個
    """
    if not 0.0 < occupancy <= 1.0:
        raise ConfigError(f"佔用率必須介於 0 與 1，得到 {occupancy}")
    if gates < 0 or stride < 1:
        raise ConfigError(f"閘數不可為負且間隔至少為 1，得到 gates={gates}, stride={stride}")
    tiles = [(r, c) for r in range(layout.rows) for c in range(layout.cols)]
    count = int(round(occupancy * len(tiles)))
    if count < 3:
        raise ConfigError(f"至少需要 3 個邏輯量子位元，得到 {count}")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(tiles), size=count, replace=False)
    positions = {q: tiles[int(i)] for q, i in enumerate(sorted(chosen))}
    gate_list = []
    for index in range(gates):
        a, b, t = (int(x) for x in rng.choice(count, size=3, replace=False))
        gate_list.append(ToffoliGate(index, (a, b), t, index * stride))
    return ToffoliWorkload(layout, positions, gate_list, window, control_pairs, ancilla_pairs)


def expand_toffoli(workload: ToffoliWorkload, graph: nx.DiGraph, drift: bool = True,
                   reserved_tiles: Iterable[Tile] = ()) -> Tuple[List[EprRequest], Dict[int, Tile]]:
    """把每個 Toffoli 閘展開成 EPR 請求

    兩個控制位元傳送到目標所在的 hub 島；六個輔助塊由 hub 輪流送往相鄰的島，
    其餘相鄰島作為退讓時的備選終點。不啟用漂移時，控制位元在期限時送回原位；
    啟用漂移時，漂走的量子位元在下次當作目標前才送回原位。
    """
    layout = workload.layout
    positions = dict(workload.positions)
    requests = []
    window = workload.window_slots
    for gate in workload.gates:
        home = workload.positions[gate.target]
        if drift and positions[gate.target] != home:
            # 目標要在原位執行閘，先把漂走的目標送回
            requests.append(EprRequest(positions[gate.target], home, workload.control_pairs,
                                       gate.release, gate.release + window, kind='return',
                                       qubit=gate.target))
            positions[gate.target] = home
        target_tile = positions[gate.target]
        hub = island_for_tile(layout, target_tile)
        deadline = gate.release + window
        for qubit in gate.controls:
            requests.append(EprRequest(positions[qubit], target_tile, workload.control_pairs,
                                       gate.release, deadline, kind='control', qubit=qubit))
        neighbors = sorted(graph.successors(hub))
        for k in range(workload.ancilla_deliveries if neighbors else 0):
            dst = neighbors[k % len(neighbors)]
            alternates = tuple(_island_tile(layout, n) for n in neighbors if n != dst)
            requests.append(EprRequest(target_tile, _island_tile(layout, dst),
                                       workload.ancilla_pairs, gate.release, deadline,
                                       alternates=alternates, kind='ancilla'))
        if drift:
            positions, returning = apply_drift(positions, gate, layout, workload.positions,
                                               reserved_tiles)
        else:
            returning = [q for q in gate.controls if island_for_tile(layout, positions[q]) != hub]
        for qubit in returning:
            requests.append(EprRequest(target_tile, workload.positions[qubit], workload.control_pairs,
                                       deadline, deadline + window, kind='return', qubit=qubit))
    return requests, positions


def run_toffoli(workload: ToffoliWorkload, graph: nx.DiGraph, drift: bool = True,
                reserved_tiles: Iterable[Tile] = (),
                spacing: float = DEFAULT_SPACING) -> ScheduleResult:
    """展開並排程 Toffoli 工作負載"""
    requests, positions = expand_toffoli(workload, graph, drift, reserved_tiles)
    logger.info(f"Toffoli 工作負載：{len(workload.gates)} 個閘、{len(requests)} 個請求，"
                f"漂移={'開' if drift else '關'}")
    return schedule(requests, graph, spacing, workload.window_slots, positions)


def saturating_workload(graph: nx.DiGraph, pairs: Optional[int] = None) -> List[EprRequest]:
    """每條有向邊一個單跳請求，全部在時槽 0 釋出"""
    layout: TileLayout = graph.graph['layout']
    pairs = pairs or graph.graph['bandwidth']
    return [EprRequest(_island_tile(layout, u), _island_tile(layout, v), pairs, 0, 1,
                       kind='synthetic')
            for u, v in sorted(graph.edges)]


def load_workload(source: Union[str, os.PathLike], window: int) -> List[EprRequest]:
    """讀取工作負載檔：每行 src_row,src_col,dst_row,dst_col,pairs,release，# 開頭為註解

    Raises:
        ConfigError: 格式錯誤
    """
    source = os.fspath(source)
    if '\n' not in source and os.path.isfile(source):
        with open(source, encoding='utf-8') as handle:
            text = handle.read()
    else:
        text = source
    requests = []
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(',')]
        if len(fields) != 6:
            raise ConfigError(f"第 {number} 行需要 6 個欄位，得到 {len(fields)}")
        try:
            src_row, src_col, dst_row, dst_col, pairs, release = (int(f) for f in fields)
        except ValueError as e:
            raise ConfigError(f"第 {number} 行不是整數: {str(e)}") from e
        requests.append(EprRequest((src_row, src_col), (dst_row, dst_col), pairs, release,
                                   release + window, kind='file'))
    return requests
