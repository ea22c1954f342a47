"""
傳送互連模組

EPR 對在雙向彈道通道中點產生、送往相鄰傳送島，經 Bennett 純化後以對數層級的糾纏交換
接成長距離 EPR 對。所有 EPR 對在每步操作後都視為 Werner 態。
"""

import math
import logging
from dataclasses import dataclass
from typing import Callable, Hashable, List, Optional, Sequence

import numpy as np
import pandas as pd

from .errors import ModelError
from .params import TechnologyParams, ballistic_latency

logger = logging.getLogger(__name__)

DEFAULT_TARGET_FIDELITY = 1 - 1e-6
# 端到端 EPR 對的去極化強度不超過門檻 7.5e-5
DEFAULT_END_TO_END_FIDELITY = 1 - 0.75 * 7.5e-5
DEFAULT_SPACINGS = (35, 70, 100, 350, 500, 1000)
MAX_ROUNDS = 64
_FIDELITY_SLACK = 1e-12


@dataclass(frozen=True)
class EprPair:
    fidelity: float
    location_a: Hashable = 'a'
    location_b: Hashable = 'b'

    def __post_init__(self):
        if not 0.25 - _FIDELITY_SLACK <= self.fidelity <= 1.0 + _FIDELITY_SLACK:
            raise ModelError(f"Werner 態保真度必須介於 0.25 與 1，得到 {self.fidelity}")
        if self.location_a == self.location_b:
            raise ModelError(f"EPR 對的兩端不可相同: {self.location_a}")

    @property
    def endpoints(self) -> frozenset:
        return frozenset((self.location_a, self.location_b))


@dataclass(frozen=True)
class PurificationOutcome:
    pair: EprPair
    success_probability: float
    success: bool


@dataclass(frozen=True)
class RepeaterChannel:
    """一條中繼鏈的連線計畫；時間單位 µs

    purification_rounds_per_hop 與 swap_stages 是實際執行的整數次數；
    purification_depth 與 swap_depth 是時間曲線用的連續深度，
    前者在最後兩輪之間對 log(1-F) 內插，後者為 log2(距離 / 島距)。
    """
    total_distance: float
    island_spacing: float
    hop_count: int
    purification_rounds_per_hop: int
    purification_depth: float
    per_hop_base_fidelity: float
    per_hop_required_fidelity: float
    per_hop_fidelity: float
    final_fidelity: float
    swap_stages: int
    swap_depth: float
    distribution_time: float
    purification_time: float
    swap_time: float

    @property
    def total_time(self) -> float:
        return self.distribution_time + self.purification_time + self.swap_time


def werner_depolarize(fidelity: float, q: float) -> float:
    """對 Werner 態的一端施加機率 q 的去極化"""
    return 0.25 + (fidelity - 0.25) * (1 - 4 * q / 3)


def transport_fidelity(distance: float, params: TechnologyParams) -> float:
    """從通道中點各走 distance/2 格後的 EPR 對保真度"""
    if distance < 0:
        raise ModelError(f"距離不可為負: {distance}")
    q = 1 - (1 - params.p_move) ** distance
    return 1 - 0.75 * q


def bennett_map(fa: float, fb: float):
    """理想 Bennett 純化：回傳 (輸出保真度, 成功機率)"""
    ea, eb = 1 - fa, 1 - fb
    success = fa * fb + fa * eb / 3 + fb * ea / 3 + 5 * ea * eb / 9
    return (fa * fb + ea * eb / 9) / success, success


def purify(a: EprPair, b: EprPair, params: Optional[TechnologyParams] = None,
           rng: Optional[np.random.Generator] = None) -> PurificationOutcome:
    """以 b 純化 a

    兩端各做一次雙量子位元閘並量測 b；有給參數組時先把閘與量測錯誤當作去極化套用。

    Args:
        a: 保留的 EPR 對
        b: 被量測消耗的 EPR 對
        params: 技術參數，None 表示理想操作
        rng: 用來抽樣成功與否，None 時回傳成功條件下的結果

    Returns:
        純化結果
    """
    if a.endpoints != b.endpoints:
        raise ModelError(f"純化的兩個 EPR 對端點不同: {set(a.endpoints)} 與 {set(b.endpoints)}")
    fa, fb = a.fidelity, b.fidelity
    if params is not None:
        for _ in range(2):
            fa = werner_depolarize(fa, params.p_double)
            fb = werner_depolarize(werner_depolarize(fb, params.p_double), params.p_measure)
    fidelity, p_success = bennett_map(fa, fb)
    success = True if rng is None else bool(rng.random() < p_success)
    return PurificationOutcome(EprPair(fidelity, a.location_a, a.location_b), p_success, success)


def entanglement_swap(ab: EprPair, bc: EprPair,
                      params: Optional[TechnologyParams] = None) -> EprPair:
    """在共用端點做 Bell 量測，把 a-b 與 b-c 接成 a-c"""
    shared = ab.endpoints & bc.endpoints
    if len(shared) != 1 or ab.endpoints == bc.endpoints:
        raise ModelError("糾纏交換需要恰好一個共用端點")
    middle = next(iter(shared))
    a = ab.location_a if ab.location_b == middle else ab.location_b
    c = bc.location_b if bc.location_a == middle else bc.location_a
    f1, f2 = ab.fidelity, bc.fidelity
    fidelity = f1 * f2 + (1 - f1) * (1 - f2) / 3
    if params is not None:
        fidelity = werner_depolarize(fidelity, params.p_double)
        for _ in range(2):
            fidelity = werner_depolarize(fidelity, params.p_measure)
    return EprPair(fidelity, a, c)


def swap_stage_count(hops: int) -> int:
    """並行交換的層數 ceil(log2 hops)"""
    if hops < 1:
        raise ModelError(f"跳數必須至少為 1，得到 {hops}")
    return math.ceil(math.log2(hops)) if hops > 1 else 0


def swap_chain_fidelity(hop_fidelity: float, hops: int,
                        params: Optional[TechnologyParams] = None) -> float:
    """hops 段相同保真度的 EPR 對交換後的端到端保真度

    Werner 參數 w = (4F - 1)/3 在交換下相乘，每次交換再乘上操作雜訊因子。
    """
    w = (4 * hop_fidelity - 1) / 3
    noise = 1.0
    if params is not None:
        noise = (1 - 4 * params.p_double / 3) * (1 - 4 * params.p_measure / 3) ** 2
    return 0.25 + 0.75 * w ** hops * noise ** (hops - 1)


def _purification_trace(base_fidelity: float, satisfied: Callable[[float], bool],
                        params: Optional[TechnologyParams], max_rounds: int) -> List[float]:
    """純化過程每一輪後的保真度，最後一個元素滿足 satisfied"""
    trace = [base_fidelity]
    for _ in range(max_rounds + 1):
        if satisfied(trace[-1]):
            return trace
        pair = EprPair(trace[-1])
        improved = purify(pair, pair, params).pair.fidelity
        if improved <= trace[-1]:
            break
        trace.append(improved)
    raise ModelError(f"起始保真度 {base_fidelity:.9f} 無法純化到所需保真度")


def purification_rounds(base_fidelity: float, satisfied: Callable[[float], bool],
                        params: Optional[TechnologyParams] = None,
                        max_rounds: int = MAX_ROUNDS):
    """重複純化直到 satisfied(F) 成立

    Returns:
        (輪數, 最終保真度)

    Raises:
        ModelError: 保真度不再上升或超過最大輪數
    """
    trace = _purification_trace(base_fidelity, satisfied, params, max_rounds)
    return len(trace) - 1, trace[-1]


def purification_depth(base_fidelity: float, required: float,
                       params: Optional[TechnologyParams] = None,
                       max_rounds: int = MAX_ROUNDS):
    """純化到 required 所需的整數輪數與連續深度

    連續深度在最後兩輪之間對 log(1 - F) 線性內插，恰好達到 required 時等於整數輪數，
    並隨起始保真度下降或 required 上升而單調增加。

    Returns:
        (輪數, 連續深度, 最終保真度)
    """
    trace = _purification_trace(base_fidelity, lambda f: f >= required, params, max_rounds)
    rounds = len(trace) - 1
    if rounds == 0:
        return 0, 0.0, trace[-1]
    before, after, needed = 1 - trace[-2], 1 - trace[-1], 1 - required
    if after <= 0.0 or needed <= 0.0:
        return rounds, float(rounds), trace[-1]
    depth = rounds - 1 + math.log(before / needed) / math.log(before / after)
    return rounds, depth, trace[-1]


def required_hop_fidelity(hops: int, params: Optional[TechnologyParams] = None,
                          target_fidelity: float = DEFAULT_TARGET_FIDELITY,
                          end_to_end_fidelity: float = DEFAULT_END_TO_END_FIDELITY) -> float:
    """每段 EPR 對需要的保真度：單段目標與 swap_chain_fidelity 反解出的端到端需求取較嚴者

    Raises:
        ModelError: 交換操作本身的雜訊已超出端到端需求
    """
    if hops < 1:
        raise ModelError(f"跳數必須至少為 1，得到 {hops}")
    noise = 1.0
    if params is not None:
        noise = (1 - 4 * params.p_double / 3) * (1 - 4 * params.p_measure / 3) ** 2
    w = ((end_to_end_fidelity - 0.25) / (0.75 * noise ** (hops - 1))) ** (1 / hops)
    if w > 1.0:
        raise ModelError(f"{hops} 段交換的雜訊已超出端到端保真度 {end_to_end_fidelity}")
    return max(target_fidelity, (3 * w + 1) / 4)


def connection_plan(distance: float, spacing: float, params: TechnologyParams,
                    target_fidelity: float = DEFAULT_TARGET_FIDELITY,
                    end_to_end_fidelity: float = DEFAULT_END_TO_END_FIDELITY) -> RepeaterChannel:
    """規劃一條距離為 distance、島距為 spacing 的連線

    每段 EPR 對純化到至少 target_fidelity，且交換後的端到端 EPR 對不低於
    end_to_end_fidelity，最終的長距離 EPR 對不再純化。時間以連續深度計算：
    純化時間隨島距單調上升、交換時間單調下降，因此固定距離下連線時間對島距先降後升。

    Raises:
        ModelError: 間距大於距離，或所需保真度無法達成（間距過大或跳數過多）
    """
    if spacing <= 0 or spacing > distance:
        raise ModelError(f"島距 {spacing} 必須為正且不大於距離 {distance}")
    hops = math.ceil(distance / spacing)
    base = transport_fidelity(spacing, params)
    required = required_hop_fidelity(hops, params, target_fidelity, end_to_end_fidelity)
    rounds, depth, hop_fidelity = purification_depth(base, required, params)
    swap_depth = math.log2(distance / spacing)
    round_time = params.double_gate_time + params.measure_time
    stage_time = params.double_gate_time + params.measure_time + params.single_gate_time
    return RepeaterChannel(
        total_distance=distance,
        island_spacing=spacing,
        hop_count=hops,
        purification_rounds_per_hop=rounds,
        purification_depth=depth,
        per_hop_base_fidelity=base,
        per_hop_required_fidelity=required,
        per_hop_fidelity=hop_fidelity,
        final_fidelity=swap_chain_fidelity(hop_fidelity, hops, params),
        swap_stages=swap_stage_count(hops),
        swap_depth=swap_depth,
        distribution_time=ballistic_latency(spacing / 2, 0, params),
        purification_time=depth * round_time,
        swap_time=swap_depth * stage_time,
    )


def connection_time(distance: float, spacing: float, params: TechnologyParams,
                    target_fidelity: float = DEFAULT_TARGET_FIDELITY,
                    end_to_end_fidelity: float = DEFAULT_END_TO_END_FIDELITY) -> float:
    """連線總時間（µs）"""
    return connection_plan(distance, spacing, params, target_fidelity,
                           end_to_end_fidelity).total_time


def optimal_spacing(distance: float, candidates: Sequence[float], params: TechnologyParams,
                    target_fidelity: float = DEFAULT_TARGET_FIDELITY,
                    end_to_end_fidelity: float = DEFAULT_END_TO_END_FIDELITY) -> float:
    """在候選島距中取連線時間最短者，平手取較小島距

    Raises:
        ModelError: 候選清單為空或全部無法達成
    """
    if not candidates:
        raise ModelError("候選島距清單為空")
    best = None
    for spacing in sorted(candidates):
        try:
            elapsed = connection_time(distance, spacing, params, target_fidelity,
                                      end_to_end_fidelity)
        except ModelError as e:
            logger.debug(f"略過島距 {spacing}: {str(e)}")
            continue
        if best is None or elapsed < best[0]:
            best = (elapsed, spacing)
    if best is None:
        raise ModelError(f"距離 {distance} 的所有候選島距都無法達成目標保真度")
    return best[1]


def spacing_sweep(distances: Sequence[float], candidates: Sequence[float] = DEFAULT_SPACINGS,
                  params: TechnologyParams = None,
                  target_fidelity: float = DEFAULT_TARGET_FIDELITY,
                  end_to_end_fidelity: float = DEFAULT_END_TO_END_FIDELITY) -> pd.DataFrame:
    """對每個 (距離, 島距) 計算連線時間；無法達成者記為空值"""
    rows = []
    for distance in distances:
        for spacing in candidates:
            row = {'distance_cells': distance, 'spacing_cells': spacing,
                   'connection_time_us': np.nan, 'final_fidelity': np.nan,
                   'purification_rounds': np.nan, 'purification_depth': np.nan,
                   'swap_stages': np.nan}
            if spacing <= distance:
                try:
                    plan = connection_plan(distance, spacing, params, target_fidelity,
                                           end_to_end_fidelity)
                    row.update(connection_time_us=plan.total_time,
                               final_fidelity=plan.final_fidelity,
                               purification_rounds=plan.purification_rounds_per_hop,
                               purification_depth=plan.purification_depth,
                               swap_stages=plan.swap_stages)
                except ModelError:
                    pass
            rows.append(row)
    return pd.DataFrame(rows)


def spacing_crossover(distances: Sequence[float], params: TechnologyParams,
                      shorter: float = 100, longer: float = 350,
                      target_fidelity: float = DEFAULT_TARGET_FIDELITY,
                      end_to_end_fidelity: float = DEFAULT_END_TO_END_FIDELITY) -> Optional[float]:
    """回傳第一個較大島距勝過較小島距的距離，找不到時為 None"""
    for distance in sorted(distances):
        if longer > distance:
            continue
        try:
            long_time = connection_time(distance, longer, params, target_fidelity,
                                        end_to_end_fidelity)
        except ModelError:
            continue
        try:
            short_time = connection_time(distance, shorter, params, target_fidelity,
                                         end_to_end_fidelity)
        except ModelError:
            return distance
        if long_time < short_time:
            return distance
    return None


def distances_grid(start: float = 500, stop: float = 20000, step: float = 500) -> List[float]:
    """島距比較用的距離格點（格）"""
    return [float(d) for d in np.arange(start, stop + step / 2, step)]
