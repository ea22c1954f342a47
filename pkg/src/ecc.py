"""
錯誤更正延遲與遞迴可靠度模組

時間單位一律為 µs，報表輸出時再換算為秒。
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .errors import ConfigError, ModelError
from .layout import LogicalQubitTile, STEANE_LEVEL2
from .params import TechnologyParams, ballistic_latency, mean_failure_rate

logger = logging.getLogger(__name__)

DEFAULT_NONTRIVIAL_RATES: Dict[int, float] = {1: 3.35e-4, 2: 7.92e-4}

# 第一層 |0>_L 編碼電路的 CNOT 數
ENCODER_CNOTS = 9
# 驗證：兩個權重 4 的穩定子加上兩個權重 3 的邏輯算符代表
VERIFICATION_CNOTS = 14
# 第二層輔助塊的編碼輪數，每輪後接第一層更正
LEVEL2_ENCODE_ROUNDS = 2
LEVEL2_VERIFY_ROUNDS = 2
LEVEL2_MOVE_STAGES = 2


@dataclass
class EccTiming:
    """各層的徵狀擷取時間、邏輯閘時間與非平凡徵狀機率（µs）"""
    level: int
    t_syndrome: Dict[int, float] = field(default_factory=dict)
    t_logical_gate: Dict[int, float] = field(default_factory=dict)
    nontrivial_rate: Dict[int, float] = field(
        default_factory=lambda: dict(DEFAULT_NONTRIVIAL_RATES))

    def __post_init__(self):
        for level, rate in self.nontrivial_rate.items():
            if not 0.0 <= rate <= 1.0:
                raise ConfigError(f"第 {level} 層非平凡徵狀機率必須介於 0 與 1，得到 {rate}")
        for table in (self.t_syndrome, self.t_logical_gate):
            for level, value in table.items():
                if value <= 0:
                    raise ConfigError(f"第 {level} 層時間必須為正，得到 {value}")


@dataclass(frozen=True)
class RecursionModel:
    """遞迴失效估計的輸入；常數 c 併入 p_th = 1/(c r²)"""
    p0: float
    p_th: float = 7.5e-5
    r: float = 12
    L: int = 2

    def __post_init__(self):
        if not (0.0 < self.p0 < 1.0 and 0.0 < self.p_th < 1.0):
            raise ConfigError(f"p0 與 p_th 必須介於 0 與 1，得到 {self.p0}, {self.p_th}")
        if self.r < 1 or self.L < 0:
            raise ConfigError(f"需要 r >= 1 且 L >= 0，得到 r={self.r}, L={self.L}")


def ecc_latency(L: int, timing: EccTiming) -> float:
    """第 L 層錯誤更正延遲的期望值

    平凡徵狀時為兩次序列擷取 2T；非平凡時再擷取一次確認、
    套用一個邏輯閘並等待下層更正。

    Args:
        L: 遞迴層數
        timing: 各層時間

    Returns:
        延遲（µs）

    Raises:
        ModelError: 缺少該層的時間資料
    """
    if L < 1:
        raise ModelError(f"錯誤更正層數必須至少為 1，得到 {L}")
    latency = 0.0
    for level in range(1, L + 1):
        try:
            synd = timing.t_syndrome[level]
            gate = timing.t_logical_gate[level]
            q = timing.nontrivial_rate[level]
        except KeyError as e:
            raise ModelError(f"第 {level} 層缺少時間資料") from e
        latency = (1 - q) * 2 * synd + q * 2 * (2 * synd + gate + latency)
    return latency


def _cnot_round(params: TechnologyParams, hop: int, turns: int) -> float:
    # 移動、冷卻、閘、移回、冷卻
    return 2 * ballistic_latency(hop, turns, params) + 2 * params.cooling_time + params.double_gate_time


def syndrome_stages(L: int, params: TechnologyParams,
                    tile: LogicalQubitTile = STEANE_LEVEL2,
                    nontrivial_rates: Optional[Dict[int, float]] = None) -> List[Tuple[str, float]]:
    """第 L 層徵狀擷取的各階段時間（µs）

    Returns:
        依序為 prep、verify、move、interact、measure 的 (名稱, 時間) 列表
    """
    if L not in (1, 2):
        raise ModelError(f"徵狀擷取時間只定義於第 1、2 層，得到 {L}")
    hop = tile.hop_cells
    intra = _cnot_round(params, hop, 0)
    inter = _cnot_round(params, hop, 2)
    prep1 = params.cooling_time + params.single_gate_time + ENCODER_CNOTS * intra
    verify1 = VERIFICATION_CNOTS * intra + params.measure_time
    measure = params.measure_time + params.single_gate_time

    if L == 1:
        return [('prep', prep1), ('verify', verify1), ('move', 0.0),
                ('interact', 7 * inter), ('measure', measure)]

    level1 = calibrated_timing(params, tile, levels=1, nontrivial_rates=nontrivial_rates)
    ecc1 = ecc_latency(1, level1)
    # 第二層的每一步橫向操作之後都接一次第一層更正
    transversal = inter + ecc1
    prep2 = prep1 + verify1 + LEVEL2_ENCODE_ROUNDS * transversal
    verify2 = LEVEL2_VERIFY_ROUNDS * (transversal + params.measure_time)
    move2 = LEVEL2_MOVE_STAGES * (ballistic_latency(hop, 2, params) + params.cooling_time + ecc1)
    return [('prep', prep2), ('verify', verify2), ('move', move2),
            ('interact', transversal), ('measure', measure)]


def syndrome_time(L: int, params: TechnologyParams,
                  tile: LogicalQubitTile = STEANE_LEVEL2,
                  nontrivial_rates: Optional[Dict[int, float]] = None) -> float:
    """第 L 層徵狀擷取總時間（µs）"""
    return sum(t for _, t in syndrome_stages(L, params, tile, nontrivial_rates))


def logical_gate_time(L: int, params: TechnologyParams, timing: Optional[EccTiming] = None) -> float:
    """第 L 層橫向邏輯單量子位元閘時間；第 2 層含一次第一層更正"""
    if L == 1:
        return params.single_gate_time
    return params.single_gate_time + ecc_latency(L - 1, timing)


def calibrated_timing(params: TechnologyParams, tile: LogicalQubitTile = STEANE_LEVEL2,
                      levels: int = 2,
                      nontrivial_rates: Optional[Dict[int, float]] = None) -> EccTiming:
    """由參數組的操作時間組出 EccTiming"""
    rates = dict(nontrivial_rates or DEFAULT_NONTRIVIAL_RATES)
    timing = EccTiming(level=levels, nontrivial_rate=rates)
    for level in range(1, levels + 1):
        timing.t_syndrome[level] = syndrome_time(level, params, tile, rates)
        timing.t_logical_gate[level] = logical_gate_time(level, params, timing)
    return timing


def recursive_failure(model: RecursionModel) -> float:
    """區域架構下第 L 層的失效機率 (p_th / r^L) (p0 / p_th)^(2^L)"""
    return (model.p_th / model.r ** model.L) * (model.p0 / model.p_th) ** (2 ** model.L)


def feasible_computation_size(model: RecursionModel) -> float:
    """可可靠執行的最大計算規模 S = 1 / P_f"""
    failure = recursive_failure(model)
    if failure <= 0:
        raise ModelError("失效機率為 0，無法計算規模")
    return 1.0 / failure


def recursion_model(params: TechnologyParams, p_th: float = 7.5e-5, r: float = 12,
                    L: int = 2) -> RecursionModel:
    """以參數組的平均失效率為 p0 建立遞迴模型"""
    return RecursionModel(p0=mean_failure_rate(params), p_th=p_th, r=r, L=L)


def feasibility_report(required_steps: float, model: RecursionModel) -> Dict[str, float]:
    """比較所需計算規模與可達規模"""
    attainable = feasible_computation_size(model)
    return {
        'required_steps': required_steps,
        'attainable_steps': attainable,
        'feasible': required_steps <= attainable,
        'margin_decades': math.log10(attainable / required_steps) if required_steps > 0 else math.inf,
        'level': model.L,
        'failure_rate': recursive_failure(model),
    }
