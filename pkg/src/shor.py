"""
Shor 演算法資源估計模組

以 Toffoli 錯誤更正步數、第二層更正延遲與晶片面積估計分解 N 位元整數所需的時間與資源。
"""

import math
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from .ecc import EccTiming, calibrated_timing, ecc_latency, feasibility_report, recursion_model
from .errors import ConfigError, ModelError
from .layout import STEANE_LEVEL2, chip_area
from .params import TechnologyParams

logger = logging.getLogger(__name__)

# N -> (邏輯量子位元, Toffoli 閘, 總閘數)
CALIBRATION: Dict[int, tuple] = {
    128: (37_971, 63_729, 115_033),
    512: (150_771, 397_910, 1_016_295),
    1024: (301_251, 964_919, 3_270_582),
    2048: (602_259, 2_301_767, 11_148_214),
}

EC_STEPS_PER_TOFFOLI = 21
ANCILLA_PREP_STEPS = 15
GATE_COMPLETION_STEPS = 6
REPEAT_FACTOR = 1.3
# 128 位元時 1.34e6 減去 21 x 63,730 的剩餘部分
QFT_RESIDUAL_128 = 1_340_000 - EC_STEPS_PER_TOFFOLI * 63_730
DEFAULT_MAC = 2
SECONDS_PER_DAY = 86_400


@dataclass
class ShorCircuitModel:
    n_bits: int
    logical_qubits: int
    toffoli_count: int
    total_gates: int
    im_calls: Optional[int] = None
    mac_calls: Optional[int] = None
    argset_depth: Optional[float] = None
    p_extra_qubits: Optional[int] = None

    def __post_init__(self):
        if self.logical_qubits <= 0:
            raise ConfigError(f"邏輯量子位元數必須為正，得到 {self.logical_qubits}")
        if self.toffoli_count > self.total_gates:
            raise ConfigError("Toffoli 閘數不可超過總閘數")


@dataclass
class ShorEstimate:
    n_bits: int
    logical_qubits: int
    toffoli_count: int
    total_gates: int
    ec_steps: float
    qft_steps: float
    ecc_latency_s: float
    runtime_s: float
    area_m2: float
    required_steps: float
    attainable_steps: float
    feasible_at_level2: bool

    @property
    def runtime_hours(self) -> float:
        return self.runtime_s / 3600

    @property
    def runtime_days(self) -> float:
        return self.runtime_s / SECONDS_PER_DAY


def qcla_depth(n: int) -> Dict[str, int]:
    """進位前瞻加法器的閘深度：4 log2 n 個 Toffoli、4 個 CNOT、2 個 NOT"""
    if n < 2:
        raise ConfigError(f"加法器位元數必須至少為 2，得到 {n}")
    log_n = math.ceil(math.log2(n))
    return {'toffoli': 4 * log_n, 'cnot': 4, 'not': 2}


def qcla_toffoli_count(n: int) -> int:
    """非就地進位前瞻加法器的 Toffoli 個數 5n - 3w(n) - 3 floor(log2 n) - 1"""
    return 5 * n - 3 * bin(n).count('1') - 3 * int(math.log2(n)) - 1


def modexp_latency(model: ShorCircuitModel) -> float:
    """模指數深度 IM x MAC x (QCLA + ArgSet) + 3p x QCLA，以 Toffoli 深度為單位"""
    inputs = (model.im_calls, model.mac_calls, model.argset_depth, model.p_extra_qubits)
    if any(value is None for value in inputs):
        raise ModelError("模指數公式缺少輸入 (IM, MAC, ArgSet, p)")
    qcla = qcla_depth(model.n_bits)['toffoli']
    return (model.im_calls * model.mac_calls * (qcla + model.argset_depth)
            + 3 * model.p_extra_qubits * qcla)


def toffoli_count_from_mexp(model: ShorCircuitModel) -> int:
    """由 MExp 結構反推 Toffoli 總數，每次加法器呼叫計 qcla_toffoli_count 個；用來與校準表互相檢查"""
    adders = (model.im_calls * model.mac_calls * (1 + model.argset_depth)
              + 3 * model.p_extra_qubits)
    return int(round(adders * qcla_toffoli_count(model.n_bits)))


def calibrate_mexp(n_bits: int, mac_calls: int = DEFAULT_MAC) -> ShorCircuitModel:
    """由校準表的 Toffoli 數反推 IM（ArgSet = 0、p = 0）"""
    model = circuit_model(n_bits)
    per_call = mac_calls * qcla_toffoli_count(n_bits)
    model.im_calls = max(1, round(model.toffoli_count / per_call))
    model.mac_calls = mac_calls
    model.argset_depth = 0
    model.p_extra_qubits = 0
    return model


def circuit_model(n_bits: int) -> ShorCircuitModel:
    """取得校準表中的計數；介於校準點之間以對數內插"""
    if n_bits < 8:
        raise ConfigError(f"位元數過小（{n_bits}），不需要量子電腦")
    if n_bits in CALIBRATION:
        qubits, toffoli, total = CALIBRATION[n_bits]
        return ShorCircuitModel(n_bits, qubits, toffoli, total)

    anchors = sorted(CALIBRATION)
    x = np.log(anchors)
    columns = np.log(np.array([CALIBRATION[n] for n in anchors], dtype=float))
    # 校準範圍外以端點斜率外插
    counts = []
    for column in columns.T:
        if anchors[0] <= n_bits <= anchors[-1]:
            value = np.interp(np.log(n_bits), x, column)
        else:
            edge = slice(0, 2) if n_bits < anchors[0] else slice(-2, None)
            slope = (column[edge][1] - column[edge][0]) / (x[edge][1] - x[edge][0])
            value = column[edge][0] + slope * (np.log(n_bits) - x[edge][0])
        counts.append(int(round(float(np.exp(value)))))
    logger.warning(f"N={n_bits} 不在校準表中，使用對數內插的計數")
    qubits, toffoli, total = counts
    return ShorCircuitModel(n_bits, qubits, min(toffoli, total), total)


def qft_steps(n_bits: int) -> float:
    """QFT 的錯誤更正步數：由 128 位元的剩餘值依 N log N 縮放（模型剩餘項）"""
    return QFT_RESIDUAL_128 * (n_bits * math.log2(n_bits)) / (128 * 7)


def ec_step_count(model: ShorCircuitModel, qft: Optional[float] = None) -> float:
    """總錯誤更正步數 21 x Toffoli + QFT"""
    if qft is None:
        qft = qft_steps(model.n_bits)
    return EC_STEPS_PER_TOFFOLI * model.toffoli_count + qft


def estimate(n_bits: int, timing: Optional[EccTiming], params: TechnologyParams,
             repeat_factor: float = REPEAT_FACTOR, qft: Optional[float] = None) -> ShorEstimate:
    """估計分解 N 位元整數所需的時間、面積與可行性

    Args:
        n_bits: 整數位元數
        timing: 錯誤更正時間，None 時由參數組計算
        params: 技術參數
        repeat_factor: 演算法平均重複次數

    Returns:
        資源估計
    """
    model = circuit_model(n_bits)
    if timing is None:
        timing = calibrated_timing(params, STEANE_LEVEL2)
    latency_s = ecc_latency(2, timing) * 1e-6
    qft_value = qft_steps(n_bits) if qft is None else qft
    steps = ec_step_count(model, qft_value)
    required = steps * model.logical_qubits
    report = feasibility_report(required, recursion_model(params))
    result = ShorEstimate(
        n_bits=n_bits,
        logical_qubits=model.logical_qubits,
        toffoli_count=model.toffoli_count,
        total_gates=model.total_gates,
        ec_steps=steps,
        qft_steps=qft_value,
        ecc_latency_s=latency_s,
        runtime_s=steps * latency_s * repeat_factor,
        area_m2=chip_area(model.logical_qubits, STEANE_LEVEL2, params),
        required_steps=required,
        attainable_steps=report['attainable_steps'],
        feasible_at_level2=report['feasible'],
    )
    logger.info(f"N={n_bits}: {result.runtime_days:.2f} 天, {result.area_m2:.2f} m²")
    return result


def estimate_report(result: ShorEstimate) -> Dict:
    """JSON 報表內容，數值欄位皆帶單位"""
    return {
        'n_bits': result.n_bits,
        'logical_qubits': result.logical_qubits,
        'toffoli_gates': result.toffoli_count,
        'total_gates': result.total_gates,
        'ec_steps': result.ec_steps,
        'qft_steps_model_residual': result.qft_steps,
        # 公布的 1024 位元需求約 4.4e12 步，這裡的計法約為 6.1e12
        'required_steps_accounting': 'ec_steps x logical_qubits',
        'ecc_latency_level2_s': result.ecc_latency_s,
        'runtime_hours': result.runtime_hours,
        'runtime_days': result.runtime_days,
        'area_m2': result.area_m2,
        'required_steps': result.required_steps,
        'attainable_steps': result.attainable_steps,
        'feasible_at_level2': result.feasible_at_level2,
    }


def resource_table(params: TechnologyParams, bits: Optional[List[int]] = None) -> pd.DataFrame:
    """重建系統數字表：每個 N 一列"""
    timing = calibrated_timing(params, STEANE_LEVEL2)
    rows = []
    for n in bits or sorted(CALIBRATION):
        result = estimate(n, timing, params)
        rows.append({
            'n_bits': n,
            'logical_qubits': result.logical_qubits,
            'toffoli_gates': result.toffoli_count,
            'total_gates': result.total_gates,
            'ec_steps': round(result.ec_steps),
            'area_m2': result.area_m2,
            'time_days': result.runtime_days,
        })
    return pd.DataFrame(rows)
