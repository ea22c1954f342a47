"""
門檻掃描模組

對每個 (失效機率, 層級) 以 Monte Carlo 估計邏輯失效率。trials 分批執行，
第 i 批使用 SeedSequence((seed, 格點, 層級, i))，因此循序或以多個行程執行的結果完全相同。
"""

import math
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..errors import ConfigError
from ..layout import LogicalQubitTile, STEANE_LEVEL2
from ..params import BUILTIN_PROFILES, TechnologyParams
from .compiler import bitflip_circuit, threshold_circuit
from .engine import run_noisy
from .noise import Channel, NoiseModel

logger = logging.getLogger(__name__)

DEFAULT_P_GRID = tuple(float(p) for p in np.geomspace(1e-4, 1e-2, 12))
# 掃描時移動失效固定在預期值（每格）
PINNED_P_MOVE = 1e-6
DEFAULT_BATCH = 2048
MIN_TRIALS = 1000
BITFLIP_SEED_TAG = 99


@dataclass(frozen=True)
class BatchTask:
    level: int
    params: TechnologyParams
    tile: LogicalQubitTile
    noise: NoiseModel
    seed: Tuple[int, ...]
    trials: int
    count_nontrivial: bool = False


@dataclass(frozen=True)
class BatchResult:
    trials: int
    failures: int
    nontrivial: int = 0
    extractions: int = 0


def simulate_batch(task: BatchTask) -> BatchResult:
    """執行一批 trials；為模組層級函式以便送進行程池"""
    circuit = threshold_circuit(task.level, task.params, task.tile)
    record = run_noisy(circuit, task.noise, task.seed, trials=task.trials)
    nontrivial = extractions = 0
    if task.count_nontrivial:
        for key, condition in circuit.metadata['nontrivial'].get(task.level, []):
            if condition is None:
                hits, active = record.rate(key)
                nontrivial += hits
                extractions += active
    return BatchResult(task.trials, record.failure_count, nontrivial, extractions)


def _batches(trials: int, batch_size: int) -> List[int]:
    if batch_size < 1:
        raise ConfigError(f"batch_size 必須至少為 1，得到 {batch_size}")
    sizes = [batch_size] * (trials // batch_size)
    if trials % batch_size:
        sizes.append(trials % batch_size)
    return sizes


def _run_tasks(tasks: Sequence[BatchTask], workers: int) -> List[BatchResult]:
    if workers <= 1 or len(tasks) <= 1:
        return [simulate_batch(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(simulate_batch, tasks))


def sweep_noise(params: TechnologyParams, p: float, memory: bool = False) -> NoiseModel:
    """閘與量測失效設為 p，移動失效固定在 PINNED_P_MOVE

    記憶錯誤只在 memory 為真時以參數組的壽命計入；它不隨 p 縮小，
    在第 2 層數十毫秒的等待裡會成為與 p 無關的下限。
    """
    return replace(NoiseModel.from_params(params, memory=memory).with_rate(p),
                   p_move=PINNED_P_MOVE)


def binomial_stderr(failures: int, trials: int) -> float:
    if trials <= 0:
        return math.nan
    rate = failures / trials
    return math.sqrt(rate * (1 - rate) / trials)


def estimate_failure_rate(level: int, noise: NoiseModel, params: TechnologyParams,
                          trials: int, seed: int = 0, point: int = 0,
                          tile: LogicalQubitTile = STEANE_LEVEL2,
                          batch_size: int = DEFAULT_BATCH, workers: int = 1) -> Tuple[int, int]:
    """回傳 (失效次數, trials)"""
    tasks = [BatchTask(level, params, tile, noise, (seed, point, level, index), size)
             for index, size in enumerate(_batches(trials, batch_size))]
    results = _run_tasks(tasks, workers)
    return sum(r.failures for r in results), sum(r.trials for r in results)


def threshold_sweep(tile: LogicalQubitTile = STEANE_LEVEL2, levels: Iterable[int] = (1, 2),
                    p_grid: Optional[Sequence[float]] = None, trials: int = 20000,
                    seed: int = 0, params: Optional[TechnologyParams] = None,
                    workers: int = 1, batch_size: int = DEFAULT_BATCH,
                    memory: bool = False) -> pd.DataFrame:
    """對每個格點與層級估計邏輯失效率

    Args:
        tile: 磚塊幾何
        levels: 要模擬的層級（0、1、2）
        p_grid: 遞增的元件失效機率
        trials: 每個 (格點, 層級) 的 trial 數
        seed: 亂數種子
        params: 時間與記憶參數的來源，預設為 expected
        workers: 行程數，1 表示循序執行
        batch_size: 每批 trial 數
        memory: 是否計入閒置記憶錯誤（以參數組壽命計，不隨 p 改變）

    Returns:
        欄位為 p、level、trials、failures、failure_rate、stderr 的表格

    Raises:
        ConfigError: 格點未遞增、層級不合法或 trials 小於 1
    """
    grid = list(DEFAULT_P_GRID if p_grid is None else p_grid)
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("p_grid 必須非空且嚴格遞增")
    if any(not 0.0 <= p <= 1.0 for p in grid):
        raise ConfigError("p_grid 的數值必須介於 0 與 1")
    levels = sorted(set(levels))
    if any(level not in (0, 1, 2) for level in levels):
        raise ConfigError(f"層級只支援 0、1、2，得到 {levels}")
    if trials < 1:
        raise ConfigError(f"trials 必須至少為 1，得到 {trials}")
    if trials < MIN_TRIALS:
        logger.warning(f"trials={trials} 少於 {MIN_TRIALS}，估計值的精確度不足")
    params = params or BUILTIN_PROFILES['expected']

    tasks, owners = [], []
    for point, p in enumerate(grid):
        noise = sweep_noise(params, p, memory)
        for level in levels:
            for index, size in enumerate(_batches(trials, batch_size)):
                tasks.append(BatchTask(level, params, tile, noise, (seed, point, level, index), size))
                owners.append((p, level))
    results = _run_tasks(tasks, workers)

    totals = {}
    for owner, result in zip(owners, results):
        failures, count = totals.get(owner, (0, 0))
        totals[owner] = (failures + result.failures, count + result.trials)

    rows = []
    for (p, level), (failures, count) in totals.items():
        rows.append({'p': p, 'level': level, 'trials': count, 'failures': failures,
                     'failure_rate': failures / count,
                     'stderr': binomial_stderr(failures, count)})
        logger.info(f"p={p:.3e} 第 {level} 層: {failures}/{count}")
    return pd.DataFrame(rows).sort_values(['level', 'p'], ignore_index=True)


def estimate_crossing(table: pd.DataFrame, low_level: int = 1,
                      high_level: int = 2) -> Optional[Tuple[float, float, float]]:
    """由 f_high - f_low 的變號點估計門檻

    只接受嚴格的變號：左格點高層失效率必須嚴格低於低層，右格點嚴格高於低層。
    兩層都沒有失效的格點差值為 0，不算變號。在兩格點之間對 log p 線性內插；
    不確定區間取這兩個格點。

    Returns:
        (p*, 下界, 上界)，找不到變號時為 None
    """
    low = table[table['level'] == low_level].set_index('p')['failure_rate']
    high = table[table['level'] == high_level].set_index('p')['failure_rate']
    grid = sorted(set(low.index) & set(high.index))
    diff = [high[p] - low[p] for p in grid]
    for i in range(len(grid) - 1):
        if diff[i] < 0 < diff[i + 1]:
            t = -diff[i] / (diff[i + 1] - diff[i])
            log_p = math.log(grid[i]) + t * (math.log(grid[i + 1]) - math.log(grid[i]))
            return math.exp(log_p), grid[i], grid[i + 1]
    return None


def is_monotone(table: pd.DataFrame, level: int, sigmas: float = 3.0) -> bool:
    """失效率隨 p 不下降（容許 sigmas 個標準誤的統計起伏）"""
    rows = table[table['level'] == level].sort_values('p')
    rates, errors = rows['failure_rate'].to_numpy(), rows['stderr'].to_numpy()
    for i in range(len(rates) - 1):
        tolerance = sigmas * math.hypot(errors[i], errors[i + 1])
        if rates[i + 1] < rates[i] - tolerance:
            return False
    return True


def nontrivial_syndrome_rate(level: int = 1, params: Optional[TechnologyParams] = None,
                             trials: int = 100_000, seed: int = 0,
                             tile: LogicalQubitTile = STEANE_LEVEL2,
                             batch_size: int = 8192, workers: int = 1) -> Tuple[float, float, int, int]:
    """第 level 層徵狀擷取出現非零徵狀的比例（以完整參數組的雜訊）

    Returns:
        (比例, 標準誤, 非零次數, 擷取次數)
    """
    params = params or BUILTIN_PROFILES['expected']
    noise = NoiseModel.from_params(params)
    tasks = [BatchTask(level, params, tile, noise, (seed, 0, level, index), size, True)
             for index, size in enumerate(_batches(trials, batch_size))]
    results = _run_tasks(tasks, workers)
    hits = sum(r.nontrivial for r in results)
    extractions = sum(r.extractions for r in results)
    rate = hits / extractions if extractions else math.nan
    logger.info(f"第 {level} 層非平凡徵狀比例 {rate:.3e}（{hits}/{extractions}）")
    return rate, binomial_stderr(hits, extractions), hits, extractions


def bitflip_analytic(p: float) -> float:
    """三位元碼在完美更正下的失效率：至少兩個位元翻轉"""
    return 3 * p ** 2 - 2 * p ** 3


def bitflip_failure_rate(p: float, trials: int, seed: int = 0,
                         engine: str = 'frame') -> Tuple[float, float]:
    """三位元碼 Monte Carlo 失效率與標準誤"""
    noise = NoiseModel(p_single=p, channel=Channel.BITFLIP)
    record = run_noisy(bitflip_circuit(), noise, (seed, BITFLIP_SEED_TAG), trials=trials,
                       engine=engine)
    failures = record.failure_count
    return failures / trials, binomial_stderr(failures, trials)
