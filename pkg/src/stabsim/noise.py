"""
雜訊模型模組

每個操作後依機率注入 Pauli 錯誤。抽樣集中在 NoiseSampler，
兩個模擬引擎呼叫相同的方法、以相同順序消耗亂數，因此同一個種子得到相同的錯誤。
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Tuple

import numpy as np

from ..errors import ConfigError
from ..params import TechnologyParams, idle_error


# 記憶衰減事件中造成相位翻轉的比例
DEPHASING_FRACTION = 0.5


class Channel(Enum):
    DEPOLARIZING = 'depolarizing'
    BITFLIP = 'bitflip'


@dataclass(frozen=True)
class NoiseModel:
    """元件失效機率；p_move 為每格機率，memory_lifetime 以秒計，inf 表示不計記憶錯誤"""
    p_single: float = 0.0
    p_double: float = 0.0
    p_measure: float = 0.0
    p_move: float = 0.0
    memory_lifetime: float = math.inf
    channel: Channel = Channel.DEPOLARIZING

    def __post_init__(self):
        for name in ('p_single', 'p_double', 'p_measure', 'p_move'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} 必須介於 0 與 1 之間，得到 {value}")
        if not self.memory_lifetime > 0:
            raise ConfigError(f"memory_lifetime 必須為正值，得到 {self.memory_lifetime}")

    @classmethod
    def from_params(cls, params: TechnologyParams, channel: Channel = Channel.DEPOLARIZING,
                    memory: bool = True) -> 'NoiseModel':
        return cls(p_single=params.p_single, p_double=params.p_double,
                   p_measure=params.p_measure, p_move=params.p_move,
                   memory_lifetime=params.memory_lifetime if memory else math.inf,
                   channel=channel)

    def with_rate(self, p: float) -> 'NoiseModel':
        """閘與量測失效一起設為 p，移動與記憶錯誤不變"""
        return replace(self, p_single=p, p_double=p, p_measure=p)

    @property
    def is_noiseless(self) -> bool:
        return (self.p_single == self.p_double == self.p_measure == self.p_move == 0.0
                and math.isinf(self.memory_lifetime))

    def move_probability(self, cells: float) -> float:
        """逐格獨立錯誤合成後的總機率"""
        if cells <= 0 or self.p_move == 0.0:
            return 0.0
        if self.channel is Channel.BITFLIP:
            return 0.5 * (1 - (1 - 2 * self.p_move) ** cells)
        return 0.75 * (1 - (1 - 4 * self.p_move / 3) ** cells)

    def idle_probability(self, duration_us: float) -> float:
        """閒置期間的相位翻轉機率：記憶錯誤 idle_error 之中一半造成相位翻轉"""
        return DEPHASING_FRACTION * idle_error(duration_us, self.memory_lifetime)


class NoiseSampler:
    """對一批 trials 抽樣錯誤，回傳 (X 翻轉, Z 翻轉) 布林陣列"""

    def __init__(self, model: NoiseModel, rng: np.random.Generator, trials: int):
        self.model = model
        self.rng = rng
        self.trials = trials
        self._none = np.zeros(trials, dtype=bool)

    def _hits(self, p: float) -> np.ndarray:
        return self.rng.random(self.trials) < p

    def single(self, p: float) -> Tuple[np.ndarray, np.ndarray]:
        """單量子位元錯誤：去極化時 X、Y、Z 各 p/3"""
        if p <= 0.0:
            return self._none, self._none
        hits = self._hits(p)
        if self.model.channel is Channel.BITFLIP:
            return hits, self._none
        fx = np.zeros(self.trials, dtype=bool)
        fz = np.zeros(self.trials, dtype=bool)
        index = np.flatnonzero(hits)
        if index.size:
            # 1 = X, 2 = Z, 3 = Y
            kind = self.rng.integers(1, 4, size=index.size)
            fx[index] = kind & 1 == 1
            fz[index] = kind & 2 == 2
        return fx, fz

    def double(self, p: float):
        """雙量子位元錯誤：15 個非單位 Pauli 等機率

        Returns:
            ((X0, Z0), (X1, Z1))
        """
        if p <= 0.0:
            return (self._none, self._none), (self._none, self._none)
        hits = self._hits(p)
        fx0, fz0, fx1, fz1 = (np.zeros(self.trials, dtype=bool) for _ in range(4))
        index = np.flatnonzero(hits)
        if index.size:
            if self.model.channel is Channel.BITFLIP:
                kind = self.rng.integers(1, 4, size=index.size)
                fx0[index] = kind & 1 == 1
                fx1[index] = kind & 2 == 2
            else:
                kind = self.rng.integers(1, 16, size=index.size)
                fx0[index] = kind & 1 == 1
                fz0[index] = kind & 2 == 2
                fx1[index] = kind & 4 == 4
                fz1[index] = kind & 8 == 8
        return (fx0, fz0), (fx1, fz1)

    def flip(self, p: float) -> np.ndarray:
        """古典位元翻轉（量測錯誤）"""
        if p <= 0.0:
            return self._none
        return self._hits(p)

    def dephase(self, p: float) -> Tuple[np.ndarray, np.ndarray]:
        """記憶錯誤：去極化通道下為 Z，位元翻轉通道下為 X"""
        if p <= 0.0:
            return self._none, self._none
        hits = self._hits(p)
        if self.model.channel is Channel.BITFLIP:
            return hits, self._none
        return self._none, hits
