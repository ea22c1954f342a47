"""
技術參數模組

載入、驗證並提供離子阱元件的操作時間與失效機率，以及由此推得的彈道通道時序模型。
"""

import os
import math
import logging
import configparser
from dataclasses import dataclass, fields, asdict
from typing import Dict, List, Tuple, Union

from .errors import ConfigError

logger = logging.getLogger(__name__)

# 參數群組 -> 欄位，對應設定檔的區段
SECTIONS: Dict[str, Tuple[str, ...]] = {
    'timing': ('single_gate_time', 'double_gate_time', 'measure_time',
               'movement_time_per_cell', 'split_time', 'cooling_time'),
    'memory': ('memory_lifetime',),
    'failure': ('p_single', 'p_double', 'p_measure', 'p_move'),
    'geometry': ('cell_pitch',),
}

UNITS: Dict[str, str] = {
    'single_gate_time': 'us', 'double_gate_time': 'us', 'measure_time': 'us',
    'movement_time_per_cell': 'us/cell', 'split_time': 'us', 'cooling_time': 'us',
    'memory_lifetime': 's',
    'p_single': 'per gate', 'p_double': 'per gate', 'p_measure': 'per measurement',
    'p_move': 'per cell',
    'cell_pitch': 'um',
}

PROBABILITY_FIELDS = SECTIONS['failure']
OPTIONAL_FIELDS = ('cell_pitch',)


@dataclass(frozen=True)
class TechnologyParams:
    """物理操作時間（µs）與失效機率"""
    single_gate_time: float
    double_gate_time: float
    measure_time: float
    movement_time_per_cell: float
    split_time: float
    cooling_time: float
    memory_lifetime: float
    p_single: float
    p_double: float
    p_measure: float
    p_move: float
    cell_pitch: float = 20.0

    def __post_init__(self):
        validate(self)

    def replace(self, **changes) -> 'TechnologyParams':
        """回傳修改部分欄位後的新參數組"""
        values = asdict(self)
        values.update(changes)
        return TechnologyParams(**values)


@dataclass(frozen=True)
class ParameterProfile:
    """具名參數組：current、expected 或 custom"""
    name: str
    params: TechnologyParams


def validate(params: TechnologyParams) -> None:
    """檢查所有欄位範圍，錯誤訊息會指出欄位名稱

    Raises:
        ConfigError: 機率超出 [0, 1]、時間非正值或記憶時間過短
    """
    for name in PROBABILITY_FIELDS:
        value = getattr(params, name)
        if not 0.0 <= value <= 1.0:
            raise ConfigError(f"{name} 必須介於 0 與 1 之間，得到 {value}")
    for name in SECTIONS['timing'] + SECTIONS['memory'] + SECTIONS['geometry']:
        value = getattr(params, name)
        if not value > 0:
            raise ConfigError(f"{name} 必須為正值，得到 {value}")
    # 記憶時間（秒）需遠大於雙量子位元閘時間（µs）
    if params.memory_lifetime * 1e6 < 1e4 * params.double_gate_time:
        raise ConfigError(
            f"memory_lifetime 必須至少為 double_gate_time 的 10^4 倍，"
            f"得到 {params.memory_lifetime} s 與 {params.double_gate_time} us")


_SHARED_TIMES = dict(
    single_gate_time=1.0,
    double_gate_time=10.0,
    measure_time=100.0,
    movement_time_per_cell=0.01,
    split_time=10.0,
    cooling_time=1.0,
    memory_lifetime=10.0,
    cell_pitch=20.0,
)

BUILTIN_PROFILES: Dict[str, TechnologyParams] = {
    # 移動失效 0.005/µm 換算為每格（20 µm）
    'current': TechnologyParams(p_single=1e-4, p_double=0.03, p_measure=0.01,
                                p_move=0.005 * 20.0, **_SHARED_TIMES),
    'expected': TechnologyParams(p_single=1e-8, p_double=1e-7, p_measure=1e-8,
                                 p_move=1e-6, **_SHARED_TIMES),
}


def load_profile(source: Union[str, os.PathLike] = 'expected') -> ParameterProfile:
    """載入參數組

    Args:
        source: 內建名稱（current / expected）、INI 檔路徑或 INI 文字

    Returns:
        驗證過的參數組

    Raises:
        ConfigError: 解析失敗、缺少鍵值或數值越界
    """
    source = os.fspath(source)
    if source in BUILTIN_PROFILES:
        logger.debug(f"使用內建參數組: {source}")
        return ParameterProfile(source, BUILTIN_PROFILES[source])

    parser = configparser.ConfigParser()
    try:
        if '\n' not in source and os.path.isfile(source):
            with open(source, encoding='utf-8') as handle:
                parser.read_file(handle)
            default_name = os.path.splitext(os.path.basename(source))[0]
        else:
            parser.read_string(source)
            default_name = 'custom'
    except configparser.Error as e:
        raise ConfigError(f"無法解析參數檔: {str(e)}") from e

    if not parser.sections():
        raise ConfigError(f"未知的參數組或空的參數檔: {source!r}")

    values = {}
    for section, names in SECTIONS.items():
        for name in names:
            if parser.has_option(section, name):
                try:
                    values[name] = parser.getfloat(section, name)
                except ValueError as e:
                    raise ConfigError(f"{section}.{name} 不是數值: {str(e)}") from e
            elif name not in OPTIONAL_FIELDS:
                raise ConfigError(f"缺少參數: {section}.{name}")

    name = parser.get('profile', 'name', fallback=default_name)
    if name in BUILTIN_PROFILES:
        name = 'custom'
    profile = ParameterProfile(name, TechnologyParams(**values))
    logger.info(f"已載入參數組 {name}")
    return profile


def dump_profile(profile: ParameterProfile) -> str:
    """將參數組輸出為 INI 文字，重新載入可得完全相同的數值"""
    lines = ['[profile]', f'name = {profile.name}', '']
    for section, names in SECTIONS.items():
        lines.append(f'[{section}]')
        for name in names:
            lines.append(f'{name} = {getattr(profile.params, name)!r}')
        lines.append('')
    return '\n'.join(lines)


def resolve_profile(name: str) -> ParameterProfile:
    """依名稱解析參數組，非內建名稱會在 QLA_PROFILE_PATH 目錄中尋找 <name>.ini"""
    if name in BUILTIN_PROFILES or os.path.isfile(name):
        return load_profile(name)
    directory = os.environ.get('QLA_PROFILE_PATH')
    if directory:
        path = os.path.join(directory, f'{name}.ini')
        if os.path.isfile(path):
            return load_profile(path)
    raise ConfigError(f"找不到參數組: {name}")


def ballistic_latency(distance: float, turns: int, params: TechnologyParams) -> float:
    """彈道移動時間（µs）：出發分離一次，每個轉角再加一次分離時間

    Args:
        distance: 移動格數
        turns: 轉角數

    Returns:
        移動所需時間
    """
    if distance < 0 or turns < 0:
        raise ConfigError(f"距離與轉角數不可為負: distance={distance}, turns={turns}")
    return params.split_time * (1 + turns) + params.movement_time_per_cell * distance


def channel_bandwidth(params: TechnologyParams) -> float:
    """管線化通道頻寬（qubits/s），每格一顆離子"""
    return 1.0 / (params.movement_time_per_cell * 1e-6)


def mean_failure_rate(params: TechnologyParams) -> float:
    """四個失效欄位的算術平均，作為遞迴估計的 p0"""
    return sum(getattr(params, name) for name in PROBABILITY_FIELDS) / len(PROBABILITY_FIELDS)


def idle_error(duration_us: float, lifetime: float) -> float:
    """壽命 lifetime 秒的離子閒置 duration_us 微秒的錯誤機率

    衰減率 1/lifetime 在短時間內線性近似，上限為 1；lifetime 為 inf 時不計記憶錯誤。
    """
    if duration_us <= 0 or math.isinf(lifetime):
        return 0.0
    return min(1.0, duration_us * 1e-6 / lifetime)


def memory_error(duration_us: float, params: TechnologyParams) -> float:
    """以參數組的 memory_lifetime 計算閒置 duration_us 微秒的記憶錯誤機率"""
    return idle_error(duration_us, params.memory_lifetime)


def profile_table(profile: ParameterProfile) -> List[Tuple[str, float, str]]:
    """回傳 (參數, 數值, 單位) 列，用於輸出 CSV"""
    return [(f.name, getattr(profile.params, f.name), UNITS[f.name])
            for f in fields(TechnologyParams)]
