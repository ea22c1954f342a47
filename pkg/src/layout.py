"""
版面配置模組

以格子為單位描述邏輯量子位元磚塊、通道與傳送島的位置。
"""

import math
import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Tuple

from .errors import ConfigError
from .params import TechnologyParams

logger = logging.getLogger(__name__)

Coordinate = Tuple[int, int]


class CellKind(Enum):
    """格子上可放的內容：每一格恰好是其中一種"""
    DATA_ION = 'data_ion'
    COOLING_ION = 'cooling_ion'
    ELECTRODE = 'electrode'
    CHANNEL_EMPTY = 'channel_empty'
    ISLAND = 'island'


class Code(Enum):
    STEANE_7_1_3 = 'steane_7_1_3'
    BITFLIP_3_1 = 'bitflip_3_1'


@dataclass(frozen=True)
class LogicalQubitTile:
    """邏輯量子位元磚塊的尺寸（格）"""
    level: int = 2
    width_cells: int = 36
    height_cells: int = 147
    code: Code = Code.STEANE_7_1_3
    # 第一層區塊之間的平均通訊距離 r
    hop_cells: int = 12

    def __post_init__(self):
        if self.level not in (1, 2):
            raise ConfigError(f"僅支援第 1、2 層磚塊，得到 level={self.level}")
        if self.width_cells < 1 or self.height_cells < 1:
            raise ConfigError("磚塊尺寸必須為正")


STEANE_LEVEL2 = LogicalQubitTile()
# 驗證用的三位元翻轉碼：3 個資料離子加上同一列的輔助離子
BITFLIP_TILE = LogicalQubitTile(level=1, width_cells=9, height_cells=3, code=Code.BITFLIP_3_1)


@dataclass(frozen=True)
class Island:
    """傳送島：位於磚塊列上、通道內的中繼站"""
    row: int
    col: int
    tile: Coordinate
    cell: Coordinate


@dataclass(frozen=True)
class TileLayout:
    rows: int
    cols: int
    tile: LogicalQubitTile
    channel_width_x: int = 11
    channel_width_y: int = 12
    island_spacing_x: int = 100
    island_stride: int = 1
    islands: Tuple[Island, ...] = field(default=())

    @property
    def pitch_x(self) -> int:
        return self.tile.width_cells + self.channel_width_x

    @property
    def pitch_y(self) -> int:
        return self.tile.height_cells + self.channel_width_y

    @property
    def width_cells(self) -> int:
        return self.cols * self.pitch_x

    @property
    def height_cells(self) -> int:
        return self.rows * self.pitch_y

    @property
    def island_columns(self) -> List[int]:
        return list(range(0, self.cols, self.island_stride))


def build_layout(rows: int, cols: int, tile: LogicalQubitTile = STEANE_LEVEL2,
                 spacing_x: int = 100, channel_width_x: int = 11,
                 channel_width_y: int = 12) -> TileLayout:
    """建立 rows x cols 的磚塊版面並依間距放置傳送島

    Args:
        rows: 磚塊列數
        cols: 磚塊行數
        tile: 磚塊幾何
        spacing_x: x 方向傳送島間距（格）

    Returns:
        版面配置

    Raises:
        ConfigError: 列數或行數小於 1，或間距小於一個磚塊間距
    """
    if rows < 1 or cols < 1:
        raise ConfigError(f"版面至少需要 1x1，得到 {rows}x{cols}")
    pitch_x = tile.width_cells + channel_width_x
    if spacing_x < pitch_x:
        raise ConfigError(f"傳送島間距 {spacing_x} 小於磚塊間距 {pitch_x}")

    # 100 格約每三個磚塊一個島，350 格約每十個
    stride = max(1, math.ceil(spacing_x / tile.width_cells))
    pitch_y = tile.height_cells + channel_width_y
    islands = []
    for row in range(rows):
        for index, col in enumerate(range(0, cols, stride)):
            cell = (row * pitch_y + tile.height_cells, col * pitch_x + tile.width_cells)
            islands.append(Island(row=row, col=index, tile=(row, col), cell=cell))

    layout = TileLayout(rows=rows, cols=cols, tile=tile,
                        channel_width_x=channel_width_x, channel_width_y=channel_width_y,
                        island_spacing_x=spacing_x, island_stride=stride,
                        islands=tuple(islands))
    logger.debug(f"建立版面 {rows}x{cols}，共 {len(islands)} 個傳送島")
    return layout


def _check_coordinate(coord: Coordinate, layout: TileLayout) -> None:
    row, col = coord
    if not (0 <= row < layout.rows and 0 <= col < layout.cols):
        raise ConfigError(f"座標 {coord} 超出 {layout.rows}x{layout.cols} 版面")


def manhattan_distance(a: Coordinate, b: Coordinate, layout: TileLayout) -> int:
    """兩個磚塊中心沿通道的曼哈頓距離（格）"""
    _check_coordinate(a, layout)
    _check_coordinate(b, layout)
    return abs(a[1] - b[1]) * layout.pitch_x + abs(a[0] - b[0]) * layout.pitch_y


def island_for_tile(layout: TileLayout, coord: Coordinate) -> Tuple[int, int]:
    """回傳服務該磚塊的傳送島索引 (row, island_col)，同列最近者，平手取左側"""
    _check_coordinate(coord, layout)
    row, col = coord
    columns = layout.island_columns
    best = min(range(len(columns)), key=lambda i: (abs(columns[i] - col), i))
    return row, best


def island_distance(a: Tuple[int, int], b: Tuple[int, int], layout: TileLayout) -> int:
    """兩個傳送島之間的通道距離（格）"""
    columns = layout.island_columns
    return (abs(columns[a[1]] - columns[b[1]]) * layout.pitch_x
            + abs(a[0] - b[0]) * layout.pitch_y)


def chip_area(qubit_count: int, tile: LogicalQubitTile, params: TechnologyParams,
              channel_width_x: int = 11, channel_width_y: int = 12) -> float:
    """晶片面積（m²），包含每個磚塊周圍的通道"""
    if qubit_count < 1:
        raise ConfigError(f"邏輯量子位元數必須至少為 1，得到 {qubit_count}")
    pitch_m = params.cell_pitch * 1e-6
    cells = (tile.width_cells + channel_width_x) * (tile.height_cells + channel_width_y)
    return qubit_count * cells * pitch_m ** 2


def bare_tile_area(tile: LogicalQubitTile, params: TechnologyParams) -> float:
    """不含通道的單一磚塊面積（m²）"""
    return chip_area(1, tile, params, channel_width_x=0, channel_width_y=0)


def block_template(code: Code = Code.STEANE_7_1_3) -> Dict[str, List[Coordinate]]:
    """第一層區塊內離子的抽象位置（列, 行）

    Steane 區塊為一列 7 個資料離子，上下各一列輔助與驗證離子；
    三位元碼只有 3 個資料與 2 個輔助離子。
    """
    if code is Code.BITFLIP_3_1:
        return {'data': [(0, 2 * i) for i in range(3)],
                'ancilla': [(0, 2 * i + 1) for i in range(2)]}
    return {'data': [(1, 2 * i) for i in range(7)],
            'ancilla': [(0, 2 * i) for i in range(7)],
            'verification': [(2, 2 * i) for i in range(7)]}


def block_cells(code: Code = Code.STEANE_7_1_3) -> Dict[Coordinate, CellKind]:
    """第一層區塊的逐格內容

    block_template 的每一列離子展開成兩列格子：離子本身與正下方的冷卻離子，
    範圍內其餘格為電極。
    """
    ions = [position for positions in block_template(code).values() for position in positions]
    height = 2 * (max(r for r, _ in ions) + 1)
    width = max(c for _, c in ions) + 1
    cells = {(r, c): CellKind.ELECTRODE for r in range(height) for c in range(width)}
    for r, c in ions:
        cells[(2 * r, c)] = CellKind.DATA_ION
        cells[(2 * r + 1, c)] = CellKind.COOLING_ION
    return cells


def cell_kind(layout: TileLayout, cell: Coordinate) -> CellKind:
    """版面上某一格（列, 行）的粗略分類：傳送島、通道或磚塊內部

    磚塊內部的逐格內容由 block_cells 描述，這裡一律視為電極。

    Raises:
        ConfigError: 格子超出版面
    """
    row, col = cell
    if not (0 <= row < layout.height_cells and 0 <= col < layout.width_cells):
        raise ConfigError(f"格子 {cell} 超出 {layout.height_cells}x{layout.width_cells} 格的版面")
    if any(island.cell == (row, col) for island in layout.islands):
        return CellKind.ISLAND
    if row % layout.pitch_y >= layout.tile.height_cells or col % layout.pitch_x >= layout.tile.width_cells:
        return CellKind.CHANNEL_EMPTY
    return CellKind.ELECTRODE


def layout_summary(layout: TileLayout) -> Dict:
    """可直接輸出為 JSON 的版面摘要"""
    block = Counter(kind.value for kind in block_cells(layout.tile.code).values())
    return {
        'rows': layout.rows,
        'cols': layout.cols,
        'tile': {'level': layout.tile.level, 'code': layout.tile.code.value,
                 'width_cells': layout.tile.width_cells,
                 'height_cells': layout.tile.height_cells},
        'height_cells': layout.height_cells,
        'width_cells': layout.width_cells,
        'island_spacing_x_cells': layout.island_spacing_x,
        'island_stride_tiles': layout.island_stride,
        'level1_block_cells': dict(sorted(block.items())),
        'islands': [{'row': i.row, 'col': i.col, 'tile': list(i.tile), 'cell': list(i.cell)}
                    for i in layout.islands],
    }
