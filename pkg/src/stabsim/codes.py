"""
編碼常數模組

Steane [[7,1,3]] 碼以 [7,4,3] Hamming 碼的檢查矩陣同時定義 X 與 Z 穩定子；
三位元翻轉碼只用於驗證模擬器。
"""

from typing import Tuple

import numpy as np

# 檢查矩陣的列，第 j 列的支撐集
STEANE_CHECKS: Tuple[Tuple[int, ...], ...] = (
    (0, 3, 4, 6),
    (1, 3, 5, 6),
    (2, 4, 5, 6),
)

# |0>_L 編碼器：樞紐量子位元 0、1、2 先做 H，再 CNOT 到各自檢查列的其餘位置
ENCODER_PIVOTS = (0, 1, 2)
ENCODER_CNOTS: Tuple[Tuple[int, int], ...] = tuple(
    (pivot, q) for pivot, row in zip(ENCODER_PIVOTS, STEANE_CHECKS) for q in row if q != pivot)

# 輔助塊驗證：兩個權重 4 的穩定子與兩個權重 3 的邏輯算符代表
VERIFICATION_SUPPORTS: Tuple[Tuple[int, ...], ...] = (
    (0, 3, 4, 6),
    (1, 3, 5, 6),
    (0, 2, 4),
    (0, 5, 6),
)

# 徵狀整數值 s0 + 2 s1 + 4 s2 -> 錯誤位置
HAMMING_LOOKUP: Tuple[int, ...] = (-1, 0, 1, 3, 2, 4, 5, 6)

BITFLIP_CHECKS: Tuple[Tuple[int, ...], ...] = ((0, 1), (1, 2))
BITFLIP_LOOKUP: Tuple[int, ...] = (-1, 0, 2, 1)

_CHECK_MATRIX = np.zeros((3, 7), dtype=bool)
for _row, _support in enumerate(STEANE_CHECKS):
    _CHECK_MATRIX[_row, list(_support)] = True


def hamming_syndrome(bits: np.ndarray) -> np.ndarray:
    """bits 形狀 (7, trials)，回傳 (3, trials) 的徵狀"""
    return (_CHECK_MATRIX.astype(np.int64) @ bits.astype(np.int64)) % 2 == 1


def hamming_logical(bits: np.ndarray) -> np.ndarray:
    """經單一錯誤更正後的邏輯值：總奇偶性，若徵狀非零再翻轉一次"""
    parity = bits.sum(axis=0) % 2 == 1
    return parity ^ hamming_syndrome(bits).any(axis=0)


def steane_logical(bits: np.ndarray, level: int) -> np.ndarray:
    """遞迴解碼 7^level 個位元（形狀 (7^level, trials)）"""
    if level == 0:
        return bits[0]
    children = bits.reshape(7, bits.shape[0] // 7, -1)
    decoded = np.stack([steane_logical(child, level - 1) for child in children])
    return hamming_logical(decoded)


def bitflip_logical(bits: np.ndarray) -> np.ndarray:
    """三位元碼多數決"""
    return bits.sum(axis=0) >= 2
