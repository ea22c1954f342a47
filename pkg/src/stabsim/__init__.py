"""
穩定子電路模擬子套件

Clifford 電路加上隨機 Pauli 雜訊，用來估計各層編碼的邏輯失效率。
"""

from .circuit import CircuitIR
from .compiler import Block, SteaneCompiler, bitflip_circuit, threshold_circuit
from .engine import PauliFrameEngine, RunRecord, TableauEngine, run_noisy
from .noise import Channel, NoiseModel
from .sweep import (bitflip_analytic, bitflip_failure_rate, estimate_crossing,
                    nontrivial_syndrome_rate, threshold_sweep)
from .tableau import StabilizerTableau, apply_clifford

__all__ = [
    'CircuitIR',
    'Block',
    'SteaneCompiler',
    'bitflip_circuit',
    'threshold_circuit',
    'PauliFrameEngine',
    'RunRecord',
    'TableauEngine',
    'run_noisy',
    'Channel',
    'NoiseModel',
    'bitflip_analytic',
    'bitflip_failure_rate',
    'estimate_crossing',
    'nontrivial_syndrome_rate',
    'threshold_sweep',
    'StabilizerTableau',
    'apply_clifford',
]
