"""
QLA 離子阱量子電腦微架構模擬與資源估計套件
"""

from .errors import ConfigError, CircuitError, ModelError, QlaError
from .params import TechnologyParams, ParameterProfile, load_profile, resolve_profile
from .layout import LogicalQubitTile, TileLayout, build_layout
from .ecc import EccTiming, RecursionModel, calibrated_timing, ecc_latency, recursive_failure
from .interconnect import EprPair, RepeaterChannel, connection_time, optimal_spacing
from .scheduler import EprRequest, ScheduleResult, build_channel_graph, schedule
from .shor import ShorEstimate, estimate

__all__ = [
    'ConfigError', 'CircuitError', 'ModelError', 'QlaError',
    'TechnologyParams', 'ParameterProfile', 'load_profile', 'resolve_profile',
    'LogicalQubitTile', 'TileLayout', 'build_layout',
    'EccTiming', 'RecursionModel', 'calibrated_timing', 'ecc_latency', 'recursive_failure',
    'EprPair', 'RepeaterChannel', 'connection_time', 'optimal_spacing',
    'EprRequest', 'ScheduleResult', 'build_channel_graph', 'schedule',
    'ShorEstimate', 'estimate',
]
