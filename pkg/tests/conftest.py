"""共用的測試夾具"""

import os
import sys

import pytest

# 讓測試可以 from src... 匯入
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if project_root not in sys.path:
    sys.path.append(project_root)

from src.layout import build_layout
from src.params import BUILTIN_PROFILES
from src.scheduler import build_channel_graph


@pytest.fixture
def expected():
    return BUILTIN_PROFILES['expected']


@pytest.fixture
def current():
    return BUILTIN_PROFILES['current']


@pytest.fixture
def small_layout():
    return build_layout(3, 7)


@pytest.fixture
def grid_8x8():
    return build_layout(8, 8)


@pytest.fixture
def channel_graph(grid_8x8):
    return build_channel_graph(grid_8x8, bandwidth=2)
