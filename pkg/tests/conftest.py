from __future__ import annotations

import math

import numpy as np
import pytest

from permtest.groups import GroupSpec
from permtest.statistics import DiffSumStatistic

WORKED_X = (2.1, 0.3, -1.2, 0.7)
WORKED_CLASS_VALUES = (-3.7, -2.9, -0.1, 0.1, 2.9, 3.7)


def within_band(rate: float, expected: float, replications: int, width: float = 4.0) -> bool:
    se = math.sqrt(expected * (1.0 - expected) / replications)
    return abs(rate - expected) <= width * se + 1e-12


@pytest.fixture
def worked_x() -> np.ndarray:
    return np.array(WORKED_X)


@pytest.fixture
def diff2() -> DiffSumStatistic:
    return DiffSumStatistic(2)


@pytest.fixture
def s4() -> GroupSpec:
    return GroupSpec.parse("full-symmetric:4")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)
