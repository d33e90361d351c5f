"""
Shared fixtures
"""

import math

import numpy as np
import pytest

from cmcindex.config import SolveConfig
from cmcindex.models import Grid, ScalarField, TorusLattice
from cmcindex.services import sinh_gordon

TWO_PI = 2 * math.pi


@pytest.fixture
def square() -> TorusLattice:
    return TorusLattice.square(TWO_PI)


@pytest.fixture
def flat_grid(square) -> Grid:
    return Grid(square, 32, 32)


@pytest.fixture
def field_of(flat_grid):
    """Sample f(x, y) on the 32x32 grid of the 2π square"""
    def make(func, grid: Grid = flat_grid) -> ScalarField:
        return ScalarField.from_function(grid, func)
    return make


@pytest.fixture(scope="session")
def oned():
    """y-independent solution for orbit energy 6 on the rectangle (T, 1), 64x8"""
    return sinh_gordon.oned_solution(6.0, 64, 8, b=1.0, cfg=SolveConfig())


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def band_limited(rng):
    """Random real trigonometric polynomial with |p|, |q| <= modes"""
    def make(grid: Grid, modes: int = 3) -> ScalarField:
        s, t = grid.logical
        values = np.zeros(grid.shape)
        for p in range(-modes, modes + 1):
            for q in range(-modes, modes + 1):
                a, b = rng.standard_normal(2)
                phase = 2 * np.pi * (p * s + q * t)
                values += a * np.cos(phase) + b * np.sin(phase)
        return ScalarField(grid, values)
    return make
