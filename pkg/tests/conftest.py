"""Shared fixtures: reference constants and commonly used grids.

The reference constants are computed once per session on the frozen
reference grid (t_max=25, n=32001, 4th-order scheme) and shared by all
test modules; the frozen regression values live in test_degennes.py.
"""

import pytest

from magbound.degennes import (
    HalfLineGrid,
    UniversalConstants,
    find_theta0,
    reference_constants,
    solve_h_xi,
)


@pytest.fixture(scope="session")
def constants() -> UniversalConstants:
    return reference_constants()


@pytest.fixture(scope="session")
def default_grid() -> HalfLineGrid:
    return HalfLineGrid()


@pytest.fixture(scope="session")
def ground_state(constants):
    """Reference-grid ground state at the energy minimum."""
    return solve_h_xi(constants.xi0, constants.grid)


@pytest.fixture(scope="session")
def default_ground_state(constants, default_grid):
    """Default-grid (t_max=20, n=4001) ground state at the minimum."""
    return solve_h_xi(constants.xi0, default_grid)
