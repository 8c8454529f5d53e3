"""Shared fixtures: the quartic well, its profile, and a few solved fields.

The PDE solves are session-scoped because they are by far the most
expensive ingredients; individual tests treat them as read-only.
"""

import numpy as np
import pytest

from aclab import (
    grid_from_extent,
    layer_ansatz,
    make_quartic,
    saddle_ansatz,
    solve_dirichlet,
    solve_profile,
)


# One human-readable verdict line per acceptance criterion, echoed after the
# normal pytest summary so they survive output capture.
acceptance_lines = []


@pytest.fixture(scope="session")
def acceptance_log():
    return acceptance_lines


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.line(line)


@pytest.fixture(scope="session")
def quartic():
    return make_quartic()


@pytest.fixture(scope="session")
def prof(quartic):
    return solve_profile(quartic)


@pytest.fixture(scope="session")
def layer_sol_coarse(quartic, prof):
    """Single horizontal layer on [-10,10]^2 at h = 0.1."""
    grid = grid_from_extent(((-10.0, 10.0), (-10.0, 10.0)), 0.1)
    return solve_dirichlet(quartic, layer_ansatz(prof, grid, [0.0]))


@pytest.fixture(scope="session")
def layer_sol_fine(quartic, prof):
    """Same layer at h = 0.05, for convergence comparisons."""
    grid = grid_from_extent(((-10.0, 10.0), (-10.0, 10.0)), 0.05)
    return solve_dirichlet(quartic, layer_ansatz(prof, grid, [0.0]))


@pytest.fixture(scope="session")
def saddle_sol(quartic, prof):
    """Four-ended saddle on [-10,10]^2 at h = 0.0625."""
    grid = grid_from_extent(((-10.0, 10.0), (-10.0, 10.0)), 0.0625)
    return solve_dirichlet(quartic, saddle_ansatz(prof, grid))


@pytest.fixture(scope="session")
def strip_sol(quartic, prof):
    """Two well-separated layers on a long strip, h = 0.05.

    Interfaces at y = -5 and y = 5 on [0,30] x [-10,10]; the gap is wide
    enough that a genuine nearby solution exists.
    """
    grid = grid_from_extent(((0.0, 30.0), (-10.0, 10.0)), 0.05)
    return solve_dirichlet(quartic, layer_ansatz(prof, grid, [-5.0, 5.0]))
