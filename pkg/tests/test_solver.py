import math

import numpy as np
import pytest

from aclab import (
    ConfigurationError,
    Field2D,
    NonConvergenceError,
    OutOfBasinError,
    constant_ansatz,
    discrete_energy,
    field_from_function,
    grid_from_extent,
    layer_ansatz,
    make_quartic,
    multiend_ansatz,
    residual,
    saddle_ansatz,
    solve_dirichlet,
)
from aclab.solver import assemble_laplacian


def small_grid(h=0.1, half=6.0):
    return grid_from_extent(((-half, half), (-half, half)), h)


def test_assembled_operator_matches_stencil(quartic):
    g = small_grid(0.25, 2.0)
    f = field_from_function(g, lambda x, y: np.sin(x) * np.cos(2 * y))
    A, c, idx = assemble_laplacian(f)
    from aclab import laplacian

    lap = laplacian(f)
    interior = idx >= 0
    u = f.samples[interior]
    assert np.max(np.abs(A @ u + c - lap.samples[interior])) < 1e-11


def test_assembled_operator_is_negative_definite():
    g = grid_from_extent(((0.0, 1.0), (0.0, 1.0)), 0.1)
    f = field_from_function(g, lambda x, y: 0.0 * x)
    A, _, _ = assemble_laplacian(f)
    w = np.linalg.eigvalsh(-A.toarray())
    assert w.min() > 0.0  # -lap with Dirichlet walls is positive definite


def test_residual_of_near_exact_layer_is_small(quartic, prof):
    g = small_grid(0.1)
    f = layer_ansatz(prof, g, [0.0])
    r = residual(f, quartic)
    # Only the O(h^2) discretization defect of the exact 1d solution remains.
    assert np.max(np.abs(r.samples[r.mask])) < 5e-3


def test_layer_solve_converges(quartic, layer_sol_coarse):
    s = layer_sol_coarse
    assert s.residual_sup <= 1e-10
    assert s.flow_steps == 0  # the ansatz starts inside the Newton basin
    assert 1 <= s.newton_iters <= 6
    r = residual(s.field, quartic)
    assert np.max(np.abs(r.samples[r.mask])) <= 1e-10


def test_layer_solve_keeps_boundary_data(quartic, prof, layer_sol_coarse):
    f = layer_sol_coarse.field
    a = layer_ansatz(prof, f.grid, [0.0])
    frontier = f.frontier_mask()
    assert np.array_equal(f.samples[frontier], a.samples[frontier])


def test_layer_solution_close_to_profile(layer_sol_coarse, prof):
    f = layer_sol_coarse.field
    _, Y = f.grid.meshgrid()
    assert np.max(np.abs(f.samples - prof(Y))) < 5e-4


def test_energy_history_descends(layer_sol_coarse):
    h = np.asarray(layer_sol_coarse.energy_history)
    assert h.size == 1 + layer_sol_coarse.flow_steps + layer_sol_coarse.newton_iters
    assert h[-1] == pytest.approx(layer_sol_coarse.energy)
    slack = 1e-11 * (1.0 + np.abs(h).max())
    assert np.all(np.diff(h) <= slack)


def test_discrete_energy_gradient_is_residual(quartic):
    # d/ds E(u + s v) = -h^2 sum(F v) for interior bumps v, where F is the
    # discrete residual. Checked by central differences on random states.
    g = grid_from_extent(((0.0, 1.0), (0.0, 1.0)), 0.125)
    rng = np.random.default_rng(17)
    for _ in range(20):
        f = Field2D(g, rng.uniform(-1.2, 1.2, size=(9, 9)))
        v = np.zeros((9, 9))
        v[1:-1, 1:-1] = rng.standard_normal((7, 7))
        r = residual(f, quartic)
        directional = -g.h**2 * float(np.sum(r.samples * v))
        eps = 1e-6
        up = Field2D(g, f.samples + eps * v)
        dn = Field2D(g, f.samples - eps * v)
        fd = (discrete_energy(up, quartic) - discrete_energy(dn, quartic)) / (2 * eps)
        assert fd == pytest.approx(directional, rel=1e-7, abs=1e-9)


def test_saddle_solve_antisymmetry(quartic, prof):
    g = small_grid(0.1)
    s = solve_dirichlet(quartic, saddle_ansatz(prof, g))
    u = s.field.samples
    assert s.residual_sup <= 1e-10
    # The diagonal saddle changes sign under reflection across y = x.
    assert np.max(np.abs(u + u.T)) < 1e-9


def test_axis_saddle_orientation(quartic, prof):
    g = small_grid(0.1)
    s = solve_dirichlet(quartic, saddle_ansatz(prof, g, diagonal=False))
    u = s.field.samples
    assert s.residual_sup <= 1e-10
    # Axis-aligned variant: nodal lines on the axes, signs by quadrant.
    i = np.searchsorted(g.xs, 4.0)
    k = np.searchsorted(g.xs, -4.0)
    j = np.searchsorted(g.ys, 0.0)
    assert u[i, i] > 0.9
    assert u[k, i] < -0.9
    assert abs(u[i, j]) < 1e-8


def test_fan_ansatz_engages_flow(quartic, prof):
    g = small_grid(0.1)
    a = multiend_ansatz(prof, g, [20.0, -20.0])
    r0 = residual(a, quartic)
    assert np.max(np.abs(r0.samples[r0.mask])) > 0.5
    s = solve_dirichlet(quartic, a)
    assert s.flow_steps > 0
    assert s.residual_sup <= 1e-10


def test_constant_ansatz_zero_is_stationary(quartic):
    g = small_grid(0.25, 2.0)
    s = solve_dirichlet(quartic, constant_ansatz(g, 0.0))
    assert s.newton_iters == 0
    assert np.max(np.abs(s.field.samples)) == 0.0


def test_out_of_basin_reported(quartic, prof):
    # Two layers at separation 5 on a width-12 box attract each other too
    # strongly for any nearby stationary state; a tight flow budget turns
    # the failed line searches into the dedicated error.
    g = small_grid(0.1)
    a = layer_ansatz(prof, g, [-2.5, 2.5])
    with pytest.raises(OutOfBasinError):
        solve_dirichlet(quartic, a, max_flow=10)


def test_newton_budget_error(quartic, prof):
    g = small_grid(0.1)
    a = layer_ansatz(prof, g, [0.0])
    with pytest.raises(NonConvergenceError, match="stalled"):
        solve_dirichlet(quartic, a, max_newton=0)


def test_stagnation_below_rounding_floor(quartic, prof):
    g = small_grid(0.1)
    a = layer_ansatz(prof, g, [0.0])
    with pytest.raises(NonConvergenceError, match="stagnated"):
        solve_dirichlet(quartic, a, tol=1e-16)


def test_parameter_validation(quartic, prof):
    g = small_grid(0.25, 2.0)
    a = layer_ansatz(prof, g, [0.0])
    with pytest.raises(ConfigurationError):
        solve_dirichlet(quartic, a, tol=-1.0)
    with pytest.raises(ConfigurationError):
        solve_dirichlet(quartic, a, tau=-0.5)


def test_multiend_ansatz_wedge_signs(prof):
    g = small_grid(0.1)
    a = multiend_ansatz(prof, g, [30.0, -30.0])
    # Two lines through the origin cut the plane into four wedges with
    # alternating signs; the y axis lies in a positive wedge, the x axis
    # in a negative one, and the pattern is mirror symmetric.
    i = np.searchsorted(g.xs, 5.0)
    k = np.searchsorted(g.xs, -5.0)
    j = np.searchsorted(g.ys, 0.0)
    assert a.samples[j, i] > 0.9
    assert a.samples[i, j] < -0.5
    assert a.samples[k, j] == pytest.approx(a.samples[i, j], abs=1e-12)


def test_saddle_ansatz_is_product_of_profiles(prof):
    g = small_grid(0.2, 4.0)
    a = saddle_ansatz(prof, g)
    X, Y = g.meshgrid()
    s = math.sqrt(2.0)
    want = prof((X + Y) / s) * prof((X - Y) / s)
    assert np.max(np.abs(a.samples - want)) < 1e-12
