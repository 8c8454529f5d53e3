import csv
import math

import numpy as np
import pytest

from aclab import (
    ConfigurationError,
    DegenerateFieldError,
    NonConvergenceError,
    column_crossings,
    decay_fit,
    field_from_function,
    fit_column,
    fit_trajectory,
    grid_from_extent,
    multilayer,
    t_prime_flux,
)

SIGMA0 = 2.0 * math.sqrt(2.0) / 3.0


@pytest.fixture(scope="module")
def tilted(prof):
    # Exact profile along slowly tilted columns: every fitted quantity has
    # a closed form, which pins the whole pipeline.
    g = grid_from_extent(((0.0, 10.0), (-8.0, 8.0)), 0.05)
    return field_from_function(g, lambda x, y: prof(y - 0.1 * x))


def test_column_crossings_two_layers(prof, strip_sol):
    heights = column_crossings(strip_sol.field)
    assert heights.shape == (strip_sol.field.grid.nx, 2)
    mid = heights[heights.shape[0] // 2]
    assert mid[0] == pytest.approx(-5.0, abs=0.01)
    assert mid[1] == pytest.approx(5.0, abs=0.01)


def test_column_crossings_expected_mismatch(strip_sol):
    with pytest.raises(DegenerateFieldError):
        column_crossings(strip_sol.field, expected=3)


def test_column_crossings_needs_a_crossing(quartic):
    g = grid_from_extent(((0.0, 2.0), (0.0, 2.0)), 0.1)
    f = field_from_function(g, lambda x, y: 1.0 + 0.0 * x)
    with pytest.raises(DegenerateFieldError, match="no zero crossing"):
        column_crossings(f)


def test_fit_column_recovers_exact_shift(prof):
    ys = np.arange(-8.0, 8.0 + 1e-9, 0.05)
    u = prof(ys - 0.3)
    t = fit_column(prof, ys, u, [0.2])
    assert t[0] == pytest.approx(0.3, abs=1e-10)


def test_fit_column_two_layer_glue(prof):
    ys = np.arange(-10.0, 10.0 + 1e-9, 0.05)
    u = multilayer(prof, [-5.0, 5.0], ys)
    t = fit_column(prof, ys, u, [-4.8, 5.3])
    assert t == pytest.approx([-5.0, 5.0], abs=1e-4)


def test_fit_column_iteration_budget(prof):
    ys = np.arange(-8.0, 8.0 + 1e-9, 0.05)
    u = prof(ys - 2.0)
    with pytest.raises(NonConvergenceError, match="did not reach"):
        fit_column(prof, ys, u, [0.0], max_iter=1)


def test_tilted_layer_heights_and_misfit(prof, quartic, tilted):
    traj = fit_trajectory(tilted, prof, quartic)
    assert traj.n_layers == 1
    assert np.max(np.abs(traj.ts[:, 0] - 0.1 * traj.x)) < 1e-12
    assert traj.misfit.max() < 1e-25


def test_tilted_layer_slopes_both_routes(prof, quartic, tilted):
    traj = fit_trajectory(tilted, prof, quartic)
    xs, dt = traj.t_prime()
    assert xs.size == traj.x.size - 2
    assert np.max(np.abs(dt - 0.1)) < 1e-10
    xf, dtf = t_prime_flux(tilted, prof, traj)
    assert dtf.shape == traj.ts.shape
    assert np.max(np.abs(dtf - 0.1)) < 1e-5
    # The two slope estimates agree on the shared columns.
    assert np.max(np.abs(dtf[1:-1, :] - dt)) < 1e-5


def test_tilted_layer_column_energy(prof, quartic, tilted):
    # H per column: sec(theta) kinetic plus potential, theta = atan(0.1).
    traj = fit_trajectory(tilted, prof, quartic)
    want = SIGMA0 * (1.0 + 0.5 * 0.1**2)
    mid = traj.energy[traj.energy.size // 2]
    assert mid == pytest.approx(want, abs=5e-4)


def test_strip_fit_middle_third(prof, quartic, strip_sol):
    traj = fit_trajectory(strip_sol.field, prof, quartic)
    assert traj.n_layers == 2
    mid = (traj.x > 10.0) & (traj.x < 20.0)
    means = traj.ts[mid].mean(axis=0)
    # The layers attract slightly, pulling the pair inward a touch.
    assert means[0] == pytest.approx(-5.0, abs=5e-3)
    assert means[1] == pytest.approx(5.0, abs=5e-3)
    assert np.ptp(traj.ts[mid], axis=0).max() < 1e-3
    assert traj.misfit[mid].max() < 1e-5
    assert traj.energy[mid].mean() == pytest.approx(2.0 * SIGMA0, rel=1e-3)
    _, dt = traj.t_prime()
    assert np.max(np.abs(dt[mid[1:-1]])) < 1e-3


def test_trajectory_csv(prof, quartic, tilted, tmp_path):
    traj = fit_trajectory(tilted, prof, quartic)
    path = tmp_path / "trajectory.csv"
    traj.to_csv(str(path))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "t_1", "F", "H"]
    assert len(rows) - 1 == traj.x.size
    assert float(rows[1][0]) == traj.x[0]


def test_decay_fit_recovers_exact_rate():
    x = np.linspace(0.0, 6.0, 61)
    y = 4.0 + 3.0 * np.exp(-1.7 * x)
    fit = decay_fit(x, y, asymptote=4.0)
    assert not fit.noise_dominated
    assert fit.rate == pytest.approx(1.7, abs=1e-10)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)
    assert fit.n_points == 61


def test_decay_fit_window_selects_clean_range():
    x = np.linspace(0.0, 10.0, 101)
    y = np.exp(-2.0 * x) + np.exp(-0.5 * x) * 1e-4
    # Early on the fast mode dominates; the window keeps the fit there.
    fit = decay_fit(x, y, window=(0.0, 3.0))
    assert fit.rate == pytest.approx(2.0, rel=0.02)
    assert fit.n_points == 31


def test_decay_fit_noise_floor():
    rng = np.random.default_rng(23)
    x = np.linspace(0.0, 5.0, 50)
    y = rng.uniform(-1e-14, 1e-14, size=50)
    fit = decay_fit(x, y, floor=1e-12)
    assert fit.noise_dominated
    assert fit.rate is None and fit.r2 is None


def test_decay_fit_needs_three_points():
    with pytest.raises(ConfigurationError):
        decay_fit(np.array([0.0, 1.0]), np.array([1.0, 0.1]))
    with pytest.raises(ConfigurationError):
        decay_fit(np.linspace(0, 1, 20), np.ones(20), window=(5.0, 6.0))
