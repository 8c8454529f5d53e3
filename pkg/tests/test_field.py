import csv
import math

import numpy as np
import pytest

from aclab import (
    ConfigurationError,
    Field2D,
    GeometryError,
    Grid2D,
    cone_mask,
    crop,
    energy_density,
    field_from_function,
    gradient,
    grid_from_extent,
    laplacian,
    load_field_csv,
    make_quartic,
    save_curves_csv,
    save_field_csv,
    zero_contours,
)


def unit_grid(n=41, half=1.0):
    return grid_from_extent(((-half, half), (-half, half)), 2 * half / (n - 1))


def test_grid_geometry():
    g = grid_from_extent(((0.0, 2.0), (-1.0, 1.0)), 0.1)
    assert (g.nx, g.ny) == (21, 21)
    assert g.xs[0] == 0.0 and g.xs[-1] == pytest.approx(2.0)
    assert g.ys[0] == -1.0 and g.ys[-1] == pytest.approx(1.0)
    assert g.extent == pytest.approx((0.0, 2.0, -1.0, 1.0))
    X, Y = g.meshgrid()
    assert X.shape == (21, 21)
    assert X[3, 0] == pytest.approx(g.xs[3])
    assert Y[0, 3] == pytest.approx(g.ys[3])


def test_grid_rejects_bad_parameters():
    with pytest.raises(ConfigurationError):
        grid_from_extent(((0.0, 1.0), (0.0, 0.0)), 0.1)
    with pytest.raises(ConfigurationError):
        grid_from_extent(((0.0, 1.0), (0.0, 2.0)), 0.3)  # incommensurate
    with pytest.raises(ConfigurationError):
        Grid2D(origin=(0.0, 0.0), h=-0.1, nx=10, ny=10)
    with pytest.raises(ConfigurationError):
        Grid2D(origin=(0.0, 0.0), h=0.1, nx=4, ny=10)


def test_field_shape_checks():
    g = unit_grid(9)
    with pytest.raises(ConfigurationError):
        Field2D(g, np.zeros((9, 8)))
    with pytest.raises(ConfigurationError):
        Field2D(g, np.zeros((9, 9)), mask=np.ones((8, 9), dtype=bool))


def test_validate_rejects_disconnected_mask():
    g = unit_grid(17)
    mask = np.zeros((17, 17), dtype=bool)
    mask[:5, :] = True
    mask[12:, :] = True  # two islands
    with pytest.raises(ConfigurationError, match="2 components"):
        Field2D(g, np.zeros((17, 17)), mask=mask).validate()
    with pytest.raises(ConfigurationError):
        Field2D(g, np.zeros((17, 17)), mask=np.zeros((17, 17), dtype=bool)).validate()


def test_values_at_bilinear_exact_on_affine():
    g = unit_grid(21)
    f = field_from_function(g, lambda x, y: 2.0 + 3.0 * x - 0.5 * y)
    rng = np.random.default_rng(3)
    pts = rng.uniform(-0.99, 0.99, size=(40, 2))
    want = 2.0 + 3.0 * pts[:, 0] - 0.5 * pts[:, 1]
    assert np.max(np.abs(f.values_at(pts) - want)) < 1e-12


def test_values_at_outside_grid_raises():
    g = unit_grid(21)
    f = field_from_function(g, lambda x, y: x)
    with pytest.raises(GeometryError):
        f.values_at(np.array([[1.5, 0.0]]))


def test_values_at_masked_cell_raises():
    g = unit_grid(21)
    mask = np.ones((21, 21), dtype=bool)
    mask[10, 10] = False
    f = field_from_function(g, lambda x, y: x, mask=mask)
    with pytest.raises(GeometryError):
        f.values_at(np.array([[0.01, 0.01]]))


def test_laplacian_exact_on_quadratic():
    g = unit_grid(33)
    f = field_from_function(g, lambda x, y: x * x + 2.0 * y * y)
    lap = laplacian(f)
    inner = lap.samples[lap.mask]
    assert np.max(np.abs(inner - 6.0)) < 1e-11


def test_laplacian_second_order_convergence():
    fn = lambda x, y: np.sin(1.3 * x) * np.cos(0.7 * y)
    exact = lambda x, y: -(1.3**2 + 0.7**2) * fn(x, y)

    def err(n):
        g = unit_grid(n)
        f = field_from_function(g, fn)
        lap = laplacian(f)
        X, Y = g.meshgrid()
        return np.max(np.abs((lap.samples - exact(X, Y)))[lap.mask])

    e1, e2 = err(41), err(81)
    assert e1 / e2 == pytest.approx(4.0, rel=0.2)


def test_gradient_exact_on_affine():
    g = unit_grid(17)
    f = field_from_function(g, lambda x, y: 1.0 - 2.0 * x + 4.0 * y)
    gx, gy = gradient(f)
    assert np.max(np.abs(gx.samples[gx.mask] + 2.0)) < 1e-13
    assert np.max(np.abs(gy.samples[gy.mask] - 4.0)) < 1e-13


def test_derivatives_need_interior():
    g = unit_grid(9)
    mask = np.zeros((9, 9), dtype=bool)
    mask[:, 4] = True  # a single row of cells, no 3x3 interior
    f = field_from_function(g, lambda x, y: x, mask=mask)
    with pytest.raises(GeometryError):
        laplacian(f)
    with pytest.raises(GeometryError):
        gradient(f)


def test_energy_density_formula():
    p = make_quartic()
    g = unit_grid(41)
    f = field_from_function(g, lambda x, y: 0.3 * x)
    e = energy_density(f, p)
    # 0.5 |grad u|^2 + W(u) with grad u = (0.3, 0)
    X, _ = g.meshgrid()
    want = 0.5 * 0.09 + p.w(0.3 * X)
    assert np.max(np.abs(e.samples[e.mask] - want[e.mask])) < 1e-10


def test_zero_contours_circle():
    g = unit_grid(201, half=2.0)
    r = 1.3
    f = field_from_function(g, lambda x, y: x * x + y * y - r * r)
    curves = zero_contours(f)
    assert len(curves) == 1
    c = curves[0]
    assert c.closed
    assert c.as_graph(g) is None
    assert c.length() == pytest.approx(2 * math.pi * r, rel=1e-3)
    rad = np.hypot(c.points[:, 0], c.points[:, 1])
    assert np.max(np.abs(rad - r)) < 1e-3


def test_zero_contours_line_and_graph():
    g = unit_grid(101)
    f = field_from_function(g, lambda x, y: y - 0.237)
    curves = zero_contours(f)
    assert len(curves) == 1
    c = curves[0]
    assert not c.closed
    out = c.as_graph(g)
    assert out is not None
    xs, ys = out
    assert xs.size == g.nx
    assert np.max(np.abs(ys - 0.237)) < 1e-9
    # Open curves start and end on the frontier of the active region.
    for end in (c.points[0], c.points[-1]):
        assert abs(abs(end[0]) - 1.0) < 1e-9 or abs(abs(end[1]) - 1.0) < 1e-9


def test_zero_contours_two_lines():
    g = unit_grid(101, half=2.0)
    f = field_from_function(g, lambda x, y: y * y - 1.0)
    curves = zero_contours(f)
    assert len(curves) == 2
    heights = sorted(float(np.mean(c.points[:, 1])) for c in curves)
    assert heights == pytest.approx([-1.0, 1.0], abs=1e-6)


def test_zero_contours_level_offset():
    g = unit_grid(101)
    f = field_from_function(g, lambda x, y: x)
    curves = zero_contours(f, level=0.25)
    assert len(curves) == 1
    assert np.max(np.abs(curves[0].points[:, 0] - 0.25)) < 1e-9


def test_crop_preserves_values():
    g = unit_grid(41)
    f = field_from_function(g, lambda x, y: np.cos(x + 2 * y))
    sub = crop(f, ((-0.5, 0.5), (-0.25, 0.75)))
    assert sub.grid.extent == pytest.approx((-0.5, 0.5, -0.25, 0.75))
    # Samples are carried over bit for bit from the parent field.
    assert np.array_equal(sub.samples, f.samples[10:31, 15:36])
    with pytest.raises(GeometryError):
        crop(f, ((-0.1, 0.1), (-0.1, 0.1)))  # fewer than 8 points per side


def test_cone_mask():
    g = unit_grid(81, half=4.0)
    m = cone_mask(g, apex_x=0.0, slope=math.tan(math.radians(30.0)))
    X, Y = g.meshgrid()
    inside = (X > 0) & (np.abs(Y) < math.tan(math.radians(30.0)) * X)
    assert np.array_equal(m, inside)
    assert not m[g.nx // 2, g.ny // 2]  # apex itself excluded
    with pytest.raises(ConfigurationError):
        cone_mask(g, 0.0, -1.0)


def test_field_csv_round_trip_exact(tmp_path):
    g = unit_grid(21)
    rng = np.random.default_rng(7)
    f = Field2D(g, rng.standard_normal((21, 21)))
    path = tmp_path / "field.csv"
    save_field_csv(f, str(path))
    back = load_field_csv(str(path))
    assert back.grid.h == pytest.approx(g.h)
    assert (back.grid.nx, back.grid.ny) == (21, 21)
    assert np.array_equal(back.samples, f.samples)
    assert back.mask.all()


def test_field_csv_round_trip_masked(tmp_path):
    g = unit_grid(21)
    mask = np.ones((21, 21), dtype=bool)
    mask[:3, :] = False
    f = field_from_function(g, lambda x, y: x * y, mask=mask)
    path = tmp_path / "field.csv"
    save_field_csv(f, str(path))
    back = load_field_csv(str(path))
    assert np.array_equal(back.mask, mask[3:, :])  # grid shrinks to the active box
    assert np.array_equal(back.samples[back.mask], f.samples[f.mask])


def test_load_field_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n0,0,1\n")
    with pytest.raises(ConfigurationError):
        load_field_csv(str(path))


def test_save_curves_csv(tmp_path):
    g = unit_grid(101)
    f = field_from_function(g, lambda x, y: y * y - 0.25)
    curves = zero_contours(f)
    path = tmp_path / "curves.csv"
    save_curves_csv(curves, str(path))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["curve_id", "x", "y"]
    ids = {row[0] for row in rows[1:]}
    assert ids == {"0", "1"}
    npts = sum(c.points.shape[0] for c in curves)
    assert len(rows) - 1 == npts
