import numpy as np
import pytest

from aclab import (
    ConfigurationError,
    evaluate,
    load_tabulated,
    make_quartic,
    make_tabulated,
    validate,
)


def test_quartic_well_values_and_derivatives():
    p = make_quartic()
    assert p.kind == "quartic"
    assert p.w(1.0) == 0.0
    assert p.w(-1.0) == 0.0
    assert p.dw(1.0) == 0.0
    assert p.dw(-1.0) == 0.0
    # W''(+-1) = 2 for W = (1-u^2)^2/4
    assert p.d2w(1.0) == pytest.approx(2.0, abs=1e-14)
    assert p.d2w(-1.0) == pytest.approx(2.0, abs=1e-14)
    assert p.well_curvatures == pytest.approx((2.0, 2.0))
    assert p.w(0.0) == pytest.approx(0.25)


def test_quartic_is_vectorized():
    p = make_quartic()
    u = np.linspace(-1.5, 1.5, 31)
    assert p.w(u).shape == u.shape
    assert np.allclose(p.w(u), (1.0 - u * u) ** 2 / 4.0)
    assert np.allclose(p.dw(u), u**3 - u)
    assert np.allclose(p.d2w(u), 3.0 * u * u - 1.0)


def test_evaluate_orders_dispatch():
    p = make_quartic()
    u = np.linspace(-1.0, 1.0, 11)
    assert np.array_equal(evaluate(p, u, 0), p.w(u))
    assert np.array_equal(evaluate(p, u, 1), p.dw(u))
    assert np.array_equal(evaluate(p, u, 2), p.d2w(u))
    assert np.array_equal(p(u, 2), p.d2w(u))
    with pytest.raises(ConfigurationError):
        evaluate(p, u, 3)


def test_quartic_derivatives_match_finite_differences():
    # Seeded spot checks of dw and d2w against central differences.
    p = make_quartic()
    rng = np.random.default_rng(11)
    eps = 1e-6
    for _ in range(50):
        u = rng.uniform(-1.4, 1.4)
        fd1 = (p.w(u + eps) - p.w(u - eps)) / (2 * eps)
        fd2 = (p.dw(u + eps) - p.dw(u - eps)) / (2 * eps)
        assert abs(fd1 - p.dw(u)) < 5e-9
        assert abs(fd2 - p.d2w(u)) < 5e-9


def test_validate_accepts_quartic():
    rep = validate(make_quartic())
    assert rep.passed
    names = [c.name for c in rep.checks]
    assert any("well_value" in n for n in names)
    assert any("positivity" in n for n in names)
    # Every margin on a clean quartic should be comfortably positive.
    assert all(c.margin > 0 for c in rep.checks)
    assert "ok" in str(rep)


def test_construction_rejects_nonvanishing_wells():
    # Wells are the one invariant enforced when the table is built.
    u = np.linspace(-1.5, 1.5, 2001)
    with pytest.raises(ConfigurationError):
        make_tabulated(u, make_quartic().w(u) + 0.01)


def test_validate_flags_negative_interior():
    u = np.linspace(-1.5, 1.5, 2001)
    p = make_quartic()
    # Deep narrow dip at the origin: wells untouched, interior goes negative.
    w = p.w(u) - 0.3 * np.exp(-((u / 0.15) ** 2))
    rep = validate(make_tabulated(u, w))
    assert not rep.passed
    assert any("positivity" in c.name for c in rep.checks if not c.passed)


def test_validate_rejects_tiny_sample_count():
    with pytest.raises(ConfigurationError):
        validate(make_quartic(), samples=4)


def test_tabulated_matches_quartic_inside_table():
    p = make_quartic()
    u = np.linspace(-1.5, 1.5, 4001)
    q = make_tabulated(u, p.w(u))
    x = np.linspace(-1.2, 1.2, 337)
    assert np.max(np.abs(q.w(x) - p.w(x))) < 1e-10
    assert np.max(np.abs(q.dw(x) - p.dw(x))) < 1e-6
    assert np.max(np.abs(q.d2w(x) - p.d2w(x))) < 1e-4


def test_tabulated_rejects_out_of_range_argument():
    # 601 points puts +-1 exactly on table nodes.
    u = np.linspace(-1.2, 1.2, 601)
    q = make_tabulated(u, make_quartic().w(u))
    with pytest.raises(ConfigurationError):
        q(1.5)  # the evaluate path enforces the table domain


def test_tabulated_rejects_bad_tables():
    with pytest.raises(ConfigurationError):
        make_tabulated([0.0, 1.0], [0.0, 1.0])  # too few samples
    u = np.linspace(-1.2, 1.2, 501)
    w = make_quartic().w(u)
    bad = u.copy()
    bad[10] = bad[9]  # not strictly increasing
    with pytest.raises(ConfigurationError):
        make_tabulated(bad, w)


def test_load_tabulated_round_trip(tmp_path):
    p = make_quartic()
    u = np.linspace(-1.3, 1.3, 1201)
    path = tmp_path / "well.csv"
    with open(path, "w") as fh:
        fh.write("u,w\n")
        for ui, wi in zip(u, p.w(u)):
            fh.write(f"{ui:.17g},{wi:.17g}\n")
    q = load_tabulated(str(path))
    x = np.linspace(-1.1, 1.1, 101)
    assert np.max(np.abs(q.w(x) - p.w(x))) < 1e-9
    assert validate(q).passed


def test_load_tabulated_missing_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_tabulated(str(tmp_path / "nope.csv"))
