"""Double-well potentials with wells pinned at u = -1 and u = +1.

The canonical quartic well W(u) = (1 - u^2)^2 / 4 is built in; arbitrary
tabulated wells are supported through cubic-spline interpolation of a
two-column table. Every potential exposes W and its first two derivatives
plus the curvatures at the wells, which set interface tail rates.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigurationError

WELL_VALUE_TOL = 1e-12


@dataclass
class Potential:
    """A double-well potential on (a neighborhood of) [-1, 1].

    Attributes
    ----------
    kind : str
        "quartic" or "tabulated".
    w, dw, d2w : callables
        Vectorized W, W', W''.
    domain : tuple or None
        Closed interval of valid arguments; None means all reals.
    """

    kind: str
    w: Callable[[np.ndarray], np.ndarray]
    dw: Callable[[np.ndarray], np.ndarray]
    d2w: Callable[[np.ndarray], np.ndarray]
    domain: Optional[Tuple[float, float]] = None

    def _check_domain(self, u):
        if self.domain is None:
            return
        lo, hi = self.domain
        u = np.asarray(u, dtype=float)
        if u.size and (u.min() < lo - 1e-12 or u.max() > hi + 1e-12):
            raise ConfigurationError(
                f"potential argument outside table range [{lo}, {hi}]: "
                f"[{u.min()}, {u.max()}]"
            )

    def __call__(self, u, order: int = 0):
        return evaluate(self, u, order)

    @property
    def well_curvatures(self) -> Tuple[float, float]:
        return (float(self.d2w(-1.0)), float(self.d2w(1.0)))


def make_quartic() -> Potential:
    """The canonical quartic double well W(u) = (1 - u^2)^2 / 4."""

    def w(u):
        u = np.asarray(u, dtype=float)
        return 0.25 * (1.0 - u * u) ** 2

    def dw(u):
        u = np.asarray(u, dtype=float)
        return u * u * u - u

    def d2w(u):
        u = np.asarray(u, dtype=float)
        return 3.0 * u * u - 1.0

    return Potential(kind="quartic", w=w, dw=dw, d2w=d2w, domain=None)


def make_tabulated(u: Sequence[float], wvals: Sequence[float]) -> Potential:
    """Build a potential from sample arrays by cubic-spline interpolation.

    The table must cover [-1, 1], be strictly increasing in u, and hit
    W(-1) = W(1) = 0 to within 1e-12; well values are the one invariant
    enforced at construction, everything else is reported by validate().
    """
    u = np.asarray(u, dtype=float)
    wvals = np.asarray(wvals, dtype=float)
    if u.ndim != 1 or u.size < 8:
        raise ConfigurationError("tabulated potential needs >= 8 samples")
    if np.any(np.diff(u) <= 0):
        raise ConfigurationError("tabulated abscissae must be strictly increasing")
    if u[0] > -1.0 or u[-1] < 1.0:
        raise ConfigurationError("table must cover [-1, 1]")

    spline = CubicSpline(u, wvals, extrapolate=False)
    for well in (-1.0, 1.0):
        v = float(spline(well))
        if not np.isfinite(v) or abs(v) > WELL_VALUE_TOL:
            raise ConfigurationError(
                f"tabulated potential has W({well:+.0f}) = {v:.3e}, "
                f"wells must vanish to {WELL_VALUE_TOL:g}"
            )
    d1 = spline.derivative(1)
    d2 = spline.derivative(2)
    dom = (float(u[0]), float(u[-1]))

    p = Potential(
        kind="tabulated",
        w=lambda x: np.asarray(spline(x), dtype=float),
        dw=lambda x: np.asarray(d1(x), dtype=float),
        d2w=lambda x: np.asarray(d2(x), dtype=float),
        domain=dom,
    )
    return p


def load_tabulated(path: str) -> Potential:
    """Read a two-column CSV with header "u,W" and build a potential."""
    us: List[float] = []
    ws: List[float] = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ConfigurationError(f"cannot read potential table {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header[:2]] != ["u", "w"]:
            raise ConfigurationError(f"{path}: expected header 'u,W'")
        for row in reader:
            if not row:
                continue
            us.append(float(row[0]))
            ws.append(float(row[1]))
    return make_tabulated(us, ws)


def evaluate(p: Potential, u, order: int = 0):
    """Evaluate W (order 0), W' (1), or W'' (2) with domain checking."""
    if order not in (0, 1, 2):
        raise ConfigurationError(f"derivative order must be 0, 1 or 2, got {order}")
    p._check_domain(u)
    f = (p.w, p.dw, p.d2w)[order]
    return f(u)


@dataclass
class Check:
    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclass
class ValidationReport:
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __str__(self) -> str:
        lines = []
        for c in self.checks:
            status = "ok" if c.passed else "FAIL"
            lines.append(f"{c.name:28s} {status:4s} margin={c.margin:+.3e} {c.detail}")
        return "\n".join(lines)


def validate(p: Potential, samples: int = 256, tol: float = WELL_VALUE_TOL) -> ValidationReport:
    """Check the double-well structure and report margins.

    Checks: wells vanish, W > 0 strictly between the wells, positive
    curvature at both wells, and strict convexity on a width-0.1
    neighborhood inside each well.
    """
    if samples < 16:
        raise ConfigurationError("validate needs samples >= 16")
    rep = ValidationReport()

    for well in (-1.0, 1.0):
        v = float(p.w(well))
        rep.checks.append(
            Check(f"well_value({well:+.0f})", abs(v) <= tol, tol - abs(v), f"W={v:.3e}")
        )

    interior = np.linspace(-1.0, 1.0, samples + 2)[1:-1]
    wi = np.asarray(p.w(interior), dtype=float)
    mmin = float(wi.min())
    at = float(interior[int(np.argmin(wi))])
    rep.checks.append(
        Check("positivity_(-1,1)", mmin > 0.0, mmin, f"min at u={at:+.4f}")
    )

    for well in (-1.0, 1.0):
        c = float(p.d2w(well))
        rep.checks.append(Check(f"curvature({well:+.0f})", c > 0.0, c))

    delta = 0.1
    for well, inward in ((-1.0, 1.0), (1.0, -1.0)):
        span = np.linspace(well, well + inward * delta, max(16, samples // 8))
        c = np.asarray(p.d2w(span), dtype=float)
        cmin = float(c.min())
        rep.checks.append(
            Check(f"convexity_near({well:+.0f})", cmin > 0.0, cmin, f"delta={delta}")
        )

    return rep
