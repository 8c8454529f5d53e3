"""Column-wise misfit of a field against glued one-dimensional profiles.

Each grid column is compared with a stack of alternating-orientation
transition profiles centered at heights t_1 < ... < t_N. The heights are
fitted by localized orthogonality: on the cell around each interface
(bounded by midpoints to its neighbors), the difference between the
field and that interface's profile must be orthogonal to the profile's
translation mode. The fitted trajectory t(x), the leftover misfit F(x),
and the column energy H(x) quantify how fast the field relaxes to an
exact multi-layer stack as x moves along the strip.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, DegenerateFieldError, NonConvergenceError
from .field import Field2D, gradient
from .potentials import Potential
from .profile1d import Profile1D

GRAD_TOL = 1e-10
MAX_FIT_ITER = 50
STEP_CLIP = 0.5


def column_crossings(f: Field2D, expected: Optional[int] = None) -> np.ndarray:
    """Zero-crossing heights per grid column, linearly interpolated.

    Returns an (nx, N) array. With expected=None, N is taken from the
    first column; any column with a different crossing count raises
    DegenerateFieldError.
    """
    if not f.mask.all():
        raise ConfigurationError("column analysis needs a full rectangular grid")
    ys = f.grid.ys
    out: List[np.ndarray] = []
    n_ref = expected
    for i in range(f.grid.nx):
        col = f.samples[i, :]
        sgn = col >= 0.0
        flips = np.nonzero(sgn[1:] != sgn[:-1])[0]
        heights = []
        for k in flips:
            a, b = col[k], col[k + 1]
            heights.append(ys[k] + f.grid.h * a / (a - b))
        if n_ref is None:
            n_ref = len(heights)
            if n_ref == 0:
                raise DegenerateFieldError("first column has no zero crossing")
        if len(heights) != n_ref:
            raise DegenerateFieldError(
                f"column x={f.grid.xs[i]:.4g} has {len(heights)} zero "
                f"crossings, expected {n_ref}"
            )
        out.append(np.asarray(heights))
    return np.vstack(out)


def _cell_trapz(y0: float, h: float, vals: np.ndarray, a: float, b: float) -> float:
    """Trapezoid integral of the sampled function over [a, b], with
    fractional end cells handled by linear interpolation."""
    if b <= a:
        return 0.0
    n = vals.size
    fa = _interp(y0, h, vals, a)
    fb = _interp(y0, h, vals, b)
    ia = int(math.ceil((a - y0) / h - 1e-12))
    ib = int(math.floor((b - y0) / h + 1e-12))
    ia = max(ia, 0)
    ib = min(ib, n - 1)
    if ib < ia:
        return 0.5 * (fa + fb) * (b - a)
    total = 0.0
    if ib > ia:
        total += float(np.trapezoid(vals[ia : ib + 1], dx=h))
    wa = y0 + ia * h - a
    if wa > 1e-15:
        total += 0.5 * (fa + vals[ia]) * wa
    wb = b - (y0 + ib * h)
    if wb > 1e-15:
        total += 0.5 * (vals[ib] + fb) * wb
    return total


def _interp(y0: float, h: float, vals: np.ndarray, y: float) -> float:
    s = (y - y0) / h
    k = min(max(int(math.floor(s)), 0), vals.size - 2)
    t = s - k
    return float(vals[k] * (1.0 - t) + vals[k + 1] * t)


def fit_column(
    prof: Profile1D,
    ys: np.ndarray,
    u: np.ndarray,
    t_init: Sequence[float],
    tol: float = GRAD_TOL,
    max_iter: int = MAX_FIT_ITER,
) -> np.ndarray:
    """Fit interface heights on one column by localized orthogonality.

    Diagonal Newton on the conditions G_i(t) = 0 where
    G_i = integral over cell i of (u - g_i) dg_i/dy.
    """
    t = np.asarray(t_init, dtype=float).copy()
    nlay = t.size
    if nlay == 0:
        raise ConfigurationError("need at least one interface")
    y0 = float(ys[0])
    h = float(ys[1] - ys[0])
    lam_lo, lam_hi = float(ys[0]), float(ys[-1])

    for _ in range(max_iter):
        if np.any(np.diff(t) <= 0):
            raise NonConvergenceError(f"interface heights crossed during fit: {t}")
        edges = np.concatenate([[lam_lo], 0.5 * (t[1:] + t[:-1]), [lam_hi]])
        grad = np.empty(nlay)
        hess = np.empty(nlay)
        for i in range(nlay):
            sign = 1.0 if i % 2 == 0 else -1.0
            shifted = ys - t[i]
            gi = sign * prof(shifted)
            dgi = sign * prof.deriv(shifted)
            d2gi = sign * prof.second(shifted)
            a, b = edges[i], edges[i + 1]
            grad[i] = _cell_trapz(y0, h, (u - gi) * dgi, a, b)
            hess[i] = _cell_trapz(y0, h, dgi ** 2 - (u - gi) * d2gi, a, b)
        if np.abs(grad).max() < tol:
            return t
        if np.any(hess <= 0):
            raise NonConvergenceError(
                "degenerate curvature in the misfit fit; the column does not "
                "look like the requested interface stack"
            )
        step = np.clip(grad / hess, -STEP_CLIP, STEP_CLIP)
        t = t - step
    raise NonConvergenceError(
        f"misfit fit did not reach gradient {tol:.1e} in {max_iter} steps"
    )


def _column_misfit(prof: Profile1D, ys: np.ndarray, u: np.ndarray, t: np.ndarray) -> float:
    y0 = float(ys[0])
    h = float(ys[1] - ys[0])
    edges = np.concatenate([[ys[0]], 0.5 * (t[1:] + t[:-1]), [ys[-1]]])
    total = 0.0
    for i in range(t.size):
        sign = 1.0 if i % 2 == 0 else -1.0
        gi = sign * prof(ys - t[i])
        total += _cell_trapz(y0, h, (u - gi) ** 2, edges[i], edges[i + 1])
    return total


@dataclass
class Trajectory:
    """Fitted interface heights and column diagnostics along a strip."""

    x: np.ndarray  # (m,) interior column positions
    ts: np.ndarray  # (m, N) fitted heights
    misfit: np.ndarray  # (m,) leftover squared misfit F
    energy: np.ndarray  # (m,) column energy H

    @property
    def n_layers(self) -> int:
        return self.ts.shape[1]

    def t_prime(self) -> Tuple[np.ndarray, np.ndarray]:
        """Central-difference slope of each height along the strip."""
        if self.x.size < 3:
            raise ConfigurationError("need at least three columns for slopes")
        dx = self.x[2:] - self.x[:-2]
        dt = (self.ts[2:, :] - self.ts[:-2, :]) / dx[:, None]
        return self.x[1:-1], dt

    def to_csv(self, path: str):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            cols = ["x"] + [f"t_{i+1}" for i in range(self.n_layers)] + ["F", "H"]
            wr.writerow(cols)
            for k in range(self.x.size):
                row = [f"{self.x[k]:.17g}"]
                row += [f"{v:.17g}" for v in self.ts[k]]
                row += [f"{self.misfit[k]:.17g}", f"{self.energy[k]:.17g}"]
                wr.writerow(row)


def fit_trajectory(
    f: Field2D,
    prof: Profile1D,
    p: Potential,
    n_layers: Optional[int] = None,
    tol: float = GRAD_TOL,
) -> Trajectory:
    """Fit interface heights on every interior column of a strip field."""
    crossings = column_crossings(f, expected=n_layers)
    gx, gy = gradient(f)
    ys = f.grid.ys
    h = f.grid.h
    xs_idx = range(1, f.grid.nx - 1)
    x_out = f.grid.xs[1:-1]
    m = len(x_out)
    nlay = crossings.shape[1]
    ts = np.empty((m, nlay))
    misfit = np.empty(m)
    energy = np.empty(m)
    wvals = np.asarray(p.w(f.samples), dtype=float)
    for k, i in enumerate(xs_idx):
        u = f.samples[i, :]
        t = fit_column(prof, ys, u, crossings[i], tol=tol)
        ts[k] = t
        misfit[k] = _column_misfit(prof, ys, u, t)
        dens = 0.5 * (gx.samples[i, 1:-1] ** 2 + gy.samples[i, 1:-1] ** 2) + wvals[i, 1:-1]
        energy[k] = float(np.trapezoid(dens, dx=h))
    return Trajectory(x=x_out, ts=ts, misfit=misfit, energy=energy)


def t_prime_flux(f: Field2D, prof: Profile1D, traj: Trajectory) -> Tuple[np.ndarray, np.ndarray]:
    """Leading-order height slopes from the horizontal flux through each cell.

    Independent cross-check of Trajectory.t_prime: projecting u_x onto the
    profile derivative of layer i over that layer's cell gives
    -int u_x dg_i/dy / int (dg_i/dy)^2, which equals t_i' up to the fit
    error. Returned on the same columns as traj (one array row per column).
    """
    gx, _ = gradient(f)
    ys = f.grid.ys
    y0 = float(ys[0])
    h = f.grid.h
    # Clip the flux integrals to rows where the centered u_x exists.
    lam_lo, lam_hi = float(ys[1]), float(ys[-2])
    out = np.empty_like(traj.ts)
    for k in range(traj.x.size):
        i = k + 1
        t = traj.ts[k]
        edges = np.concatenate([[lam_lo], 0.5 * (t[1:] + t[:-1]), [lam_hi]])
        ux = gx.samples[i, :]
        for j in range(t.size):
            sign = 1.0 if j % 2 == 0 else -1.0
            dgj = sign * prof.deriv(ys - t[j])
            a, b = edges[j], edges[j + 1]
            num = _cell_trapz(y0, h, ux * dgj, a, b)
            den = _cell_trapz(y0, h, dgj ** 2, a, b)
            out[k, j] = -num / den
    return traj.x, out


@dataclass
class DecayFit:
    rate: Optional[float]
    r2: Optional[float]
    noise_dominated: bool
    floor: float
    n_points: int


def decay_fit(
    x: np.ndarray,
    values: np.ndarray,
    asymptote: float = 0.0,
    window: Optional[Tuple[float, float]] = None,
    floor: float = 1e-12,
) -> DecayFit:
    """Exponential decay rate of |values - asymptote| over a window of x.

    When the deviation sits below the floor everywhere in the window,
    the series is reported as noise dominated and no rate is fitted:
    pretending to measure a rate from roundoff would be meaningless.
    """
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(values, dtype=float) - asymptote)
    if window is not None:
        sel = (x >= window[0]) & (x <= window[1])
        x, y = x[sel], y[sel]
    if x.size < 3:
        raise ConfigurationError("need at least three points in the window")
    if float(y.max()) < floor:
        return DecayFit(rate=None, r2=None, noise_dominated=True, floor=floor, n_points=int(x.size))
    keep = y > floor
    x, y = x[keep], y[keep]
    if x.size < 3:
        return DecayFit(rate=None, r2=None, noise_dominated=True, floor=floor, n_points=int(x.size))
    logy = np.log(y)
    slope, intercept = np.polyfit(x, logy, 1)
    fitted = slope * x + intercept
    ss_res = float(((logy - fitted) ** 2).sum())
    ss_tot = float(((logy - logy.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return DecayFit(
        rate=float(-slope),
        r2=float(r2),
        noise_dominated=False,
        floor=floor,
        n_points=int(x.size),
    )
