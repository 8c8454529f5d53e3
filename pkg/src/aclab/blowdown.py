"""Directional energy distribution of a field at large radius.

Viewed from far away, a multi-interface field concentrates its energy
along finitely many rays. Binning the gradient-square and well densities
of an annulus by polar angle exposes those rays as peaks; each peak's
angular mass counts interfaces in units of the line tension of a single
transition, and the counted directions must balance as vectors.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dfield
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateFieldError,
    GeometryError,
    InconsistencyError,
)
from .field import Field2D, gradient
from .potentials import Potential


@dataclass
class AngularDistribution:
    """Energy densities per radian per unit radial length, binned by angle."""

    center: Tuple[float, float]
    r_in: float
    r_out: float
    theta: np.ndarray  # bin centers, radians in [-pi, pi)
    a1: np.ndarray  # |grad u|^2 line density
    a2: np.ndarray  # W(u) line density
    t11: np.ndarray  # gradient tensor components, same normalization as a1
    t12: np.ndarray
    t22: np.ndarray

    @property
    def dtheta(self) -> float:
        return 2.0 * math.pi / self.theta.size

    def to_csv(self, path: str):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["theta", "a1", "a2"])
            for th, v1, v2 in zip(self.theta, self.a1, self.a2):
                wr.writerow([f"{th:.17g}", f"{v1:.17g}", f"{v2:.17g}"])


def angular_energy(
    f: Field2D,
    p: Potential,
    r_in: float,
    r_out: float,
    center: Tuple[float, float] = (0.0, 0.0),
    nbins: int = 720,
) -> AngularDistribution:
    """Bin energy densities of the annulus r_in <= r < r_out by polar angle.

    Every grid point of the annulus must have an active 5-point stencil;
    the annulus must not leak outside the grid.
    """
    if not 0.0 <= r_in < r_out:
        raise ConfigurationError("need 0 <= r_in < r_out")
    if nbins < 16:
        raise ConfigurationError("need at least 16 angular bins")
    x0, x1, y0, y1 = f.grid.extent
    cx, cy = center
    if (cx - r_out < x0) or (cx + r_out > x1) or (cy - r_out < y0) or (cy + r_out > y1):
        raise GeometryError(
            f"annulus of radius {r_out} around {center} leaves the grid extent"
        )

    gx, gy = gradient(f)
    X, Y = f.grid.meshgrid()
    R = np.hypot(X - cx, Y - cy)
    ring = (R >= r_in) & (R < r_out)
    if not ring.any():
        raise GeometryError("annulus contains no grid points")
    if not gx.mask[ring].all():
        raise GeometryError("annulus touches inactive or frontier grid points")

    theta = np.arctan2((Y - cy)[ring], (X - cx)[ring])
    dtheta = 2.0 * math.pi / nbins
    bins = np.clip(((theta + math.pi) / dtheta).astype(int), 0, nbins - 1)

    w = f.grid.h ** 2 / (dtheta * (r_out - r_in))
    ux = gx.samples[ring]
    uy = gy.samples[ring]
    wu = np.asarray(p.w(f.samples[ring]), dtype=float)

    def acc(vals):
        return np.bincount(bins, weights=vals, minlength=nbins) * w

    a1 = acc(ux ** 2 + uy ** 2)
    a2 = acc(wu)
    t11 = acc(ux ** 2)
    t12 = acc(ux * uy)
    t22 = acc(uy ** 2)
    centers = -math.pi + dtheta * (np.arange(nbins) + 0.5)
    return AngularDistribution(
        center=(float(cx), float(cy)),
        r_in=float(r_in),
        r_out=float(r_out),
        theta=centers,
        a1=a1,
        a2=a2,
        t11=t11,
        t12=t12,
        t22=t22,
    )


@dataclass
class Ray:
    angle: float  # radians in (-pi, pi]
    density: float  # angular mass of the peak, units of line tension
    n: int  # interface count: density rounded in units of sigma0
    rounding_defect: float  # |density/sigma0 - n|
    tau: np.ndarray  # normalized gradient direction tensor, 2x2
    equipartition: float  # a1 mass over twice a2 mass

    @property
    def angle_deg(self) -> float:
        return math.degrees(self.angle)

    @property
    def direction(self) -> np.ndarray:
        return np.array([math.cos(self.angle), math.sin(self.angle)])


def extract_rays(
    dist: AngularDistribution,
    sigma0: float,
    threshold: float = 0.2,
    merge_bins: int = 3,
    max_rounding_defect: float = 0.3,
) -> List[Ray]:
    """Locate peaks of the a1 distribution and count interfaces per peak.

    Contiguous above-threshold runs (circularly, with gaps up to
    merge_bins tolerated) become rays; a run's angular mass divided by
    sigma0 must sit near an integer or the viewing annulus is judged
    inconsistent with a clean multi-ray structure.
    """
    a1 = dist.a1
    peak = float(a1.max())
    if peak <= 1e-10:
        raise DegenerateFieldError("no interface energy in the annulus")
    above = a1 > threshold * peak
    if above.all():
        raise DegenerateFieldError(
            "energy spread over all angles: annulus sees no separated rays"
        )

    nbins = a1.size
    runs = _circular_runs(above, merge_bins)
    dth = dist.dtheta

    # Threshold runs only locate the peaks. Masses are integrated over the
    # angular cells bounded by midpoints between neighboring peaks, so the
    # sub-threshold tails of each peak are not lost.
    centers = []
    for idxs in runs:
        wts = a1[idxs]
        centers.append(
            math.atan2(
                float((wts * np.sin(dist.theta[idxs])).sum()),
                float((wts * np.cos(dist.theta[idxs])).sum()),
            )
        )
    centers = sorted(centers)
    cells = _voronoi_cells(np.asarray(centers), nbins)

    rays: List[Ray] = []
    for idxs, ang in zip(cells, centers):
        wts = a1[idxs]
        mass = float(wts.sum() * dth)
        n = int(round(mass / sigma0))
        defect = abs(mass / sigma0 - n)
        if defect > max_rounding_defect:
            raise InconsistencyError(
                f"ray near {math.degrees(ang):.1f} deg has angular mass "
                f"{mass / sigma0:.3f} line tensions, not close to an integer"
            )
        if n == 0:
            continue
        m11 = float(dist.t11[idxs].sum())
        m12 = float(dist.t12[idxs].sum())
        m22 = float(dist.t22[idxs].sum())
        tr = m11 + m22
        tau = np.array([[m11, m12], [m12, m22]]) / tr
        mass2 = float(dist.a2[idxs].sum() * dth)
        equi = mass / (2.0 * mass2) if mass2 > 0 else math.inf
        rays.append(
            Ray(
                angle=ang,
                density=mass,
                n=n,
                rounding_defect=defect,
                tau=tau,
                equipartition=equi,
            )
        )
    if not rays:
        raise DegenerateFieldError("no ray carries at least one line tension")
    rays.sort(key=lambda r: r.angle)
    return rays


def _voronoi_cells(centers: np.ndarray, nbins: int) -> List[np.ndarray]:
    """Bin-index cells around sorted peak angles, bounded by circular
    midpoints between neighbors. A single peak owns the whole circle."""
    k = centers.size
    if k == 1:
        return [np.arange(nbins)]
    dth = 2.0 * math.pi / nbins
    bounds = 0.5 * (centers[1:] + centers[:-1])
    seam = 0.5 * (centers[-1] + centers[0] + 2.0 * math.pi)
    if seam > math.pi:
        seam -= 2.0 * math.pi
    all_bounds = np.concatenate([[seam], bounds, [seam + 2.0 * math.pi]])
    bin_angles = -math.pi + dth * (np.arange(nbins) + 0.5)
    cells = []
    for m in range(k):
        lo, hi = all_bounds[m], all_bounds[m + 1]
        inside = ((bin_angles - lo) % (2.0 * math.pi)) < ((hi - lo) % (2.0 * math.pi) or 2.0 * math.pi)
        cells.append(np.nonzero(inside)[0])
    return cells


def _circular_runs(above: np.ndarray, merge_bins: int) -> List[np.ndarray]:
    """Index groups of True runs, merging runs separated by short gaps,
    treating the array as circular."""
    n = above.size
    idx = np.nonzero(above)[0]
    if idx.size == 0:
        return []
    gaps = np.diff(idx)
    breaks = np.nonzero(gaps > merge_bins + 1)[0]
    groups = np.split(idx, breaks + 1)
    # circular wrap: join last group to first when the gap across the seam
    # is small
    if len(groups) > 1:
        seam_gap = (groups[0][0] + n) - groups[-1][-1]
        if seam_gap <= merge_bins + 1:
            groups[0] = np.concatenate([groups[-1] - n, groups[0]])
            groups.pop()
    return [np.mod(g, n) for g in groups]


def balancing_defect(rays: Sequence[Ray]) -> float:
    """Euclidean norm of the count-weighted direction sum."""
    total = np.zeros(2)
    for r in rays:
        total += r.n * r.direction
    return float(np.hypot(total[0], total[1]))
