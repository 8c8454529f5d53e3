"""Convex stress potential of a stationary field.

A stationary field carries a hidden convex function U whose Hessian is
assembled pointwise from the field's gradient and well density:

    U_xx = ux^2 - uy^2 + 2 W(u),   U_xy = 2 ux uy,
    U_yy = uy^2 - ux^2 + 2 W(u).

Path integration recovers grad U and then U itself; the maximal defect
of plaquette circulations measures how far the assembled fields are
from an exact Hessian (it vanishes with the equation residual). U grows
linearly at infinity and its level sets flatten into a convex polygon
whose corner gradient jumps encode interface directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.spatial import ConvexHull

from .errors import (
    ConfigurationError,
    DegenerateFieldError,
    GeometryError,
    StationarityError,
)
from .field import Curve, Field2D, gradient, laplacian, zero_contours
from .potentials import Potential
from .solver import residual

RESIDUAL_GATE = 1e-3


def hessian_fields(f: Field2D, p: Potential):
    """Assemble (U_xx, U_xy, U_yy) on the gradient's interior mask."""
    gx, gy = gradient(f)
    w = np.asarray(p.w(f.samples), dtype=float)
    uxx = gx.samples ** 2 - gy.samples ** 2 + 2.0 * w
    uxy = 2.0 * gx.samples * gy.samples
    uyy = -(gx.samples ** 2 - gy.samples ** 2) + 2.0 * w
    m = gx.mask
    for arr in (uxx, uxy, uyy):
        arr[~m] = 0.0
    return (
        Field2D(f.grid, uxx, m.copy()),
        Field2D(f.grid, uxy, m.copy()),
        Field2D(f.grid, uyy, m.copy()),
    )


@dataclass
class StressPotential:
    potential_field: Field2D  # recovered U, normalized to vanish at the center
    grad_x: Field2D  # recovered dU/dx
    grad_y: Field2D  # recovered dU/dy
    center_index: Tuple[int, int]
    consistency_defect: float  # max plaquette circulation over h^2
    trace_residual: float  # max |lap U - 4 W(u)| on the recovered region
    convexity_margin: float  # min eigenvalue of the assembled Hessian
    linear_growth_const: float  # max |grad U| over the recovered region
    residual_sup: float  # equation residual of the input field


def stress_potential(
    f: Field2D,
    p: Potential,
    center: Tuple[float, float] = (0.0, 0.0),
    residual_gate: float = RESIDUAL_GATE,
) -> StressPotential:
    """Recover U from the assembled Hessian fields by path integration.

    The input must be stationary up to residual_gate in the sup norm,
    and its active region must be the full grid rectangle: recovery
    integrates along grid rows and columns from the point nearest to
    the requested center.
    """
    if not f.mask.all():
        raise GeometryError("stress recovery needs a full rectangular grid")
    res = residual(f, p)
    res_sup = float(np.abs(res.samples).max())
    if res_sup > residual_gate:
        raise StationarityError(
            f"field residual {res_sup:.3e} exceeds the gate {residual_gate:.1e}; "
            "the Hessian identities presume a stationary field"
        )

    fxx, fxy, fyy = hessian_fields(f, p)
    # work on the interior subrectangle where the Hessian fields live
    uxx = fxx.samples[1:-1, 1:-1]
    uxy = fxy.samples[1:-1, 1:-1]
    uyy = fyy.samples[1:-1, 1:-1]
    h = f.grid.h
    xs = f.grid.xs[1:-1]
    ys = f.grid.ys[1:-1]

    defect = max(_plaquette_defect(uxx, uxy, h), _plaquette_defect(uxy, uyy, h))

    ic = int(np.argmin(np.abs(xs - center[0])))
    jc = int(np.argmin(np.abs(ys - center[1])))

    P = _integrate_rows_then_cols(uxx, uxy, h, ic, jc)
    Q = _integrate_rows_then_cols(uxy, uyy, h, ic, jc)
    U = _integrate_rows_then_cols(P, Q, h, ic, jc)

    grow = float(np.sqrt(P ** 2 + Q ** 2).max())

    # min Hessian eigenvalue has the closed form 2W - |grad u|^2
    gx, gy = gradient(f)
    lam = (
        2.0 * np.asarray(p.w(f.samples), dtype=float)
        - gx.samples ** 2
        - gy.samples ** 2
    )
    lam_min = float(lam[gx.mask].min())

    mask = np.zeros(f.samples.shape, dtype=bool)
    mask[1:-1, 1:-1] = True
    full = np.zeros(f.samples.shape)

    def lift(arr):
        out = full.copy()
        out[1:-1, 1:-1] = arr
        return Field2D(f.grid, out, mask.copy())

    Uf = lift(U)
    trace = _trace_residual(Uf, f, p)

    return StressPotential(
        potential_field=Uf,
        grad_x=lift(P),
        grad_y=lift(Q),
        center_index=(ic + 1, jc + 1),
        consistency_defect=defect,
        trace_residual=trace,
        convexity_margin=lam_min,
        linear_growth_const=grow,
        residual_sup=res_sup,
    )


def _plaquette_defect(a: np.ndarray, b: np.ndarray, h: float) -> float:
    """Max circulation of the vector field (a, b) around grid plaquettes,
    normalized by the cell area. Zero iff (a, b) is a discrete gradient."""
    circ = 0.5 * (
        (a[:-1, :-1] + a[1:, :-1])
        + (b[1:, :-1] + b[1:, 1:])
        - (a[:-1, 1:] + a[1:, 1:])
        - (b[:-1, :-1] + b[:-1, 1:])
    )
    return float(np.abs(circ).max() / h)


def _integrate_rows_then_cols(ax: np.ndarray, ay: np.ndarray, h: float, ic: int, jc: int) -> np.ndarray:
    """Antiderivative of the field (ax, ay): trapezoid along the row y=y_jc,
    then along each column, vanishing at (ic, jc)."""
    row = cumulative_trapezoid(ax[:, jc], dx=h, initial=0.0)
    row = row - row[ic]
    cols = cumulative_trapezoid(ay, dx=h, initial=0.0, axis=1)
    cols = cols - cols[:, jc][:, None]
    return row[:, None] + cols


def _trace_residual(Uf: Field2D, f: Field2D, p: Potential) -> float:
    lap = laplacian(Uf)
    target = 4.0 * np.asarray(p.w(f.samples), dtype=float)
    diff = np.abs(lap.samples - target)
    return float(diff[lap.mask].max())


@dataclass
class PolygonSide:
    anchor: np.ndarray  # a point on the fitted side line
    direction: np.ndarray  # unit direction along the side
    outward: np.ndarray  # unit outward normal
    length: float
    midpoint: np.ndarray
    on_frontier: bool


@dataclass
class PolygonVertex:
    """A corner of the level-set polygon, possibly pushed past the frontier.

    A vertex whose adjoining sides leave the computational window before
    meeting is kept with at_infinity=True: its ray direction is the outward
    normal of the clipped side and the gradient jump is still measured
    between the two straight sides flanking the clip.
    """

    position: Optional[np.ndarray]  # None for a vertex at infinity
    direction: np.ndarray  # unit ray from the integration center
    angle_deg: float  # interior angle between adjoining sides
    jump: Optional[np.ndarray]  # grad U difference across the vertex
    jump_magnitude: Optional[float]
    normal: Optional[np.ndarray]  # unit direction of the jump
    at_infinity: bool = False

    @property
    def direction_angle_deg(self) -> float:
        return math.degrees(math.atan2(self.direction[1], self.direction[0]))

    def jump_over(self, two_sigma0: float) -> Optional[float]:
        if self.jump_magnitude is None:
            return None
        return self.jump_magnitude / two_sigma0


@dataclass
class StressPolygon:
    level: float
    vertices: List[PolygonVertex]
    sides: List[PolygonSide]
    open_directions: List[np.ndarray]  # outward normals of frontier sides


def stress_polygon(
    sp: StressPotential,
    level: float,
    angle_tol_deg: float = 10.0,
    min_side_fraction: float = 0.05,
) -> StressPolygon:
    """Extract the convex polygon shape of the level set {U = level}.

    The level curve is traced by marching squares, its convex hull is
    segmented into straight sides (runs of nearly parallel hull edges),
    and vertices are recovered as intersections of adjacent side lines.
    Gradient jumps are sampled at the midpoints of the two sides meeting
    at each vertex. Sides hugging the domain frontier are reported as
    open directions instead of carrying jumps.
    """
    Uf = sp.potential_field
    umax = float(Uf.samples[Uf.mask].max())
    if not 0.0 < level < umax:
        raise ConfigurationError(
            f"level {level} outside the range (0, {umax:.3g}) of the potential"
        )
    curves = zero_contours(Uf, level=level)
    pts = np.vstack([c.points for c in curves if len(c.points) >= 2])
    if len(pts) < 8:
        raise DegenerateFieldError("level set too small to shape a polygon")

    hull = ConvexHull(pts)
    hp = pts[hull.vertices]  # counterclockwise

    x0, x1, y0, y1 = Uf.grid.extent
    h = Uf.grid.h
    margin = 2.5 * h
    # frontier of the recovered region is one cell inside the grid extent
    fx0, fx1, fy0, fy1 = x0 + h, x1 - h, y0 + h, y1 - h

    sides = _segment_hull(hp, angle_tol_deg, min_side_fraction)
    if len(sides) < 2:
        raise DegenerateFieldError("level set shows fewer than two straight sides")

    for s in sides:
        s.on_frontier = _side_on_frontier(s, fx0, fx1, fy0, fy1, margin)
    if all(s.on_frontier for s in sides):
        raise GeometryError(
            "every side of the level set hugs the domain frontier: "
            "enlarge the domain or lower the level"
        )

    def grad_at(pt):
        q = np.asarray([pt])
        return np.array(
            [sp.grad_x.values_at(q)[0], sp.grad_y.values_at(q)[0]]
        )

    ic, jc = sp.center_index
    center = np.array([Uf.grid.xs[ic], Uf.grid.ys[jc]])

    def interior_angle(a: PolygonSide, b: PolygonSide) -> float:
        cosang = abs(float(np.dot(a.direction, b.direction)))
        return 180.0 - math.degrees(math.acos(min(1.0, cosang)))

    def wall_jump(a: PolygonSide, b: PolygonSide):
        g_prev = grad_at(a.midpoint)
        g_next = grad_at(b.midpoint)
        jump = g_next - g_prev
        mag = float(np.hypot(jump[0], jump[1]))
        normal = jump / mag if mag > 0 else None
        return jump, mag, normal

    vertices: List[PolygonVertex] = []
    k = len(sides)
    for m in range(k):
        s_prev = sides[m]
        s_next = sides[(m + 1) % k]
        if s_prev.on_frontier or s_next.on_frontier:
            continue
        pos = _line_intersection(s_prev, s_next)
        jump, mag, normal = wall_jump(s_prev, s_next)
        if pos is None:
            # Adjoining sides run parallel: their meeting point receded to
            # infinity along the bisector of the two run directions.
            ray = s_prev.direction - s_next.direction
            nrm = float(np.hypot(ray[0], ray[1]))
            if nrm == 0.0:
                continue
            vertices.append(
                PolygonVertex(
                    position=None,
                    direction=ray / nrm,
                    angle_deg=interior_angle(s_prev, s_next),
                    jump=jump,
                    jump_magnitude=mag,
                    normal=normal,
                    at_infinity=True,
                )
            )
            continue
        ray = pos - center
        nrm = float(np.hypot(ray[0], ray[1]))
        if nrm == 0.0:
            continue
        clipped = not (fx0 <= pos[0] <= fx1 and fy0 <= pos[1] <= fy1)
        vertices.append(
            PolygonVertex(
                position=None if clipped else pos,
                direction=ray / nrm,
                angle_deg=interior_angle(s_prev, s_next),
                jump=jump,
                jump_magnitude=mag,
                normal=normal,
                at_infinity=clipped,
            )
        )
    # A side hugging the frontier is itself a clipped vertex: the window cut
    # the corner off, so the ray is the side's outward normal and the jump is
    # measured between the two straight sides flanking the cut.
    for m in range(k):
        if not sides[m].on_frontier:
            continue
        s_prev = sides[(m - 1) % k]
        s_next = sides[(m + 1) % k]
        jump = None
        mag = None
        normal = None
        if not (s_prev.on_frontier or s_next.on_frontier) and k > 2:
            jump, mag, normal = wall_jump(s_prev, s_next)
        vertices.append(
            PolygonVertex(
                position=None,
                direction=sides[m].outward,
                angle_deg=interior_angle(s_prev, s_next),
                jump=jump,
                jump_magnitude=mag,
                normal=normal,
                at_infinity=True,
            )
        )
    open_dirs = [v.direction for v in vertices if v.at_infinity]
    return StressPolygon(
        level=float(level), vertices=vertices, sides=sides, open_directions=open_dirs
    )


class _Run:
    __slots__ = ("vec", "length", "points")

    def __init__(self, vec, length, points):
        self.vec = vec
        self.length = length
        self.points = points  # (m, 2) hull points along the run

    @property
    def direction(self):
        return self.vec / np.hypot(self.vec[0], self.vec[1])

    def absorb(self, other: "_Run"):
        self.vec = self.vec + other.vec
        self.length += other.length
        self.points = np.vstack([self.points, other.points])


def _segment_hull(hp: np.ndarray, angle_tol_deg: float, min_side_fraction: float) -> List[PolygonSide]:
    """Group consecutive hull edges into straight sides.

    Jitter from the contour tracing can break a straight side into
    several direction runs, so after the initial greedy grouping,
    adjacent runs with agreeing directions are merged and short runs
    (rounded corners, blips) are dropped, until stable.
    """
    edges = np.roll(hp, -1, axis=0) - hp
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    keep = lengths > 1e-12
    hp = hp[keep]
    edges = edges[keep]
    lengths = lengths[keep]
    k = len(hp)
    dirs = edges / lengths[:, None]
    cos_tol = math.cos(math.radians(angle_tol_deg))

    start = 0
    for i in range(k):
        if np.dot(dirs[i - 1], dirs[i]) < cos_tol:
            start = i
            break

    runs: List[_Run] = []
    for step in range(k):
        i = (start + step) % k
        r = _Run(dirs[i] * lengths[i], float(lengths[i]), np.array([hp[i], hp[(i + 1) % k]]))
        if runs and float(np.dot(dirs[i], runs[-1].direction)) >= cos_tol:
            runs[-1].absorb(r)
        else:
            runs.append(r)

    perimeter = float(lengths.sum())
    min_len = min_side_fraction * perimeter
    changed = True
    while changed and len(runs) > 1:
        changed = False
        m = 0
        while m < len(runs) and len(runs) > 1:
            nxt = runs[(m + 1) % len(runs)]
            cur = runs[m]
            if nxt is not cur and float(np.dot(cur.direction, nxt.direction)) >= cos_tol:
                cur.absorb(nxt)
                runs.remove(nxt)
                changed = True
            else:
                m += 1
        kept = [r for r in runs if r.length >= min_len]
        if len(kept) != len(runs):
            changed = True
            runs = kept

    sides: List[PolygonSide] = []
    for r in runs:
        d, anchor = _fit_side_line(r)
        sides.append(
            PolygonSide(
                anchor=anchor,
                direction=d,
                outward=np.array([d[1], -d[0]]),
                length=r.length,
                midpoint=anchor,
                on_frontier=False,
            )
        )
    return sides


def _fit_side_line(r: "_Run") -> Tuple[np.ndarray, np.ndarray]:
    """Total-least-squares line through the central portion of a run.

    The ends of a run pick up points from the rounded corners of the
    finite-level set, which would tilt a line through the endpoints, so
    a quarter of the points is trimmed at each end before fitting.
    """
    pts = r.points
    m = len(pts)
    trim = m // 4
    core = pts[trim:m - trim] if m - 2 * trim >= 2 else pts
    centroid = core.mean(axis=0)
    centered = core - centroid
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    d = vt[0]
    if float(np.dot(d, r.vec)) < 0:
        d = -d
    return d, centroid


def _side_on_frontier(s: PolygonSide, fx0, fx1, fy0, fy1, margin) -> bool:
    ends = [s.midpoint - 0.5 * s.length * s.direction,
            s.midpoint + 0.5 * s.length * s.direction]
    for edge_val, coord in ((fx0, 0), (fx1, 0), (fy0, 1), (fy1, 1)):
        if all(abs(e[coord] - edge_val) < margin for e in ends):
            return True
    return False


def _line_intersection(s1: PolygonSide, s2: PolygonSide) -> Optional[np.ndarray]:
    d1, d2 = s1.direction, s2.direction
    cross = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(cross) < math.sin(math.radians(5.0)):
        return None
    dp = s2.anchor - s1.anchor
    t = (dp[0] * d2[1] - dp[1] * d2[0]) / cross
    return s1.anchor + t * d1
