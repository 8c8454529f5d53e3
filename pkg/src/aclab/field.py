"""Uniform-grid scalar fields on masked planar domains.

Fields are sampled on a square tensor grid, samples[i, j] at (x_i, y_j). A boolean mask carves cones, annuli, or any connected region
out of the bounding rectangle; differential operators act on interior
points whose full stencil is active and shrink the mask accordingly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field as dfield
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError, GeometryError
from .potentials import Potential


@dataclass(frozen=True)
class Grid2D:
    """Geometry of a uniform grid: origin corner, spacing, point counts."""

    origin: Tuple[float, float]
    h: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.h <= 0:
            raise ConfigurationError("grid spacing must be positive")
        if self.nx < 8 or self.ny < 8:
            raise ConfigurationError("grid needs at least 8 points per side")

    @property
    def xs(self) -> np.ndarray:
        return self.origin[0] + self.h * np.arange(self.nx)

    @property
    def ys(self) -> np.ndarray:
        return self.origin[1] + self.h * np.arange(self.ny)

    @property
    def extent(self) -> Tuple[float, float, float, float]:
        return (
            self.origin[0],
            self.origin[0] + self.h * (self.nx - 1),
            self.origin[1],
            self.origin[1] + self.h * (self.ny - 1),
        )

    def meshgrid(self):
        return np.meshgrid(self.xs, self.ys, indexing="ij")


def grid_from_extent(extent, h: float) -> Grid2D:
    """Grid covering [x0, x1] x [y0, y1] with spacing as close to h as fits."""
    (x0, x1), (y0, y1) = extent
    if x1 <= x0 or y1 <= y0:
        raise ConfigurationError("extent must have positive side lengths")
    nx = int(round((x1 - x0) / h)) + 1
    ny = int(round((y1 - y0) / h)) + 1
    hx = (x1 - x0) / (nx - 1)
    hy = (y1 - y0) / (ny - 1)
    if abs(hx - hy) > 1e-12 * max(abs(hx), abs(hy)):
        raise ConfigurationError(
            f"extent {extent} is not commensurate with a square grid of step {h}"
        )
    return Grid2D(origin=(x0, y0), h=hx, nx=nx, ny=ny)


@dataclass
class Field2D:
    grid: Grid2D
    samples: np.ndarray
    mask: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.shape != (self.grid.nx, self.grid.ny):
            raise ConfigurationError(
                f"samples shape {self.samples.shape} does not match grid "
                f"({self.grid.nx}, {self.grid.ny})"
            )
        if self.mask is None:
            self.mask = np.ones(self.samples.shape, dtype=bool)
        else:
            self.mask = np.asarray(self.mask, dtype=bool)
            if self.mask.shape != self.samples.shape:
                raise ConfigurationError("mask shape does not match samples")

    def validate(self):
        """Check the active set is nonempty and 4-connected."""
        if not self.mask.any():
            raise ConfigurationError("field has no active points")
        structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
        _, ncomp = ndimage.label(self.mask, structure=structure)
        if ncomp != 1:
            raise ConfigurationError(f"active region has {ncomp} components, need 1")
        return self

    def copy(self) -> "Field2D":
        return Field2D(self.grid, self.samples.copy(), self.mask.copy())

    def interior_mask(self) -> np.ndarray:
        """Active points whose 4 neighbors are all active (array edges excluded)."""
        m = self.mask
        out = np.zeros_like(m)
        out[1:-1, 1:-1] = (
            m[1:-1, 1:-1]
            & m[:-2, 1:-1]
            & m[2:, 1:-1]
            & m[1:-1, :-2]
            & m[1:-1, 2:]
        )
        return out

    def frontier_mask(self) -> np.ndarray:
        """Active points that are not interior."""
        return self.mask & ~self.interior_mask()

    def values_at(self, pts: np.ndarray) -> np.ndarray:
        """Bilinear interpolation at (m, 2) points; all four cell corners must be active."""
        pts = np.asarray(pts, dtype=float)
        x0, y0 = self.grid.origin
        h = self.grid.h
        fx = (pts[:, 0] - x0) / h
        fy = (pts[:, 1] - y0) / h
        ix = np.floor(fx).astype(int)
        iy = np.floor(fy).astype(int)
        if (ix < 0).any() or (ix > self.grid.nx - 2).any() or (iy < 0).any() or (
            iy > self.grid.ny - 2
        ).any():
            raise GeometryError("interpolation point outside the grid")
        corners_active = (
            self.mask[ix, iy]
            & self.mask[ix + 1, iy]
            & self.mask[ix, iy + 1]
            & self.mask[ix + 1, iy + 1]
        )
        if not corners_active.all():
            raise GeometryError("interpolation point touches inactive cells")
        tx = fx - ix
        ty = fy - iy
        s = self.samples
        return (
            s[ix, iy] * (1 - tx) * (1 - ty)
            + s[ix + 1, iy] * tx * (1 - ty)
            + s[ix, iy + 1] * (1 - tx) * ty
            + s[ix + 1, iy + 1] * tx * ty
        )


def field_from_function(grid: Grid2D, fn: Callable, mask: Optional[np.ndarray] = None) -> Field2D:
    X, Y = grid.meshgrid()
    f = Field2D(grid, np.asarray(fn(X, Y), dtype=float), mask)
    return f.validate()


def laplacian(f: Field2D) -> Field2D:
    """Five-point Laplacian on interior active points; exact on quadratics."""
    interior = f.interior_mask()
    if interior.sum() == 0:
        raise GeometryError("no interior points: active region thinner than 3x3")
    u = f.samples
    h2 = f.grid.h ** 2
    out = np.zeros_like(u)
    out[1:-1, 1:-1] = (
        u[:-2, 1:-1] + u[2:, 1:-1] + u[1:-1, :-2] + u[1:-1, 2:] - 4.0 * u[1:-1, 1:-1]
    ) / h2
    out[~interior] = 0.0
    return Field2D(f.grid, out, interior)


def gradient(f: Field2D) -> Tuple[Field2D, Field2D]:
    """Central-difference gradient on interior active points; exact on affine fields."""
    interior = f.interior_mask()
    if interior.sum() == 0:
        raise GeometryError("no interior points: active region thinner than 3x3")
    u = f.samples
    two_h = 2.0 * f.grid.h
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[1:-1, 1:-1] = (u[2:, 1:-1] - u[:-2, 1:-1]) / two_h
    gy[1:-1, 1:-1] = (u[1:-1, 2:] - u[1:-1, :-2]) / two_h
    gx[~interior] = 0.0
    gy[~interior] = 0.0
    return Field2D(f.grid, gx, interior), Field2D(f.grid, gy, interior)


def energy_density(f: Field2D, p: Potential) -> Field2D:
    """Pointwise half |grad f|^2 + W(f) on the gradient's interior mask."""
    gx, gy = gradient(f)
    dens = 0.5 * (gx.samples ** 2 + gy.samples ** 2) + np.asarray(
        p.w(f.samples), dtype=float
    )
    dens[~gx.mask] = 0.0
    return Field2D(f.grid, dens, gx.mask.copy())


@dataclass
class Curve:
    """Ordered polyline extracted from a level set."""

    points: np.ndarray
    closed: bool

    def length(self) -> float:
        d = np.diff(self.points, axis=0)
        return float(np.sqrt((d ** 2).sum(axis=1)).sum())

    def as_graph(self, grid: Grid2D):
        """Return (x, y) arrays when the curve is a single-valued graph over
        grid columns, else None. Single-valued means the curve meets each
        column in one cluster of height at most one cell."""
        pts = self.points
        h = grid.h
        cols = np.round((pts[:, 0] - grid.origin[0]) / h).astype(int)
        xs_out: List[float] = []
        ys_out: List[float] = []
        for c in np.unique(cols):
            sel = cols == c
            ys = pts[sel, 1]
            if ys.max() - ys.min() > 1.5 * h:
                return None
            xs_out.append(grid.origin[0] + h * c)
            ys_out.append(float(ys.mean()))
        order = np.argsort(xs_out)
        return np.asarray(xs_out)[order], np.asarray(ys_out)[order]


# marching squares edge ids: 0 bottom, 1 right, 2 top, 3 left (per cell)

_SEG_TABLE = {
    1: [(3, 0)], 2: [(0, 1)], 4: [(1, 2)], 8: [(2, 3)],
    3: [(3, 1)], 6: [(0, 2)], 12: [(3, 1)], 9: [(0, 2)],
    7: [(3, 2)], 11: [(1, 2)], 13: [(0, 1)], 14: [(3, 0)],
}
# corners: bit0 (i,j), bit1 (i+1,j), bit2 (i+1,j+1), bit3 (i,j+1)


def zero_contours(f: Field2D, level: float = 0.0) -> List[Curve]:
    """Marching-squares extraction of the level set {f = level}.

    Crossings are linearly interpolated on cell edges; ambiguous saddle
    cells are resolved by the sign of the cell-center average. Curves are
    split wherever they meet the mask frontier or the array edge, and are
    returned in a deterministic order.
    """
    u = f.samples - level
    m = f.mask
    nx, ny = u.shape
    xs = f.grid.xs
    ys = f.grid.ys
    h = f.grid.h

    pos = u >= 0.0
    cell_ok = m[:-1, :-1] & m[1:, :-1] & m[:-1, 1:] & m[1:, 1:]
    code = (
        pos[:-1, :-1].astype(np.int8)
        + 2 * pos[1:, :-1]
        + 4 * pos[1:, 1:]
        + 8 * pos[:-1, 1:]
    )
    active = cell_ok & (code != 0) & (code != 15)
    ci, cj = np.nonzero(active)

    n_h = (nx - 1) * ny

    def h_id(i, j):
        return j * (nx - 1) + i

    def v_id(i, j):
        return n_h + j * nx + i

    def h_point(i, j):
        a = u[i, j]
        b = u[i + 1, j]
        t = a / (a - b)
        return (xs[i] + t * h, ys[j])

    def v_point(i, j):
        a = u[i, j]
        b = u[i, j + 1]
        t = a / (a - b)
        return (xs[i], ys[j] + t * h)

    points = {}
    adj: dict = {}

    def link(e1, e2):
        adj.setdefault(e1, []).append(e2)
        adj.setdefault(e2, []).append(e1)

    for i, j in zip(ci, cj):
        c = int(code[i, j])
        if c in (5, 10):
            center = u[i, j] + u[i + 1, j] + u[i, j + 1] + u[i + 1, j + 1]
            if c == 5:
                segs = [(0, 1), (2, 3)] if center >= 0 else [(3, 0), (1, 2)]
            else:
                segs = [(3, 0), (1, 2)] if center >= 0 else [(0, 1), (2, 3)]
        else:
            segs = _SEG_TABLE[c]
        ids = (h_id(i, j), v_id(i + 1, j), h_id(i, j + 1), v_id(i, j))
        for ea, eb in segs:
            for e in (ea, eb):
                gid = ids[e]
                if gid not in points:
                    if e == 0:
                        points[gid] = h_point(i, j)
                    elif e == 2:
                        points[gid] = h_point(i, j + 1)
                    elif e == 1:
                        points[gid] = v_point(i + 1, j)
                    else:
                        points[gid] = v_point(i, j)
            link(ids[ea], ids[eb])

    visited = set()
    curves: List[Curve] = []

    def walk(start, first):
        chain = [start, first]
        visited.add(start)
        visited.add(first)
        while True:
            nbrs = [e for e in adj[chain[-1]] if e not in visited]
            if not nbrs:
                break
            nxt = min(nbrs)
            chain.append(nxt)
            visited.add(nxt)
        return chain

    endpoints = sorted(e for e, nb in adj.items() if len(nb) == 1)
    for e in endpoints:
        if e in visited:
            continue
        cand = [n for n in adj[e] if n not in visited]
        if not cand:
            visited.add(e)
            continue
        chain = walk(e, min(cand))
        curves.append(_make_curve(chain, points, closed=False))

    for e in sorted(adj):
        if e in visited:
            continue
        nxt = min(adj[e])
        chain = walk(e, nxt)
        closed = e in adj[chain[-1]]
        curves.append(_make_curve(chain, points, closed=closed))

    return curves


def _make_curve(chain, points, closed) -> Curve:
    pts = np.asarray([points[e] for e in chain], dtype=float)
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = (np.abs(np.diff(pts, axis=0)).sum(axis=1)) > 1e-14
    pts = pts[keep]
    if closed and len(pts) > 1:
        pts = np.vstack([pts, pts[:1]])
    return Curve(points=pts, closed=closed)


def rectangle_mask(grid: Grid2D) -> np.ndarray:
    return np.ones((grid.nx, grid.ny), dtype=bool)


def crop(f: Field2D, extent) -> Field2D:
    """Restrict a field to the grid points inside a subrectangle."""
    (x0, x1), (y0, y1) = extent
    xs = f.grid.xs
    ys = f.grid.ys
    isel = np.nonzero((xs >= x0 - 1e-12) & (xs <= x1 + 1e-12))[0]
    jsel = np.nonzero((ys >= y0 - 1e-12) & (ys <= y1 + 1e-12))[0]
    if isel.size < 8 or jsel.size < 8:
        raise GeometryError("crop region holds fewer than 8 grid points per side")
    sub = f.samples[np.ix_(isel, jsel)]
    submask = f.mask[np.ix_(isel, jsel)]
    grid = Grid2D(
        origin=(float(xs[isel[0]]), float(ys[jsel[0]])),
        h=f.grid.h,
        nx=isel.size,
        ny=jsel.size,
    )
    return Field2D(grid, sub.copy(), submask.copy()).validate()


def cone_mask(grid: Grid2D, apex_x: float, slope: float, axis_y: float = 0.0) -> np.ndarray:
    """Mask of the cone {x > apex_x, |y - axis_y| < slope (x - apex_x)}."""
    if slope <= 0:
        raise ConfigurationError("cone slope must be positive")
    X, Y = grid.meshgrid()
    return (X > apex_x) & (np.abs(Y - axis_y) < slope * (X - apex_x))


def save_field_csv(f: Field2D, path: str):
    """Dump active samples as full-precision x,y,u rows."""
    xs = f.grid.xs
    ys = f.grid.ys
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "y", "u"])
        ii, jj = np.nonzero(f.mask)
        for i, j in zip(ii, jj):
            wr.writerow([f"{xs[i]:.17g}", f"{ys[j]:.17g}", f"{f.samples[i, j]:.17g}"])


def save_curves_csv(curves: Sequence[Curve], path: str):
    """Dump extracted curves as curve_id,x,y rows (ids in list order)."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["curve_id", "x", "y"])
        for cid, c in enumerate(curves):
            for x, y in c.points:
                wr.writerow([str(cid), f"{x:.17g}", f"{y:.17g}"])


def load_field_csv(path: str) -> Field2D:
    """Rebuild a field from x,y,u rows; grid geometry is inferred."""
    xs: List[float] = []
    ys: List[float] = []
    us: List[float] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header[:3]] != ["x", "y", "u"]:
            raise ConfigurationError(f"{path}: expected header 'x,y,u'")
        for row in reader:
            if not row:
                continue
            xs.append(float(row[0]))
            ys.append(float(row[1]))
            us.append(float(row[2]))
    if not xs:
        raise ConfigurationError(f"{path}: no samples")
    ux = np.unique(np.asarray(xs))
    uy = np.unique(np.asarray(ys))
    hx = np.diff(ux).min() if ux.size > 1 else None
    hy = np.diff(uy).min() if uy.size > 1 else None
    if hx is None or hy is None:
        raise ConfigurationError(f"{path}: degenerate sample set")

    def snap(v: float) -> float:
        # Written coordinates are exact, but the smallest pairwise gap can
        # miss the true spacing by an ulp. Snapping to 12 significant
        # digits restores decimal steps bit for bit, so re-analyzing a
        # dump reproduces in-process numbers exactly.
        s = float(f"{v:.12g}")
        return s if abs(s - v) <= 1e-9 * abs(v) else float(v)

    hx = snap(float(hx))
    hy = snap(float(hy))
    h = min(hx, hy)
    if abs(hx - hy) > 1e-9 * h:
        raise ConfigurationError(f"{path}: anisotropic spacing {hx} vs {hy}")
    nx = int(round((ux[-1] - ux[0]) / h)) + 1
    ny = int(round((uy[-1] - uy[0]) / h)) + 1
    grid = Grid2D(origin=(float(ux[0]), float(uy[0])), h=float(h), nx=nx, ny=ny)
    samples = np.zeros((nx, ny))
    mask = np.zeros((nx, ny), dtype=bool)
    i = np.round((np.asarray(xs) - ux[0]) / h).astype(int)
    j = np.round((np.asarray(ys) - uy[0]) / h).astype(int)
    samples[i, j] = us
    mask[i, j] = True
    return Field2D(grid, samples, mask).validate()
