"""Dirichlet solver for the stationary semilinear equation lap(u) = W'(u).

An ansatz field supplies both the initial guess and the boundary trace:
frontier samples are held fixed while interior samples are driven to a
zero of the discrete residual. Far-from-solution guesses (kinked glued
profiles) are first smoothed by a semi-implicit gradient flow, after
which a damped Newton iteration takes over; smooth guesses skip the flow
entirely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .errors import (
    ConfigurationError,
    LinearSolveError,
    NonConvergenceError,
    OutOfBasinError,
)
from .field import Field2D, Grid2D, field_from_function
from .potentials import Potential
from .profile1d import Profile1D, multilayer

FLOW_THRESHOLD = 0.5
BACKTRACK_FLOOR = 2.0 ** -20


def assemble_laplacian(f: Field2D):
    """Dirichlet Laplacian over the interior of the field's mask.

    Returns (A, c, index) where A is the interior-to-interior coupling
    (csc), c collects frontier contributions scaled by 1/h^2 using the
    field's current frontier samples, and index maps grid points to
    unknown slots (-1 outside).
    """
    interior = f.interior_mask()
    n = int(interior.sum())
    if n == 0:
        raise ConfigurationError("no interior points to solve for")
    idx = -np.ones(f.samples.shape, dtype=np.int64)
    ii, jj = np.nonzero(interior)
    idx[ii, jj] = np.arange(n)
    inv_h2 = 1.0 / f.grid.h ** 2

    rows = [np.arange(n)]
    cols = [np.arange(n)]
    vals = [np.full(n, -4.0 * inv_h2)]
    c = np.zeros(n)
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        ni = ii + di
        nj = jj + dj
        nbr = idx[ni, nj]
        inside = nbr >= 0
        rows.append(idx[ii, jj][inside])
        cols.append(nbr[inside])
        vals.append(np.full(int(inside.sum()), inv_h2))
        out = ~inside
        np.add.at(c, idx[ii, jj][out], f.samples[ni[out], nj[out]] * inv_h2)
    A = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsc()
    return A, c, idx


def residual(f: Field2D, p: Potential) -> Field2D:
    """Pointwise lap(u) - W'(u) on interior active points."""
    from .field import laplacian

    lap = laplacian(f)
    out = lap.samples - np.asarray(p.dw(f.samples), dtype=float)
    out[~lap.mask] = 0.0
    return Field2D(f.grid, out, lap.mask)


def discrete_energy(f: Field2D, p: Potential) -> float:
    """Lattice energy: edge-difference quadratic term plus W at active points.

    Frontier contributions are included, so differences of this quantity
    under interior-only updates track the variational decrease exactly.
    """
    u = f.samples
    m = f.mask
    h = f.grid.h
    ex = m[:-1, :] & m[1:, :]
    ey = m[:, :-1] & m[:, 1:]
    dx = (u[1:, :] - u[:-1, :])[ex]
    dy = (u[:, 1:] - u[:, :-1])[ey]
    grad_term = 0.5 * (np.sum(dx ** 2) + np.sum(dy ** 2))
    well_term = float(np.sum(np.asarray(p.w(u[m]), dtype=float))) * h ** 2
    return float(grad_term + well_term)


@dataclass
class Solution:
    field: Field2D
    residual_sup: float
    newton_iters: int
    flow_steps: int
    energy: float
    # Discrete energy sampled along the descent: the ansatz value, one
    # entry per smoothing-flow step, then one per accepted Newton step.
    energy_history: Tuple[float, ...] = ()


def solve_dirichlet(
    p: Potential,
    ansatz: Field2D,
    tol: float = 1e-10,
    max_newton: int = 30,
    max_flow: int = 400,
    tau: Optional[float] = None,
    flow_threshold: float = FLOW_THRESHOLD,
) -> Solution:
    """Solve lap(u) = W'(u) with Dirichlet data taken from the ansatz frontier.

    Raises NonConvergenceError when the Newton phase cannot reach the
    requested residual within max_newton steps.
    """
    if tol <= 0:
        raise ConfigurationError("tol must be positive")
    f = ansatz.copy().validate()
    A, c, idx = assemble_laplacian(f)
    interior = idx >= 0
    ii, jj = np.nonzero(interior)
    u = f.samples[ii, jj].copy()

    def res_vec(v):
        return A @ v + c - np.asarray(p.dw(v), dtype=float)

    def put(v):
        f.samples[ii, jj] = v

    r = res_vec(u)
    res_sup = float(np.abs(r).max())
    history = [discrete_energy(f, p)]

    step = 2.0 * f.grid.h ** 2 if tau is None else float(tau)
    if step <= 0:
        raise ConfigurationError("tau must be positive")
    flow_lu = None

    def flow_factor():
        nonlocal flow_lu
        if flow_lu is None:
            n = A.shape[0]
            M = (sparse.identity(n, format="csc") - step * A).tocsc()
            try:
                flow_lu = splu(M)
            except RuntimeError as exc:
                raise LinearSolveError(f"flow operator factorization failed: {exc}")
        return flow_lu

    flow_steps = 0
    if res_sup > flow_threshold and max_flow > 0:
        lu = flow_factor()
        while res_sup > flow_threshold and flow_steps < max_flow:
            u = lu.solve(u + step * (c - np.asarray(p.dw(u), dtype=float)))
            flow_steps += 1
            r = res_vec(u)
            res_sup = float(np.abs(r).max())
            put(u)
            history.append(discrete_energy(f, p))

    newton_iters = 0
    stagnant = 0
    put(u)
    energy = history[-1]
    while res_sup > tol:
        if newton_iters >= max_newton:
            raise NonConvergenceError(
                f"Newton stalled at residual {res_sup:.3e} after "
                f"{newton_iters} steps (flow steps: {flow_steps})"
            )
        if stagnant >= 3:
            raise NonConvergenceError(
                f"residual stagnated at {res_sup:.3e} over three Newton "
                f"steps; tol {tol:.1e} likely sits below the rounding floor "
                "of this grid"
            )
        J = (A - sparse.diags(np.asarray(p.d2w(u), dtype=float))).tocsc()
        try:
            lu = splu(J)
        except RuntimeError as exc:
            raise LinearSolveError(f"Newton factorization failed: {exc}")
        delta = lu.solve(r)
        slack = 1e-12 * (1.0 + abs(energy))
        s = 1.0
        accepted = False
        while s >= BACKTRACK_FLOOR:
            trial = u - s * delta
            put(trial)
            e_trial = discrete_energy(f, p)
            if e_trial <= energy + slack:
                u = trial
                energy = e_trial
                history.append(energy)
                accepted = True
                break
            s *= 0.5
        if not accepted:
            # Near an energy saddle the Newton direction may climb; accept
            # the full step when it still contracts the residual.
            trial = u - delta
            r_trial = res_vec(trial)
            if np.abs(r_trial).max() <= 0.9 * res_sup:
                u = trial
                put(u)
                energy = discrete_energy(f, p)
                history.append(energy)
                accepted = True
        if not accepted:
            # Outside any Newton basin. Spend remaining flow budget driving
            # the state downhill until the residual halves, then retry.
            if flow_steps >= max_flow:
                put(u)
                raise OutOfBasinError(
                    f"line search failed at residual {res_sup:.3e} with the "
                    f"flow budget exhausted ({flow_steps} steps); the guess "
                    "may not sit in the basin of any stationary state"
                )
            lu_f = flow_factor()
            target = 0.5 * res_sup
            while res_sup > target and flow_steps < max_flow:
                u = lu_f.solve(u + step * (c - np.asarray(p.dw(u), dtype=float)))
                flow_steps += 1
                r = res_vec(u)
                res_sup = float(np.abs(r).max())
            put(u)
            energy = discrete_energy(f, p)
            history.append(energy)
            continue
        r = res_vec(u)
        prev = res_sup
        res_sup = float(np.abs(r).max())
        stagnant = stagnant + 1 if res_sup > 0.5 * prev else 0
        newton_iters += 1

    put(u)
    return Solution(
        field=f,
        residual_sup=res_sup,
        newton_iters=newton_iters,
        flow_steps=flow_steps,
        energy=discrete_energy(f, p),
        energy_history=tuple(history),
    )


# ---------------------------------------------------------------------------
# ansatz builders


def layer_ansatz(prof: Profile1D, grid: Grid2D, ts: Sequence[float]) -> Field2D:
    """Horizontal interfaces at heights ts, glued with alternating signs."""
    ts = np.asarray(ts, dtype=float)
    ys = grid.ys
    column = multilayer(prof, ts, ys)
    samples = np.tile(column, (grid.nx, 1))
    return Field2D(grid, samples).validate()


def saddle_ansatz(prof: Profile1D, grid: Grid2D, diagonal: bool = True) -> Field2D:
    """Product ansatz with nodal lines on the diagonals (or the axes)."""
    if diagonal:
        inv = 1.0 / math.sqrt(2.0)
        return field_from_function(
            grid, lambda X, Y: prof((X + Y) * inv) * prof((X - Y) * inv)
        )
    return field_from_function(grid, lambda X, Y: prof(X) * prof(Y))


def multiend_ansatz(prof: Profile1D, grid: Grid2D, line_angles_deg: Sequence[float]) -> Field2D:
    """Product of profiles over an arrangement of nodal lines through the origin.

    Each angle gives one full line; an arrangement of k lines produces a
    2k-ended configuration whose nodal rays sit at the given angles and
    their antipodes.
    """
    angles = np.asarray(line_angles_deg, dtype=float)
    if angles.size == 0:
        raise ConfigurationError("need at least one nodal line")
    if angles.size > 1:
        wrapped = np.sort(np.mod(angles, 180.0))
        if np.min(np.diff(np.concatenate([wrapped, [wrapped[0] + 180.0]]))) < 1.0:
            raise ConfigurationError("nodal lines closer than 1 degree")

    def fn(X, Y):
        out = np.ones_like(X)
        for a in angles:
            rad = math.radians(a)
            eta = -X * math.sin(rad) + Y * math.cos(rad)
            out = out * prof(eta)
        return out

    return field_from_function(grid, fn)


def constant_ansatz(grid: Grid2D, value: float) -> Field2D:
    return Field2D(grid, np.full((grid.nx, grid.ny), float(value))).validate()
