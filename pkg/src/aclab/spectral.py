"""Spectra of the linearized operator around a field.

Two settings share this module. On a planar field, the stability
operator -lap + W''(u) with Dirichlet conditions on the active frontier
yields the Morse index (dimension of the negative subspace, counted by
LU inertia), the bottom of the spectrum, and the bottom over an
exterior region. On a line, the same operator around the transition
profile is assembled with free ends, and the spectral gap under the
constraint of orthogonality to the translation mode is found through
the secular equation in the eigenbasis of the unconstrained problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.linalg import eigh_tridiagonal, solve_banded
from scipy.optimize import brentq
from scipy.sparse.linalg import eigsh, splu

from .errors import ConfigurationError, LinearSolveError, NumericalError
from .field import Field2D
from .potentials import Potential
from .profile1d import Profile1D
from .solver import assemble_laplacian


def stability_operator(f: Field2D, p: Potential):
    """Sparse -lap + W''(u) over interior active points, Dirichlet frontier.

    Returns (L, index_map)."""
    A, _, idx = assemble_laplacian(f)
    ii, jj = np.nonzero(idx >= 0)
    v = np.asarray(p.d2w(f.samples[ii, jj]), dtype=float)
    L = (-A + sparse.diags(v)).tocsc()
    return L, idx


def morse_index(f: Field2D, p: Potential) -> int:
    """Number of negative eigenvalues of the stability operator.

    Counted by Sylvester inertia from a symmetric-mode LU factorization;
    an eigenvalue within 1e-9 of zero makes the count ill posed and
    raises NumericalError.
    """
    L, _ = stability_operator(f, p)
    scale = float(np.abs(L.diagonal()).max())
    try:
        return _negative_count(L, scale)
    except _ZeroPivot:
        # shift both ways: when the counts at +/- eps agree, no eigenvalue
        # sits inside the shift window and the count is trustworthy
        eps = 1e-9 * scale
        n_plus = _negative_count_shifted(L, eps, scale)
        n_minus = _negative_count_shifted(L, -eps, scale)
        if n_plus == n_minus:
            return n_plus
        raise NumericalError(
            "an eigenvalue of the stability operator sits at zero within "
            f"{eps:.1e}; the Morse index is not well defined here"
        )


class _ZeroPivot(Exception):
    pass


def _negative_count(L, scale: float) -> int:
    try:
        lu = splu(
            L.tocsc(),
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options=dict(SymmetricMode=True),
        )
    except RuntimeError as exc:
        raise LinearSolveError(f"inertia factorization failed: {exc}")
    if not (lu.perm_r == lu.perm_c).all():
        raise LinearSolveError(
            "factorization pivoted asymmetrically; inertia count unavailable"
        )
    d = lu.U.diagonal()
    if np.abs(d).min() < 1e-12 * scale:
        raise _ZeroPivot
    return int((d < 0).sum())


def _negative_count_shifted(L, shift: float, scale: float) -> int:
    n = L.shape[0]
    return _negative_count(L - shift * sparse.identity(n, format="csc"), scale)


def _spectrum_floor(f: Field2D, p: Potential, mask: np.ndarray) -> float:
    vals = np.asarray(p.d2w(f.samples[mask]), dtype=float)
    return float(vals.min()) - 0.5


def stability_margin(f: Field2D, p: Potential) -> float:
    """Bottom eigenvalue of the stability operator (negative means unstable)."""
    L, idx = stability_operator(f, p)
    if L.shape[0] < 3:
        raise ConfigurationError("stability margin needs at least 3 unknowns")
    sigma = _spectrum_floor(f, p, idx >= 0)
    vals = eigsh(L, k=1, sigma=sigma, which="LM", return_eigenvectors=False)
    return float(vals[0])


def exterior_min_eigenvalue(
    f: Field2D,
    p: Potential,
    radius: float,
    center: Tuple[float, float] = (0.0, 0.0),
) -> float:
    """Bottom eigenvalue of the stability operator restricted outside a disk.

    Finite-index fields must be stable far from their core, so this
    should come out nonnegative once the disk swallows the core."""
    X, Y = f.grid.meshgrid()
    outside = np.hypot(X - center[0], Y - center[1]) > radius
    mask = f.mask & outside
    sub = Field2D(f.grid, f.samples, mask).validate()
    L, idx = stability_operator(sub, p)
    if L.shape[0] < 3:
        raise ConfigurationError("exterior region holds fewer than 3 unknowns")
    sigma = _spectrum_floor(sub, p, idx >= 0)
    vals = eigsh(L, k=1, sigma=sigma, which="LM", return_eigenvectors=False)
    return float(vals[0])


# ---------------------------------------------------------------------------
# constrained gap on a line segment


@dataclass
class GapResult:
    L_minus: float
    L_plus: float
    h: float
    mu_hat: float  # bottom of the spectrum orthogonal to translations
    lambda_bottom: float  # unconstrained bottom (near zero for free ends)
    secular_root: Optional[float]  # root of the secular function, if bracketed
    from_uncoupled: bool  # mu_hat realized by a symmetry-decoupled mode


def _line_operator(p: Potential, prof: Profile1D, L_minus: float, L_plus: float, h: float):
    """Symmetric tridiagonal reduction of -d2/dy2 + W''(g) on the segment.

    Lumped-mass linear elements with free ends. Returns the diagonal d,
    the off diagonal e, the mass-weighted normalized translation mode q,
    and the node positions.
    """
    if L_minus < 2 or L_plus < 2:
        raise ConfigurationError("segment must extend at least 2 on both sides")
    if h <= 0 or h > 0.2:
        raise ConfigurationError("line step must lie in (0, 0.2]")
    n = int(round((L_minus + L_plus) / h)) + 1
    ys = -L_minus + (L_minus + L_plus) / (n - 1) * np.arange(n)
    hh = float(ys[1] - ys[0])

    v = np.asarray(p.d2w(prof(ys)), dtype=float)

    mass = np.full(n, hh)
    mass[0] = mass[-1] = hh / 2.0
    k_diag = np.full(n, 2.0 / hh)
    k_diag[0] = k_diag[-1] = 1.0 / hh
    k_off = np.full(n - 1, -1.0 / hh)

    d = k_diag / mass + v
    e = k_off / np.sqrt(mass[:-1] * mass[1:])

    q = np.sqrt(mass) * prof.deriv(ys)
    q = q / np.linalg.norm(q)
    return d, e, q, ys


def line_gap(
    p: Potential,
    prof: Profile1D,
    L_minus: float = 20.0,
    L_plus: float = 20.0,
    h: float = 0.01,
    n_pairs: int = 8,
    coupling_tol: float = 1e-6,
) -> GapResult:
    """Spectral gap of -d2/dy2 + W''(g) on [-L_minus, L_plus], free ends,
    under orthogonality to the translation mode g'.

    The operator is reduced to a symmetric tridiagonal matrix through
    the lumped mass of a linear-element discretization. Eigenpairs of
    the unconstrained problem split into coupled and decoupled families
    by their overlap with g'; the constrained bottom is the smaller of
    the first decoupled eigenvalue and the secular-equation root between
    the bottom pair of coupled eigenvalues.
    """
    d, e, q, ys = _line_operator(p, prof, L_minus, L_plus, h)
    n = ys.size
    hh = float(ys[1] - ys[0])

    m = min(n_pairs, n - 1)
    lams, vecs = eigh_tridiagonal(d, e, select="i", select_range=(0, m - 1))

    couplings = vecs.T @ q

    lam1 = float(lams[0])
    if abs(couplings[0]) < 0.5:
        raise NumericalError(
            "bottom eigenvector barely overlaps the translation mode; "
            "the segment is too short or the step too coarse"
        )

    cap = None
    uncoupled = []
    for i in range(1, m):
        if abs(couplings[i]) > coupling_tol:
            cap = float(lams[i])
            break
        uncoupled.append(float(lams[i]))
    if cap is None:
        raise NumericalError(
            f"no coupled eigenvalue among the first {m} pairs; "
            "raise n_pairs"
        )

    band = np.zeros((3, n))
    band[0, 1:] = e
    band[2, :-1] = e

    def secular(mu: float) -> float:
        band[1, :] = d - mu
        sol = solve_banded((1, 1), band, q)
        return float(q @ sol)

    delta = 1e-10 * max(1.0, abs(cap - lam1))
    a, b = lam1 + delta, cap - delta
    root = None
    fa, fb = secular(a), secular(b)
    if fa < 0 < fb:
        root = float(brentq(secular, a, b, xtol=1e-12, rtol=1e-14))

    candidates = [x for x in uncoupled if x < cap]
    if root is not None:
        candidates.append(root)
    if not candidates:
        raise NumericalError(
            "constrained bottom not found below the first coupled eigenvalue"
        )
    mu_hat = min(candidates)
    return GapResult(
        L_minus=float(L_minus),
        L_plus=float(L_plus),
        h=hh,
        mu_hat=float(mu_hat),
        lambda_bottom=lam1,
        secular_root=root,
        from_uncoupled=bool(root is None or mu_hat < root),
    )
