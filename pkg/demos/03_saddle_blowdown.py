"""Blow-down of the four-ended saddle: rays, densities, balancing.

Zooming out, the energy of a finite-index solution concentrates on a
cone of rays, each carrying an integer multiple of sigma_0 per unit
length. Binning the energy of an annulus by polar angle exposes the
rays; for the saddle there are four of them along the diagonals, each
with density 1, and their directions must balance.

Run:  python3 demos/03_saddle_blowdown.py [--plot]
"""

import sys

import numpy as np

from aclab import (
    angular_energy,
    balancing_defect,
    extract_rays,
    grid_from_extent,
    make_quartic,
    saddle_ansatz,
    sigma0,
    solve_dirichlet,
    solve_profile,
    zero_contours,
)

quartic = make_quartic()
prof = solve_profile(quartic)
s0 = sigma0(prof)

grid = grid_from_extent(((-10.0, 10.0), (-10.0, 10.0)), 0.0625)
sol = solve_dirichlet(quartic, saddle_ansatz(prof, grid))
print(f"saddle solved: newton={sol.newton_iters} residual={sol.residual_sup:.2e}")

curves = zero_contours(sol.field)
print(f"zero set: {len(curves)} curves, lengths "
      f"{[round(c.length(), 2) for c in curves]}")

dist = angular_energy(sol.field, quartic, r_in=4.0, r_out=8.5)
rays = extract_rays(dist, s0)
print(f"{len(rays)} rays:")
for r in rays:
    print(f"  angle {r.angle_deg:8.3f} deg   n={r.n}   "
          f"equipartition={r.equipartition:.4f}   "
          f"rounding defect={r.rounding_defect:.4f}")
print(f"balancing defect |sum n_i e_i| = {balancing_defect(rays):.2e}")

# the anisotropy tensor of a ray with direction e satisfies I - tau = e x e
r = rays[0]
e = r.direction
print("I - tau =\n", np.eye(2) - r.tau)
print("e x e   =\n", np.outer(e, e))

dist.to_csv("demos/out_angular.csv")
print("wrote demos/out_angular.csv  (theta, a1, a2)")

if "--plot" in sys.argv:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    im = ax1.imshow(sol.field.samples.T, origin="lower",
                    extent=(-10, 10, -10, 10), cmap="RdBu_r")
    for c in curves:
        ax1.plot(c.points[:, 0], c.points[:, 1], "k", lw=0.8)
    fig.colorbar(im, ax=ax1, label="u")
    ax2.plot(np.degrees(dist.theta), dist.a1 / s0)
    ax2.set_xlabel("theta [deg]")
    ax2.set_ylabel("a1 / sigma_0")
    ax2.set_title("angular energy density")
    fig.tight_layout()
    fig.savefig("demos/out_blowdown.png", dpi=130)
    print("wrote demos/out_blowdown.png")
