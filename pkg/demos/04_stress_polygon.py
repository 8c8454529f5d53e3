"""Stress potential of the saddle and the polygon it traces at infinity.

Contracting the stress tensor of a solution with the rotation by 90
degrees gives a curl-free field, so it integrates to a scalar potential
U. U is convex, grows linearly, and its level sets approach a polygon
whose edges are dual to the rays of the blow-down. Edge jumps of grad U
across the polygon corners are quantized in units of 2 sigma_0.

Run:  python3 demos/04_stress_polygon.py [--plot]
"""

import math
import sys

import numpy as np

from aclab import (
    angular_energy,
    extract_rays,
    grid_from_extent,
    make_quartic,
    saddle_ansatz,
    sigma0,
    solve_dirichlet,
    solve_profile,
    stress_polygon,
    stress_potential,
)

quartic = make_quartic()
prof = solve_profile(quartic)
s0 = sigma0(prof)

grid = grid_from_extent(((-10.0, 10.0), (-10.0, 10.0)), 0.0625)
sol = solve_dirichlet(quartic, saddle_ansatz(prof, grid))
print(f"saddle solved: newton={sol.newton_iters} residual={sol.residual_sup:.2e}")

sp = stress_potential(sol.field, quartic)
print(f"consistency defect (mixed partials)   {sp.consistency_defect:.2e}")
print(f"trace residual   max|lap U - 4W|      {sp.trace_residual:.2e}")
print(f"convexity margin (min Hessian eigval) {sp.convexity_margin:.2e}")
print(f"linear growth slope                   {sp.linear_growth_const:.6f}")
print(f"sqrt(2) sigma_0                       {math.sqrt(2.0) * s0:.6f}")

poly = stress_polygon(sp, level=4.0)
print(f"\npolygon at level 4.0: {len(poly)} vertices")
for v in poly:
    print(f"  at ({v.position[0]:7.3f}, {v.position[1]:7.3f})  "
          f"ray direction {v.direction_angle_deg:8.3f} deg  "
          f"interior angle {v.angle_deg:6.2f} deg  "
          f"|jump| {v.jump_magnitude:.4f}  "
          f"n = |jump| / 2 sigma_0 = {v.jump_magnitude / (2 * s0):.4f}")

# the corner directions are the blow-down rays, measured independently
dist = angular_energy(sol.field, quartic, r_in=4.0, r_out=8.5)
rays = extract_rays(dist, s0)
ray_angles = sorted(r.angle_deg for r in rays)
vert_angles = sorted(v.direction_angle_deg for v in poly)
print("\nray angles (blow-down):     ",
      " ".join(f"{a:8.3f}" for a in ray_angles))
print("corner directions (stress): ",
      " ".join(f"{a:8.3f}" for a in vert_angles))
print("max disagreement:",
      f"{max(abs(a - b) for a, b in zip(ray_angles, vert_angles)):.3f} deg")

if "--plot" in sys.argv:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4.4))
    U = np.where(sp.potential_field.mask, sp.potential_field.samples, np.nan)
    xs = sp.potential_field.grid.xs
    ys = sp.potential_field.grid.ys
    cs = ax.contour(xs, ys, U.T, levels=np.arange(1.0, 9.0), cmap="viridis")
    ax.clabel(cs, fontsize=7)
    for v in poly:
        ax.plot(*v.position, "r+", ms=10)
    ax.set_aspect("equal")
    ax.set_title("level sets of the stress potential")
    fig.tight_layout()
    fig.savefig("demos/out_stress.png", dpi=130)
    print("wrote demos/out_stress.png")
