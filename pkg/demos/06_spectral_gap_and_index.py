"""Spectral gap of the linearized layer and Morse index counts.

Linearizing at the one dimensional layer gives the operator
-d2/dt2 + W''(g(t)). Its kernel is spanned by g' (translation), and the
essential spectrum starts at W''(+-1) = 2. On a finite window with a
weight mu e^{-2|t|} subtracted, the lowest coupled eigenvalue crosses
zero exactly at the gap constant mu; for the quartic well mu = 3/2.

The Morse index of a planar solution counts negative eigenvalues of
-lap + W''(u) with Dirichlet walls. A layer is stable (index 0); the
constant 0 sits at the well maximum, so on a box of side 2L the index
grows like the number of lattice modes pi^2 (j^2 + k^2) / L^2 < 2.

Run:  python3 demos/06_spectral_gap_and_index.py
"""

import math

import numpy as np

from aclab import (
    field_from_function,
    grid_from_extent,
    layer_ansatz,
    line_gap,
    make_quartic,
    morse_index,
    solve_dirichlet,
    solve_profile,
)

quartic = make_quartic()
prof = solve_profile(quartic)

print("spectral gap of the linearized layer")
gap = line_gap(quartic, prof)
print(f"  lowest eigenvalue of L           {gap.lambda_bottom:+.3e}  (kernel)")
print(f"  gap constant mu-hat              {gap.mu_hat:.6f}  (exact 1.5)")

print("  window sweep:")
for L in (10.0, 20.0, 40.0):
    g = line_gap(quartic, prof, L_minus=L, L_plus=L, n_pairs=24)
    print(f"    L = {L:4.0f}   mu-hat = {g.mu_hat:.6f}")

print("\nMorse index on [-10, 10]^2, h = 0.1")
grid = grid_from_extent(((-10.0, 10.0), (-10.0, 10.0)), 0.1)

sol = solve_dirichlet(quartic, layer_ansatz(prof, grid))
print(f"  layer     index = {morse_index(sol.field, quartic)}   (stable)")

const = field_from_function(grid, lambda x, y: np.ones_like(x))
print(f"  u = +1    index = {morse_index(const, quartic)}   (global minimum)")

zero = field_from_function(grid, lambda x, y: np.zeros_like(x))
n_zero = morse_index(zero, quartic)
L = 10.0
count = sum(
    1
    for j in range(1, 40)
    for k in range(1, 40)
    if math.pi ** 2 * (j ** 2 + k ** 2) / (2 * L) ** 2 < 2.0
)
print(f"  u = 0     index = {n_zero}   (lattice count {count})")
