"""The quadrature pipeline: replace the expectation by a midpoint grid.

Builds composite-midpoint grids for a bounded uniform law and a truncated
standard normal law, shows the second-order convergence of the grid
average, and the effect of the truncation half-width on where the
discretized objective puts its minimizer.
"""

import numpy as np

from cbopt import (
    get_objective,
    midpoint_nodes,
    quadrature_objective,
    truncated_normal_grid,
)

# A grid on a uniform box: nodes are cell midpoints, weights sum to one.
grid = midpoint_nodes(0.0, 2.0, q=4, k=2)
print("4x4 midpoint grid on [0, 2]^2")
print("  first four nodes (first coordinate fastest):")
print(np.round(grid.nodes[:4], 3))
print(f"  weights sum to {grid.mass:.15f}")

# Second-order convergence on a smooth integrand: F = (Yx)^2 at x = 1 has
# exact mean 4/3; the midpoint error shrinks 4x when Q doubles.
obj = get_objective("lls-k1")
x = np.array([[1.0]])
print("\nmidpoint error for E[(Yx)^2] at x = 1:")
prev = None
for q in (5, 10, 20, 40, 80):
    fq = quadrature_objective(obj, midpoint_nodes(0.0, 2.0, q, 1))
    err = abs(fq(x)[0] - 4.0 / 3.0)
    ratio = "" if prev is None else f"   ratio {prev / err:.2f}"
    print(f"  Q = {q:3d}:  error = {err:.3e}{ratio}")
    prev = err

# Unbounded laws need a truncation box. The half-width trades tail mass
# against per-axis resolution: with few nodes per axis, a wide box starves
# the grid of probability mass and drags the discretized minimizer away.
utility = get_objective("utility-d3")
print("\ntruncated-normal grids for the 3d utility objective (Q = 4 nodes/axis):")
print(f"  reference minimizer: {utility.minimizer}")
for hw in (2.0, 4.0, 10.0, 20.0):
    g = truncated_normal_grid(k=3, q=4, half_width=hw)
    fq = quadrature_objective(utility, g)
    probe = np.linspace(-1, 1, 41)
    xs = np.stack(np.meshgrid(probe, probe, probe, indexing="ij"), -1).reshape(-1, 3)
    best = xs[fq(xs).argmin()]
    print(f"  half-width {hw:4.1f}: mass kept {g.mass:8.2e}, "
          f"coarse argmin about {np.round(best, 2)}")
print("\n(fine grids do not care: at Q = 200 every half-width above ~4 "
      "recovers the same minimizer)")
