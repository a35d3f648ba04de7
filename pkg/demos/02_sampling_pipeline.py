"""The sampling pipeline: freeze a Monte Carlo sample of Y, optimize the
sample average.

Shows how the sample-average objective behaves as the sample grows, and how
pairing a sampled run with an exact run on common noise isolates the
sampling error from the algorithm noise.
"""

import numpy as np

from cbopt import (
    CboParams,
    RunSeed,
    UniformBoxInit,
    consensus_rmse,
    draw_saa_sample,
    get_objective,
    loglog_slope,
    run_cbo,
    saa_objective,
)

obj = get_objective("ackley-like")
params = CboParams.from_horizon(10.0, 0.1, lam=1.0, sigma=0.5, alpha=40.0)
init = UniformBoxInit(-3, 3)

# The sample-average objective is itself just a deterministic function.
sample = draw_saa_sample(obj.law, m=50, seed=RunSeed(1, sample=0))
fhat = saa_objective(obj, sample)
x = np.array([[0.0], [-1.1]])
print("pointwise comparison at x = 0 and x = -1.1:")
print("  exact f:   ", np.round(obj.f(x), 5))
print("  50-sample: ", np.round(fhat(x), 5))

# Sampling error of the optimizer: run the sampled and the exact objective
# with the SAME initial ensemble and Brownian increments (same RunSeed),
# then average the consensus gap over replications of the sample.
print("\nconsensus gap at final time vs sample size (10 samples x 4 runs):")
points = []
for m in (25, 100, 400, 1600):
    pairs = []
    for j in range(10):
        fhat = saa_objective(obj, draw_saa_sample(obj.law, m, RunSeed(1, sample=j)))
        inner = []
        for u in range(4):
            seed = RunSeed(1, run=u)
            a = run_cbo(fhat, params, init, 400, 1, seed)
            b = run_cbo(obj.f, params, init, 400, 1, seed)
            inner.append((a.final_consensus, b.final_consensus))
        pairs.append(inner)
    err = consensus_rmse(pairs)
    points.append((m, err))
    print(f"  M = {m:5d}:  rmse = {err:.5f}")

fit = loglog_slope(points)
print(f"\nfitted decay exponent: {fit.slope:+.2f}  (square-root decay is -0.5)")
