"""Error functionals and estimators for the experiment harness.

One-dimensional Wasserstein distances between equal-size empirical measures
(order-statistics coupling), the replication RMSE of consensus points,
success rates against a max-norm ball, empirical quantile bands and log-log
rate fits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _as_points_1d(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 2:
        if pts.shape[1] != 1:
            raise ValueError(f"only 1-dimensional measures are supported, got d={pts.shape[1]}")
        pts = pts[:, 0]
    if pts.ndim != 1 or pts.shape[0] < 1:
        raise ValueError("points must be a non-empty 1d array or (n, 1) array")
    return pts


def wasserstein_1d(a, b, p: int = 1) -> float:
    """p-Wasserstein distance between equal-size 1d empirical measures.

    Uses the exact order-statistics coupling: sort both samples and average
    |a_(i) - b_(i)|^p.  Only p in {1, 2} is supported.
    """
    if p not in (1, 2):
        raise ValueError(f"p must be 1 or 2, got {p}")
    a = np.sort(_as_points_1d(a))
    b = np.sort(_as_points_1d(b))
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"sample sizes differ: {a.shape[0]} vs {b.shape[0]}; subsample first")
    d = np.abs(a - b)
    if p == 1:
        return float(d.mean())
    return float(np.sqrt(np.mean(d * d)))


def wasserstein_1d_unequal(a, b, p: int = 1) -> float:
    """Exact 1d p-Wasserstein distance via quantile functions.

    Handles unequal sample sizes without subsampling by integrating
    |Qa(u) - Qb(u)|^p over the merged quantile breakpoints.
    """
    if p not in (1, 2):
        raise ValueError(f"p must be 1 or 2, got {p}")
    a = np.sort(_as_points_1d(a))
    b = np.sort(_as_points_1d(b))
    n, m = a.shape[0], b.shape[0]
    edges = np.unique(np.concatenate([np.arange(1, n) / n, np.arange(1, m) / m, [0.0, 1.0]]))
    widths = np.diff(edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    ia = np.minimum((mids * n).astype(int), n - 1)
    ib = np.minimum((mids * m).astype(int), m - 1)
    d = np.abs(a[ia] - b[ib])
    if p == 1:
        return float(np.sum(widths * d))
    return float(np.sqrt(np.sum(widths * d * d)))


def subsample_rows(points: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform subsample of rows without replacement."""
    n = points.shape[0]
    if size > n:
        raise ValueError(f"cannot subsample {size} rows from {n}")
    if size == n:
        return points
    return points[rng.choice(n, size=size, replace=False)]


def equalize_sizes(a: np.ndarray, b: np.ndarray, rng: np.random.Generator):
    """Subsample the larger of two point sets down to the size of the smaller."""
    na, nb = a.shape[0], b.shape[0]
    if na == nb:
        return a, b
    if na > nb:
        return subsample_rows(a, nb, rng), b
    return a, subsample_rows(b, na, rng)


def consensus_rmse(pairs) -> float:
    """Root mean square gap between paired consensus points.

    ``pairs`` iterates over the outer replications of the random vector; each
    element iterates over algorithm replications and yields (estimate,
    reference) pairs.  The gap is averaged over the inner replications first,
    then the squared norm of that average is averaged over the outer ones.
    """
    sq = []
    for group in pairs:
        diffs = [np.atleast_1d(np.asarray(h, dtype=float) - np.asarray(r, dtype=float))
                 for h, r in group]
        if not diffs:
            raise ValueError("inner replication list must be non-empty")
        inner = np.mean(diffs, axis=0)
        sq.append(float(np.sum(inner * inner)))
    if not sq:
        raise ValueError("pairs must be non-empty")
    return float(np.sqrt(np.mean(sq)))


@dataclass(frozen=True)
class SuccessCriterion:
    """Open max-norm ball of radius thr around a reference minimizer."""

    thr: float
    x_star: np.ndarray

    def __post_init__(self):
        if self.thr <= 0:
            raise ValueError(f"thr must be > 0, got {self.thr}")
        object.__setattr__(self, "x_star", np.atleast_1d(np.asarray(self.x_star, dtype=float)))


def success_rate(candidates, crit: SuccessCriterion) -> float:
    """Fraction of candidates strictly inside the success ball."""
    arr = np.atleast_2d(np.asarray(candidates, dtype=float))
    if arr.shape[0] < 1:
        raise ValueError("need at least one candidate")
    dist = np.max(np.abs(arr - crit.x_star[None, :]), axis=1)
    return float(np.mean(dist < crit.thr))


@dataclass(frozen=True)
class RateFit:
    """Least-squares line through (log scale, log error) points."""

    slope: float
    intercept: float
    points: tuple[tuple[float, float], ...]


def loglog_slope(points) -> RateFit:
    """Fit log(error) = slope * log(scale) + intercept by ordinary least squares."""
    pts = [(float(s), float(e)) for s, e in points]
    if len({s for s, _ in pts}) < 2:
        raise ValueError("rate fit needs at least 2 distinct scales")
    if any(s <= 0 or e <= 0 for s, e in pts):
        raise ValueError("scales and errors must be positive for a log-log fit")
    logs = np.log([s for s, _ in pts])
    loge = np.log([e for _, e in pts])
    slope, intercept = np.polyfit(logs, loge, 1)
    return RateFit(slope=float(slope), intercept=float(intercept), points=tuple(pts))


def quantile_band(values, lo: float = 0.15, hi: float = 0.85) -> tuple[float, float]:
    """Empirical quantiles with linear interpolation between order statistics."""
    v = np.asarray(values, dtype=float)
    if v.size < 1:
        raise ValueError("need at least one value")
    qlo, qhi = np.quantile(v, [lo, hi])
    return float(qlo), float(qhi)
