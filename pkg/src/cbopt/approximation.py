"""Reduction of a stochastic objective to a deterministic one.

Two routes: a fixed Monte Carlo sample of the random vector (sample-average
objective, uniform weights 1/M) and a composite-midpoint quadrature grid
(nodes weighted by cell volume times the density of the law).  Both produce
the same kind of weighted-sample objective

    f_w(x) = sum_j w_j F(x, y_j),

which is evaluated through the fastest declared structure of the objective:
an exact moment reduction for separable F, a fused kernel for piecewise
linear F of an affine map, or a chunked cross-product sweep otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridSizeError, UnsupportedLawError
from .objectives import (
    RandomLawSpec,
    StdNormal,
    StochasticObjective,
    UniformBox,
)
from .seeds import Domain, RunSeed, as_seed

MAX_GRID_NODES = 10**8
_CROSS_CHUNK_ENTRIES = 1 << 22  # bound on n*m entries per evaluation chunk

try:  # pragma: no cover - exercised through the public call path
    import numba as _nb

    @_nb.njit(cache=True, fastmath=True)
    def _phi_weighted_avg(x, b, w, z, s, v, out):  # pragma: no cover
        n, d = x.shape
        m = b.shape[0]
        npieces = s.shape[0]
        for i in range(n):
            acc = 0.0
            for j in range(m):
                t = 0.0
                for l in range(d):
                    t += x[i, l] * b[j, l]
                p = 0
                for q in range(npieces - 1):
                    if t > z[q]:
                        p = q + 1
                acc += w[j] * (v[p] + s[p] * t)
            out[i] = acc
        return out

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False


def _phi_weighted_avg_numpy(x, b, w, z, s, v, out):
    t = x @ b.T
    acc = np.empty_like(t)
    tmp = np.empty_like(t)
    np.multiply(t, s[0], out=acc)
    acc += v[0]
    for p in range(1, s.shape[0]):
        np.multiply(t, s[p], out=tmp)
        tmp += v[p]
        np.maximum(acc, tmp, out=acc)
    np.dot(acc, w, out=out)
    return out


@dataclass(frozen=True)
class SaaSample:
    """M fixed i.i.d. realizations of the random vector."""

    draws: np.ndarray  # (m, k)
    law: RandomLawSpec
    seed: RunSeed | None = None

    def __post_init__(self):
        draws = np.atleast_2d(np.asarray(self.draws, dtype=float))
        if draws.shape[0] < 1:
            raise ValueError("need at least one draw")
        object.__setattr__(self, "draws", draws)

    @property
    def m(self) -> int:
        return self.draws.shape[0]

    @property
    def k(self) -> int:
        return self.draws.shape[1]


def draw_saa_sample(law: RandomLawSpec, m: int, seed: RunSeed | int, stream: int = 0) -> SaaSample:
    """Draw M i.i.d. realizations from the law, reproducibly.

    The draws come from the sampling domain of the seed, so they never share
    a stream with the algorithm noise.
    """
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    seed = as_seed(seed)
    rng = seed.generator(Domain.YSAMPLE, stream)
    return SaaSample(draws=law.sample(m, rng), law=law, seed=seed)


@dataclass(frozen=True)
class WeightedSampleObjective:
    """Deterministic objective sum_j w_j F(., y_j); callable on (n, d) blocks."""

    objective: StochasticObjective
    points: np.ndarray   # (j, k)
    weights: np.ndarray  # (j,)
    label: str = "saa"

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.shape[0] != w.shape[0]:
            raise ValueError(f"{pts.shape[0]} points but {w.shape[0]} weights")
        if pts.shape[1] != self.objective.law.k:
            raise ValueError(
                f"points have dim {pts.shape[1]} but law of {self.objective.name} has k={self.objective.law.k}"
            )
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        sep = self.objective.separable
        reduced = sep.y_terms(pts).T @ w if sep is not None else None
        object.__setattr__(self, "_reduced", reduced)
        ap = self.objective.affine_piecewise
        shifted = (np.asarray(ap.shift, dtype=float)[None, :] + pts if ap is not None else None)
        object.__setattr__(self, "_shifted", shifted)

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self._reduced is not None:
            return self.objective.separable.x_terms(x) @ self._reduced
        if self._shifted is not None:
            phi = self.objective.affine_piecewise.phi
            out = np.empty(x.shape[0])
            kernel = _phi_weighted_avg if _HAVE_NUMBA else _phi_weighted_avg_numpy
            return kernel(
                np.ascontiguousarray(x), self._shifted, self.weights,
                np.asarray(phi.breakpoints), np.asarray(phi.slopes),
                np.asarray(phi.intercepts), out,
            )
        out = np.zeros(x.shape[0])
        chunk = max(1, _CROSS_CHUNK_ENTRIES // max(x.shape[0], 1))
        for lo in range(0, self.points.shape[0], chunk):
            hi = lo + chunk
            out += self.objective.eval_cross(x, self.points[lo:hi]) @ self.weights[lo:hi]
        return out


def saa_objective(obj: StochasticObjective, sample: SaaSample) -> WeightedSampleObjective:
    """Sample-average objective (1/M) sum_j F(x, y_j)."""
    if sample.k != obj.law.k:
        raise ValueError(f"sample has k={sample.k} but {obj.name} expects k={obj.law.k}")
    weights = np.full(sample.m, 1.0 / sample.m)
    return WeightedSampleObjective(obj, sample.draws, weights, label="saa")


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor-product midpoint nodes with the density of the law at each node.

    ``cell_weight * density_at_nodes`` are the quadrature weights; for a
    uniform law on its own box they sum to one, for a truncated unbounded law
    they fall short of one by the mass outside the box (``mass_deficit``).
    """

    nodes: np.ndarray           # (q^k, k)
    q_per_axis: int
    cell_weight: float
    density_at_nodes: np.ndarray
    law: RandomLawSpec

    @property
    def k(self) -> int:
        return self.nodes.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return self.cell_weight * self.density_at_nodes

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    @property
    def mass_deficit(self) -> float:
        return 1.0 - self.mass


def _midpoint_grid_nodes(lo: float, hi: float, q: int, k: int) -> np.ndarray:
    n_nodes = q**k
    if n_nodes > MAX_GRID_NODES:
        raise GridSizeError(f"grid would have {n_nodes} nodes (> {MAX_GRID_NODES})")
    mids = lo + (hi - lo) / (2.0 * q) * (2.0 * np.arange(1, q + 1) - 1.0)
    j = np.arange(n_nodes)
    # Single running index with the first coordinate varying fastest.
    return np.stack([mids[(j // q**axis) % q] for axis in range(k)], axis=1)


def midpoint_nodes(e_lo: float, e_hi: float, q: int, k: int) -> QuadratureGrid:
    """Composite-midpoint grid for a uniform law on [e_lo, e_hi]^k.

    The q midpoints per axis are e_lo + (e_hi - e_lo) (2r - 1) / (2q); the
    q^k tensor nodes are relabeled with one running index, first coordinate
    fastest.
    """
    if not e_lo < e_hi:
        raise ValueError(f"need e_lo < e_hi, got [{e_lo}, {e_hi}]")
    if q < 1 or k < 1:
        raise ValueError(f"need q >= 1 and k >= 1, got q={q}, k={k}")
    law = UniformBox(e_lo, e_hi, k=k)
    nodes = _midpoint_grid_nodes(e_lo, e_hi, q, k)
    return QuadratureGrid(
        nodes=nodes,
        q_per_axis=q,
        cell_weight=((e_hi - e_lo) / q) ** k,
        density_at_nodes=law.density(nodes),
        law=law,
    )


def truncated_normal_grid(k: int, q: int, half_width: float) -> QuadratureGrid:
    """Midpoint grid on [-half_width, half_width]^k weighted by the standard
    normal density.

    The weights sum to the Gaussian mass of the box, which is below one; the
    shortfall is reported by ``mass_deficit``.
    """
    if half_width <= 0:
        raise ValueError(f"need half_width > 0, got {half_width}")
    if q < 1 or k < 1:
        raise ValueError(f"need q >= 1 and k >= 1, got q={q}, k={k}")
    law = StdNormal(k=k)
    nodes = _midpoint_grid_nodes(-half_width, half_width, q, k)
    return QuadratureGrid(
        nodes=nodes,
        q_per_axis=q,
        cell_weight=(2.0 * half_width / q) ** k,
        density_at_nodes=law.density(nodes),
        law=law,
    )


def quadrature_objective(obj: StochasticObjective, grid: QuadratureGrid) -> WeightedSampleObjective:
    """Deterministic objective cell_weight * sum_j F(x, y_j) density(y_j)."""
    if grid.k != obj.law.k:
        raise ValueError(f"grid has k={grid.k} but {obj.name} expects k={obj.law.k}")
    if isinstance(obj.law, StdNormal):
        if not isinstance(grid.law, StdNormal):
            raise UnsupportedLawError(
                f"{obj.name} has an unbounded law with no box density; "
                "build the grid with truncated_normal_grid instead"
            )
    elif isinstance(obj.law, UniformBox):
        if grid.law != obj.law:
            raise ValueError(
                f"grid was built for {grid.law}, but {obj.name} has law {obj.law}"
            )
    return WeightedSampleObjective(obj, grid.nodes, grid.weights, label="quadrature")
