"""Consensus-based particle dynamics with explicit Euler-Maruyama stepping.

The particle system minimizes a deterministic objective ``f`` by moving
``n`` particles toward a softmin-weighted average of their positions (the
consensus point) while diffusing proportionally to their distance from it:

    X <- X - lam * (X - c) * dt + sigma * D * sqrt(dt) * Z,

where ``c`` is the consensus point, ``Z`` is standard normal noise and the
amplitude ``D`` is either the Euclidean distance to the consensus (isotropic)
or its componentwise absolute value (anisotropic).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import BlowupError
from .seeds import Domain, RunSeed, as_seed

Objective = Callable[[np.ndarray], np.ndarray]
"""Deterministic objective: maps an (n, d) position block to (n,) values."""


class DiffusionKind(str, Enum):
    ISOTROPIC = "isotropic"
    ANISOTROPIC = "anisotropic"


@dataclass(frozen=True)
class CboParams:
    """Constants of the particle dynamics.

    ``dt * (n_it - 1)`` is the time horizon; ``n_it`` counts time-grid nodes
    including the initial one.  ``batch_size`` switches the consensus point
    to a random mini-batch of that size.
    """

    lam: float
    sigma: float
    alpha: float
    dt: float
    n_it: int
    diffusion: DiffusionKind = DiffusionKind.ISOTROPIC
    batch_size: int | None = None

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.n_it < 1:
            raise ValueError(f"n_it must be >= 1, got {self.n_it}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        object.__setattr__(self, "diffusion", DiffusionKind(self.diffusion))

    @classmethod
    def from_horizon(cls, t_final: float, dt: float, **kwargs) -> "CboParams":
        """Build params from a horizon, checking dt divides it evenly."""
        if t_final <= 0 or dt <= 0:
            raise ValueError("t_final and dt must be positive")
        n_it = int(round(t_final / dt)) + 1
        if n_it < 2 or abs(dt * (n_it - 1) - t_final) > 2 * math.ulp(max(abs(t_final), 1.0)):
            raise ValueError(f"dt={dt} does not divide the horizon t_final={t_final}")
        return cls(dt=dt, n_it=n_it, **kwargs)

    @property
    def t_final(self) -> float:
        return self.dt * (self.n_it - 1)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_it) * self.dt

    def check_well_posed(self, dim: int) -> None:
        """Raise if the drift does not dominate the diffusion.

        Requires 2*lam > dim*sigma^2 for isotropic diffusion and
        2*lam > sigma^2 for anisotropic diffusion.
        """
        bound = dim * self.sigma**2 if self.diffusion is DiffusionKind.ISOTROPIC else self.sigma**2
        if not 2 * self.lam > bound:
            raise ValueError(
                f"ill-posed parameters: need 2*lam > {bound} "
                f"({self.diffusion.value}, dim={dim}), got lam={self.lam}, sigma={self.sigma}"
            )


@dataclass(frozen=True)
class UniformBoxInit:
    """Uniform initial law over the axis-aligned box [lo, hi]^d.

    ``lo`` and ``hi`` may be scalars (same interval on every axis) or
    per-axis arrays.
    """

    lo: float | Sequence[float] = -3.0
    hi: float | Sequence[float] = 3.0

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
            raise ValueError("box bounds must be finite")
        if not np.all(lo < hi):
            raise ValueError(f"invalid box: need lo < hi componentwise, got lo={self.lo}, hi={self.hi}")

    def sample(self, n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
        lo = np.broadcast_to(np.asarray(self.lo, dtype=float), (dim,))
        hi = np.broadcast_to(np.asarray(self.hi, dtype=float), (dim,))
        return rng.uniform(lo, hi, size=(n, dim))


InitDistribution = UniformBoxInit


@dataclass(frozen=True)
class ParticleEnsemble:
    """Positions of n particles in d dimensions, plus the seed that made them."""

    positions: np.ndarray
    seed: RunSeed | None = None

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[0] < 1 or pos.shape[1] < 1:
            raise ValueError(f"positions must be a non-empty (n, d) array, got shape {pos.shape}")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        object.__setattr__(self, "positions", pos)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]


def sample_initial(init: UniformBoxInit, n: int, dim: int, seed: RunSeed | int,
                   stream: int = 0) -> ParticleEnsemble:
    """Draw n i.i.d. initial positions from the initial law, reproducibly."""
    if n < 1 or dim < 1:
        raise ValueError(f"need n >= 1 and dim >= 1, got n={n}, dim={dim}")
    seed = as_seed(seed)
    rng = seed.generator(Domain.INIT, stream)
    return ParticleEnsemble(init.sample(n, dim, rng), seed=seed)


def _positions(ensemble) -> np.ndarray:
    if isinstance(ensemble, ParticleEnsemble):
        return ensemble.positions
    pos = np.asarray(ensemble, dtype=float)
    if pos.ndim == 1:
        pos = pos[:, None]
    return pos


def _consensus(positions: np.ndarray, values: np.ndarray, alpha: float) -> np.ndarray:
    # Shift by the minimum before exponentiating: keeps at least one weight
    # equal to 1, so the denominator is >= 1 and large alpha cannot underflow
    # the whole sum.
    w = np.exp(-alpha * (values - values.min()))
    return (w @ positions) / w.sum()


def consensus_point(ensemble, values, alpha: float) -> np.ndarray:
    """Softmin-weighted average of particle positions.

    Returns sum_i X_i exp(-alpha v_i) / sum_i exp(-alpha v_i), evaluated
    with the minimum value subtracted from the exponents.  Each coordinate
    of the result lies in the convex hull of the particle coordinates.
    """
    x = _positions(ensemble)
    v = np.asarray(values, dtype=float).ravel()
    if x.shape[0] == 0:
        raise ValueError("empty ensemble")
    if v.shape[0] != x.shape[0]:
        raise ValueError(f"got {v.shape[0]} values for {x.shape[0]} particles")
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if np.isnan(v).any():
        raise ValueError("NaN objective value in consensus computation")
    return _consensus(x, v, alpha)


def consensus_point_batch(ensemble, values, alpha: float, batch_size: int,
                          seed: "RunSeed | int | np.random.Generator") -> np.ndarray:
    """Consensus point restricted to a random subset of ``batch_size`` indices.

    The subset is drawn uniformly without replacement.  ``batch_size == n``
    reproduces :func:`consensus_point` exactly.
    """
    x = _positions(ensemble)
    v = np.asarray(values, dtype=float).ravel()
    n = x.shape[0]
    if not 1 <= batch_size <= n:
        raise ValueError(f"batch_size must be in [1, {n}], got {batch_size}")
    if batch_size == n:
        return consensus_point(x, v, alpha)
    rng = seed if isinstance(seed, np.random.Generator) else as_seed(seed).generator(Domain.BATCH)
    idx = rng.choice(n, size=batch_size, replace=False)
    return consensus_point(x[idx], v[idx], alpha)


def _em_update(x: np.ndarray, c: np.ndarray, params: CboParams, z: np.ndarray) -> np.ndarray:
    # overflow surfaces as a BlowupError from the caller's finiteness check,
    # so numpy's own overflow warnings are silenced here
    with np.errstate(over="ignore", invalid="ignore"):
        diff = x - c
        if params.sigma == 0.0:
            return x - (params.lam * params.dt) * diff
        if x.shape[1] == 1 or params.diffusion is DiffusionKind.ANISOTROPIC:
            # In one dimension the isotropic amplitude reduces to |x - c|, so
            # the two diffusion kinds coincide bitwise.
            amp = np.abs(diff)
        else:
            amp = np.sqrt(np.sum(diff * diff, axis=1, keepdims=True))
        return x - (params.lam * params.dt) * diff + (params.sigma * math.sqrt(params.dt)) * (amp * z)


def em_step(ensemble, consensus: np.ndarray, params: CboParams, noise: np.ndarray,
            step: int | None = None) -> ParticleEnsemble:
    """One explicit Euler-Maruyama update of the whole ensemble.

    ``noise`` must be an (n, d) block of standard normal draws, particles in
    index order and coordinates in index order.
    """
    x = _positions(ensemble)
    z = np.asarray(noise, dtype=float)
    c = np.asarray(consensus, dtype=float).reshape(1, x.shape[1])
    if z.shape != x.shape:
        raise ValueError(f"noise shape {z.shape} does not match ensemble shape {x.shape}")
    out = _em_update(x, c, params, z)
    if not np.all(np.isfinite(out)):
        raise BlowupError(step if step is not None else 1)
    return ParticleEnsemble(out)


@dataclass
class CboTrajectory:
    """Recorded output of one run: consensus at every time node, ensemble
    snapshots at requested nodes, and the final ensemble."""

    times: np.ndarray
    consensus: np.ndarray
    snapshots: Mapping[int, np.ndarray]
    final: ParticleEnsemble

    @property
    def final_consensus(self) -> np.ndarray:
        return self.consensus[-1]


def _snapshot_set(record, n_it: int) -> set[int]:
    if record is None:
        return {n_it - 1}
    if record == "all":
        return set(range(n_it))
    nodes = set()
    for node in record:
        node = int(node)
        if node < 0:
            node += n_it
        if not 0 <= node < n_it:
            raise ValueError(f"snapshot node {node} outside [0, {n_it - 1}]")
        nodes.add(node)
    return nodes


def run_cbo(objective: Objective, params: CboParams, init: UniformBoxInit, n: int, dim: int,
            seed: RunSeed | int, record=None, stream: int = 0) -> CboTrajectory:
    """Run the full seeded particle loop for ``params.n_it`` time nodes.

    The consensus is recomputed from the current positions at every node
    before the update and shared by all particles within the step; the
    consensus at the final node is the candidate minimizer.  ``record``
    selects ensemble snapshot nodes: ``None`` keeps the final node only,
    ``"all"`` keeps every node, otherwise an iterable of node indices
    (negative indices count from the end).

    A fully coincident ensemble freezes: the consensus equals the common
    point and the diffusion amplitude vanishes, so no further motion occurs
    even for ``sigma > 0``.
    """
    seed = as_seed(seed)
    snap_nodes = _snapshot_set(record, params.n_it)
    ens = sample_initial(init, n, dim, seed, stream)
    x = ens.positions
    rng_noise = seed.generator(Domain.NOISE, stream)
    rng_batch = seed.generator(Domain.BATCH, stream) if params.batch_size is not None else None

    consensus = np.empty((params.n_it, dim))
    snapshots: dict[int, np.ndarray] = {}
    for h in range(params.n_it):
        vals = np.asarray(objective(x), dtype=float).ravel()
        if vals.shape[0] != n:
            raise ValueError(f"objective returned {vals.shape[0]} values for {n} particles")
        if not np.all(np.isfinite(vals)):
            bad = x[~np.isfinite(vals)][0]
            raise ValueError(f"non-finite objective value at x={bad} (time node {h})")
        if rng_batch is not None:
            c = consensus_point_batch(x, vals, params.alpha, params.batch_size, rng_batch)
        else:
            c = _consensus(x, vals, params.alpha)
        consensus[h] = c
        if h in snap_nodes:
            snapshots[h] = x.copy()
        if h == params.n_it - 1:
            break
        z = rng_noise.standard_normal((n, dim))
        x = _em_update(x, c, params, z)
        if not np.all(np.isfinite(x)):
            raise BlowupError(h + 1, f"of {params.n_it - 1} (lam={params.lam}, sigma={params.sigma}, dt={params.dt})")
    return CboTrajectory(times=params.times, consensus=consensus, snapshots=snapshots,
                         final=ParticleEnsemble(x, seed=seed))


def run_meanfield_surrogate(objective: Objective, params: CboParams, init: UniformBoxInit,
                            n_ref: int, dim: int, seed: RunSeed | int, record=None,
                            stream: int = 0) -> CboTrajectory:
    """Large-ensemble surrogate for the infinite-particle limit.

    Identical to :func:`run_cbo` with ``n = n_ref``; experiment code uses the
    distinct name to tell reference runs from finite runs.
    """
    return run_cbo(objective, params, init, n_ref, dim, seed, record=record, stream=stream)
