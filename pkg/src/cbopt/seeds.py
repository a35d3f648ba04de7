"""Deterministic derivation of independent random streams for replicated runs.

Every source of randomness in the package draws from a ``numpy`` generator
seeded by a ``(master, domain, stream, run, sample)`` tuple.  The *domain*
separates what the numbers are used for (initial positions, Brownian
increments, draws of the random vector, ...), so that e.g. the sampling of
the random vector never shares a stream with the algorithm noise.  The
*stream* slot lets callers run statistically independent companion systems
(such as a large reference ensemble) for the same replication indices.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np


class Domain(IntEnum):
    """What a derived random stream is consumed for."""

    INIT = 1       # initial particle positions
    NOISE = 2      # Brownian increments of the particle system
    YSAMPLE = 3    # draws of the random vector entering the objective
    BATCH = 4      # mini-batch index subsets for the consensus point
    SUBSAMPLE = 5  # subsampling used by equal-size measure couplings


@dataclass(frozen=True)
class RunSeed:
    """Master seed plus replication indices identifying one run.

    Distinct ``(master, run, sample)`` triples give independent streams;
    identical triples reproduce runs bit for bit.  ``run`` indexes
    repetitions of the particle algorithm, ``sample`` repetitions of the
    random-vector draw.
    """

    master: int
    run: int = 0
    sample: int = 0

    def __post_init__(self):
        for name in ("master", "run", "sample"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value!r}")

    def generator(self, domain: Domain | int, stream: int = 0) -> np.random.Generator:
        """Return a fresh generator for ``domain`` on stream ``stream``."""
        entropy = [int(self.master), int(domain), int(stream), int(self.run), int(self.sample)]
        return np.random.default_rng(np.random.SeedSequence(entropy))

    def with_indices(self, run: int | None = None, sample: int | None = None) -> "RunSeed":
        kw = {}
        if run is not None:
            kw["run"] = run
        if sample is not None:
            kw["sample"] = sample
        return replace(self, **kw)


def as_seed(seed: "RunSeed | int") -> RunSeed:
    """Coerce a bare integer master seed to a ``RunSeed``."""
    if isinstance(seed, RunSeed):
        return seed
    return RunSeed(master=int(seed))


def generator(seed: "RunSeed | int", domain: Domain | int, stream: int = 0) -> np.random.Generator:
    return as_seed(seed).generator(domain, stream)
