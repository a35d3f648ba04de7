"""Stochastic test objectives F(x, Y), their closed-form expectations and
known minimizers.

Objectives are exposed by string identifiers ("ackley-like", "lls-k1",
"lls-k2", "lls-k3", "utility-d1", "utility-d2", "utility-d3").  Each carries
the law of the random vector Y, a vectorized evaluator of F on a cross
product of position and sample blocks and, when available, the exact
expectation f(x) = E[F(x, Y)] together with its minimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import ndtr

_SQRT_2PI = math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# Laws of the random vector


@dataclass(frozen=True)
class UniformBox:
    """k i.i.d. coordinates, each uniform on [lo, hi]."""

    lo: float
    hi: float
    k: int = 1

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if self.k < 1:
            raise ValueError(f"need k >= 1, got {self.k}")

    def sample(self, m: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(m, self.k))

    def density(self, y: np.ndarray) -> np.ndarray:
        """Constant density (1/(hi-lo))^k, evaluated on the support."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        return np.full(y.shape[0], (1.0 / (self.hi - self.lo)) ** self.k)


@dataclass(frozen=True)
class StdNormal:
    """k i.i.d. standard normal coordinates."""

    k: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"need k >= 1, got {self.k}")

    def sample(self, m: int, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal((m, self.k))

    def density(self, y: np.ndarray) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, dtype=float))
        return np.exp(-0.5 * np.sum(y * y, axis=1)) / _SQRT_2PI ** y.shape[1]


RandomLawSpec = UniformBox | StdNormal


# ---------------------------------------------------------------------------
# Declared evaluation structure


@dataclass(frozen=True)
class SeparableForm:
    """F(x, y) = sum_p x_terms(x)[:, p] * y_terms(y)[:, p].

    Lets sample averages and quadrature sums collapse to a single weighted
    moment vector of the y-terms, evaluated once per sample or grid.
    """

    x_terms: Callable[[np.ndarray], np.ndarray]  # (n, d) -> (n, p)
    y_terms: Callable[[np.ndarray], np.ndarray]  # (m, k) -> (m, p)


@dataclass(frozen=True)
class AffinePiecewiseForm:
    """F(x, y) = phi(x . (shift + y)) for a piecewise-linear phi.

    Weighted sample averages of this form run through a fused kernel instead
    of materializing the full cross-product matrix.
    """

    shift: np.ndarray  # (d,)
    phi: "PiecewiseLinear"


# ---------------------------------------------------------------------------
# Piecewise-linear building block


@dataclass(frozen=True)
class PiecewiseLinear:
    """Maximum of affine pieces v_j + s_j * t with strictly increasing slopes.

    Breakpoints are derived from adjacent pieces, which makes the function
    continuous by construction; they must come out increasing so that every
    piece is active somewhere.
    """

    slopes: tuple[float, ...]
    intercepts: tuple[float, ...]
    breakpoints: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        s = np.asarray(self.slopes, dtype=float)
        v = np.asarray(self.intercepts, dtype=float)
        if s.ndim != 1 or s.shape != v.shape or s.size < 1:
            raise ValueError("slopes and intercepts must be equal-length non-empty 1d sequences")
        if np.any(np.diff(s) <= 0):
            raise ValueError("slopes must be strictly increasing")
        z = (v[:-1] - v[1:]) / (s[1:] - s[:-1])
        if z.size > 1 and np.any(np.diff(z) <= 0):
            raise ValueError("derived breakpoints must be increasing (every piece active)")
        object.__setattr__(self, "slopes", tuple(float(a) for a in s))
        object.__setattr__(self, "intercepts", tuple(float(a) for a in v))
        object.__setattr__(self, "breakpoints", tuple(float(a) for a in z))
        object.__setattr__(self, "_s", s)
        object.__setattr__(self, "_v", v)
        object.__setattr__(self, "_z", z)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self._z, t)
        return self._v[idx] + self._s[idx] * t


def make_phi() -> PiecewiseLinear:
    """The 4-piece utility curve with breakpoints (-2, 4/3, 2)."""
    return PiecewiseLinear(slopes=(-2.0, -1.0, 0.5, 1.0), intercepts=(0.0, 2.0, 0.0, -1.0))


def gaussian_piecewise_expectation(mu, s, phi: PiecewiseLinear):
    """Exact E[phi(Z)] for Z ~ Normal(mu, s^2).

    Integrates each affine piece over its breakpoint interval using the
    Gaussian CDF and pdf at standardized endpoints; ``s = 0`` degenerates to
    ``phi(mu)``.  Vectorized over ``mu`` and ``s``.
    """
    mu_in, s_in = mu, s
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    s = np.broadcast_to(np.asarray(s, dtype=float), mu.shape).astype(float)
    if np.any(s < 0):
        raise ValueError("s must be >= 0")
    out = np.empty(mu.shape)
    degenerate = s == 0
    if degenerate.any():
        out[degenerate] = phi(mu[degenerate])
    live = ~degenerate
    if live.any():
        mu_l = mu[live][:, None]
        s_l = s[live][:, None]
        edges = np.concatenate(([-np.inf], phi.breakpoints, [np.inf]))
        t = (edges[None, :] - mu_l) / s_l
        cdf = ndtr(t)
        pdf = np.exp(-0.5 * t * t) / _SQRT_2PI
        prob = cdf[:, 1:] - cdf[:, :-1]
        # E[Z 1{a < Z <= b}] = mu * (cdf_b - cdf_a) - s * (pdf_b - pdf_a)
        ez = mu_l * prob - s_l * (pdf[:, 1:] - pdf[:, :-1])
        v = np.asarray(phi.intercepts)
        sl = np.asarray(phi.slopes)
        out[live] = prob @ v + ez @ sl
    if np.isscalar(mu_in) or (isinstance(mu_in, np.ndarray) and mu_in.ndim == 0):
        return float(out[0])
    return out


# ---------------------------------------------------------------------------
# The stochastic objective container


@dataclass(frozen=True)
class StochasticObjective:
    """F(x, y) evaluator with its random law and optional exact expectation."""

    name: str
    dim: int
    law: RandomLawSpec
    cross_fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    separable: SeparableForm | None = None
    affine_piecewise: AffinePiecewiseForm | None = None
    closed_form_f: Callable[[np.ndarray], np.ndarray] | None = None
    minimizer: np.ndarray | None = None
    min_value: float | None = None

    @property
    def k(self) -> int:
        return self.law.k

    def _check_blocks(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.atleast_2d(np.asarray(y, dtype=float))
        if x.shape[1] != self.dim:
            raise ValueError(f"{self.name}: positions have dim {x.shape[1]}, expected {self.dim}")
        if y.shape[1] != self.k:
            raise ValueError(f"{self.name}: samples have dim {y.shape[1]}, expected {self.k}")
        return x, y

    def eval_cross(self, x, y) -> np.ndarray:
        """F on the cross product: (n, d) positions and (m, k) samples -> (n, m)."""
        x, y = self._check_blocks(x, y)
        if self.separable is not None:
            return self.separable.x_terms(x) @ self.separable.y_terms(y).T
        return self.cross_fn(x, y)

    def eval_point(self, x, y) -> float:
        """F at a single (x, y) pair."""
        x = np.asarray(x, dtype=float).reshape(1, -1)
        y = np.asarray(y, dtype=float).reshape(1, -1)
        return float(self.eval_cross(x, y)[0, 0])

    def f(self, x) -> np.ndarray:
        """Exact expectation at the given positions; requires closed_form_f."""
        if self.closed_form_f is None:
            raise ValueError(f"{self.name} has no closed-form expectation")
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.closed_form_f(x)


# ---------------------------------------------------------------------------
# Catalog


def make_ackley_like() -> StochasticObjective:
    """One-dimensional multimodal objective with a uniform multiplicative
    perturbation that fades in the far field.

    F(x, Y) = exp(-0.2) * (|x| + 3 (cos 2x + sin 2x)) + Y (arctan|x| - pi/2)
    with Y uniform on [0.1, 1.9], so E[Y] = 1 and the exact expectation has a
    unique minimizer near -1.119.
    """
    c = math.exp(-0.2)
    law = UniformBox(0.1, 1.9, k=1)
    mean_y = 1.0

    def x_terms(x):
        x0 = x[:, 0]
        base = c * (np.abs(x0) + 3.0 * (np.cos(2.0 * x0) + np.sin(2.0 * x0)))
        fade = np.arctan(np.abs(x0)) - 0.5 * math.pi
        return np.stack([base, fade], axis=1)

    def y_terms(y):
        return np.concatenate([np.ones((y.shape[0], 1)), y], axis=1)

    def cross(x, y):
        terms = x_terms(x)
        return terms[:, [0]] + terms[:, [1]] * y[:, 0][None, :]

    def closed(x):
        terms = x_terms(np.atleast_2d(x))
        return terms[:, 0] + mean_y * terms[:, 1]

    return StochasticObjective(
        name="ackley-like", dim=1, law=law, cross_fn=cross,
        separable=SeparableForm(x_terms, y_terms), closed_form_f=closed,
        minimizer=np.array([-1.119]),
    )


_LLS_MEAN = 1.0      # E[U] for U uniform on [0, 2]
_LLS_MEAN_SQ = 4.0 / 3.0  # E[U^2]


def make_lls_family(k: int) -> StochasticObjective:
    """Least-squares style objectives with k independent Uniform[0, 2] factors.

    k=1: F = (Y1 x)^2           f = E[U^2] x^2
    k=2: F = (Y1 x - Y2)^2      f = E[U^2] x^2 - 2 E[U]^2 x + E[U^2]
    k=3: F = Y1 x^2 + Y2 x + Y3 f = E[U] (x^2 + x + 1)
    """
    if k not in (1, 2, 3):
        raise ValueError(f"lls family supports k in {{1, 2, 3}}, got {k}")
    law = UniformBox(0.0, 2.0, k=k)

    if k == 1:
        def x_terms(x):
            return x * x

        def y_terms(y):
            return y * y

        def cross(x, y):
            return (x * x) * (y[:, 0] ** 2)[None, :]

        def closed(x):
            return _LLS_MEAN_SQ * x[:, 0] ** 2

        minimizer, min_value = np.array([0.0]), 0.0
    elif k == 2:
        def x_terms(x):
            x0 = x[:, 0]
            return np.stack([x0 * x0, x0, np.ones_like(x0)], axis=1)

        def y_terms(y):
            return np.stack([y[:, 0] ** 2, -2.0 * y[:, 0] * y[:, 1], y[:, 1] ** 2], axis=1)

        def cross(x, y):
            r = x[:, 0][:, None] * y[:, 0][None, :] - y[:, 1][None, :]
            return r * r

        def closed(x):
            x0 = x[:, 0]
            return _LLS_MEAN_SQ * x0 * x0 - 2.0 * _LLS_MEAN**2 * x0 + _LLS_MEAN_SQ

        minimizer, min_value = np.array([0.75]), 7.0 / 12.0
    else:
        def x_terms(x):
            x0 = x[:, 0]
            return np.stack([x0 * x0, x0, np.ones_like(x0)], axis=1)

        def y_terms(y):
            return y

        def cross(x, y):
            x0 = x[:, 0][:, None]
            return x0 * x0 * y[:, 0][None, :] + x0 * y[:, 1][None, :] + y[:, 2][None, :]

        def closed(x):
            x0 = x[:, 0]
            return _LLS_MEAN * (x0 * x0 + x0 + 1.0)

        minimizer, min_value = np.array([-0.5]), 0.75

    return StochasticObjective(
        name=f"lls-k{k}", dim=1, law=law, cross_fn=cross,
        separable=SeparableForm(x_terms, y_terms), closed_form_f=closed,
        minimizer=minimizer, min_value=min_value,
    )


_UTILITY_MINIMIZERS = {
    1: (np.array([0.82058]), 1.3927),
    2: (np.array([0.35536, 0.71572]), 1.3407),
    3: (np.array([0.20578, 0.40601, 0.61735]), 1.2895),
}


def make_stochastic_utility(d: int) -> StochasticObjective:
    """Piecewise-linear utility of a noisy linear return in d assets.

    F(x, Y) = phi(x . (a + Y)) with a_l = l/d and Y standard normal in d
    dimensions; the exact expectation follows from x . (a + Y) being normal
    with mean x . a and standard deviation |x|.  Reference minimizers are
    tabulated for d <= 3.
    """
    if d < 1:
        raise ValueError(f"need d >= 1, got {d}")
    a = np.arange(1, d + 1, dtype=float) / d
    phi = make_phi()
    law = StdNormal(k=d)

    def cross(x, y):
        return phi(x @ (a[None, :] + y).T)

    def closed(x):
        mu = x @ a
        s = np.sqrt(np.sum(x * x, axis=1))
        return gaussian_piecewise_expectation(mu, s, phi)

    minimizer, min_value = _UTILITY_MINIMIZERS.get(d, (None, None))
    return StochasticObjective(
        name=f"utility-d{d}", dim=d, law=law, cross_fn=cross,
        affine_piecewise=AffinePiecewiseForm(shift=a, phi=phi),
        closed_form_f=closed, minimizer=minimizer, min_value=min_value,
    )


_CATALOG: dict[str, Callable[[], StochasticObjective]] = {
    "ackley-like": make_ackley_like,
    "lls-k1": lambda: make_lls_family(1),
    "lls-k2": lambda: make_lls_family(2),
    "lls-k3": lambda: make_lls_family(3),
    "utility-d1": lambda: make_stochastic_utility(1),
    "utility-d2": lambda: make_stochastic_utility(2),
    "utility-d3": lambda: make_stochastic_utility(3),
}

OBJECTIVE_NAMES = tuple(_CATALOG)


def register_objective(name: str, factory: Callable[[], StochasticObjective]) -> None:
    """Register a custom objective factory under a string identifier."""
    _CATALOG[name] = factory


def get_objective(name: str) -> StochasticObjective:
    """Build a catalog objective from its string identifier."""
    try:
        factory = _CATALOG[name]
    except KeyError:
        known = ", ".join(sorted(_CATALOG))
        raise ValueError(f"unknown objective {name!r}; known: {known}") from None
    return factory()
