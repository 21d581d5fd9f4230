"""Integration over the unit simplex.

Two estimators share one representation, a weighted point set on the
simplex whose weights sum to one:

* Gauss-Legendre quadrature on the segment ``w = (x, 1 - x)`` for two assets;
* plain Monte Carlo with points drawn by normalising i.i.d. exponentials.

``exact_moment`` gives the rational mixed moments of the uniform law, which
is the ground truth the other two are tested against.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Scheme",
    "SamplerSpec",
    "QuadratureRule",
    "PointSet",
    "sample_uniform",
    "gauss_legendre_rule",
    "point_set",
    "average_over_simplex",
    "exact_moment",
    "derive_seed",
    "check_simplex_point",
]

MAX_QUAD_NODES = 64
_UINT64_MAX = 2**64 - 1


class Scheme(str, enum.Enum):
    GAUSS_LEGENDRE = "gauss-legendre"
    MONTE_CARLO = "monte-carlo"


@dataclass(frozen=True)
class SamplerSpec:
    """How to estimate an average over the simplex.

    ``nodes`` is only read by the quadrature scheme and ``samples``/``seed``
    only by Monte Carlo, so a single spec can describe both.
    """

    scheme: Scheme = Scheme.GAUSS_LEGENDRE
    nodes: int = 16
    samples: int = 10_000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not 1 <= self.nodes <= MAX_QUAD_NODES:
            raise ValueError(f"nodes must be in [1, {MAX_QUAD_NODES}], got {self.nodes}")
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        if not 0 <= self.seed <= _UINT64_MAX:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def check_dim(self, dim: int) -> None:
        if dim < 1:
            raise ValueError(f"dimension must be >= 1, got {dim}")
        if self.scheme is Scheme.GAUSS_LEGENDRE and dim != 2:
            raise ValueError(f"Gauss-Legendre quadrature needs dimension 2, got {dim}")

    @classmethod
    def for_dim(cls, dim: int, nodes: int = 16, samples: int = 10_000, seed: int = 0):
        """Quadrature for two assets, Monte Carlo otherwise."""
        scheme = Scheme.GAUSS_LEGENDRE if dim == 2 else Scheme.MONTE_CARLO
        return cls(scheme, nodes=nodes, samples=samples, seed=seed)


@dataclass(frozen=True)
class QuadratureRule:
    """Legendre rule on [-1, 1]."""

    points: np.ndarray
    weights: np.ndarray

    def integrate01(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        """Integral of ``f`` over [0, 1] using the mapped rule."""
        x = (1.0 + self.points) / 2.0
        return float(np.sum(self.weights * f(x)) / 2.0)


@dataclass(frozen=True)
class PointSet:
    """Points on S_dim with probability weights.

    ``exact`` marks quadrature sets, for which no sampling error is reported.
    """

    points: np.ndarray  # (n, dim)
    weights: np.ndarray  # (n,), sums to 1
    exact: bool

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]


def derive_seed(seed: int, stream: int) -> int:
    """Mix ``seed`` with a stream index into a new 64-bit seed.

    Uses numpy's ``SeedSequence([seed, stream])`` entropy pool; distinct
    streams give statistically independent generators.
    """
    state = np.random.SeedSequence([seed, stream]).generate_state(1, dtype=np.uint64)
    return int(state[0])


def check_simplex_point(w: Sequence[float], atol: float = 1e-12) -> np.ndarray:
    arr = np.asarray(w, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("simplex point must be a non-empty vector")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"simplex point has negative or non-finite entries: {arr}")
    if abs(arr.sum() - 1.0) > atol:
        raise ValueError(f"simplex point sums to {arr.sum()!r}, not 1")
    return arr


def sample_uniform(dim: int, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` uniform points on S_dim, shape ``(count, dim)``.

    Each row is ``X / sum(X)`` with ``X_i = -log(U_i)``, ``U_i`` uniform on
    (0, 1].
    """
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = np.random.Generator(np.random.PCG64(seed))
    u = 1.0 - rng.random((count, dim))
    x = -np.log(u)
    return x / x.sum(axis=1, keepdims=True)


@functools.lru_cache(maxsize=MAX_QUAD_NODES)
def _legendre(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, q = np.polynomial.legendre.leggauss(nodes)
    # enforce exact symmetry about 0
    x = (x - x[::-1]) / 2.0
    q = (q + q[::-1]) / 2.0
    x.setflags(write=False)
    q.setflags(write=False)
    return x, q


def gauss_legendre_rule(nodes: int) -> QuadratureRule:
    if not 1 <= nodes <= MAX_QUAD_NODES:
        raise ValueError(f"nodes must be in [1, {MAX_QUAD_NODES}], got {nodes}")
    x, q = _legendre(nodes)
    return QuadratureRule(points=x, weights=q)


@functools.lru_cache(maxsize=16)
def point_set(dim: int, spec: SamplerSpec) -> PointSet:
    """The fixed point set a sampler uses on S_dim.

    Cached, so every caller holding an equal spec sees the very same arrays.
    """
    spec.check_dim(dim)
    if spec.scheme is Scheme.GAUSS_LEGENDRE:
        rule = gauss_legendre_rule(spec.nodes)
        x = (1.0 + rule.points) / 2.0
        pts = np.column_stack([x, (1.0 - rule.points) / 2.0])
        wts = rule.weights / 2.0
        exact = True
    elif dim == 1:
        pts = np.ones((1, 1))
        wts = np.ones(1)
        exact = True
    else:
        pts = sample_uniform(dim, spec.samples, spec.seed)
        wts = np.full(spec.samples, 1.0 / spec.samples)
        exact = False
    pts.setflags(write=False)
    wts.setflags(write=False)
    return PointSet(points=pts, weights=wts, exact=exact)


def average_over_simplex(
    dim: int,
    integrand: Callable[[np.ndarray], Sequence[float]],
    spec: SamplerSpec,
) -> np.ndarray:
    """Estimate ``E[integrand(w)]`` for ``w`` uniform on S_dim.

    ``integrand`` is called once per point, in point order, and must return
    the same number of values each time.
    """
    ps = point_set(dim, spec)
    values = np.array([np.atleast_1d(np.asarray(integrand(w), dtype=float)) for w in ps.points])
    return ps.weights @ values


def exact_moment(exponents: Sequence[int]) -> Fraction:
    """``E[prod w_i**a_i]`` for ``w`` uniform on S_K, K = len(exponents).

    Dirichlet(1, ..., 1) identity: (K-1)! prod(a_i!) / (K-1+sum a_i)!.
    """
    a = [int(e) for e in exponents]
    if len(a) < 1 or any(e < 0 for e in a):
        raise ValueError(f"exponents must be non-negative and non-empty, got {exponents}")
    k = len(a)
    num = math.factorial(k - 1) * math.prod(math.factorial(e) for e in a)
    return Fraction(num, math.factorial(k - 1 + sum(a)))
