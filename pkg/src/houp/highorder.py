"""High-order universal portfolios.

Level 1 is Cover's portfolio on the raw market. Level l runs the same
construction on the market extended by the level 1..l-1 portfolios as
synthetic assets, so it works on a simplex of dimension K + l - 1.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .market import Market, augment
from .portfolio import AllocationPath, WealthPath, universal_portfolio
from .simplex import SamplerSpec, Scheme, derive_seed

__all__ = ["HoupResult", "houp", "houp_relatives", "level_spec", "level_market", "level_label"]


def level_label(level: int) -> str:
    return f"UP{level}"


def level_spec(spec: SamplerSpec, level: int, dim: int) -> SamplerSpec:
    """Sampler used at ``level`` on a simplex of dimension ``dim``.

    Level 1 uses ``spec`` unchanged, except that quadrature falls back to
    Monte Carlo when there are not exactly two assets. Higher levels always
    use Monte Carlo with seed ``derive_seed(spec.seed, level)``.
    """
    if level < 1:
        raise ValueError(f"level must be >= 1, got {level}")
    if level == 1:
        if spec.scheme is Scheme.GAUSS_LEGENDRE and dim != 2:
            return replace(spec, scheme=Scheme.MONTE_CARLO)
        return spec
    return replace(spec, scheme=Scheme.MONTE_CARLO, seed=derive_seed(spec.seed, level))


@dataclass(frozen=True)
class HoupResult:
    paths: tuple[WealthPath, ...]
    allocations: tuple[AllocationPath, ...]
    market: Market  # raw market plus UP1..UP{order-1}
    specs: tuple[SamplerSpec, ...]

    @property
    def order(self) -> int:
        return len(self.paths)

    @property
    def base_dim(self) -> int:
        return self.market.K - self.order + 1

    def finals(self) -> np.ndarray:
        return np.array([p.final for p in self.paths])

    def final_stderrs(self) -> np.ndarray:
        return np.array([p.final_stderr for p in self.paths])


def level_market(result: HoupResult, level: int) -> Market:
    """The market on which ``level`` was computed."""
    if not 1 <= level <= result.order:
        raise ValueError(f"level must be in 1..{result.order}, got {level}")
    dim = result.base_dim + level - 1
    return Market(result.market.labels[:dim], result.market.relatives[:, :dim])


def houp(market: Market, max_order: int, spec: SamplerSpec) -> HoupResult:
    if max_order < 1:
        raise ValueError(f"max_order must be >= 1, got {max_order}")
    current = market
    paths, allocs, specs = [], [], []
    for level in range(1, max_order + 1):
        s = level_spec(spec, level, current.K)
        path, alloc = universal_portfolio(current, s)
        paths.append(path)
        allocs.append(alloc)
        specs.append(s)
        if level < max_order:
            current = augment(current, level_label(level), path.values)
    return HoupResult(tuple(paths), tuple(allocs), current, tuple(specs))


def houp_relatives(result: HoupResult, level: int) -> np.ndarray:
    """Price relatives of the level-``level`` portfolio."""
    if not 1 <= level <= result.order:
        raise ValueError(f"level must be in 1..{result.order}, got {level}")
    return result.paths[level - 1].relatives()
