"""Wealth dynamics: constant rebalanced portfolios, Cover's universal
portfolio and the hindsight / buy-and-hold baselines."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .market import Market
from .simplex import PointSet, SamplerSpec, check_simplex_point, point_set

__all__ = [
    "WealthPath",
    "AllocationPath",
    "crp_value",
    "universal_portfolio",
    "mixture_average",
    "best_crp_hindsight",
    "split_and_forget",
    "worker_count",
]

# Fixed partition of the work; results do not depend on the thread count.
POINT_BLOCK = 4096
TIME_CHUNK = 256


@dataclass(frozen=True)
class WealthPath:
    """Portfolio value at t = 0..T, starting at 1.

    ``stderr`` is the Monte Carlo standard error of each value, or None when
    the value came from a quadrature rule (or is not an estimate at all).
    """

    values: np.ndarray
    stderr: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise ValueError("wealth path must be a non-empty vector")
        if v[0] != 1.0:
            raise ValueError(f"wealth path must start at 1, got {v[0]!r}")
        if not np.all(v > 0):
            raise ValueError("wealth path values must be positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def final(self) -> float:
        return float(self.values[-1])

    @property
    def final_stderr(self) -> float:
        return 0.0 if self.stderr is None else float(self.stderr[-1])

    def relatives(self) -> np.ndarray:
        return self.values[1:] / self.values[:-1]

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class AllocationPath:
    """``allocations[t]`` is held over the transition t -> t+1, t = 0..T-1."""

    allocations: np.ndarray


def crp_value(market: Market, w: Sequence[float]) -> WealthPath:
    w = check_simplex_point(w)
    if w.size != market.K:
        raise ValueError(f"weights have dimension {w.size}, market has K={market.K}")
    out = np.ones(market.T + 1)
    np.cumprod(market.relatives @ w, out=out[1:])
    return WealthPath(out)


def worker_count() -> int:
    env = os.environ.get("HOUP_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass
class _Stats:
    # Per time t = 0..T, all scaled by exp(-shift[t]):
    shift: np.ndarray  # (T+1,)
    mass: np.ndarray  # sum_j p_j V_j
    moment: np.ndarray  # (T+1, K), sum_j p_j w_j V_j
    square: np.ndarray  # sum_j p_j^2 V_j^2

    def merge(self, other: "_Stats") -> "_Stats":
        shift = np.maximum(self.shift, other.shift)
        a = np.exp(self.shift - shift)
        b = np.exp(other.shift - shift)
        return _Stats(
            shift,
            self.mass * a + other.mass * b,
            self.moment * a[:, None] + other.moment * b[:, None],
            self.square * a * a + other.square * b * b,
        )


def _block_stats(points: np.ndarray, log_p: np.ndarray, relatives: np.ndarray) -> _Stats:
    n_t = relatives.shape[0]
    K = points.shape[1]
    shift = np.empty(n_t + 1)
    mass = np.empty(n_t + 1)
    moment = np.empty((n_t + 1, K))
    square = np.empty(n_t + 1)

    def record(cols: np.ndarray, lo: int):
        # cols: (n_points, c) log of p_j V_j(t) for t = lo..lo+c-1
        m = cols.max(axis=0)
        e = np.exp(cols - m)
        hi = lo + cols.shape[1]
        shift[lo:hi] = m
        mass[lo:hi] = e.sum(axis=0)
        moment[lo:hi] = e.T @ points
        square[lo:hi] = (e * e).sum(axis=0)

    log_v = log_p.copy()
    record(log_v[:, None], 0)
    for lo in range(0, n_t, TIME_CHUNK):
        chunk = relatives[lo : lo + TIME_CHUNK]
        cols = log_v[:, None] + np.cumsum(np.log(points @ chunk.T), axis=1)
        log_v = cols[:, -1].copy()
        record(cols, lo + 1)
    return _Stats(shift, mass, moment, square)


def _mixture_stats(ps: PointSet, relatives: np.ndarray) -> _Stats:
    log_p = np.log(ps.weights)
    starts = range(0, len(ps), POINT_BLOCK)

    def run(lo: int) -> _Stats:
        hi = lo + POINT_BLOCK
        return _block_stats(ps.points[lo:hi], log_p[lo:hi], relatives)

    workers = min(worker_count(), len(starts))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(lo) for lo in starts]
    # reduce in block order regardless of how the blocks were scheduled
    total = parts[0]
    for part in parts[1:]:
        total = total.merge(part)
    return total


def mixture_average(ps: PointSet, market: Market) -> tuple[WealthPath, AllocationPath]:
    """Universal portfolio for an explicit weighted point set."""
    if ps.dim != market.K:
        raise ValueError(f"point set has dimension {ps.dim}, market has K={market.K}")
    st = _mixture_stats(ps, market.relatives)
    # normalise by the t = 0 mass so that values[0] is exactly 1
    scale = np.exp(st.shift - st.shift[0]) / st.mass[0]
    values = st.mass * scale
    values[0] = 1.0
    alloc = st.moment[:-1] / st.mass[:-1, None]
    stderr = None
    if not ps.exact:
        n = len(ps)
        if n > 1:
            # equal weights p = 1/n: mean(V^2) = n * sum p^2 V^2
            second = n * st.square * scale * scale
            var = np.maximum(second - values * values, 0.0) * n / (n - 1)
            stderr = np.sqrt(var / n)
        else:
            stderr = np.full(values.shape, np.inf)
        stderr[0] = 0.0
    return WealthPath(values, stderr), AllocationPath(alloc)


def universal_portfolio(market: Market, spec: SamplerSpec) -> tuple[WealthPath, AllocationPath]:
    """Cover's universal portfolio estimated on the sampler's fixed point set.

    The value at t is the sampler's average of CRP values; the allocation at
    t is the CRP-value-weighted average of the weights. Because both use the
    same points, ``values[t+1] == values[t] * <allocations[t], f_{t+1}>`` up
    to rounding for every scheme.
    """
    return mixture_average(point_set(market.K, spec), market)


def _log_wealth(market: Market, w: np.ndarray) -> np.ndarray:
    """Final log wealth of each row of ``w``."""
    return np.log(w @ market.relatives.T).sum(axis=-1)


def _compositions(total: int, parts: int):
    # stars and bars
    for bars in combinations(range(total + parts - 1), parts - 1):
        prev = -1
        comp = []
        for b in bars:
            comp.append(b - prev - 1)
            prev = b
        comp.append(total + parts - 2 - prev)
        yield comp


def best_crp_hindsight(market: Market, resolution: int | None = None) -> tuple[np.ndarray, WealthPath]:
    """Constant rebalanced portfolio with the largest final wealth.

    Two assets: a scan of ``resolution`` points (default 1024) then
    golden-section refinement of the concave log-wealth. More assets: best
    point of the grid with spacing ``1/resolution`` (default 20).
    """
    K = market.K
    if K == 1:
        w = np.ones(1)
    elif K == 2:
        n = resolution or 1024
        x = np.linspace(0.0, 1.0, n)
        lw = _log_wealth(market, np.column_stack([x, 1.0 - x]))
        i = int(np.argmax(lw))
        lo, hi = x[max(i - 1, 0)], x[min(i + 1, n - 1)]

        def f(v: float) -> float:
            return float(_log_wealth(market, np.array([v, 1.0 - v])))

        g = (math.sqrt(5.0) - 1.0) / 2.0
        c, d = hi - g * (hi - lo), lo + g * (hi - lo)
        fc, fd = f(c), f(d)
        while hi - lo > 1e-10:
            if fc >= fd:
                hi, d, fd = d, c, fc
                c = hi - g * (hi - lo)
                fc = f(c)
            else:
                lo, c, fc = c, d, fd
                d = lo + g * (hi - lo)
                fd = f(d)
        best, best_val = x[i], lw[i]
        for cand in (lo, hi, (lo + hi) / 2.0):
            val = f(cand)
            if val > best_val:
                best, best_val = cand, val
        w = np.array([best, 1.0 - best])
    else:
        r = resolution or 20
        grid = np.array(list(_compositions(r, K)), dtype=float) / r
        w = grid[int(np.argmax(_log_wealth(market, grid)))]
    return w, crp_value(market, w)


def split_and_forget(market: Market) -> WealthPath:
    """Equal initial split, never rebalanced."""
    return WealthPath(market.cumulative().mean(axis=1))
