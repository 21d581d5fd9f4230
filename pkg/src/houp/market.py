"""Markets as T x K matrices of price relatives.

Row ``t`` (0-based) holds the multipliers for the transition t -> t+1.
Prices never appear; cumulative wealth is derived on demand.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Market",
    "Permutation",
    "MarketError",
    "load_csv",
    "save_csv",
    "toy_market",
    "market_from_rows",
    "permute",
    "augment",
]


class MarketError(ValueError):
    """Bad market data or an invalid market operation."""


def _fmt(x: float) -> str:
    return f"{x:.17g}"


@dataclass(frozen=True)
class Market:
    labels: tuple[str, ...]
    relatives: np.ndarray  # (T, K), read-only

    def __post_init__(self):
        rel = np.array(self.relatives, dtype=float, copy=True)
        if rel.ndim != 2 or rel.shape[0] < 1 or rel.shape[1] < 1:
            raise MarketError(f"relatives must be a non-empty T x K matrix, got shape {rel.shape}")
        labels = tuple(str(lab) for lab in self.labels)
        if len(labels) != rel.shape[1]:
            raise MarketError(f"{len(labels)} labels for {rel.shape[1]} columns")
        if len(set(labels)) != len(labels):
            raise MarketError(f"labels are not unique: {labels}")
        bad = np.argwhere(~(rel > 0) | ~np.isfinite(rel))
        if bad.size:
            t, k = bad[0]
            raise MarketError(
                f"price relative at row {t + 1}, column {labels[k]!r} must be positive and finite, "
                f"got {rel[t, k]!r}"
            )
        rel.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "relatives", rel)

    @property
    def T(self) -> int:
        return self.relatives.shape[0]

    @property
    def K(self) -> int:
        return self.relatives.shape[1]

    def cumulative(self) -> np.ndarray:
        """Asset wealth paths, shape (T+1, K), starting at 1."""
        out = np.ones((self.T + 1, self.K))
        np.cumprod(self.relatives, axis=0, out=out[1:])
        return out

    def select(self, labels: Sequence[str]) -> "Market":
        idx = []
        for lab in labels:
            if lab not in self.labels:
                raise MarketError(f"unknown asset label {lab!r}")
            idx.append(self.labels.index(lab))
        return Market(tuple(labels), self.relatives[:, idx])

    def __eq__(self, other):
        if not isinstance(other, Market):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.relatives, other.relatives)

    __hash__ = None


@dataclass(frozen=True)
class Permutation:
    """Bijection of time indices, stored 0-based.

    ``mapping[t]`` is the source row for output row ``t``.
    """

    mapping: tuple[int, ...]

    def __post_init__(self):
        m = tuple(int(i) for i in self.mapping)
        if sorted(m) != list(range(len(m))):
            raise MarketError(f"not a permutation of 0..{len(m) - 1}: {m}")
        object.__setattr__(self, "mapping", m)

    def __len__(self):
        return len(self.mapping)

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.mapping)
        for t, s in enumerate(self.mapping):
            inv[s] = t
        return Permutation(tuple(inv))

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def parse(cls, text: str, n: int) -> "Permutation":
        """Parse ``reverse``, ``identity``, ``swap:i,j`` or ``i,j,k,...``.

        Indices in the text are 1-based, like the rows of a data file.
        """
        text = text.strip()
        try:
            if text == "reverse":
                return cls(tuple(range(n - 1, -1, -1)))
            if text == "identity":
                return cls.identity(n)
            if text.startswith("swap:"):
                i, j = (int(s) - 1 for s in text[5:].split(","))
                if not (0 <= i < n and 0 <= j < n):
                    raise MarketError(f"swap indices out of range 1..{n}: {text!r}")
                m = list(range(n))
                m[i], m[j] = m[j], m[i]
                return cls(tuple(m))
            m = tuple(int(s) - 1 for s in text.split(","))
        except ValueError as exc:
            if isinstance(exc, MarketError):
                raise
            raise MarketError(f"malformed permutation {text!r}") from exc
        if len(m) != n:
            raise MarketError(f"permutation has {len(m)} entries, market has {n} rows")
        return cls(m)


def market_from_rows(rows: Iterable[Sequence[float]], labels: Sequence[str] | None = None) -> Market:
    rel = np.array([[float(v) for v in row] for row in rows], dtype=float)
    if labels is None:
        labels = [f"asset{k + 1}" for k in range(rel.shape[1] if rel.ndim == 2 else 0)]
    return Market(tuple(labels), rel)


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def load_csv(
    path: str | os.PathLike,
    has_header: bool | None = None,
    select: Sequence[str] | None = None,
    kind: str = "relatives",
) -> Market:
    """Read a price-relative file: one row per period, one column per asset.

    ``has_header=None`` treats the first row as a header when any of its
    cells is non-numeric. With ``kind="prices"`` the cells are prices and
    are turned into T-1 rows of relatives.
    """
    if kind not in ("relatives", "prices"):
        raise MarketError(f"kind must be 'relatives' or 'prices', got {kind!r}")
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise MarketError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if not rows:
        raise MarketError(f"{path}: no data")
    if has_header is None:
        has_header = not all(_is_number(c) for c in rows[0])
    if has_header:
        labels = [c.strip() for c in rows[0]]
        body = rows[1:]
    else:
        labels = [f"asset{k + 1}" for k in range(len(rows[0]))]
        body = rows
    if not body:
        raise MarketError(f"{path}: header but no data rows")
    data = np.empty((len(body), len(labels)))
    for t, row in enumerate(body):
        if len(row) != len(labels):
            raise MarketError(f"{path}: row {t + 1} has {len(row)} cells, expected {len(labels)}")
        for k, cell in enumerate(row):
            try:
                data[t, k] = float(cell)
            except ValueError:
                raise MarketError(
                    f"{path}: non-numeric value {cell!r} at row {t + 1}, column {labels[k]!r}"
                ) from None
            if not data[t, k] > 0:
                raise MarketError(
                    f"{path}: non-positive value {cell!r} at row {t + 1}, column {labels[k]!r}"
                )
    if kind == "prices":
        if data.shape[0] < 2:
            raise MarketError(f"{path}: need at least two price rows")
        data = data[1:] / data[:-1]
    market = Market(tuple(labels), data)
    if select:
        market = market.select(select)
    return market


def save_csv(market: Market, path: str | os.PathLike | None = None) -> str:
    """Write ``market`` with a header row, 17 significant digits per cell."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(market.labels)
    for row in market.relatives:
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def toy_market(steps: int = 50) -> Market:
    """A constant asset next to one alternating x2, x1/2, x2, ..."""
    if steps < 1:
        raise MarketError(f"steps must be >= 1, got {steps}")
    osc = np.where(np.arange(steps) % 2 == 0, 2.0, 0.5)
    return Market(("cash", "oscillating"), np.column_stack([np.ones(steps), osc]))


def permute(market: Market, sigma: Permutation | Sequence[int]) -> Market:
    if not isinstance(sigma, Permutation):
        sigma = Permutation(tuple(sigma))
    if len(sigma) != market.T:
        raise MarketError(f"permutation of length {len(sigma)} for a market with T={market.T}")
    return Market(market.labels, market.relatives[list(sigma.mapping)])


def augment(market: Market, label: str, path: Sequence[float]) -> Market:
    """Append a synthetic asset whose wealth path is ``path`` (length T+1)."""
    v = np.asarray(getattr(path, "values", path), dtype=float)
    if v.shape != (market.T + 1,):
        raise MarketError(f"path has {v.size} values, expected T+1 = {market.T + 1}")
    if not np.all(v > 0):
        raise MarketError("path values must all be positive")
    if label in market.labels:
        raise MarketError(f"duplicate label {label!r}")
    col = v[1:] / v[:-1]
    return Market(market.labels + (label,), np.column_stack([market.relatives, col]))
