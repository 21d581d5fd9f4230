"""Exact rational evaluation of universal portfolios on tiny markets.

The value of the universal portfolio at time t is the simplex average of
prod_s <w, f_s>. Expanding the product gives a polynomial in w whose
monomials are averaged with the exact Dirichlet(1, ..., 1) moments, so every
number below is a ``Fraction`` and nothing touches floating point.
"""

from __future__ import annotations

import json
import sys
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence, TextIO

from .simplex import exact_moment

__all__ = [
    "ENUMERATION_LIMIT",
    "bounded",
    "OracleError",
    "RationalMarket",
    "exact_up_value",
    "exact_up_path",
    "exact_up_allocation",
    "exact_up1_2_closed_form",
    "exact_up1_3_closed_form",
    "exact_up2_2_closed_form",
    "exact_houp_value",
    "exact_houp_paths",
    "swapped_third_moments",
    "Check",
    "VerifyReport",
    "paper_checks",
    "verify_paper",
    "TABLE1",
    "TABLE2",
    "TABLE3",
]

ENUMERATION_LIMIT = 10**6

Moment = Callable[[Sequence[int]], Fraction]


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class RationalMarket:
    rows: tuple[tuple[Fraction, ...], ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        rows = tuple(tuple(Fraction(v) for v in row) for row in self.rows)
        if rows and len({len(r) for r in rows}) != 1:
            raise OracleError("ragged market rows")
        if any(v <= 0 for r in rows for v in r):
            raise OracleError("price relatives must be positive")
        k = len(rows[0]) if rows else len(self.labels)
        labels = tuple(self.labels) or tuple(f"asset{i + 1}" for i in range(k))
        if rows and len(labels) != k:
            raise OracleError(f"{len(labels)} labels for {k} columns")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)

    @property
    def T(self) -> int:
        return len(self.rows)

    @property
    def K(self) -> int:
        return len(self.labels)

    @classmethod
    def from_columns(cls, *columns: Sequence, labels: Sequence[str] = ()) -> "RationalMarket":
        return cls(tuple(zip(*columns)), tuple(labels))

    @classmethod
    def from_market(cls, market) -> "RationalMarket":
        """Exact binary values of a floating ``Market``."""
        return cls(tuple(tuple(Fraction(float(v)) for v in row) for row in market.relatives), market.labels)

    def column(self, k: int) -> tuple[Fraction, ...]:
        return tuple(r[k] for r in self.rows)

    def with_column(self, label: str, values: Sequence[Fraction]) -> "RationalMarket":
        return RationalMarket(tuple(r + (Fraction(v),) for r, v in zip(self.rows, values)), self.labels + (label,))

    def head(self, t: int) -> "RationalMarket":
        return RationalMarket(self.rows[:t], self.labels)

    def permuted(self, mapping: Sequence[int]) -> "RationalMarket":
        """Row t of the result is row ``mapping[t]`` (0-based)."""
        return RationalMarket(tuple(self.rows[s] for s in mapping), self.labels)


TABLE1 = RationalMarket.from_columns((1, 2), (2, 1), labels=("a", "b"))
TABLE2 = RationalMarket.from_columns((1, 2, 2), (2, 1, 1), labels=("a", "b"))
TABLE3 = TABLE2.permuted((2, 1, 0))


def _check_bound(K: int, t: int) -> None:
    if K**t > ENUMERATION_LIMIT:
        raise OracleError(f"{K}^{t} index tuples exceed the enumeration limit {ENUMERATION_LIMIT}")


def _expand(market: RationalMarket, t: int) -> dict[tuple[int, ...], Fraction]:
    """Coefficients of prod_{s<t} <w, f_s> as a polynomial in w."""
    K = market.K
    poly: dict[tuple[int, ...], Fraction] = {(0,) * K: Fraction(1)}
    for s in range(t):
        row = market.rows[s]
        nxt: dict[tuple[int, ...], Fraction] = defaultdict(Fraction)
        for exps, coef in poly.items():
            for k in range(K):
                e = list(exps)
                e[k] += 1
                nxt[tuple(e)] += coef * row[k]
        poly = nxt
    return poly


def exact_up_value(market: RationalMarket, t: int, moment: Moment = exact_moment) -> Fraction:
    """Value at time t of the universal portfolio, as an exact fraction."""
    if not 0 <= t <= market.T:
        raise OracleError(f"t must be in 0..{market.T}, got {t}")
    _check_bound(market.K, t)
    return sum((c * moment(e) for e, c in _expand(market, t).items()), Fraction(0))


def exact_up_path(market: RationalMarket, t: int | None = None, moment: Moment = exact_moment) -> list[Fraction]:
    t = market.T if t is None else t
    _check_bound(market.K, t)
    return [exact_up_value(market, s, moment) for s in range(t + 1)]


def exact_up_allocation(market: RationalMarket, t: int, moment: Moment = exact_moment) -> tuple[Fraction, ...]:
    """Allocation held over t -> t+1: E[w V_t] / E[V_t]."""
    _check_bound(market.K, t + 1)
    poly = _expand(market, t)
    denom = sum((c * moment(e) for e, c in poly.items()), Fraction(0))
    out = []
    for k in range(market.K):
        num = Fraction(0)
        for e, c in poly.items():
            bumped = list(e)
            bumped[k] += 1
            num += c * moment(bumped)
        out.append(num / denom)
    return tuple(out)


def exact_up1_2_closed_form(a: Sequence, b: Sequence) -> Fraction:
    a1, a2 = map(Fraction, a[:2])
    b1, b2 = map(Fraction, b[:2])
    return (2 * a1 * a2 + 2 * b1 * b2 + a1 * b2 + a2 * b1) / 6


def exact_up1_3_closed_form(a: Sequence, b: Sequence) -> Fraction:
    a1, a2, a3 = map(Fraction, a[:3])
    b1, b2, b3 = map(Fraction, b[:3])
    return ((a1 + b1) * (a2 + b2) * (a3 + b3) + 2 * a1 * a2 * a3 + 2 * b1 * b2 * b3) / 12


def exact_up2_2_closed_form(a: Sequence, b: Sequence) -> Fraction:
    a1, a2 = map(Fraction, a[:2])
    b1, b2 = map(Fraction, b[:2])
    return (23 * a1 * a2 + 23 * b1 * b2 + 13 * a1 * b2 + 13 * a2 * b1) / 72


def exact_houp_paths(
    market: RationalMarket, order: int, t: int | None = None, moment: Moment = exact_moment
) -> list[list[Fraction]]:
    """Exact value paths of levels 1..order up to time t."""
    if order < 1:
        raise OracleError(f"order must be >= 1, got {order}")
    t = market.T if t is None else t
    if not 0 <= t <= market.T:
        raise OracleError(f"t must be in 0..{market.T}, got {t}")
    _check_bound(market.K + order - 1, t)
    current = market.head(t)
    paths = []
    for level in range(1, order + 1):
        path = exact_up_path(current, t, moment)
        paths.append(path)
        if level < order:
            rel = [path[s] / path[s - 1] for s in range(1, t + 1)]
            current = current.with_column(f"UP{level}", rel)
    return paths


def exact_houp_value(market: RationalMarket, order: int, t: int, moment: Moment = exact_moment) -> Fraction:
    return exact_houp_paths(market, order, t, moment)[-1][t]


def swapped_third_moments(exponents: Sequence[int]) -> Fraction:
    """Moments with the S_3 cases 'all distinct' and 'all equal' exchanged.

    A deliberately wrong table, kept as a regression hook for the verifier.
    """
    e = tuple(exponents)
    if len(e) == 3 and sum(e) == 3:
        if sorted(e) == [1, 1, 1]:
            return Fraction(1, 10)
        if sorted(e) == [0, 0, 3]:
            return Fraction(1, 60)
    return exact_moment(e)


@dataclass
class Check:
    name: str
    expected: Fraction
    computed: Fraction | None
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and self.computed == self.expected

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "expected": str(self.expected),
            "computed": None if self.computed is None else str(self.computed),
            "passed": self.passed,
            **({"error": self.error} if self.error else {}),
        }


@dataclass
class VerifyReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def n_failed(self) -> int:
        return sum(not c.passed for c in self.checks)

    def to_text(self, verbose: bool = False) -> str:
        lines = []
        width = max((len(c.name) for c in self.checks), default=0)
        for c in self.checks:
            tag = "PASS" if c.passed else "FAIL"
            line = f"{tag}  {c.name:<{width}}"
            if verbose or not c.passed:
                line += f"  expected {c.expected}  computed {c.computed}"
                if c.error:
                    line += f"  ({c.error})"
            lines.append(line)
        lines.append(f"{len(self.checks) - self.n_failed}/{len(self.checks)} checks passed")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(
            {"passed": self.passed, "n_checks": len(self.checks), "n_failed": self.n_failed,
             "checks": [c.as_dict() for c in self.checks]},
            indent=2,
        )


def _check(name: str, expected, compute: Callable[[], Fraction]) -> Check:
    try:
        return Check(name, Fraction(expected), compute())
    except Exception as exc:  # reported, never raised
        return Check(name, Fraction(expected), None, f"{type(exc).__name__}: {exc}")


def _relative(market: RationalMarket, t: int, moment: Moment) -> Fraction:
    return exact_up_value(market, t, moment) / exact_up_value(market, t - 1, moment)


def paper_checks(moment: Moment = exact_moment) -> list[Check]:
    """Every closed-form value of the two-asset counterexamples."""
    F = Fraction
    a1, b1 = TABLE1.column(0), TABLE1.column(1)
    a2, b2 = TABLE2.column(0), TABLE2.column(1)
    a3, b3 = TABLE3.column(0), TABLE3.column(1)
    checks = [
        _check("moment S3 E[w1 w2]", F(1, 12), lambda: moment((1, 1, 0))),
        _check("moment S3 E[w1^2]", F(1, 6), lambda: moment((2, 0, 0))),
        _check("moment S3 E[w1 w2 w3]", F(1, 60), lambda: moment((1, 1, 1))),
        _check("moment S3 E[w1^2 w2]", F(1, 30), lambda: moment((2, 1, 0))),
        _check("moment S3 E[w1^3]", F(1, 10), lambda: moment((3, 0, 0))),
        _check("table1 u1[0] = (2a1+b1)/(3(a1+b1))", F(2 * 1 + 2, 3 * 3),
               lambda: exact_up_allocation(TABLE1, 1, moment)[0]),
        _check("table1 u1[1] = (2b1+a1)/(3(a1+b1))", F(2 * 2 + 1, 3 * 3),
               lambda: exact_up_allocation(TABLE1, 1, moment)[1]),
        _check("table1 UP1_1 = (a1+b1)/2", F(3, 2), lambda: exact_up_value(TABLE1, 1, moment)),
        _check("table1 UP1_2", F(13, 6), lambda: exact_up_value(TABLE1, 2, moment)),
        _check("table1 UP1_2 closed form", exact_up1_2_closed_form(a1, b1),
               lambda: exact_up_value(TABLE1, 2, moment)),
        _check("table1 UP2_2", F(157, 72), lambda: exact_houp_value(TABLE1, 2, 2, moment)),
        _check("table1 UP2_2 closed form", exact_up2_2_closed_form(a1, b1),
               lambda: exact_houp_value(TABLE1, 2, 2, moment)),
        _check("table2 c1", F(3, 2), lambda: _relative(TABLE2, 1, moment)),
        _check("table2 c2", F(13, 9), lambda: _relative(TABLE2, 2, moment)),
        _check("table2 c3", F(3, 2), lambda: _relative(TABLE2, 3, moment)),
        _check("table3 c1", F(3, 2), lambda: _relative(TABLE3, 1, moment)),
        _check("table3 c2", F(14, 9), lambda: _relative(TABLE3, 2, moment)),
        _check("table3 c3", F(39, 28), lambda: _relative(TABLE3, 3, moment)),
        _check("table2 UP1_3", F(13, 4), lambda: exact_up_value(TABLE2, 3, moment)),
        _check("table3 UP1_3", F(13, 4), lambda: exact_up_value(TABLE3, 3, moment)),
        _check("table2 UP1_3 closed form", exact_up1_3_closed_form(a2, b2),
               lambda: exact_up_value(TABLE2, 3, moment)),
        _check("table3 UP1_3 closed form", exact_up1_3_closed_form(a3, b3),
               lambda: exact_up_value(TABLE3, 3, moment)),
        _check("table2 UP2_3", F(3533, 1080), lambda: exact_houp_value(TABLE2, 2, 3, moment)),
        _check("table3 UP2_3", F(49457, 15120), lambda: exact_houp_value(TABLE3, 2, 3, moment)),
    ]
    return checks


def verify_paper(
    out: TextIO | None = None,
    checks: Iterable[Check] | None = None,
    moment: Moment = exact_moment,
    verbose: bool = False,
) -> VerifyReport:
    """Run the checks and write a plain-text report to ``out`` (stdout by default)."""
    report = VerifyReport(list(paper_checks(moment) if checks is None else checks))
    (out or sys.stdout).write(report.to_text(verbose))
    return report


def bounded(K: int, t: int) -> bool:
    """True when the oracle can handle K assets over t steps."""
    return K**t <= ENUMERATION_LIMIT
