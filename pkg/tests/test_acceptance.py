"""Exit criteria. Each test records one PASS/FAIL line, printed at the end
of the run under "acceptance criteria"."""

import io
import math
import os
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from houp.cli import main
from houp.highorder import houp
from houp.market import Market, load_csv, market_from_rows, permute, toy_market
from houp.oracle import TABLE2, TABLE3, RationalMarket, exact_houp_value, exact_up_path, verify_paper
from houp.portfolio import best_crp_hindsight, universal_portfolio
from houp.simplex import SamplerSpec

QUAD = SamplerSpec()
UP2_TABLE2 = Fraction(3533, 1080)
UP2_TABLE3 = Fraction(49457, 15120)


def test_criterion_1_exact_reproduction(acceptance):
    start = time.perf_counter()
    report = verify_paper(io.StringIO())
    elapsed = time.perf_counter() - start
    names = {c.name: c for c in report.checks}
    required = {
        "table2 c1": Fraction(3, 2), "table2 c2": Fraction(13, 9), "table2 c3": Fraction(3, 2),
        "table3 c2": Fraction(14, 9), "table3 c3": Fraction(39, 28),
        "table2 UP1_3": Fraction(13, 4), "table3 UP1_3": Fraction(13, 4),
        "table2 UP2_3": UP2_TABLE2, "table3 UP2_3": UP2_TABLE3,
        "moment S3 E[w1 w2]": Fraction(1, 12), "moment S3 E[w1^2]": Fraction(1, 6),
        "moment S3 E[w1 w2 w3]": Fraction(1, 60), "moment S3 E[w1^2 w2]": Fraction(1, 30),
        "moment S3 E[w1^3]": Fraction(1, 10),
    }
    ok = report.passed and elapsed < 1.0 and all(
        names[n].passed and names[n].computed == v for n, v in required.items())
    acceptance(1, "exact rational reproduction", ok,
               f"{len(report.checks)} checks, {report.n_failed} failed, {elapsed:.3f}s")
    assert ok, report.to_text(verbose=True)


def test_criterion_2_engine_vs_oracle(acceptance):
    rng = np.random.default_rng(20231122)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        T = int(rng.integers(1, 16))
        num = rng.integers(1, 40, size=(T, 2))
        den = rng.integers(1, 20, size=(T, 2))
        rm = RationalMarket(tuple(tuple(Fraction(int(n), int(d)) for n, d in zip(rn, rd))
                                  for rn, rd in zip(num, den)))
        # floats of the fractions; the oracle then evaluates those exact binary values
        m = Market(rm.labels, [[float(v) for v in row] for row in rm.rows])
        exact = exact_up_path(RationalMarket.from_market(m))
        path, _ = universal_portfolio(m, QUAD)
        rel = max(abs(v - float(e)) / float(e) for v, e in zip(path.values, exact))
        worst = max(worst, rel)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed < 10.0
    acceptance(2, "16-node quadrature vs exact oracle", ok, f"max rel err {worst:.2e}, {elapsed:.2f}s")
    assert ok


def test_criterion_3_monte_carlo_convergence(acceptance):
    m = market_from_rows(TABLE2.rows)
    target = float(UP2_TABLE2)
    sizes = (10**4, 10**5, 10**6)
    bracket = []
    for M in sizes:
        p = houp(m, 2, SamplerSpec(samples=M, seed=0)).paths[1]
        bracket.append((M, abs(p.final - target), p.final_stderr))
    within = all(err <= 3 * se for _, err, se in bracket)
    # error scaling: root-mean-square error over independent seeds at each M
    seeds = range(1, 17)
    rms = []
    for M in sizes:
        errs = [houp(m, 2, SamplerSpec(samples=M, seed=s)).paths[1].final - target for s in seeds]
        rms.append(math.sqrt(np.mean(np.square(errs))))
    slope = np.polyfit(np.log(sizes), np.log(rms), 1)[0]
    ok = within and abs(slope + 0.5) <= 0.15
    detail = "; ".join(f"M={M}: |err|={e:.2e} <= 3*{se:.2e}" for M, e, se in bracket)
    acceptance(3, "Monte Carlo convergence to 3533/1080", ok, f"{detail}; rms slope {slope:.3f}")
    assert within, detail
    assert abs(slope + 0.5) <= 0.15, slope


def test_criterion_4_permutations(acceptance):
    rng = np.random.default_rng(4)
    m = Market(("a", "b"), rng.uniform(0.5, 1.6, size=(10, 2)))
    base = universal_portfolio(m, QUAD)[0].final
    worst = 0.0
    for _ in range(20):
        shuffled = permute(m, rng.permutation(10))
        worst = max(worst, abs(universal_portfolio(shuffled, QUAD)[0].final - base) / base)
    gap = exact_houp_value(TABLE2, 2, 3) - exact_houp_value(TABLE3, 2, 3)
    expected_gap = UP2_TABLE2 - UP2_TABLE3
    ok = worst <= 1e-10 and gap == expected_gap and gap != 0
    acceptance(4, "permutation behaviour", ok, f"level-1 max rel delta {worst:.1e}; level-2 gap {gap}")
    assert ok


def test_criterion_5_toy_benchmark(acceptance):
    m = toy_market(50)
    result = houp(m, 10, SamplerSpec(seed=1))
    # quadrature of the CRP products, written out directly
    x, q = np.polynomial.legendre.leggauss(16)
    xs = (1 + x) / 2
    crp = np.array([np.prod(xi * m.relatives[:, 0] + (1 - xi) * m.relatives[:, 1]) for xi in xs])
    integral = float(np.sum(q / 2 * crp))
    up1_err = abs(result.paths[0].final - integral) / integral
    w, best = best_crp_hindsight(m)
    finals, se = result.finals(), result.final_stderrs()
    steps = [finals[l] - finals[l - 1] + 2 * math.hypot(se[l], se[l - 1]) for l in range(1, 10)]
    ok_up1 = up1_err <= 1e-9
    ok_best = abs(w[0] - 0.5) <= 1e-4 and abs(best.final - 1.125**25) <= 1e-9 * 1.125**25
    ok_mono = all(s >= 0 for s in steps)
    ok = ok_up1 and ok_best and ok_mono
    acceptance(5, "toy market T=50", ok,
               f"UP1 rel err {up1_err:.1e}; best w={w[0]:.6f} final {best.final:.4f}; "
               f"UP finals {finals[0]:.3f}..{finals[-1]:.3f}")
    assert ok_up1 and ok_best and ok_mono, (up1_err, w, best.final, finals, se)


# Column names seen in circulation: ticker-like names, or the single letters
# of the universal-portfolios copy (E coke, F comme, R ibm, T iroqu, W kinar,
# Z meico, identified from the final wealth of each column).
IROQUOIS = ("iroqu", "iroquois", "t")
KIN_ARK = ("kinar", "kin_ark", "kinark", "w")
COMM_METALS = ("comme", "comm_metals", "commercial_metals", "f")
MEICCO = ("meico", "meicco", "z")
IBM = ("ibm", "r")
COKE = ("coke", "coca_cola", "cocacola", "e")

NYSE_PAIRS = {
    "iroquois-kinark": (IROQUOIS, KIN_ARK),
    "commetals-kinark": (COMM_METALS, KIN_ARK),
    "commetals-meicco": (COMM_METALS, MEICCO),
    "ibm-coke": (IBM, COKE),
}


def _nyse_path():
    env = os.environ.get("HOUP_NYSE_CSV")
    candidates = [Path(env)] if env else []
    root = Path(__file__).resolve().parents[1]
    candidates += [root / "data" / "nyse_o.csv", root / "tests" / "data" / "nyse_o.csv"]
    return next((p for p in candidates if p.is_file()), None)


def _pick(labels, aliases):
    lowered = {lab.lower(): lab for lab in labels}
    for a in aliases:
        if a in lowered:
            return lowered[a]
    raise KeyError(aliases)


@pytest.fixture(scope="module")
def nyse():
    path = _nyse_path()
    if path is None:
        pytest.skip("criterion 6: nyse_o.csv not found (set HOUP_NYSE_CSV or place it at data/nyse_o.csv)")
    market = load_csv(path)
    # the public file is often distributed as normalised prices
    if np.quantile(np.abs(market.relatives - 1.0), 0.95) > 0.2:
        market = load_csv(path, kind="prices")
    return market


@pytest.mark.parametrize("pair", list(NYSE_PAIRS))
def test_criterion_6_old_nyse(pair, nyse, acceptance):
    labels = [_pick(nyse.labels, aliases) for aliases in NYSE_PAIRS[pair]]
    m = nyse.select(labels)
    start = time.perf_counter()
    finals = houp(m, 10, SamplerSpec(samples=10_000, seed=0)).finals()
    elapsed = time.perf_counter() - start
    up1, up10 = finals[0], finals[-1]
    if pair == "iroquois-kinark":
        ok = 37 <= up1 <= 45 and 44 <= up10 <= 54
    elif pair == "commetals-kinark":
        ok = abs(up1 - 80) <= 8 and abs(up10 - 90) <= 9
    elif pair == "commetals-meicco":
        ok = abs(up1 - 72) <= 7.2 and abs(up10 - 80) <= 8
    else:
        ok = bool(np.all(np.abs(finals - up1) <= 0.15 * up1)) and 13 * 0.5 <= up1 <= 13 * 1.5
    ok = ok and elapsed < 300
    acceptance(6, f"Old-NYSE {pair} (T={m.T})", ok, f"UP1 {up1:.2f}, UP10 {up10:.2f}, {elapsed:.1f}s")
    assert ok, finals


def test_criterion_7_determinism(tmp_path, monkeypatch, capsys, acceptance):
    commands = [
        ["run", "--generator", "toy", "--orders", "5", "--seed", "3", "--format", "csv"],
        ["run", "--generator", "table2", "--orders", "3", "--samples", "50000", "--format", "json"],
        ["permute", "--generator", "table2", "--perm", "swap:1,3", "--orders", "2"],
    ]
    mismatches = []
    for i, cmd in enumerate(commands):
        outputs = []
        for run, threads in enumerate(("1", "8")):
            monkeypatch.setenv("HOUP_THREADS", threads)
            out = tmp_path / f"c{i}r{run}"
            assert main(cmd + ["--out", str(out)]) == 0
            stdout = capsys.readouterr().out.replace(str(out), "<out>")
            files = {p.relative_to(out).as_posix(): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}
            outputs.append((stdout, files))
        if outputs[0] != outputs[1]:
            mismatches.append(" ".join(cmd))
    reports = []
    for _ in range(2):
        assert main(["verify", "-v"]) == 0
        reports.append(capsys.readouterr().out)
    if reports[0] != reports[1]:
        mismatches.append("verify")
    ok = not mismatches
    acceptance(7, "bit-identical reruns", ok, "mismatch: " + ", ".join(mismatches) if mismatches else
               f"{len(commands) + 1} commands compared")
    assert ok
