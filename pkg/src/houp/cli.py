"""Command-line front end.

    houp run     --generator toy --orders 10 --out results/
    houp run     --data nyse_o.csv --assets iroquois,kin_ark --orders 10 --out results/
    houp permute --generator table2 --perm swap:1,3 --orders 2
    houp verify  -v

Exit status: 0 success, 1 failed verification, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .highorder import HoupResult, houp, level_label
from .market import Market, MarketError, Permutation, load_csv, market_from_rows, permute, toy_market
from .oracle import (
    TABLE1,
    TABLE2,
    RationalMarket,
    bounded,
    exact_houp_paths,
    swapped_third_moments,
    verify_paper,
)
from .portfolio import best_crp_hindsight, split_and_forget
from .simplex import SamplerSpec, exact_moment

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# permutation tolerance for the order-1 value under quadrature
LEVEL1_RTOL = 1e-10

GENERATORS = ("toy", "table1", "table2")


class UsageError(Exception):
    pass


def _num(x: float) -> str:
    return f"{x:.17g}"


def _json_num(x: float):
    return float(_num(x)) if np.isfinite(x) else None


def build_market(args) -> Market:
    if args.data and args.generator:
        raise UsageError("give either --data or --generator, not both")
    if args.data:
        market = load_csv(args.data, kind="prices" if args.prices else "relatives")
    elif args.generator == "toy":
        market = toy_market(args.steps)
    elif args.generator == "table1":
        market = market_from_rows(TABLE1.rows, TABLE1.labels)
    elif args.generator == "table2":
        market = market_from_rows(TABLE2.rows, TABLE2.labels)
    else:
        raise UsageError("one of --data or --generator is required")
    if args.assets:
        market = market.select([s.strip() for s in args.assets.split(",") if s.strip()])
    return market


def base_spec(args, dim: int) -> SamplerSpec:
    return SamplerSpec.for_dim(dim, nodes=args.quad_nodes, samples=args.samples, seed=args.seed)


def run_experiment(market: Market, args) -> dict:
    result = houp(market, args.orders, base_spec(args, market.K))
    w_best, best = best_crp_hindsight(market)
    saf = split_and_forget(market)
    return {"market": market, "result": result, "best_w": w_best, "best": best, "split": saf}


def paths_table(exp: dict) -> tuple[list[str], np.ndarray]:
    market: Market = exp["market"]
    result: HoupResult = exp["result"]
    header = ["time", *market.labels, *(level_label(l) for l in range(1, result.order + 1))]
    cols = [np.arange(market.T + 1, dtype=float), *market.cumulative().T, *(p.values for p in result.paths)]
    return header, np.column_stack(cols)


def summary_rows(exp: dict) -> list[dict]:
    market: Market = exp["market"]
    result: HoupResult = exp["result"]
    rows = []
    for level, (path, spec) in enumerate(zip(result.paths, result.specs), start=1):
        rows.append({"name": level_label(level), "kind": "houp", "order": level,
                     "final": path.final, "stderr": path.final_stderr, "scheme": spec.scheme.value})
    rows.append({"name": "best_crp", "kind": "baseline", "order": 0, "final": exp["best"].final,
                 "stderr": 0.0, "scheme": "weights=" + ";".join(_num(x) for x in exp["best_w"])})
    rows.append({"name": "split_and_forget", "kind": "baseline", "order": 0,
                 "final": exp["split"].final, "stderr": 0.0, "scheme": ""})
    for k, label in enumerate(market.labels):
        rows.append({"name": label, "kind": "asset", "order": 0,
                     "final": float(market.cumulative()[-1, k]), "stderr": 0.0, "scheme": ""})
    return rows


SUMMARY_FIELDS = ["name", "kind", "order", "final", "stderr", "scheme"]


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def write_experiment(exp: dict, out: Path, fmt: str) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    header, table = paths_table(exp)
    summary = summary_rows(exp)
    if fmt == "csv":
        files = {
            "paths.csv": _csv_text(header, [[int(r[0]), *map(float, r[1:])] for r in table]),
            "summary.csv": _csv_text(SUMMARY_FIELDS, [[s[f] for f in SUMMARY_FIELDS] for s in summary]),
        }
    else:
        files = {
            "paths.json": json.dumps(
                {h: [_json_num(v) for v in table[:, i]] for i, h in enumerate(header)}, indent=1),
            "summary.json": json.dumps(
                [{k: _json_num(v) if isinstance(v, float) else v for k, v in s.items()} for s in summary],
                indent=1),
        }
    written = []
    for name, text in files.items():
        path = out / name
        path.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
        written.append(path)
    return written


def format_summary(summary: list[dict]) -> str:
    lines = [f"{'name':<20} {'final':>14} {'stderr':>10}  scheme"]
    for s in summary:
        lines.append(f"{s['name']:<20} {s['final']:>14.6g} {s['stderr']:>10.3g}  {s['scheme']}")
    return "\n".join(lines) + "\n"


def cmd_run(args) -> int:
    market = build_market(args)
    exp = run_experiment(market, args)
    summary = summary_rows(exp)
    sys.stdout.write(format_summary(summary))
    if args.out:
        for path in write_experiment(exp, Path(args.out), args.format):
            print(f"wrote {path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    moment = swapped_third_moments if args.swap_third_moments else exact_moment
    if args.format == "json":
        report = verify_paper(io.StringIO(), moment=moment, verbose=args.verbose)
        text = report.to_json() + "\n"
        sys.stdout.write(text)
    else:
        report = verify_paper(sys.stdout, moment=moment, verbose=args.verbose)
        text = report.to_text(args.verbose)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK if report.passed else EXIT_FAIL


def compare_permuted(market: Market, sigma: Permutation, args) -> dict:
    original = run_experiment(market, args)
    shuffled = run_experiment(permute(market, sigma), args)
    levels = []
    for level in range(1, args.orders + 1):
        a = original["result"].paths[level - 1]
        b = shuffled["result"].paths[level - 1]
        delta = b.final - a.final
        levels.append({"order": level, "original": a.final, "permuted": b.final, "delta": delta,
                       "rel_delta": abs(delta) / abs(a.final),
                       "combined_stderr": float(np.hypot(a.final_stderr, b.final_stderr)),
                       "scheme": original["result"].specs[level - 1].scheme.value})
    exact = None
    if bounded(market.K + args.orders - 1, market.T):
        rm = RationalMarket.from_market(market)
        ex_a = [p[-1] for p in exact_houp_paths(rm, args.orders)]
        ex_b = [p[-1] for p in exact_houp_paths(rm.permuted(sigma.mapping), args.orders)]
        exact = [{"order": l + 1, "original": str(x), "permuted": str(y), "delta": str(y - x)}
                 for l, (x, y) in enumerate(zip(ex_a, ex_b))]
    first = levels[0]
    # order-1 invariance is exact only when level 1 is integrated without sampling error
    checked = original["result"].paths[0].stderr is None
    invariant = first["rel_delta"] <= LEVEL1_RTOL if checked else None
    return {"original": original, "permuted": shuffled, "levels": levels, "exact": exact,
            "permutation": [i + 1 for i in sigma.mapping], "level1_invariant": invariant}


def cmd_permute(args) -> int:
    market = build_market(args)
    if not args.perm:
        raise UsageError("--perm is required")
    sigma = Permutation.parse(args.perm, market.T)
    cmp = compare_permuted(market, sigma, args)
    lines = [f"{'order':>5} {'original':>22} {'permuted':>22} {'delta':>12}"]
    for row in cmp["levels"]:
        lines.append(f"{row['order']:>5} {_num(row['original']):>22} {_num(row['permuted']):>22} "
                     f"{row['delta']:>12.3g}")
    if cmp["exact"]:
        lines.append("exact:")
        for row in cmp["exact"]:
            lines.append(f"{row['order']:>5} {row['original']:>22} {row['permuted']:>22} {row['delta']:>12}")
    inv = cmp["level1_invariant"]
    lines.append("level-1 invariance: " + {True: "PASS", False: "FAIL", None: "not checked (sampled)"}[inv])
    sys.stdout.write("\n".join(lines) + "\n")
    if args.out:
        out = Path(args.out)
        write_experiment(cmp["original"], out / "original", args.format)
        write_experiment(cmp["permuted"], out / "permuted", args.format)
        if args.format == "csv":
            fields = ["order", "original", "permuted", "delta", "rel_delta", "combined_stderr", "scheme"]
            text = _csv_text(fields, [[r[f] for f in fields] for r in cmp["levels"]])
            (out / "permute.csv").write_text(text, encoding="utf-8")
        doc = {"permutation": cmp["permutation"], "level1_invariant": inv, "exact": cmp["exact"],
               "levels": [{k: _json_num(v) if isinstance(v, float) else v for k, v in r.items()}
                          for r in cmp["levels"]]}
        (out / "permute.json").write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    return EXIT_FAIL if inv is False else EXIT_OK


def _add_market_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", help="CSV of price relatives, one column per asset")
    p.add_argument("--prices", action="store_true", help="--data holds prices, not price relatives")
    p.add_argument("--generator", choices=GENERATORS, help="built-in market instead of --data")
    p.add_argument("--steps", type=int, default=50, help="periods of the toy market (default 50)")
    p.add_argument("--assets", help="comma-separated asset labels to keep, in order")
    p.add_argument("--orders", type=int, default=1, help="highest order to compute (default 1)")
    p.add_argument("--samples", type=int, default=10_000, help="Monte Carlo points (default 10000)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quad-nodes", type=int, default=16, help="Gauss-Legendre nodes for two assets")
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="houp", description="High-order universal portfolios.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="compute UP^1..UP^L and baselines")
    _add_market_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("permute", help="compare a market with a time-permuted copy")
    _add_market_args(p)
    p.add_argument("--perm", help="reverse | identity | swap:i,j | i,j,k,... (1-based)")
    p.set_defaults(func=cmd_permute)

    p = sub.add_parser("verify", help="check the exact rational identities")
    p.add_argument("-v", "--verbose", action="store_true", help="show expected and computed fractions")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out", help="also write the report to this file")
    p.add_argument("--swap-third-moments", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if getattr(args, "orders", 1) < 1:
        print("houp: error: --orders must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, MarketError, ValueError, OSError) as exc:
        print(f"houp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
