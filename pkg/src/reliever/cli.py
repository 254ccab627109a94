"""Command-line interface.

Subcommands: ``intervals``, ``detect``, ``simulate``, ``bench``, ``summary``.
Data goes to stdout (or ``--out``), diagnostics to stderr.  Exit codes:
0 success, 2 usage or parameter error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

from .baselines import TwoStepSplitter
from .config import ConfigError, load_config
from .engine import make_oracle
from .metrics import best_lambda, read_records, run_benchmark, summarize, write_records, write_summary
from .models import LassoFamily, MeanFamily, NmcdFamily, make_nmcd_grid
from .relief import build_pool, pool_from_coverage
from .search import ALGORITHMS, SearchConfig
from .simdata import KINDS, generate, read_dataset, write_dataset

__all__ = ["main", "build_parser"]

DETECT_SCHEMA = 1
EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3


class UsageError(ValueError):
    pass


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- intervals ---------------------------------------------------------------


def _pool_from_args(args):
    if args.r is not None:
        if args.w is not None or args.b is not None:
            raise UsageError("give either --r or both --w and --b")
        return pool_from_coverage(args.n, args.delta_m, args.r)
    if args.w is None or args.b is None:
        raise UsageError("give either --r or both --w and --b")
    return build_pool(args.n, args.delta_m, args.w, args.b)


def pool_rows(pool) -> list[dict]:
    """Rows ``layer, k, lo, hi``: layer index, position within the layer, bounds."""
    rows = sorted(
        (pool.origin_layer[i], iv.lo, iv.hi) for i, iv in enumerate(pool.all_intervals)
    )
    out, q, prev = [], 0, None
    for layer, lo, hi in rows:
        q = q + 1 if layer == prev else 0
        prev = layer
        out.append({"layer": layer, "k": q, "lo": lo, "hi": hi})
    return out


def cmd_intervals(args) -> int:
    try:
        pool = _pool_from_args(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rows = pool_rows(pool)
    if args.emit == "json":
        doc = {
            "schema": 1,
            "n": pool.n,
            "delta_m": pool.delta_m,
            "w": pool.w,
            "b": pool.b,
            "count": len(rows),
            "layers": [
                {"k": L.k, "length": L.length, "shift": L.shift, "count": L.count, "offset": L.offset}
                for L in pool.layers
            ],
            "intervals": rows,
        }
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["layer", "k", "lo", "hi"], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        _emit(buf.getvalue(), args.out)
    _log(f"count: {len(rows)}")
    return EXIT_OK


# -- detect ------------------------------------------------------------------


def _family_from_args(args, data):
    family = args.family or ("mean" if data.kind == "univariate" else "lasso")
    if family == "mean":
        return MeanFamily()
    if family == "nmcd":
        return NmcdFamily(make_nmcd_grid(data, args.grid_points))
    if family == "lasso":
        lam = args.lam if args.lam is not None else math.sqrt(math.log(max(data.p, 2)))
        return LassoFamily(lam)
    raise UsageError(f"unknown family {family!r}")


def cmd_detect(args) -> int:
    if args.algorithm == "sn" and args.K is None:
        raise UsageError("--algorithm sn needs --K")
    if args.algorithm in ("op", "pelt") and args.gamma is None:
        raise UsageError(f"--algorithm {args.algorithm} needs --gamma")
    if args.oracle == "twostep" and args.algorithm not in ("bs", "wbs", "seedbs"):
        raise UsageError("--oracle twostep works with bs, wbs or seedbs")
    data = read_dataset(args.input)
    try:
        family = _family_from_args(args, data)
        cfg = SearchConfig(
            delta_m=args.delta_m, gamma=args.gamma, K=args.K, threshold=args.threshold,
            M=args.M, decay_a=args.decay_a, seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    search = ALGORITHMS[args.algorithm]
    extra = {}
    if args.oracle == "twostep":
        oracle = make_oracle(data, family, args.delta_m, "direct")
        splitter = TwoStepSplitter(data, family, args.delta_m, args.m)
        started = time.perf_counter()
        seg = search(oracle, data.n, cfg, splitter=splitter)
        elapsed = time.perf_counter() - started
        fits, evals = splitter.fits, splitter.evals
    else:
        oracle = make_oracle(data, family, args.delta_m, args.oracle, r=args.r)
        started = time.perf_counter()
        seg = search(oracle, data.n, cfg)
        elapsed = time.perf_counter() - started
        fits, evals = oracle.fits, oracle.evals
        if args.oracle == "reliever":
            extra["pool_size"] = len(oracle.pool.all_intervals)
    doc = {
        "schema": DETECT_SCHEMA,
        "changepoints": [int(c) for c in seg.changepoints],
        "total_cost": float(seg.total_cost),
        "fits": int(fits),
        "evals": int(evals),
        "time_ms": 1000 * elapsed,
        **extra,
    }
    _emit(json.dumps(doc) + "\n", args.out)
    return EXIT_OK


# -- simulate ----------------------------------------------------------------


def cmd_simulate(args) -> int:
    if args.kind not in KINDS:
        raise UsageError(f"unknown kind {args.kind!r}; expected one of {', '.join(KINDS)}")
    try:
        data, scen = generate(args.kind, args.n, args.p, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.out:
        write_dataset(data, args.out)
        truth = args.truth or f"{args.out}.truth.json"
    else:
        write_dataset(data, sys.stdout)
        truth = args.truth
    if truth:
        Path(truth).write_text(scen.to_json() + "\n")
        _log(f"truth: {truth}")
    return EXIT_OK


# -- bench / summary ---------------------------------------------------------


def cmd_bench(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        raise UsageError(f"config {exc}") from exc
    if args.jobs is not None:
        cfg.jobs = args.jobs
    started = time.perf_counter()
    raw, best = run_benchmark(cfg)
    failed = sum(r.status != "ok" for r in raw)
    _log(f"bench: {len(raw)} runs, {failed} failed, {time.perf_counter() - started:.1f}s")
    table = summarize(best)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_records(raw, out / "records.csv")
        write_records(best, out / "best.csv")
        write_summary(table, out / "summary.csv")
    sys.stdout.write(write_summary(table))
    return EXIT_OK


def cmd_summary(args) -> int:
    try:
        records = read_records(args.records)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _emit(write_summary(summarize(best_lambda(records))), args.out)
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reliever", description="Changepoint detection with relief intervals.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("intervals", help="emit a relief interval pool")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta-m", type=int, required=True)
    p.add_argument("--r", type=float)
    p.add_argument("--w", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--emit", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_intervals)

    p = sub.add_parser("detect", help="detect changepoints in a CSV dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--algorithm", choices=sorted(ALGORITHMS), default="sn")
    p.add_argument("--oracle", choices=("direct", "reliever", "twostep"), default="direct")
    p.add_argument("--r", type=float, default=0.9, help="reliever coverage rate")
    p.add_argument("--m", type=int, default=3, help="two-step guesses per interval")
    p.add_argument("--family", choices=("mean", "lasso", "nmcd"))
    p.add_argument("--lambda", dest="lam", type=float, help="LASSO base penalty (scaled by sqrt|I|)")
    p.add_argument("--grid-points", type=int, help="NMCD quantile grid size")
    p.add_argument("--delta-m", type=int, default=2)
    p.add_argument("--K", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--M", type=int, default=100)
    p.add_argument("--decay-a", type=float, default=1 / math.sqrt(2))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("simulate", help="generate a simulation dataset and truth sidecar")
    p.add_argument("--kind", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--truth")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="run a benchmark from a YAML config")
    p.add_argument("--config", required=True)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", help="directory for records.csv, best.csv, summary.csv")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("summary", help="aggregate a records CSV into mean/se/median tables")
    p.add_argument("records")
    p.add_argument("--out")
    p.set_defaults(func=cmd_summary)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        _log(f"error: {exc}")
        return EXIT_USAGE
    except Exception as exc:
        _log(f"error: {type(exc).__name__}: {exc}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
