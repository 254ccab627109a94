"""Detection error, benchmark records and the replication runner."""

from __future__ import annotations

import csv
import io
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .baselines import TwoStepSplitter
from .engine import make_oracle
from .models import LassoFamily, MeanFamily, NmcdFamily, make_nmcd_grid
from .search import ALGORITHMS, SearchConfig
from .simdata import generate, replication_seed

__all__ = [
    "hausdorff",
    "BenchRecord",
    "BenchConfig",
    "lambda_grid",
    "parse_oracle",
    "run_method",
    "run_benchmark",
    "best_lambda",
    "summarize",
    "write_records",
    "read_records",
    "write_summary",
]


def hausdorff(est: Sequence[int], truth: Sequence[int], n: int | None = None) -> int:
    """Larger of the two directed worst-case distances between changepoint sets.

    An empty set is replaced by the boundary set ``{0, n}``, which needs ``n``.
    """
    est, truth = list(est), list(truth)
    if not est and not truth:
        return 0
    if not est or not truth:
        if n is None:
            raise ValueError("empty changepoint set needs n for the boundary convention")
        other = truth or est
        return int(max(min(t, n - t) for t in other))
    a = np.asarray(est)[:, None]
    b = np.asarray(truth)[None, :]
    dist = np.abs(a - b)
    return int(max(dist.min(axis=0).max(), dist.min(axis=1).max()))


@dataclass
class BenchRecord:
    scenario: str
    algorithm: str
    oracle: str
    lam: float | None
    hausdorff_error: int | None
    K_hat: int | None
    fits: int
    evals: int
    wall_time_ms: float
    seed: int
    status: str = "ok"

    @property
    def method(self) -> tuple[str, str, str]:
        return (self.scenario, self.algorithm, self.oracle)


CSV_FIELDS = [f.name for f in fields(BenchRecord)]


def lambda_grid(p: int, count: int = 30, lo: float = 1.0, hi: float = 5.0) -> list[float]:
    """``count`` log-spaced values over ``[lo, hi] * sqrt(log p)``."""
    scale = math.sqrt(math.log(max(p, 2)))
    return [float(v) for v in np.geomspace(lo * scale, hi * scale, count)]


def parse_oracle(spec: str) -> tuple[str, float | None]:
    """``direct`` | ``reliever:<r>`` | ``twostep:<m>``."""
    kind, _, arg = spec.partition(":")
    if kind == "direct" and not arg:
        return kind, None
    if kind == "reliever":
        r = float(arg or 0.9)
        if not 0 < r < 1:
            raise ValueError(f"reliever coverage must lie in (0, 1), got {r}")
        return kind, r
    if kind == "twostep":
        m = int(arg or 3)
        if m < 1:
            raise ValueError(f"twostep needs m >= 1, got {m}")
        return kind, float(m)
    raise ValueError(f"unknown oracle {spec!r}")


@dataclass
class BenchConfig:
    scenario: str
    n: int
    p: int | None = None
    replications: int = 2
    base_seed: int = 0
    delta_m: int = 30
    K: int | None = None
    gamma: float | None = None
    algorithms: Sequence[str] = ("sn",)
    oracles: Sequence[str] = ("direct", "reliever:0.9")
    lambdas: Sequence[float] | None = None
    lambda_count: int = 30
    lambda_lo: float = 1.0
    lambda_hi: float = 5.0
    M: int = 100
    decay_a: float = 1 / math.sqrt(2)
    grid_points: int | None = None
    jobs: int = 1

    def __post_init__(self):
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}")
        for o in self.oracles:
            parse_oracle(o)
        if self.replications < 1:
            raise ValueError("replications must be >= 1")

    @property
    def regression(self) -> bool:
        return self.scenario in ("hd_linear", "single_cp")

    def lambda_values(self) -> list[float | None]:
        if not self.regression:
            return [None]
        if self.lambdas is not None:
            return [float(v) for v in self.lambdas]
        return lambda_grid(self.p or 100, self.lambda_count, self.lambda_lo, self.lambda_hi)


def _family(cfg: BenchConfig, data, lam):
    if cfg.scenario == "nonparam":
        return NmcdFamily(make_nmcd_grid(data, cfg.grid_points))
    if cfg.regression:
        return LassoFamily(lam)
    return MeanFamily()


def run_method(data, truth, cfg: BenchConfig, algorithm: str, oracle_spec: str, lam, seed: int) -> BenchRecord:
    """One detection run; failures come back as a record with an error status."""
    kind, arg = parse_oracle(oracle_spec)
    try:
        family = _family(cfg, data, lam)
        K = cfg.K if cfg.K is not None else len(truth)
        scfg = SearchConfig(
            delta_m=cfg.delta_m, gamma=cfg.gamma, K=K, M=cfg.M, decay_a=cfg.decay_a, seed=seed
        )
        search = ALGORITHMS[algorithm]
        if kind == "twostep":
            if algorithm not in ("bs", "wbs", "seedbs"):
                raise ValueError(f"two-step splitting applies to bs/wbs/seedbs, not {algorithm}")
            oracle = make_oracle(data, family, cfg.delta_m, "direct")
            splitter = TwoStepSplitter(data, family, cfg.delta_m, int(arg))
            started = time.perf_counter()
            seg = search(oracle, data.n, scfg, splitter=splitter)
            elapsed = time.perf_counter() - started
            fits, evals = splitter.fits, splitter.evals
        else:
            oracle = make_oracle(data, family, cfg.delta_m, kind, r=arg)
            started = time.perf_counter()
            seg = search(oracle, data.n, scfg)
            elapsed = time.perf_counter() - started
            fits, evals = oracle.fits, oracle.evals
        err = hausdorff(seg.changepoints, truth, data.n)
        return BenchRecord(
            cfg.scenario, algorithm, oracle_spec, lam, err, seg.K, fits, evals, 1000 * elapsed, seed
        )
    except Exception as exc:  # recorded, never fatal to the sweep
        return BenchRecord(
            cfg.scenario, algorithm, oracle_spec, lam, None, None, 0, 0, 0.0, seed,
            f"error: {type(exc).__name__}: {exc}",
        )


def _run_replication(args) -> list[BenchRecord]:
    cfg, rep = args
    seed = replication_seed(cfg.base_seed, rep)
    data, scen = generate(cfg.scenario, cfg.n, cfg.p, seed)
    out = []
    for algorithm in cfg.algorithms:
        for oracle in cfg.oracles:
            for lam in cfg.lambda_values():
                out.append(run_method(data, scen.true_changepoints, cfg, algorithm, oracle, lam, seed))
    return out


def _sort_key(rec: BenchRecord):
    return (rec.scenario, rec.algorithm, rec.oracle, rec.seed, -1.0 if rec.lam is None else rec.lam)


def run_benchmark(cfg: BenchConfig) -> tuple[list[BenchRecord], list[BenchRecord]]:
    """All raw per-lambda records and the best-lambda record per (method, seed)."""
    tasks = [(cfg, rep) for rep in range(cfg.replications)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            chunks = list(pool.map(_run_replication, tasks))
    else:
        chunks = [_run_replication(t) for t in tasks]
    raw = sorted((r for chunk in chunks for r in chunk), key=_sort_key)
    return raw, best_lambda(raw)


def best_lambda(records: Iterable[BenchRecord]) -> list[BenchRecord]:
    """Per (scenario, algorithm, oracle, seed): the record with the smallest error."""
    groups: dict[tuple, list[BenchRecord]] = {}
    for rec in records:
        groups.setdefault((*rec.method, rec.seed), []).append(rec)
    best = []
    for key in sorted(groups):
        ok = [r for r in groups[key] if r.hausdorff_error is not None]
        if not ok:
            best.append(groups[key][0])
            continue
        best.append(min(ok, key=lambda r: (r.hausdorff_error, -1.0 if r.lam is None else r.lam)))
    return best


def _mean_se(values: list[float]) -> tuple[float, float]:
    if not values:
        return math.nan, math.nan
    mean = statistics.fmean(values)
    se = statistics.stdev(values) / math.sqrt(len(values)) if len(values) > 1 else 0.0
    return mean, se


def summarize(records: Iterable[BenchRecord]) -> list[dict]:
    """Mean, standard error and median of error, fits and time per method."""
    groups: dict[tuple, list[BenchRecord]] = {}
    for rec in records:
        groups.setdefault(rec.method, []).append(rec)
    rows = []
    for method in sorted(groups):
        recs = [r for r in groups[method] if r.hausdorff_error is not None]
        row = {"scenario": method[0], "algorithm": method[1], "oracle": method[2], "runs": len(recs),
               "failed": len(groups[method]) - len(recs)}
        for name, vals in (
            ("error", [float(r.hausdorff_error) for r in recs]),
            ("fits", [float(r.fits) for r in recs]),
            ("time_ms", [r.wall_time_ms for r in recs]),
        ):
            mean, se = _mean_se(vals)
            row[f"{name}_mean"] = mean
            row[f"{name}_se"] = se
            row[f"{name}_median"] = statistics.median(vals) if vals else math.nan
        rows.append(row)
    return rows


def write_records(records: Iterable[BenchRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        w.writeheader()
        for rec in records:
            w.writerow(asdict(rec))


def read_records(path) -> list[BenchRecord]:
    def num(v, cast):
        return None if v in ("", "None") else cast(v)

    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            if list(row) != CSV_FIELDS:
                raise ValueError(f"{path}: columns {list(row)} differ from {CSV_FIELDS}")
            out.append(
                BenchRecord(
                    row["scenario"], row["algorithm"], row["oracle"], num(row["lam"], float),
                    num(row["hausdorff_error"], int), num(row["K_hat"], int), int(row["fits"]),
                    int(row["evals"]), float(row["wall_time_ms"]), int(row["seed"]), row["status"],
                )
            )
    return out


def write_summary(rows: list[dict], path: str | Path | None = None) -> str:
    """CSV text of a summary table; also written to ``path`` when given."""
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text
