"""Grid-search changepoint algorithms over a :class:`SegmentCostOracle`.

Exact dynamic programmes (SN, OP, PELT) and greedy split searches (BS, WBS,
SeedBS).  None of them know how costs are produced, so the same code runs
with direct fits or with relief models.

Ties are broken towards the smallest index throughout.
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .engine import SegmentCostOracle
from .relief import Interval

__all__ = [
    "SearchConfig",
    "Segmentation",
    "sn_search",
    "op_search",
    "pelt_search",
    "bs_search",
    "wbs_search",
    "seeded_intervals",
    "seedbs_search",
    "wild_intervals",
    "best_split",
    "spacing_ok",
    "ALGORITHMS",
]

Splitter = Callable[[int, int], "tuple[int, float] | None"]


@dataclass
class SearchConfig:
    delta_m: int = 2
    gamma: float | None = None
    K: int | None = None
    threshold: float | None = None
    M: int = 100
    decay_a: float = 1 / math.sqrt(2)
    seed: int = 0
    prune_margin: float = 0.0
    pruning_enabled: bool = True

    def __post_init__(self):
        if self.delta_m < 1:
            raise ValueError(f"delta_m must be >= 1, got {self.delta_m}")
        if self.gamma is not None and not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.K is not None and self.K < 0:
            raise ValueError(f"K must be >= 0, got {self.K}")
        if self.M < 0:
            raise ValueError(f"M must be >= 0, got {self.M}")
        if not 0 < self.decay_a < 1:
            raise ValueError(f"decay_a must lie in (0, 1), got {self.decay_a}")


@dataclass
class Segmentation:
    changepoints: tuple[int, ...]
    total_cost: float
    per_segment_costs: tuple[float, ...]
    diagnostics: dict = field(default_factory=dict)

    @property
    def K(self) -> int:
        return len(self.changepoints)


def spacing_ok(changepoints: Sequence[int], n: int, delta_m: int) -> bool:
    bounds = [0, *changepoints, n]
    return all(b - a >= delta_m for a, b in zip(bounds, bounds[1:]))


def _check_oracle(oracle: SegmentCostOracle, n: int, cfg: SearchConfig) -> int:
    if n != oracle.n:
        raise ValueError(f"n={n} does not match oracle length {oracle.n}")
    if cfg.delta_m < oracle.min_len:
        raise ValueError(f"delta_m={cfg.delta_m} below the oracle minimum {oracle.min_len}")
    return cfg.delta_m


def _diagnostics(oracle, started, fits0, evals0, **extra) -> dict:
    return {
        "fits": oracle.fits - fits0,
        "evals": oracle.evals - evals0,
        "wall_time": time.perf_counter() - started,
        "oracle": getattr(oracle, "kind", type(oracle).__name__),
        **extra,
    }


def _finish(oracle, cps, n, started, fits0, evals0, seg_costs=None, **extra) -> Segmentation:
    bounds = np.array([0, *cps, n])
    if seg_costs is None:
        seg_costs = oracle.costs(bounds[:-1], bounds[1:]).tolist()
    diag = _diagnostics(oracle, started, fits0, evals0, **extra)
    return Segmentation(tuple(int(c) for c in cps), float(sum(seg_costs)), tuple(seg_costs), diag)


# -- exact dynamic programmes ---------------------------------------------


def _cost_table(oracle, n, d):
    """Costs of every segment a spaced partition can use, ``inf`` elsewhere."""
    ends = np.array([t for t in range(d, n + 1) if t == n or t <= n - d])
    starts = np.array([0, *range(d, n - d + 1)])
    S, T = np.meshgrid(starts, ends, indexing="ij")
    ok = T - S >= d
    table = np.full((n + 1, n + 1), np.inf)
    table[S[ok], T[ok]] = oracle.costs(S[ok], T[ok])
    return table


def sn_search(oracle: SegmentCostOracle, n: int, K_max: int, cfg: SearchConfig) -> list[Segmentation]:
    """Segment neighbourhood: exact minimum-cost partitions for ``K = 0 .. K_max``."""
    d = _check_oracle(oracle, n, cfg)
    if K_max < 0 or n < (K_max + 1) * d:
        raise ValueError(f"cannot place {K_max} changepoints with spacing {d} in n={n}")
    started, fits0, evals0 = time.perf_counter(), oracle.fits, oracle.evals
    C = _cost_table(oracle, n, d)
    F = np.full((K_max + 1, n + 1), np.inf)
    arg = np.zeros((K_max + 1, n + 1), dtype=np.int64)
    F[0] = C[0]
    for k in range(1, K_max + 1):
        for t in range((k + 1) * d, n + 1):
            if t != n and t > n - d:
                continue
            s = np.arange(k * d, t - d + 1)
            vals = F[k - 1, s] + C[s, t]
            j = int(np.argmin(vals))
            F[k, t] = vals[j]
            arg[k, t] = s[j]
    results = []
    for K in range(K_max + 1):
        cps = []
        t = n
        for k in range(K, 0, -1):
            t = int(arg[k, t])
            cps.append(t)
        cps.reverse()
        bounds = [0, *cps, n]
        seg = [float(C[a, b]) for a, b in zip(bounds, bounds[1:])]
        results.append(_finish(oracle, cps, n, started, fits0, evals0, seg, algorithm="sn"))
    return results


def _optimal_partitioning(oracle, n, cfg, prune: bool, name: str) -> Segmentation:
    d = _check_oracle(oracle, n, cfg)
    if cfg.gamma is None:
        raise ValueError(f"{name} needs a penalty gamma")
    if n < d:
        raise ValueError(f"n={n} shorter than delta_m={d}")
    gamma = float(cfg.gamma)
    started, fits0, evals0 = time.perf_counter(), oracle.fits, oracle.evals
    F = np.full(n + 1, np.inf)
    count = np.zeros(n + 1, dtype=np.int64)
    last = np.zeros(n + 1, dtype=np.int64)
    seg_cost = np.zeros(n + 1)
    F[0] = -gamma
    candidates = [0]
    pending: deque[tuple[int, set[int]]] = deque()
    n_pruned = 0
    for t in range(d, n + 1):
        if t != n and t > n - d:
            continue
        while prune and pending and pending[0][0] <= t:
            _, gone = pending.popleft()
            candidates = [s for s in candidates if s not in gone]
        s = np.array([c for c in candidates if c <= t - d], dtype=np.int64)
        c = oracle.costs(s, np.full(s.size, t))
        vals = F[s] + c + gamma
        best = vals.min()
        # exact ties: fewest changepoints, then smallest last changepoint
        tied = np.flatnonzero(vals == best)
        j = tied[np.lexsort((s[tied], count[s[tied]]))[0]]
        F[t] = best
        last[t] = s[j]
        count[t] = count[s[j]] + (1 if s[j] > 0 else 0)
        seg_cost[t] = c[j]
        if prune:
            gone = set(s[F[s] + c + cfg.prune_margin >= F[t]].tolist())
            if gone:
                n_pruned += len(gone)
                # t only becomes a usable alternative d steps later
                pending.append((t + d, gone))
        if t <= n - d:
            candidates.append(t)
    cps = []
    segs = []
    t = n
    while t > 0:
        segs.append(float(seg_cost[t]))
        t = int(last[t])
        if t > 0:
            cps.append(t)
    cps.reverse()
    segs.reverse()
    out = _finish(oracle, cps, n, started, fits0, evals0, segs, algorithm=name, pruned=n_pruned)
    out.diagnostics["penalty"] = gamma * len(cps)
    return out


def op_search(oracle: SegmentCostOracle, n: int, cfg: SearchConfig) -> Segmentation:
    """Optimal partitioning: exact minimiser of ``sum of segment costs + gamma * K``."""
    return _optimal_partitioning(oracle, n, cfg, prune=False, name="op")


def pelt_search(oracle: SegmentCostOracle, n: int, cfg: SearchConfig) -> Segmentation:
    """Optimal partitioning with PELT candidate pruning.

    A candidate ``s`` is dropped at time ``t`` when
    ``F(s) + cost((s, t]) + prune_margin >= F(t)``; the drop takes effect from
    ``t + delta_m`` on, once ``t`` itself is a legal last changepoint.  Exact
    only for costs that do not decrease when a segment is split; relief-model
    costs need not satisfy that.
    """
    return _optimal_partitioning(oracle, n, cfg, prune=cfg.pruning_enabled, name="pelt")


# -- greedy split searches -----------------------------------------------


def best_split(oracle: SegmentCostOracle, lo: int, hi: int, d: int) -> tuple[int, float] | None:
    """Split of ``(lo, hi]`` with the largest cost reduction, or None if too short."""
    if hi - lo < 2 * d:
        return None
    taus = np.arange(lo + d, hi - d + 1)
    full = oracle.costs(np.array([lo]), np.array([hi]))[0]
    left = oracle.costs(np.full(taus.size, lo), taus)
    right = oracle.costs(taus, np.full(taus.size, hi))
    gains = full - left - right
    j = int(np.argmax(gains))
    return int(taus[j]), float(gains[j])


def _greedy(oracle, n, cfg, extra: Sequence[Interval], name: str, splitter: Splitter | None = None) -> Segmentation:
    d = _check_oracle(oracle, n, cfg)
    if cfg.K is None and cfg.threshold is None:
        raise ValueError(f"{name} needs K or a threshold")
    started, fits0, evals0 = time.perf_counter(), oracle.fits, oracle.evals
    split = splitter or (lambda lo, hi: best_split(oracle, lo, hi, d))
    memo: dict[tuple[int, int], tuple[int, float] | None] = {}
    segments = [(0, n)]
    wild = list(dict.fromkeys((int(a), int(b)) for a, b in extra))
    cps: list[int] = []
    while cfg.K is None or len(cps) < cfg.K:
        best = None
        for iv in dict.fromkeys(segments + wild):
            if iv[1] - iv[0] < 2 * d:
                continue
            if iv not in memo:
                memo[iv] = split(*iv)
            res = memo[iv]
            if res is None:
                continue
            key = (-res[1], res[0], iv)
            if best is None or key < best[0]:
                best = (key, res, iv)
        if best is None:
            break
        tau, gain = best[1]
        if cfg.K is None and gain < cfg.threshold:
            break
        cps.append(tau)
        seg = next(s for s in segments if s[0] < tau < s[1])
        segments.remove(seg)
        segments += [(seg[0], tau), (tau, seg[1])]
        wild = [iv for iv in wild if not iv[0] < tau < iv[1]]
    cps.sort()
    return _finish(oracle, cps, n, started, fits0, evals0, algorithm=name)


def bs_search(oracle: SegmentCostOracle, n: int, cfg: SearchConfig, splitter: Splitter | None = None) -> Segmentation:
    """Binary segmentation.

    In fixed-``K`` mode the segment offering the largest gain is split next;
    in threshold mode splitting stops once no gain reaches ``cfg.threshold``.
    """
    if n < 2 * cfg.delta_m:
        raise ValueError(f"n={n} too short to split with delta_m={cfg.delta_m}")
    return _greedy(oracle, n, cfg, [], "bs", splitter)


def wild_intervals(n: int, M: int, delta_m: int, seed: int, max_tries: int = 100) -> list[Interval]:
    """``M`` uniform random intervals with ``hi - lo > 2 * delta_m`` (redrawn, then skipped)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(M):
        for _ in range(max_tries):
            lo, hi = sorted(int(v) for v in rng.integers(0, n + 1, size=2))
            if lo < hi - 2 * delta_m:
                out.append(Interval(lo, hi))
                break
    return out


def wbs_search(oracle: SegmentCostOracle, n: int, cfg: SearchConfig, splitter: Splitter | None = None) -> Segmentation:
    """Wild binary segmentation over ``cfg.M`` seeded random intervals plus the segments."""
    if cfg.M < 1:
        raise ValueError("WBS needs M >= 1")
    extra = wild_intervals(n, cfg.M, cfg.delta_m, cfg.seed)
    return _greedy(oracle, n, cfg, extra, "wbs", splitter)


def seeded_intervals(n: int, decay_a: float, delta_m: int) -> list[Interval]:
    """Deterministic multiscale seeded intervals.

    Layer ``k`` has ``2 * ceil(a**-(k-1)) - 1`` evenly spaced intervals of
    length ``n * a**(k-1)`` (at least ``2 * delta_m``) spanning ``(0, n]``.
    """
    if not 0 < decay_a < 1:
        raise ValueError(f"decay_a must lie in (0, 1), got {decay_a}")
    ratio = n / (2 * delta_m)
    depth = math.ceil(math.log(ratio) / math.log(1 / decay_a) - 1e-9) if ratio > 1 else 0
    seen: dict[Interval, None] = {}
    for k in range(1, depth + 2):
        length = min(float(n), max(n * decay_a ** (k - 1), 2.0 * delta_m))
        count = 2 * math.ceil((1 / decay_a) ** (k - 1) - 1e-9) - 1
        shift = (n - length) / (count - 1) if count > 1 else 0.0
        for i in range(count):
            lo = max(0, int(math.floor(i * shift + 0.5)))
            hi = min(n, int(math.floor(i * shift + length + 0.5)))
            if lo < hi:
                seen.setdefault(Interval(lo, hi))
    return list(seen)


def seedbs_search(oracle: SegmentCostOracle, n: int, cfg: SearchConfig, splitter: Splitter | None = None) -> Segmentation:
    """Seeded binary segmentation: WBS with deterministic seeded intervals."""
    extra = seeded_intervals(n, cfg.decay_a, cfg.delta_m)
    return _greedy(oracle, n, cfg, extra, "seedbs", splitter)


def _sn_single(oracle, n, cfg):
    if cfg.K is None:
        raise ValueError("sn needs K")
    return sn_search(oracle, n, cfg.K, cfg)[cfg.K]


ALGORITHMS: dict[str, Callable[..., Segmentation]] = {
    "sn": _sn_single,
    "op": op_search,
    "pelt": pelt_search,
    "bs": bs_search,
    "wbs": wbs_search,
    "seedbs": seedbs_search,
}
