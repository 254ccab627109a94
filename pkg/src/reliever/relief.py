"""Deterministic multiscale relief-interval pools.

A pool is built from layers of evenly shifted intervals whose lengths grow
geometrically, centred on the middle of the data.  Every search interval of
length at least ``delta_m`` contains a pool interval of comparable length,
which is what lets a model fitted on the pool interval stand in for a model
fitted on the search interval itself.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

__all__ = [
    "Interval",
    "ReliefLayer",
    "ReliefPool",
    "build_pool",
    "pool_from_coverage",
    "best_relief",
    "coverage_rate",
    "complete_search_count",
]

# coverage_rate enumerates an (n+1) x (n+1) table.
COVERAGE_MAX_N = 4000
# dense best-relief lookup tables above this size fall back to per-query search
DENSE_TABLE_MAX_N = 3000


class Interval(NamedTuple):
    """Half-open index range ``(lo, hi]``, i.e. data points ``lo+1 .. hi``."""

    lo: int
    hi: int

    @property
    def length(self) -> int:
        return self.hi - self.lo

    def contains(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    @classmethod
    def checked(cls, lo: int, hi: int, n: int | None = None) -> "Interval":
        lo, hi = int(lo), int(hi)
        if lo < 0 or hi <= lo or (n is not None and hi > n):
            raise ValueError(f"invalid interval ({lo}, {hi}] for n={n}")
        return cls(lo, hi)


def _round_half_up(x):
    # builtin round() is banker's rounding; endpoints must not depend on parity
    return np.floor(np.asarray(x, dtype=float) + 0.5).astype(np.int64)


def _as_intervals(los: np.ndarray, his: np.ndarray) -> tuple[Interval, ...]:
    return tuple(map(Interval, los.tolist(), his.tolist()))


@dataclass(frozen=True, eq=False)
class ReliefLayer:
    k: int
    length: float
    shift: float
    count: int
    offset: float
    # rounded endpoints in order of the shift index, duplicates kept
    los: np.ndarray = field(repr=False)
    his: np.ndarray = field(repr=False)

    @property
    def intervals(self) -> tuple[Interval, ...]:
        return _as_intervals(self.los, self.his)


@dataclass(frozen=True, eq=False)
class ReliefPool:
    """Immutable relief pool with a containment index.

    ``all_intervals`` keeps each distinct rounded interval once, in order of
    first appearance (layer, then left endpoint).
    """

    n: int
    delta_m: int
    w: float
    b: float
    layers: tuple[ReliefLayer, ...]
    lo_array: np.ndarray = field(repr=False)
    hi_array: np.ndarray = field(repr=False)
    # first layer each deduplicated interval came from, aligned with lo_array
    origin_array: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return int(self.lo_array.size)

    @cached_property
    def all_intervals(self) -> tuple[Interval, ...]:
        return _as_intervals(self.lo_array, self.hi_array)

    @cached_property
    def origin_layer(self) -> tuple[int, ...]:
        return tuple(self.origin_array.tolist())

    @property
    def size_bound(self) -> float:
        """Pool-size bound ``c_{w,b} * n / delta_m``."""
        return (1 + self.w) * self.b / (self.w * (self.b - 1)) * self.n / self.delta_m

    @property
    def coverage_bound(self) -> float:
        """Guaranteed coverage ``1 / ((1 + w) b)`` before integer rounding."""
        return 1.0 / ((1 + self.w) * self.b)

    @cached_property
    def _by_length(self) -> tuple[list[int], dict[int, tuple[list[int], list[int]]]]:
        groups: dict[int, list[tuple[int, int]]] = {}
        for idx, iv in enumerate(self.all_intervals):
            groups.setdefault(iv.length, []).append((iv.lo, idx))
        index = {}
        for length, items in groups.items():
            items.sort()
            index[length] = ([lo for lo, _ in items], [idx for _, idx in items])
        return sorted(index), index

    def lookup(self, lo: int, hi: int) -> int:
        """Index into ``all_intervals`` of the best interval inside ``(lo, hi]``, or -1."""
        lengths, index = self._by_length
        for pos in range(bisect.bisect_right(lengths, hi - lo) - 1, -1, -1):
            length = lengths[pos]
            los, ids = index[length]
            j = bisect.bisect_left(los, lo)
            if j < len(los) and los[j] + length <= hi:
                return ids[j]
        return -1

    @cached_property
    def dense_table(self) -> np.ndarray:
        """``table[lo, hi]`` = index of the best pool interval inside ``(lo, hi]`` (-1 if none).

        Built by a suffix max over ``lo`` and a prefix max over ``hi`` of the
        key ``length * (n + 1) + (n - lo)``, so the maximum picks the longest
        interval and, among equal lengths, the smallest ``lo``.
        """
        n = self.n
        if n > DENSE_TABLE_MAX_N:
            raise ValueError(f"dense lookup table disabled for n={n} > {DENSE_TABLE_MAX_N}")
        keys = np.full((n + 1, n + 1), -1, dtype=np.int64)
        lo, hi = self.lo_array, self.hi_array
        keys[lo, hi] = (hi - lo) * (n + 1) + (n - lo)
        keys = np.maximum.accumulate(keys[::-1], axis=0)[::-1]
        keys = np.maximum.accumulate(keys, axis=1)
        ids = np.full((n + 1, n + 1), -1, dtype=np.int32)
        ids[lo, hi] = np.arange(lo.size, dtype=np.int32)
        best_lo = n - keys % (n + 1)
        best_hi = best_lo + keys // (n + 1)
        table = np.where(keys >= 0, ids[best_lo.clip(0, n), best_hi.clip(0, n)], -1).astype(np.int32)
        return table

    def lookup_many(self, los: np.ndarray, his: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`lookup`."""
        los = np.asarray(los, dtype=np.int64)
        his = np.asarray(his, dtype=np.int64)
        if self.n <= DENSE_TABLE_MAX_N:
            return self.dense_table[los, his].astype(np.int64)
        return np.array([self.lookup(int(a), int(b)) for a, b in zip(los, his)], dtype=np.int64)

    def uncovered_start(self) -> int | None:
        """First ``lo`` whose interval ``(lo, lo + delta_m]`` contains no pool interval.

        Covering every interval of length ``delta_m`` implies covering every
        longer one, so this is an exact check of the whole search space.
        """
        n, d = self.n, self.delta_m
        # earliest right end among pool intervals starting at or after lo
        reach = np.full(n + 2, n + 1, dtype=np.int64)
        np.minimum.at(reach, self.lo_array, self.hi_array)
        reach = np.minimum.accumulate(reach[::-1])[::-1]
        bad = np.nonzero(reach[: n - d + 1] > np.arange(d, n + 1))[0]
        return int(bad[0]) if bad.size else None


def _layer_count(n: int, delta_m: int, w: float, b: float) -> int:
    x = math.log((1 + w) * n / delta_m) / math.log(b)
    # guard exact powers against log round-off
    return int(math.floor(x + 1e-9))


def build_pool(n: int, delta_m: int, w: float, b: float) -> ReliefPool:
    """Build the relief pool for a sequence of length ``n``.

    Layer ``k`` holds intervals of real length ``b**k * delta_m / (1 + w)``
    shifted by ``w`` times that length and centred on ``n / 2``.  Endpoints
    are rounded half-up, clipped to ``[0, n]``, and exact duplicates across
    layers are dropped.
    """
    if not all(math.isfinite(v) for v in (w, b)):
        raise ValueError("w and b must be finite")
    if not 0 < w <= 1:
        raise ValueError(f"wriggle w must lie in (0, 1], got {w}")
    if not b > 1:
        raise ValueError(f"growth b must exceed 1, got {b}")
    n, delta_m = int(n), int(delta_m)
    if delta_m < 2:
        raise ValueError(f"delta_m must be >= 2, got {delta_m}")
    if n < delta_m:
        raise ValueError(f"n={n} is shorter than delta_m={delta_m}; no layer exists")

    layers = []
    for k in range(_layer_count(n, delta_m, w, b) + 1):
        length = b**k * delta_m / (1 + w)
        shift = w * length
        count = int(math.floor((n - length) / shift + 1e-12))
        offset = n / 2 - (length + count * shift) / 2
        start = np.arange(count + 1) * shift + offset
        lo = np.maximum(0, _round_half_up(start))
        hi = np.minimum(n, _round_half_up(start + length))
        keep = lo < hi
        layers.append(ReliefLayer(k, length, shift, count, offset, lo[keep], hi[keep]))
    los = np.concatenate([layer.los for layer in layers])
    his = np.concatenate([layer.his for layer in layers])
    layer_of = np.repeat(np.arange(len(layers)), [layer.los.size for layer in layers])
    # keep the first occurrence of each interval, in order of appearance
    _, first = np.unique(los * (n + 1) + his, return_index=True)
    first.sort()
    return ReliefPool(
        n=n,
        delta_m=delta_m,
        w=float(w),
        b=float(b),
        layers=tuple(layers),
        lo_array=los[first],
        hi_array=his[first],
        origin_array=layer_of[first],
    )


def pool_from_coverage(n: int, delta_m: int, r: float) -> ReliefPool:
    """Pool with ``1 + w = b = r**-0.5``, targeting coverage ``r``."""
    if not (math.isfinite(r) and 0 < r < 1):
        raise ValueError(f"coverage r must lie in (0, 1), got {r}")
    b = r**-0.5
    w = b - 1
    if w > 1:
        raise ValueError(f"coverage r={r} implies wriggle {w:.3f} > 1")
    return build_pool(n, delta_m, w, b)


def best_relief(pool: ReliefPool, interval: Interval) -> Interval | None:
    """Longest pool interval contained in ``interval``; ties go to the smallest ``lo``."""
    lo, hi = interval
    if lo < 0 or hi > pool.n or hi <= lo:
        raise ValueError(f"interval {interval} outside (0, {pool.n}]")
    idx = pool.lookup(lo, hi)
    return None if idx < 0 else pool.all_intervals[idx]


def coverage_rate(pool: ReliefPool, max_n: int = COVERAGE_MAX_N) -> float:
    """Worst case over all ``|I| >= delta_m`` of ``max |R| / |I|`` with ``R`` inside ``I``.

    Exhaustive over every search interval; intended as a test oracle.
    """
    n, d = pool.n, pool.delta_m
    if d > n:
        raise ValueError("no search interval: delta_m exceeds n")
    if n > max_n:
        raise ValueError(f"coverage enumeration over n={n} exceeds budget max_n={max_n}")
    best = np.zeros((n + 1, n + 1), dtype=np.int64)
    best[pool.lo_array, pool.hi_array] = pool.hi_array - pool.lo_array
    best = np.maximum.accumulate(best[::-1], axis=0)[::-1]
    best = np.maximum.accumulate(best, axis=1)
    lo, hi = np.triu_indices(n + 1, k=d)
    return float(np.min(best[lo, hi] / (hi - lo)))


def complete_search_count(n: int, delta_m: int) -> int:
    """Number of intervals ``I`` in ``(0, n]`` with ``|I| >= delta_m``."""
    if delta_m > n:
        return 0
    m = n - delta_m + 1
    return m * (m + 1) // 2
