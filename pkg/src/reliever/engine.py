"""Segment cost oracles.

``DirectOracle`` fits a model on every queried interval.  ``RelieverOracle``
fits only on relief intervals from a :class:`~reliever.relief.ReliefPool`:
the cost of ``I`` is the loss on ``I`` of the model fitted on the longest
pool interval inside ``I``.  Both count fits and loss evaluations so search
runs can be compared on work done.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .models import Family, SeriesData
from .relief import Interval, ReliefPool, pool_from_coverage

__all__ = [
    "Counters",
    "SegmentCostOracle",
    "DirectOracle",
    "RelieverOracle",
    "NoReliefInterval",
    "direct_cost",
    "reliever_cost",
    "make_oracle",
]


class NoReliefInterval(LookupError):
    """Raised when a search interval contains no relief interval."""

    def __init__(self, interval):
        super().__init__(f"no relief interval inside {tuple(interval)}; delta_m and pool disagree")
        self.interval = Interval(int(interval[0]), int(interval[1]))


@dataclass
class Counters:
    fits: int = 0
    evals: int = 0


class SegmentCostOracle:
    """Interval -> loss map shared by all search algorithms.

    Subclasses implement :meth:`_costs`; :meth:`cost` and :meth:`costs`
    validate input and update the counters under a lock so concurrent callers
    see exact totals.
    """

    def __init__(self, data: SeriesData, family: Family, min_len: int):
        if family.kind != data.kind:
            raise ValueError(f"{family.name} family needs {family.kind} data, got {data.kind}")
        if min_len < 1:
            raise ValueError(f"min_len must be >= 1, got {min_len}")
        self.data = data
        self.family = family
        self.min_len = int(min_len)
        self.n = data.n
        self.counters = Counters()
        self._lock = threading.RLock()

    @property
    def fits(self) -> int:
        return self.counters.fits

    @property
    def evals(self) -> int:
        return self.counters.evals

    def cost(self, interval: Interval) -> float:
        lo, hi = int(interval[0]), int(interval[1])
        return float(self.costs(np.array([lo]), np.array([hi]))[0])

    def costs(self, los, his) -> np.ndarray:
        los = np.atleast_1d(np.asarray(los, dtype=np.int64))
        his = np.atleast_1d(np.asarray(his, dtype=np.int64))
        los, his = np.broadcast_arrays(los, his)
        if los.size == 0:
            return np.empty(0)
        if los.min() < 0 or his.max() > self.n or np.any(his - los < self.min_len):
            bad = np.flatnonzero((los < 0) | (his > self.n) | (his - los < self.min_len))[0]
            raise ValueError(
                f"interval ({los[bad]}, {his[bad]}] invalid for n={self.n}, min_len={self.min_len}"
            )
        with self._lock:
            self.counters.evals += los.size
            return self._costs(np.ascontiguousarray(los), np.ascontiguousarray(his))

    def _costs(self, los: np.ndarray, his: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class DirectOracle(SegmentCostOracle):
    """Fit on the queried interval itself, optionally memoising per interval."""

    kind = "direct"

    def __init__(self, data: SeriesData, family: Family, min_len: int, memoize: bool = True):
        super().__init__(data, family, min_len)
        self.memoize = memoize
        self._memo: dict[tuple[int, int], float] = {}

    def _costs(self, los, his):
        if not self.memoize:
            self.counters.fits += los.size
            return self.family.direct_costs(self.data, los, his)
        out = np.empty(los.size)
        missing = []
        memo = self._memo
        for t, key in enumerate(zip(los.tolist(), his.tolist())):
            v = memo.get(key)
            if v is None:
                missing.append(t)
            else:
                out[t] = v
        if missing:
            idx = np.asarray(missing)
            # one fit per distinct interval even if a batch repeats it
            keys, first, inverse = np.unique(
                np.stack([los[idx], his[idx]]), axis=1, return_index=True, return_inverse=True
            )
            vals = self.family.direct_costs(self.data, keys[0], keys[1])
            self.counters.fits += keys.shape[1]
            out[idx] = vals[inverse.ravel()]
            for a, b, v in zip(keys[0].tolist(), keys[1].tolist(), vals.tolist()):
                memo[(a, b)] = v
        return out


class RelieverOracle(SegmentCostOracle):
    """Fit only on relief intervals and cross-evaluate on the search interval."""

    kind = "reliever"

    def __init__(
        self,
        data: SeriesData,
        family: Family,
        pool: ReliefPool,
        validate: bool = True,
    ):
        super().__init__(data, family, pool.delta_m)
        if pool.n != data.n:
            raise ValueError(f"pool built for n={pool.n}, data has n={data.n}")
        self.pool = pool
        self._models: dict[int, object] = {}
        # fitted-model states, one row per fitted relief interval
        self._slot = np.full(len(pool), -1, dtype=np.int64)
        self._states: np.ndarray | None = None
        self._used = 0
        if validate:
            start = pool.uncovered_start()
            if start is not None:
                raise NoReliefInterval((start, start + pool.delta_m))

    @property
    def cached_intervals(self) -> list[Interval]:
        return [self.pool.all_intervals[i] for i in sorted(self._models)]

    def model_for(self, relief_index: int):
        with self._lock:
            self._fit_missing(np.array([relief_index]))
            return self._models[relief_index]

    def _fit_missing(self, ridx: np.ndarray) -> None:
        todo = np.unique(ridx[self._slot[ridx] < 0])
        for idx in todo.tolist():
            model = self.family.fit(self.data, self.pool.all_intervals[idx])
            state = self.family.state(model, self.data)
            if self._states is None:
                self._states = np.empty((16, state.size))
            elif self._used == self._states.shape[0]:
                grown = np.empty((2 * self._used, state.size))
                grown[: self._used] = self._states[: self._used]
                self._states = grown
            self._states[self._used] = state
            self._slot[idx] = self._used
            self._used += 1
            self._models[idx] = model
        self.counters.fits += todo.size

    def _costs(self, los, his):
        ridx = self.pool.lookup_many(los, his)
        if np.any(ridx < 0):
            bad = int(np.flatnonzero(ridx < 0)[0])
            raise NoReliefInterval((los[bad], his[bad]))
        self._fit_missing(ridx)
        return self.family.cross_costs(self.data, self._states, self._slot[ridx], los, his)


def direct_cost(data: SeriesData, family: Family, interval: Interval) -> float:
    """Fit on ``interval`` and evaluate on it (no counters, no memo)."""
    return float(family.loss(family.fit(data, interval), data, interval))


def reliever_cost(oracle: RelieverOracle, interval: Interval) -> float:
    return oracle.cost(interval)


def make_oracle(
    data: SeriesData,
    family: Family,
    delta_m: int,
    kind: str = "direct",
    r: float | None = None,
    pool: ReliefPool | None = None,
) -> SegmentCostOracle:
    """Build a direct or reliever oracle; ``r`` selects the pool when none is given."""
    if kind == "direct":
        return DirectOracle(data, family, delta_m)
    if kind == "reliever":
        if pool is None:
            if r is None:
                raise ValueError("reliever oracle needs a coverage r or a pool")
            pool = pool_from_coverage(data.n, delta_m, r)
        return RelieverOracle(data, family, pool)
    raise ValueError(f"unknown oracle kind {kind!r}")
