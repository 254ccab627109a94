"""Two-step changepoint baseline.

Fit one model on each side of an initial guess, then rescan every split
point with those two models held fixed.  Several guesses may be tried; the
split with the smallest total loss wins.  :class:`TwoStepSplitter` plugs
the same idea into BS, WBS and SeedBS as their split finder.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .models import Family, SeriesData
from .relief import Interval

__all__ = [
    "TwoStepConfig",
    "TwoStepResult",
    "quantile_guesses",
    "twostep_single",
    "TwoStepSplitter",
]


@dataclass
class TwoStepConfig:
    family: Family
    delta_m: int
    guesses: Sequence[int] | None = None
    m: int | None = None

    def __post_init__(self):
        if (self.guesses is None) == (self.m is None):
            raise ValueError("give exactly one of explicit guesses or m")


@dataclass
class TwoStepResult:
    changepoint: int
    total_loss: float
    guess: int
    fits: int


def quantile_guesses(interval: Interval, m: int) -> list[int]:
    """``m`` equally spaced interior points ``lo + floor(j |I| / (m + 1))``."""
    lo, hi = int(interval[0]), int(interval[1])
    size = hi - lo
    if m < 1 or size <= m + 1:
        raise ValueError(f"cannot place {m} guesses inside an interval of length {size}")
    return [lo + (j * size) // (m + 1) for j in range(1, m + 1)]


def _scan(family, data, interval, guess, delta_m):
    """Best split of ``interval`` with models fitted on either side of ``guess``."""
    lo, hi = interval
    left_model = family.fit(data, (lo, guess))
    right_model = family.fit(data, (guess, hi))
    states = np.stack([family.state(left_model, data), family.state(right_model, data)])
    taus = np.arange(lo + delta_m, hi - delta_m + 1)
    los = np.full(taus.size, lo)
    his = np.full(taus.size, hi)
    left = family.cross_costs(data, states, np.zeros(taus.size, dtype=np.int64), los, taus)
    right = family.cross_costs(data, states, np.ones(taus.size, dtype=np.int64), taus, his)
    total = left + right
    j = int(np.argmin(total))
    return int(taus[j]), float(total[j])


def _run(family, data, interval, guesses, delta_m) -> TwoStepResult:
    lo, hi = interval
    if hi - lo < 2 * delta_m:
        raise ValueError(f"interval ({lo}, {hi}] too short for delta_m={delta_m}")
    best = None
    for g in guesses:
        if not lo + delta_m <= g <= hi - delta_m:
            raise ValueError(f"guess {g} outside [{lo + delta_m}, {hi - delta_m}]")
        tau, loss = _scan(family, data, interval, int(g), delta_m)
        if best is None or (loss, tau) < (best.total_loss, best.changepoint):
            best = TwoStepResult(tau, loss, int(g), 0)
    best.fits = 2 * len(guesses)
    return best


def twostep_single(data: SeriesData, cfg: TwoStepConfig) -> TwoStepResult:
    """Single-changepoint two-step estimate over the whole series."""
    interval = (0, data.n)
    guesses = cfg.guesses if cfg.guesses is not None else quantile_guesses(interval, cfg.m)
    if len(guesses) < 1:
        raise ValueError("need at least one guess")
    return _run(cfg.family, data, interval, guesses, cfg.delta_m)


class TwoStepSplitter:
    """Split finder for greedy searches built on the two-step scan.

    The gain of a split is the loss of a model fitted on the whole interval
    minus the two-step total, so gains stay comparable across intervals.
    """

    def __init__(self, data: SeriesData, family: Family, delta_m: int, m: int):
        self.data = data
        self.family = family
        self.delta_m = delta_m
        self.m = m
        self.fits = 0
        self.evals = 0

    def __call__(self, lo: int, hi: int) -> tuple[int, float] | None:
        d = self.delta_m
        if hi - lo < 2 * d:
            return None
        guesses = [g for g in quantile_guesses((lo, hi), self.m) if lo + d <= g <= hi - d]
        if not guesses:
            guesses = [(lo + hi) // 2]
        res = _run(self.family, self.data, (lo, hi), guesses, d)
        whole = self.family.fit(self.data, (lo, hi))
        self.fits += res.fits + 1
        self.evals += 2 * len(guesses) * (hi - lo - 2 * d + 1) + 1
        return res.changepoint, self.family.loss(whole, self.data, (lo, hi)) - res.total_loss
