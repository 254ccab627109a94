"""Segment models: fit on one interval, evaluate the loss on any interval.

Three families are provided:

* ``mean``  -- piecewise-constant mean with squared-error loss,
* ``lasso`` -- sparse linear regression fitted by coordinate descent,
* ``nmcd``  -- nonparametric ECDF model with a discretised integrated
  log-likelihood loss.

Each family exposes scalar ``fit``/``loss`` plus two batch paths used by the
cost oracles: ``direct_costs`` (fit on each interval, evaluate on itself) and
``cross_costs`` (fitted models, flattened by ``state`` into rows of a buffer,
evaluated on many intervals at once).  Losses never
refit, so a model fitted on one interval can be scored on another.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np

from . import _lasso_kernels as kern
from .relief import Interval

__all__ = [
    "SeriesData",
    "MeanModel",
    "LassoModel",
    "EcdfModel",
    "NmcdGrid",
    "fit_mean",
    "mean_loss",
    "fit_lasso",
    "lasso_loss",
    "fit_ecdf",
    "nmcd_loss",
    "make_nmcd_grid",
    "default_grid_size",
    "MeanFamily",
    "LassoFamily",
    "NmcdFamily",
    "Family",
]

# prefix Gram arrays larger than this many bytes are not built
GRAM_BYTES_BUDGET = 400 * 2**20


@dataclass(frozen=True, eq=False)
class SeriesData:
    """Observed sequence: univariate ``z`` or regression pairs ``(X, y)``."""

    kind: Literal["univariate", "regression"]
    z: np.ndarray | None = None
    X: np.ndarray | None = None
    y: np.ndarray | None = None

    @classmethod
    def univariate(cls, z) -> "SeriesData":
        z = np.ascontiguousarray(z, dtype=float)
        if z.ndim != 1 or z.size < 1:
            raise ValueError("z must be a non-empty 1-d array")
        if not np.all(np.isfinite(z)):
            raise ValueError("z contains non-finite values")
        return cls("univariate", z=z)

    @classmethod
    def regression(cls, X, y) -> "SeriesData":
        X = np.ascontiguousarray(X, dtype=float)
        y = np.ascontiguousarray(y, dtype=float)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.size or y.size < 1:
            raise ValueError(f"X {X.shape} and y {y.shape} do not align")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("X or y contains non-finite values")
        return cls("regression", X=X, y=y)

    @property
    def n(self) -> int:
        return int(self.z.size if self.kind == "univariate" else self.y.size)

    @property
    def p(self) -> int:
        return int(self.X.shape[1]) if self.kind == "regression" else 0

    def _require(self, kind: str) -> None:
        if self.kind != kind:
            raise ValueError(f"operation needs {kind} data, got {self.kind}")

    def check_interval(self, interval: Interval) -> tuple[int, int]:
        lo, hi = int(interval[0]), int(interval[1])
        if lo < 0 or hi > self.n or hi <= lo:
            raise ValueError(f"empty or out-of-range interval ({lo}, {hi}] for n={self.n}")
        return lo, hi

    # -- cached sufficient statistics ---------------------------------

    @cached_property
    def _mean_prefix(self) -> tuple[float, np.ndarray, np.ndarray]:
        self._require("univariate")
        centre = float(self.z.mean())
        zc = self.z - centre
        s1 = np.concatenate(([0.0], np.cumsum(zc)))
        s2 = np.concatenate(([0.0], np.cumsum(zc * zc)))
        return centre, s1, s2

    @cached_property
    def _lasso_prefix(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, bool]:
        self._require("regression")
        X, y = self.X, self.y
        n, p = X.shape
        xy = np.zeros((n + 1, p))
        np.cumsum(X * y[:, None], axis=0, out=xy[1:])
        diag = np.zeros((n + 1, p))
        np.cumsum(X * X, axis=0, out=diag[1:])
        if (n + 1) * p * p * 8 <= GRAM_BYTES_BUDGET:
            gram = np.zeros((n + 1, p, p))
            np.cumsum(X[:, :, None] * X[:, None, :], axis=0, out=gram[1:])
            return xy, diag, gram, True
        return xy, diag, np.zeros((1, 1, 1)), False

    def count_prefix(self, points: np.ndarray) -> np.ndarray:
        """``out[i, j]`` = number of ``z[:i]`` that are ``<= points[j]``."""
        self._require("univariate")
        cache = self.__dict__.setdefault("_count_cache", {})
        key = np.asarray(points, dtype=float).tobytes()
        if key not in cache:
            below = (self.z[:, None] <= np.asarray(points)[None, :]).astype(np.int64)
            cache[key] = np.vstack([np.zeros((1, below.shape[1]), dtype=np.int64), np.cumsum(below, axis=0)])
        return cache[key]


# -- mean family --------------------------------------------------------


@dataclass(frozen=True)
class MeanModel:
    mu: float


def fit_mean(data: SeriesData, interval: Interval) -> MeanModel:
    data._require("univariate")
    lo, hi = data.check_interval(interval)
    return MeanModel(float(np.mean(data.z[lo:hi])))


def mean_loss(model: MeanModel, data: SeriesData, interval: Interval) -> float:
    data._require("univariate")
    lo, hi = data.check_interval(interval)
    resid = data.z[lo:hi] - model.mu
    return float(resid @ resid)


def _segment_moments(data: SeriesData, los: np.ndarray, his: np.ndarray):
    centre, s1, s2 = data._mean_prefix
    m = (his - los).astype(float)
    t1 = s1[his] - s1[los]
    rss = np.maximum(s2[his] - s2[los] - t1 * t1 / m, 0.0)
    # a single point has no residual; keep it exact despite prefix round-off
    rss[m == 1] = 0.0
    return m, t1 / m + centre, rss


class MeanFamily:
    name = "mean"
    kind = "univariate"

    def fit(self, data: SeriesData, interval: Interval) -> MeanModel:
        return fit_mean(data, interval)

    def loss(self, model: MeanModel, data: SeriesData, interval: Interval) -> float:
        return mean_loss(model, data, interval)

    def direct_costs(self, data: SeriesData, los: np.ndarray, his: np.ndarray) -> np.ndarray:
        return _segment_moments(data, los, his)[2]

    def state(self, model: MeanModel, data: SeriesData) -> np.ndarray:
        return np.array([model.mu])

    def cross_costs(self, data, states, rows, los, his) -> np.ndarray:
        # sum (z - mu)^2 = within-segment RSS + m (mean - mu)^2
        m, mean, rss = _segment_moments(data, los, his)
        return rss + m * (mean - states[rows, 0]) ** 2


# -- lasso family -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LassoModel:
    beta: np.ndarray
    lambda_used: float
    iterations: int
    converged: bool


def fit_lasso(
    data: SeriesData,
    interval: Interval,
    lambda_base: float,
    max_iter: int = 1000,
    tol: float = 1e-7,
) -> LassoModel:
    """Minimise ``RSS_I(beta) + lambda_base * sqrt(|I|) * ||beta||_1``.

    Cyclic coordinate descent from zero; stops when no coefficient moves by
    more than ``tol`` in a sweep.  Hitting ``max_iter`` is reported through
    ``converged`` rather than raised.
    """
    data._require("regression")
    if not (lambda_base >= 0 and math.isfinite(lambda_base)):
        raise ValueError(f"lambda_base must be finite and >= 0, got {lambda_base}")
    lo, hi = data.check_interval(interval)
    lam = float(lambda_base) * math.sqrt(hi - lo)
    xy, diag, gram, use_gram = data._lasso_prefix
    beta, sweeps, ok = kern.cd_fit(data.X, lo, hi, lam, int(max_iter), float(tol), xy, diag, gram, use_gram)
    return LassoModel(beta, lam, int(sweeps), bool(ok))


def lasso_loss(model: LassoModel, data: SeriesData, interval: Interval) -> float:
    """Unpenalised residual sum of squares of ``model.beta`` on ``interval``."""
    data._require("regression")
    lo, hi = data.check_interval(interval)
    return float(kern.interval_rss(data.X, data.y, lo, hi, model.beta))


@dataclass(frozen=True)
class LassoFamily:
    lambda_base: float
    max_iter: int = 1000
    tol: float = 1e-7
    name: str = field(default="lasso", init=False)
    kind: str = field(default="regression", init=False)

    def fit(self, data: SeriesData, interval: Interval) -> LassoModel:
        return fit_lasso(data, interval, self.lambda_base, self.max_iter, self.tol)

    def loss(self, model: LassoModel, data: SeriesData, interval: Interval) -> float:
        return lasso_loss(model, data, interval)

    def direct_costs(self, data: SeriesData, los: np.ndarray, his: np.ndarray) -> np.ndarray:
        data._require("regression")
        xy, diag, gram, use_gram = data._lasso_prefix
        costs, _ = kern.direct_costs(
            data.X, data.y,
            np.ascontiguousarray(los, dtype=np.int64), np.ascontiguousarray(his, dtype=np.int64),
            float(self.lambda_base), int(self.max_iter), float(self.tol), xy, diag, gram, use_gram,
        )
        return costs

    def state(self, model: LassoModel, data: SeriesData) -> np.ndarray:
        """Prefix sums of squared residuals over the whole series."""
        nz = np.flatnonzero(model.beta)
        resid = data.y - data.X[:, nz] @ model.beta[nz]
        return np.concatenate(([0.0], np.cumsum(resid * resid)))

    def cross_costs(self, data, states, rows, los, his) -> np.ndarray:
        return np.maximum(states[rows, his] - states[rows, los], 0.0)


# -- nonparametric family -----------------------------------------------


@dataclass(frozen=True, eq=False)
class EcdfModel:
    sorted_sample: np.ndarray

    @property
    def m(self) -> int:
        return int(self.sorted_sample.size)

    def cdf(self, q: np.ndarray) -> np.ndarray:
        return np.searchsorted(self.sorted_sample, q, side="right") / self.m


@dataclass(frozen=True, eq=False)
class NmcdGrid:
    points: np.ndarray
    weights: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        if self.points.size < 1 or self.points.shape != self.weights.shape:
            raise ValueError("grid needs at least one point and matching weights")


def default_grid_size(n: int) -> int:
    return max(1, min(n - 1, math.ceil(4 * math.log(n)))) if n > 1 else 1


def make_nmcd_grid(data: SeriesData, n_points: int | None = None) -> NmcdGrid:
    """Quantile grid of the full series at probabilities ``(j - 0.5) / n_points``."""
    data._require("univariate")
    n = data.n
    if n_points is None:
        n_points = default_grid_size(n)
    if not 1 <= n_points <= max(1, n - 1):
        raise ValueError(f"n_points must lie in [1, n-1], got {n_points}")
    probs = (np.arange(1, n_points + 1) - 0.5) / n_points
    points = np.unique(np.quantile(data.z, probs))
    degenerate = bool(np.ptp(data.z) == 0)
    if degenerate:
        warnings.warn("constant series: NMCD grid collapses to a single point", RuntimeWarning, stacklevel=2)
    return NmcdGrid(points, np.full(points.size, 1.0 / points.size), degenerate)


def fit_ecdf(data: SeriesData, interval: Interval) -> EcdfModel:
    data._require("univariate")
    lo, hi = data.check_interval(interval)
    return EcdfModel(np.sort(data.z[lo:hi]))


def _corrected(cdf: np.ndarray, m) -> np.ndarray:
    # shrink away from 0 and 1 so the logs stay finite
    return (m * cdf + 0.5) / (m + 1)


def nmcd_loss(model: EcdfModel, data: SeriesData, interval: Interval, grid: NmcdGrid) -> float:
    """Negative integrated ECDF log-likelihood of the data in ``interval`` under ``model``.

    ``-|I| * sum_j w_j [F_I(q_j) log G(q_j) + (1 - F_I(q_j)) log(1 - G(q_j))]``
    where ``F_I`` is the empirical CDF of the points in ``interval`` and ``G``
    the boundary-corrected CDF of the fitted sample.
    """
    data._require("univariate")
    lo, hi = data.check_interval(interval)
    seg = data.z[lo:hi]
    f_seg = (seg[:, None] <= grid.points[None, :]).mean(axis=0)
    g = _corrected(model.cdf(grid.points), model.m)
    ll = f_seg * np.log(g) + (1 - f_seg) * np.log1p(-g)
    return float(-(hi - lo) * (grid.weights @ ll))


@dataclass(frozen=True, eq=False)
class NmcdFamily:
    grid: NmcdGrid
    name: str = field(default="nmcd", init=False)
    kind: str = field(default="univariate", init=False)

    def fit(self, data: SeriesData, interval: Interval) -> EcdfModel:
        return fit_ecdf(data, interval)

    def loss(self, model: EcdfModel, data: SeriesData, interval: Interval) -> float:
        return nmcd_loss(model, data, interval, self.grid)

    def _seg_cdf(self, data, los, his):
        counts = data.count_prefix(self.grid.points)
        m = (his - los).astype(float)
        return m, (counts[his] - counts[los]) / m[:, None]

    def direct_costs(self, data: SeriesData, los: np.ndarray, his: np.ndarray) -> np.ndarray:
        m, f = self._seg_cdf(data, los, his)
        g = _corrected(f, m[:, None])
        ll = f * np.log(g) + (1 - f) * np.log1p(-g)
        return -m * (ll @ self.grid.weights)

    def state(self, model: EcdfModel, data: SeriesData) -> np.ndarray:
        g = _corrected(model.cdf(self.grid.points), model.m)
        return np.concatenate((np.log(g), np.log1p(-g)))

    def cross_costs(self, data, states, rows, los, his) -> np.ndarray:
        m, f = self._seg_cdf(data, los, his)
        size = self.grid.points.size
        st = states[rows]
        ll = f * st[:, :size] + (1 - f) * st[:, size:]
        return -m * (ll @ self.grid.weights)


Family = MeanFamily | LassoFamily | NmcdFamily
