"""Seeded simulation designs.

``hd_linear``  sparse high-dimensional regression with three coefficient changes,
``nonparam``   distribution changes with matched mean and variance,
``single_cp``  correlated-design regression with one early change.

All randomness comes from NumPy's PCG64 generator seeded per replication,
so ``(kind, n, p, seed)`` fully determines a dataset.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .models import SeriesData

__all__ = [
    "SimScenario",
    "RNG_NAME",
    "three_changepoints",
    "gen_hd_linear",
    "gen_nonparam",
    "gen_single_cp",
    "kms_covariance",
    "generate",
    "replication_seed",
    "write_dataset",
    "read_dataset",
]

RNG_NAME = "numpy.random.PCG64"
KINDS = ("hd_linear", "nonparam", "single_cp")


@dataclass
class SimScenario:
    kind: str
    n: int
    seed: int
    true_changepoints: list[int]
    p: int | None = None
    truth_params: dict = field(default_factory=dict)
    rng: str = RNG_NAME

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def replication_seed(base_seed: int, rep: int) -> int:
    """Independent per-replication seed derived with ``SeedSequence``."""
    return int(np.random.SeedSequence([base_seed, rep]).generate_state(1)[0])


def three_changepoints(n: int) -> list[int]:
    return [math.floor(0.22 * n), math.floor(0.55 * n), math.floor(0.77 * n)]


def _unit_circle(rng) -> np.ndarray:
    angle = rng.uniform(0.0, 2 * math.pi)
    return np.array([math.cos(angle), math.sin(angle)])


def _segment_ids(n: int, cps: list[int]) -> np.ndarray:
    return np.searchsorted(np.asarray(cps), np.arange(1, n + 1), side="left")


def gen_hd_linear(n: int, p: int = 100, seed: int = 0) -> tuple[SeriesData, SimScenario]:
    """Gaussian design, three changes in a 2-sparse coefficient vector.

    ``||theta_1|| = 2`` and each later coefficient vector moves by 1/2 in a
    uniformly random direction within the first two coordinates.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    rng = np.random.default_rng(seed)
    cps = three_changepoints(n)
    thetas = np.zeros((4, p))
    thetas[0, :2] = 2.0 * _unit_circle(rng)
    for k in range(1, 4):
        thetas[k, :2] = thetas[k - 1, :2] + 0.5 * _unit_circle(rng)
    X = rng.standard_normal((n, p))
    eps = rng.standard_normal(n)
    seg = _segment_ids(n, cps)
    y = np.einsum("ij,ij->i", X, thetas[seg]) + eps
    scen = SimScenario("hd_linear", n, seed, cps, p, {"theta": thetas[:, :2].tolist()})
    return SeriesData.regression(X, y), scen


def gen_nonparam(n: int, seed: int = 0) -> tuple[SeriesData, SimScenario]:
    """N(0,1), standardised chi2(3), standardised chi2(1), N(0,1) segments."""
    if n < 100:
        raise ValueError("n must be >= 100")
    rng = np.random.default_rng(seed)
    cps = three_changepoints(n)
    bounds = [0, *cps, n]
    lens = [b - a for a, b in zip(bounds, bounds[1:])]
    z = np.concatenate(
        [
            rng.standard_normal(lens[0]),
            (rng.chisquare(3, lens[1]) - 3) / math.sqrt(6),
            (rng.chisquare(1, lens[2]) - 1) / math.sqrt(2),
            rng.standard_normal(lens[3]),
        ]
    )
    dists = ["normal(0,1)", "(chi2(3)-3)/sqrt(6)", "(chi2(1)-1)/sqrt(2)", "normal(0,1)"]
    return SeriesData.univariate(z), SimScenario("nonparam", n, seed, cps, None, {"segments": dists})


def kms_covariance(p: int) -> np.ndarray:
    idx = np.arange(p)
    return 0.5 ** np.abs(idx[:, None] - idx[None, :])


def gen_single_cp(n: int = 1200, p: int = 100, seed: int = 0, tau: int | None = None) -> tuple[SeriesData, SimScenario]:
    """Correlated Gaussian design (``Sigma_ij = 2**-|i-j|``), one change at ``n / 10``."""
    if p < 8:
        raise ValueError("p must be >= 8")
    tau = n // 10 if tau is None else tau
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(kms_covariance(p))
    X = rng.standard_normal((n, p)) @ chol.T
    beta1 = np.zeros(p)
    beta1[:4] = 1 / 3
    beta2 = np.zeros(p)
    beta2[4:8] = 1 / 3
    eps = rng.standard_normal(n)
    y = np.where(np.arange(1, n + 1) <= tau, X @ beta1, X @ beta2) + eps
    scen = SimScenario("single_cp", n, seed, [tau], p, {"beta1": beta1[:8].tolist(), "beta2": beta2[:8].tolist()})
    return SeriesData.regression(X, y), scen


def generate(kind: str, n: int, p: int | None = None, seed: int = 0) -> tuple[SeriesData, SimScenario]:
    if kind == "hd_linear":
        return gen_hd_linear(n, p or 100, seed)
    if kind == "nonparam":
        return gen_nonparam(n, seed)
    if kind == "single_cp":
        return gen_single_cp(n, p or 100, seed)
    raise ValueError(f"unknown scenario kind {kind!r}; expected one of {KINDS}")


def write_dataset(data: SeriesData, path) -> None:
    """CSV with ``index,z`` or ``index,y,x_1..x_p`` columns; ``path`` may be an open text stream."""
    if hasattr(path, "write"):
        _write_rows(data, path)
        return
    with open(path, "w", newline="") as fh:
        _write_rows(data, fh)


def _write_rows(data: SeriesData, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    if data.kind == "univariate":
        w.writerow(["index", "z"])
        for i, v in enumerate(data.z, 1):
            w.writerow([i, repr(float(v))])
    else:
        w.writerow(["index", "y", *[f"x_{j}" for j in range(1, data.p + 1)]])
        for i in range(data.n):
            w.writerow([i + 1, repr(float(data.y[i])), *map(lambda v: repr(float(v)), data.X[i])])


def read_dataset(path: str | Path) -> SeriesData:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    if not body:
        raise ValueError(f"{path}: no data rows")
    arr = np.array(body, dtype=float)
    cols = {name: j for j, name in enumerate(header)}
    if "z" in cols:
        return SeriesData.univariate(arr[:, cols["z"]])
    if "y" in cols:
        xcols = [j for j, name in enumerate(header) if name.startswith("x_")]
        if not xcols:
            raise ValueError(f"{path}: regression data needs x_1..x_p columns")
        return SeriesData.regression(arr[:, xcols], arr[:, cols["y"]])
    raise ValueError(f"{path}: expected a 'z' or 'y' column, got {header}")
