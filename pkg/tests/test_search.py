"""Exact and greedy searches against exhaustive and brute-force oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import brute_split, exhaustive_op, exhaustive_sn, partition_cost, seg_rss

from reliever import search as search_mod
from reliever.engine import DirectOracle, RelieverOracle
from reliever.models import MeanFamily, SeriesData
from reliever.relief import pool_from_coverage
from reliever.search import (
    ALGORITHMS,
    SearchConfig,
    best_split,
    bs_search,
    op_search,
    pelt_search,
    seedbs_search,
    seeded_intervals,
    sn_search,
    spacing_ok,
    wbs_search,
    wild_intervals,
)

TOY = np.r_[np.zeros(10), np.full(10, 5.0)]


def mean_oracle(z, d=1, memoize=True):
    return DirectOracle(SeriesData.univariate(z), MeanFamily(), d, memoize=memoize)


def random_instance(seed, n_max=30):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(8, n_max + 1))
    d = int(rng.integers(2, 5)) if n <= 22 else int(rng.integers(3, 5))
    z = rng.standard_normal(n)
    for cp in rng.choice(np.arange(1, n), size=rng.integers(0, 3), replace=False):
        z[cp:] += rng.normal(0, 3)
    return z, d


# -- SN -------------------------------------------------------------------------


def test_sn_toy_shift():
    res = sn_search(mean_oracle(TOY, 2), 20, 3, SearchConfig(delta_m=2))
    assert res[1].changepoints == (10,)
    assert res[1].total_cost == 0.0
    assert res[0].changepoints == ()
    assert res[0].total_cost == pytest.approx(seg_rss(TOY, 0, 20))
    # zero-cost ties go to the smallest last changepoint
    assert res[2].changepoints == (2, 10)
    assert res[3].changepoints == (2, 4, 10)


@pytest.mark.parametrize("seed", range(12))
def test_sn_matches_exhaustive(seed):
    z, d = random_instance(seed)
    K_max = min(3, len(z) // d - 1)
    res = sn_search(mean_oracle(z, d), len(z), K_max, SearchConfig(delta_m=d))
    for K in range(K_max + 1):
        best, _ = exhaustive_sn(z, K, d)
        assert res[K].K == K
        assert spacing_ok(res[K].changepoints, len(z), d)
        assert res[K].total_cost == pytest.approx(best, abs=1e-9)
        assert partition_cost(z, res[K].changepoints) == pytest.approx(best, abs=1e-9)


def test_sn_infeasible():
    with pytest.raises(ValueError):
        sn_search(mean_oracle(TOY, 5), 20, 4, SearchConfig(delta_m=5))


def test_sn_reports_counters():
    oracle = mean_oracle(TOY, 2)
    res = sn_search(oracle, 20, 2, SearchConfig(delta_m=2))
    assert res[2].diagnostics["evals"] == oracle.evals > 0
    assert res[2].diagnostics["fits"] == oracle.fits


# -- OP / PELT -------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(12))
def test_op_matches_exhaustive(seed):
    z, d = random_instance(100 + seed)
    gamma = float(np.random.default_rng(seed).uniform(0.5, 6))
    res = op_search(mean_oracle(z, d), len(z), SearchConfig(delta_m=d, gamma=gamma))
    best, _ = exhaustive_op(z, gamma, d)
    assert spacing_ok(res.changepoints, len(z), d)
    assert res.total_cost + gamma * res.K == pytest.approx(best, abs=1e-9)
    assert res.diagnostics["penalty"] == pytest.approx(gamma * res.K)


def test_op_penalty_extremes():
    z = np.random.default_rng(0).standard_normal(15)
    huge = seg_rss(z, 0, 15) + 1
    assert op_search(mean_oracle(z), 15, SearchConfig(delta_m=1, gamma=huge)).changepoints == ()
    res = op_search(mean_oracle(z), 15, SearchConfig(delta_m=1, gamma=0.0))
    assert res.total_cost == 0.0 and res.K == 14


def test_op_needs_gamma():
    with pytest.raises(ValueError):
        op_search(mean_oracle(TOY), 20, SearchConfig(delta_m=1))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), g1=st.floats(0, 20), g2=st.floats(0, 20))
def test_op_changepoint_count_monotone_in_gamma(seed, g1, g2):
    z, d = random_instance(seed, n_max=60)
    lo, hi = sorted((g1, g2))
    k_lo = op_search(mean_oracle(z, d), len(z), SearchConfig(delta_m=d, gamma=lo)).K
    k_hi = op_search(mean_oracle(z, d), len(z), SearchConfig(delta_m=d, gamma=hi)).K
    assert k_lo >= k_hi


@pytest.mark.parametrize("seed", range(10))
def test_pelt_without_pruning_is_op(seed):
    z, d = random_instance(200 + seed, n_max=80)
    cfg = SearchConfig(delta_m=d, gamma=2.0, pruning_enabled=False)
    a = op_search(mean_oracle(z, d), len(z), cfg)
    b = pelt_search(mean_oracle(z, d), len(z), cfg)
    assert a.changepoints == b.changepoints
    assert a.total_cost == b.total_cost
    assert a.per_segment_costs == b.per_segment_costs


@pytest.mark.parametrize("seed", range(10))
def test_pelt_prunes_and_agrees_for_mean_cost(seed):
    z, d = random_instance(300 + seed, n_max=200)
    cfg = SearchConfig(delta_m=d, gamma=3.0)
    a = op_search(mean_oracle(z, d), len(z), cfg)
    oracle = mean_oracle(z, d)
    b = pelt_search(oracle, len(z), cfg)
    assert a.changepoints == b.changepoints
    assert b.total_cost == pytest.approx(a.total_cost, abs=1e-9)


def test_pelt_reduces_evaluations():
    rng = np.random.default_rng(1)
    z = np.concatenate([rng.normal(m, 1, 100) for m in (0, 3, -1, 2)])
    op_oracle, pelt_oracle = mean_oracle(z, 5), mean_oracle(z, 5)
    cfg = SearchConfig(delta_m=5, gamma=3 * math.log(400))
    a = op_search(op_oracle, 400, cfg)
    b = pelt_search(pelt_oracle, 400, cfg)
    assert a.changepoints == b.changepoints
    assert pelt_oracle.evals < op_oracle.evals / 2
    assert b.diagnostics["pruned"] > 0


# -- greedy searches -----------------------------------------------------------


def test_best_split_matches_brute_force():
    rng = np.random.default_rng(3)
    z = rng.standard_normal(60)
    z[27:] += 2
    oracle = mean_oracle(z, 4)
    for lo, hi in [(0, 60), (10, 50), (0, 20)]:
        tau, gain = best_split(oracle, lo, hi, 4)
        b_tau, b_gain = brute_split(lambda a, b: seg_rss(z, a, b), lo, hi, 4)
        assert tau == b_tau and gain == pytest.approx(b_gain)
    assert best_split(oracle, 0, 7, 4) is None


def test_bs_single_shift():
    z = np.r_[np.zeros(50), np.ones(50)] + np.random.default_rng(0).normal(0, 0.3, 100)
    res = bs_search(mean_oracle(z, 5), 100, SearchConfig(delta_m=5, K=1))
    tau, _ = brute_split(lambda a, b: seg_rss(z, a, b), 0, 100, 5)
    assert res.changepoints == (tau,)
    assert abs(tau - 50) <= 5


def test_bs_two_shifts_and_threshold():
    rng = np.random.default_rng(2)
    z = np.r_[np.zeros(40), np.full(40, 4.0), np.zeros(40)] + rng.normal(0, 0.5, 120)
    res = bs_search(mean_oracle(z, 5), 120, SearchConfig(delta_m=5, K=2))
    assert len(res.changepoints) == 2
    assert all(abs(a - b) <= 2 for a, b in zip(res.changepoints, (40, 80)))
    flat = rng.standard_normal(120)
    assert bs_search(mean_oracle(flat, 5), 120, SearchConfig(delta_m=5, threshold=1e6)).changepoints == ()
    by_threshold = bs_search(mean_oracle(z, 5), 120, SearchConfig(delta_m=5, threshold=50.0))
    assert by_threshold.changepoints == res.changepoints


def test_greedy_needs_stopping_rule():
    with pytest.raises(ValueError):
        bs_search(mean_oracle(TOY, 2), 20, SearchConfig(delta_m=2))


def test_wild_intervals_are_seeded_and_long_enough():
    a = wild_intervals(200, 50, 10, seed=7)
    assert a == wild_intervals(200, 50, 10, seed=7)
    assert a != wild_intervals(200, 50, 10, seed=8)
    assert len(a) == 50
    assert all(0 <= iv.lo and iv.hi <= 200 and iv.hi - iv.lo > 20 for iv in a)
    # impossible length: every draw is skipped after bounded retries
    assert wild_intervals(20, 5, 10, seed=0, max_tries=3) == []


def test_wbs_deterministic_and_reduces_to_bs(monkeypatch):
    rng = np.random.default_rng(5)
    z = np.r_[np.zeros(60), np.full(30, 3.0), np.zeros(60)] + rng.standard_normal(150)
    cfg = SearchConfig(delta_m=5, K=2, M=40, seed=3)
    a = wbs_search(mean_oracle(z, 5), 150, cfg)
    b = wbs_search(mean_oracle(z, 5), 150, cfg)
    assert a.changepoints == b.changepoints and a.total_cost == b.total_cost
    monkeypatch.setattr(search_mod, "wild_intervals", lambda n, *args, **kw: [(0, n)])
    one = SearchConfig(delta_m=5, K=1, M=1)
    assert wbs_search(mean_oracle(z, 5), 150, one).changepoints == bs_search(mean_oracle(z, 5), 150, one).changepoints


def test_seeded_intervals_hand_example():
    got = seeded_intervals(8, 0.5, 1)
    expect = [(0, 8), (0, 4), (2, 6), (4, 8)] + [(i, i + 2) for i in range(7)]
    assert [tuple(iv) for iv in got] == expect


def test_seeded_intervals_size_and_validation():
    for n in (64, 512, 4096):
        ivs = seeded_intervals(n, 1 / math.sqrt(2), 1)
        assert len(ivs) <= 4 * n
        assert len(set(ivs)) == len(ivs)
        assert seeded_intervals(n, 1 / math.sqrt(2), 1) == ivs
    for a in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            seeded_intervals(100, a, 2)


def test_seedbs_returns_K():
    rng = np.random.default_rng(8)
    z = np.concatenate([rng.normal(m, 1, 50) for m in (0, 2, 0, 2)])
    res = seedbs_search(mean_oracle(z, 5), 200, SearchConfig(delta_m=5, K=3))
    assert res.K == 3
    assert max(min(abs(c - t) for c in res.changepoints) for t in (50, 100, 150)) <= 5


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), name=st.sampled_from(sorted(ALGORITHMS)), use_relief=st.booleans())
def test_spacing_invariant(seed, name, use_relief):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(40, 120))
    d = int(rng.integers(2, 8))
    z = rng.standard_normal(n)
    z[n // 2 :] += rng.normal(0, 2)
    data = SeriesData.univariate(z)
    if use_relief:
        oracle = RelieverOracle(data, MeanFamily(), pool_from_coverage(n, d, 0.8))
    else:
        oracle = DirectOracle(data, MeanFamily(), d)
    cfg = SearchConfig(delta_m=d, K=min(3, n // d - 1), gamma=2.0, M=20, seed=seed)
    res = ALGORITHMS[name](oracle, n, cfg)
    assert spacing_ok(res.changepoints, n, d)
    assert list(res.changepoints) == sorted(set(res.changepoints))
    assert all(0 < c < n for c in res.changepoints)


def test_delta_below_oracle_minimum_rejected():
    oracle = mean_oracle(TOY, 5)
    with pytest.raises(ValueError):
        op_search(oracle, 20, SearchConfig(delta_m=2, gamma=1.0))
    with pytest.raises(ValueError):
        op_search(oracle, 21, SearchConfig(delta_m=5, gamma=1.0))
