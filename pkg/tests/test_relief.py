"""Relief pool construction, containment lookup and coverage."""

import dataclasses
import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reliever.relief import (
    Interval,
    best_relief,
    build_pool,
    complete_search_count,
    coverage_rate,
    pool_from_coverage,
)

DATA = Path(__file__).parent / "data"


def brute_best(intervals, lo, hi):
    """Longest interval inside (lo, hi], smallest lo on ties, by full scan."""
    inside = [iv for iv in intervals if lo <= iv.lo and iv.hi <= hi]
    if not inside:
        return None
    return min(inside, key=lambda iv: (-(iv.hi - iv.lo), iv.lo))


def brute_coverage(intervals, n, d):
    worst = 1.0
    for lo in range(n + 1):
        for hi in range(lo + d, n + 1):
            best = brute_best(intervals, lo, hi)
            worst = min(worst, 0.0 if best is None else (best.hi - best.lo) / (hi - lo))
    return worst


def test_two_layer_hand_example():
    pool = build_pool(100, 100, 1.0, 2.0)
    assert [layer.k for layer in pool.layers] == [0, 1]
    assert pool.layers[0].length == 50 and pool.layers[0].shift == 50
    assert pool.layers[0].count == 1 and pool.layers[0].offset == 0
    assert pool.layers[0].intervals == (Interval(0, 50), Interval(50, 100))
    assert pool.layers[1].intervals == (Interval(0, 100),)
    assert len(pool) == 3


def test_layer_layout_small_pool():
    pool = build_pool(200, 50, 0.25, 1.25)
    # floor(log_1.25(1.25 * 200 / 50)) = floor(log_1.25 5) = 7
    assert [layer.k for layer in pool.layers] == list(range(8))
    assert pool.layers[0].length == pytest.approx(40.0)
    for layer in pool.layers:
        assert layer.length == pytest.approx(1.25**layer.k * 40.0)
        assert layer.shift == pytest.approx(0.25 * layer.length)
        assert layer.count == math.floor((200 - layer.length) / layer.shift + 1e-12)
        # centred: first start and last end are symmetric about n / 2
        first = layer.offset
        last = layer.offset + layer.count * layer.shift + layer.length
        assert first + last == pytest.approx(200)


def test_rounded_intervals_follow_real_endpoints():
    pool = build_pool(200, 50, 0.25, 1.25)
    for layer in pool.layers:
        for q, iv in enumerate(layer.intervals):
            start = layer.offset + q * layer.shift
            assert abs(iv.lo - start) <= 0.5
            assert abs(iv.hi - (start + layer.length)) <= 0.5
            assert 0 <= iv.lo < iv.hi <= 200


def test_pool_has_no_duplicates_and_tracks_origin():
    pool = pool_from_coverage(300, 20, 0.8)
    assert len(set(pool.all_intervals)) == len(pool.all_intervals)
    for iv, k in zip(pool.all_intervals, pool.origin_layer):
        assert iv in pool.layers[k].intervals


def test_pool_from_coverage_matches_explicit_parameters():
    r = 0.7
    b = r**-0.5
    a = pool_from_coverage(500, 25, r)
    c = build_pool(500, 25, b - 1, b)
    assert a.all_intervals == c.all_intervals
    assert a.w == pytest.approx(b - 1) and a.b == pytest.approx(b)


@pytest.mark.parametrize(
    "args",
    [
        (100, 200, 0.5, 1.5),  # n < delta_m
        (100, 10, 0.0, 1.5),
        (100, 10, 1.5, 1.5),
        (100, 10, 0.5, 1.0),
        (100, 10, float("nan"), 1.5),
        (100, 10, 0.5, float("inf")),
        (100, 1, 0.5, 1.5),
    ],
)
def test_build_pool_rejects_bad_parameters(args):
    with pytest.raises(ValueError):
        build_pool(*args)


@pytest.mark.parametrize("r", [0.0, 1.0, -0.2, 1.5, 0.2, float("nan")])
def test_pool_from_coverage_rejects_bad_r(r):
    # r = 0.2 implies w = sqrt(5) - 1 > 1
    with pytest.raises(ValueError):
        pool_from_coverage(100, 10, r)


def test_complete_search_count():
    assert complete_search_count(1200, 30) == 686206
    assert complete_search_count(1200, 30) == sum(1200 - ell + 1 for ell in range(30, 1201))
    assert complete_search_count(10, 11) == 0


def test_pool_counts_are_pinned():
    golden = json.loads((DATA / "pool_counts.json").read_text())
    for r, count in golden["counts"].items():
        assert len(pool_from_coverage(golden["n"], golden["delta_m"], float(r))) == count


def test_best_relief_examples():
    pool = build_pool(100, 100, 1.0, 2.0)
    assert best_relief(pool, (0, 100)) == Interval(0, 100)
    assert best_relief(pool, (0, 99)) == Interval(0, 50)
    assert best_relief(pool, (1, 100)) == Interval(50, 100)
    assert best_relief(pool, (1, 99)) is None
    with pytest.raises(ValueError):
        best_relief(pool, (0, 101))


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(20, 150),
    d_frac=st.floats(0.05, 0.5),
    r=st.floats(0.3, 0.95),
    data=st.data(),
)
def test_lookup_matches_brute_force(n, d_frac, r, data):
    d = max(2, int(d_frac * n))
    pool = pool_from_coverage(n, d, r)
    for _ in range(20):
        lo = data.draw(st.integers(0, n - 1))
        hi = data.draw(st.integers(lo + 1, n))
        assert best_relief(pool, (lo, hi)) == brute_best(pool.all_intervals, lo, hi)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(20, 200), d=st.integers(2, 20), r=st.floats(0.3, 0.95))
def test_dense_table_agrees_with_lookup(n, d, r):
    pool = pool_from_coverage(n, min(d, n), r)
    rng = np.random.default_rng(n * 1000 + d)
    los = rng.integers(0, n, 200)
    his = np.minimum(n, los + rng.integers(1, n + 1, 200))
    table = pool.lookup_many(los, his)
    assert table.tolist() == [pool.lookup(int(a), int(b)) for a, b in zip(los, his)]


@settings(max_examples=20, deadline=None)
@given(n=st.integers(10, 60), d=st.integers(2, 12), r=st.floats(0.3, 0.95))
def test_coverage_rate_matches_brute_force(n, d, r):
    d = min(d, n)
    pool = pool_from_coverage(n, d, r)
    assert coverage_rate(pool) == pytest.approx(brute_coverage(pool.all_intervals, n, d))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(30, 300), d=st.integers(2, 40), r=st.floats(0.3, 0.97))
def test_every_search_interval_contains_a_relief(n, d, r):
    d = min(d, n)
    pool = pool_from_coverage(n, d, r)
    assert pool.uncovered_start() is None
    assert coverage_rate(pool) > 0


def test_uncovered_start_flags_a_gap():
    pool = build_pool(100, 100, 1.0, 2.0)
    # against a smaller minimum length the two-interval pool leaves gaps
    narrow = dataclasses.replace(pool, delta_m=40)
    assert narrow.uncovered_start() == 0
    assert dataclasses.replace(pool, delta_m=60).uncovered_start() == 1


@settings(max_examples=40, deadline=None)
@given(n=st.integers(30, 300), d=st.integers(2, 40), r=st.floats(0.3, 0.97))
def test_size_and_coverage_bounds(n, d, r):
    d = min(d, n)
    pool = pool_from_coverage(n, d, r)
    assert len(pool) <= math.ceil(pool.size_bound) + len(pool.layers)
    assert coverage_rate(pool) >= r - 2 / d


def test_coverage_rate_budget():
    pool = pool_from_coverage(50, 5, 0.8)
    with pytest.raises(ValueError):
        coverage_rate(pool, max_n=40)
