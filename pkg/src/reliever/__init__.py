"""Changepoint detection with relief intervals.

Grid-search changepoint algorithms evaluate the loss of many overlapping
intervals.  The relief-interval oracle fits models only on a small,
deterministic multiscale pool and scores every other interval with the model
of its largest contained pool interval.
"""

from .engine import DirectOracle, RelieverOracle, direct_cost, make_oracle, reliever_cost
from .metrics import BenchConfig, BenchRecord, hausdorff, run_benchmark, summarize
from .models import (
    LassoFamily,
    MeanFamily,
    NmcdFamily,
    SeriesData,
    fit_ecdf,
    fit_lasso,
    fit_mean,
    make_nmcd_grid,
)
from .relief import Interval, ReliefPool, best_relief, build_pool, coverage_rate, pool_from_coverage
from .search import (
    SearchConfig,
    Segmentation,
    bs_search,
    op_search,
    pelt_search,
    seedbs_search,
    sn_search,
    wbs_search,
)

__version__ = "0.1.0"
