"""Numba kernels for interval-restricted LASSO by cyclic coordinate descent.

Objective on rows ``lo < i <= hi``::

    sum (y_i - x_i . beta)^2 + lam * ||beta||_1

The solver works in covariance form: it keeps the gradient ``X'y - X'X beta``
and pulls columns of the interval Gram matrix only for coordinates that move.
Columns come from a prefix-summed Gram array when one is supplied, otherwise
they are accumulated from the rows.
"""

import numpy as np
from numba import njit

# columns with interval sum of squares below this are treated as zero
_ZERO_COL = 1e-12


@njit(cache=True)
def _gram_column(X, lo, hi, j, gram_pre, use_gram, out):
    p = X.shape[1]
    if use_gram:
        # symmetric, so read the contiguous row
        for k in range(p):
            out[k] = gram_pre[hi, j, k] - gram_pre[lo, j, k]
    else:
        for k in range(p):
            out[k] = 0.0
        for i in range(lo, hi):
            xij = X[i, j]
            if xij != 0.0:
                for k in range(p):
                    out[k] += xij * X[i, k]


@njit(cache=True)
def cd_fit(X, lo, hi, lam, max_iter, tol, xy_pre, diag_pre, gram_pre, use_gram):
    """Return ``(beta, sweeps, converged)`` for the interval ``(lo, hi]``."""
    p = X.shape[1]
    beta = np.zeros(p)
    grad = np.empty(p)
    diag = np.empty(p)
    for j in range(p):
        grad[j] = xy_pre[hi, j] - xy_pre[lo, j]
        diag[j] = diag_pre[hi, j] - diag_pre[lo, j]
    cols = np.empty((p, p))  # row j holds Gram column j once fetched
    have = np.zeros(p, dtype=np.bool_)
    col = np.empty(p)
    half = 0.5 * lam
    converged = False
    sweeps = 0
    for it in range(max_iter):
        sweeps = it + 1
        max_change = 0.0
        for j in range(p):
            if diag[j] <= _ZERO_COL:
                continue
            rho = grad[j] + diag[j] * beta[j]
            if rho > half:
                new = (rho - half) / diag[j]
            elif rho < -half:
                new = (rho + half) / diag[j]
            else:
                new = 0.0
            delta = new - beta[j]
            if delta != 0.0:
                if not have[j]:
                    _gram_column(X, lo, hi, j, gram_pre, use_gram, col)
                    for k in range(p):
                        cols[j, k] = col[k]
                    have[j] = True
                for k in range(p):
                    grad[k] -= delta * cols[j, k]
                beta[j] = new
                if abs(delta) > max_change:
                    max_change = abs(delta)
        if max_change < tol:
            converged = True
            break
    return beta, sweeps, converged


@njit(cache=True)
def interval_rss(X, y, lo, hi, beta):
    p = X.shape[1]
    nz = np.nonzero(beta)[0]
    total = 0.0
    for i in range(lo, hi):
        r = y[i]
        for t in range(nz.size):
            j = nz[t]
            r -= X[i, j] * beta[j]
        total += r * r
    return total


@njit(cache=True)
def direct_costs(X, y, los, his, lam_base, max_iter, tol, xy_pre, diag_pre, gram_pre, use_gram):
    """Fit on each interval and return its own residual sum of squares.

    Also returns the number of fits that hit ``max_iter``.
    """
    m = los.size
    out = np.empty(m)
    unconverged = 0
    for t in range(m):
        lo = los[t]
        hi = his[t]
        lam = lam_base * np.sqrt(hi - lo)
        beta, _, ok = cd_fit(X, lo, hi, lam, max_iter, tol, xy_pre, diag_pre, gram_pre, use_gram)
        if not ok:
            unconverged += 1
        out[t] = interval_rss(X, y, lo, hi, beta)
    return out, unconverged
