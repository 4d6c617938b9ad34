"""Hot inner loops, compiled with numba when available.

Every kernel has a pure-numpy twin with identical floating-point semantics
(same operation order, sequential summation), so the two paths agree bitwise.
Set ``NWOPT_DISABLE_NUMBA=1`` to force the numpy path.
"""

import os

import numpy as np

_DISABLED = os.environ.get("NWOPT_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError
    from numba import njit
except ImportError:  # pragma: no cover - depends on environment
    njit = None

USING_NUMBA = njit is not None


# -- pure numpy ---------------------------------------------------------------


def ball_mask_numpy(covariates, query, h):
    # column-by-column accumulation keeps the summation order fixed
    d2 = np.zeros(covariates.shape[0])
    for j in range(covariates.shape[1]):
        diff = covariates[:, j] - query[j]
        d2 = d2 + diff * diff
    return np.sqrt(d2) <= h


def sequential_sum_numpy(values):
    if values.shape[0] == 0:
        return 0.0
    return float(np.cumsum(values)[-1])


def row_sums_numpy(matrix):
    if matrix.shape[1] == 0:
        return np.zeros(matrix.shape[0])
    return np.cumsum(matrix, axis=1)[:, -1].copy()


def newsvendor_loss_grid_numpy(decisions, outcomes, cu, co, scale):
    diff = outcomes[None, :] - decisions[:, None]
    under = np.maximum(diff, 0.0)
    over = np.maximum(-diff, 0.0)
    return (cu * under + co * over) / scale


# -- numba --------------------------------------------------------------------


def _ball_mask_loop(covariates, query, h):
    n, p = covariates.shape
    out = np.empty(n, dtype=np.bool_)
    for i in range(n):
        d2 = 0.0
        for j in range(p):
            diff = covariates[i, j] - query[j]
            d2 = d2 + diff * diff
        out[i] = np.sqrt(d2) <= h
    return out


def _sequential_sum_loop(values):
    total = 0.0
    for i in range(values.shape[0]):
        total = total + values[i]
    return total


def _row_sums_loop(matrix):
    m, k = matrix.shape
    out = np.zeros(m)
    for r in range(m):
        total = 0.0
        for c in range(k):
            total = total + matrix[r, c]
        out[r] = total
    return out


def _newsvendor_loss_grid_loop(decisions, outcomes, cu, co, scale):
    m = decisions.shape[0]
    k = outcomes.shape[0]
    out = np.empty((m, k))
    for r in range(m):
        for c in range(k):
            diff = outcomes[c] - decisions[r]
            under = diff if diff > 0.0 else 0.0
            over = -diff if diff < 0.0 else 0.0
            out[r, c] = (cu * under + co * over) / scale
    return out


if USING_NUMBA:
    ball_mask_numba = njit(cache=True)(_ball_mask_loop)
    sequential_sum_numba = njit(cache=True)(_sequential_sum_loop)
    row_sums_numba = njit(cache=True)(_row_sums_loop)
    newsvendor_loss_grid_numba = njit(cache=True)(_newsvendor_loss_grid_loop)
else:  # pragma: no cover
    ball_mask_numba = _ball_mask_loop
    sequential_sum_numba = _sequential_sum_loop
    row_sums_numba = _row_sums_loop
    newsvendor_loss_grid_numba = _newsvendor_loss_grid_loop


# -- dispatch -----------------------------------------------------------------


def ball_mask(covariates, query, h):
    """Boolean mask of rows within Euclidean distance ``h`` of ``query`` (closed ball)."""
    covariates = np.ascontiguousarray(covariates, dtype=np.float64)
    query = np.ascontiguousarray(query, dtype=np.float64)
    if USING_NUMBA:
        return ball_mask_numba(covariates, query, float(h))
    return ball_mask_numpy(covariates, query, float(h))


def sequential_sum(values):
    values = np.ascontiguousarray(values, dtype=np.float64)
    if USING_NUMBA:
        return float(sequential_sum_numba(values))
    return sequential_sum_numpy(values)


def row_sums(matrix):
    matrix = np.ascontiguousarray(matrix, dtype=np.float64)
    if USING_NUMBA:
        return row_sums_numba(matrix)
    return row_sums_numpy(matrix)


def newsvendor_loss_grid(decisions, outcomes, cu, co, scale):
    """Normalized newsvendor loss for every (decision, outcome) pair, shape (m, k)."""
    decisions = np.ascontiguousarray(decisions, dtype=np.float64)
    outcomes = np.ascontiguousarray(outcomes, dtype=np.float64)
    if USING_NUMBA:
        return newsvendor_loss_grid_numba(decisions, outcomes, float(cu), float(co), float(scale))
    return newsvendor_loss_grid_numpy(decisions, outcomes, float(cu), float(co), float(scale))
