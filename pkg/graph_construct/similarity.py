"""
Pairwise series similarities used by the semantic and distribution graphs.
"""

from typing import Optional

import numba as nb
import numpy as np

from errors import InputError
from tensor_core import Array

DISTRIBUTION_TOLERANCE = 1e-9


@nb.njit(cache=False, nogil=True)
def _dtw_cost(a, b, band):
    n, m = a.shape[0], b.shape[0]
    prev = np.full(m + 1, np.inf)
    prev[0] = 0.0
    for i in range(1, n + 1):
        cur = np.full(m + 1, np.inf)
        lo, hi = 1, m
        if band >= 0:
            lo = max(1, i - band)
            hi = min(m, i + band)
        for j in range(lo, hi + 1):
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            cur[j] = abs(a[i - 1] - b[j - 1]) + best
        prev = cur
    return prev[m]


def dtw_distance(a, b, band: Optional[int] = None) -> float:
    """Minimum cumulative |a_i - b_j| over monotone warping paths.

    ``band`` is a Sakoe-Chiba window (|i - j| <= band); it must cover the
    length difference of the two series.
    """
    a = np.ascontiguousarray(a, dtype=np.float64).ravel()
    b = np.ascontiguousarray(b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise InputError("dtw_distance: empty series")
    if band is not None:
        if band < abs(a.size - b.size):
            raise InputError(
                f"dtw_distance: band {band} cannot cover length difference {abs(a.size - b.size)}"
            )
    return float(_dtw_cost(a, b, -1 if band is None else int(band)))


def _check_distribution(name: str, p: Array) -> None:
    if p.ndim != 1 or p.size == 0:
        raise InputError(f"{name} must be a nonempty vector")
    if not np.all(np.isfinite(p)) or np.any(p < 0.0):
        raise InputError(f"{name} must be finite and nonnegative")
    if abs(p.sum() - 1.0) > DISTRIBUTION_TOLERANCE:
        raise InputError(f"{name} sums to {p.sum():.12g}, not 1")


def _kl_base2(p: Array, q: Array) -> float:
    support = p > 0.0
    return float(np.sum(p[support] * np.log2(p[support] / q[support])))


def js_divergence(p, q) -> float:
    """Jensen-Shannon divergence in bits, bounded in [0, 1]."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise InputError(f"js_divergence: length mismatch {p.shape} vs {q.shape}")
    _check_distribution("p", p)
    _check_distribution("q", q)
    m = 0.5 * (p + q)
    value = 0.5 * _kl_base2(p, m) + 0.5 * _kl_base2(q, m)
    return min(max(value, 0.0), 1.0)


def smoothed_histogram(values: Array, lo: float, hi: float, bins: int, smoothing: float) -> Array:
    counts, _ = np.histogram(values, bins=bins, range=(lo, hi))
    freq = counts / max(values.size, 1) + smoothing
    return freq / freq.sum()
