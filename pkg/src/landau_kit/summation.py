"""Deterministic compensated reductions.

Sums are accumulated lane-wise with Neumaier's correction in a fixed row
order and the per-lane results are combined with ``math.fsum``. The result
depends only on the input values, never on how callers split the work.
"""
import math

import numpy as np

_LANES = 4096


def compensated_sum(values, lanes: int = _LANES):
    """Compensated sum of a 1-D array, or of each row of a 2-D array.

    Returns a Python float for 1-D input and a float ndarray for 2-D input.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim == 1:
        return float(_rows_sum(x[None, :], lanes)[0])
    if x.ndim != 2:
        raise ValueError("compensated_sum expects a 1-D or 2-D array")
    return _rows_sum(x, lanes)


def _rows_sum(x: np.ndarray, lanes: int) -> np.ndarray:
    nrows, n = x.shape
    if n <= 4 * lanes:
        return np.array([math.fsum(row.tolist()) for row in x])
    width = -(-n // lanes) * lanes
    padded = np.zeros((nrows, width))
    padded[:, :n] = x
    blocks = padded.reshape(nrows, -1, lanes)
    s = blocks[:, 0, :].copy()
    c = np.zeros_like(s)
    for i in range(1, blocks.shape[1]):
        v = blocks[:, i, :]
        t = s + v
        c += np.where(np.abs(s) >= np.abs(v), (s - t) + v, (v - t) + s)
        s = t
    return np.array([math.fsum(np.concatenate([s[r], c[r]]).tolist()) for r in range(nrows)])


def compensated_complex_sum(values) -> complex:
    z = np.asarray(values, dtype=complex)
    re, im = compensated_sum(np.vstack([z.real, z.imag]))
    return complex(re, im)


def exact_or_fsum(values):
    """Sum exactly when any value is a Fraction, else with ``math.fsum``."""
    vals = list(values)
    if any(not isinstance(v, float) and not isinstance(v, int) for v in vals):
        return sum(vals)
    return math.fsum(vals)
