"""Rectangle packings inside -(B^rho)^# intersected with [-1, 1]^M.

Two constructions are provided: ``rectangles_ge1`` bisects nested intervals
whose endpoints are given by the nested product ``P`` (valid for rho >= 1), and
``rectangles_lt1`` splits the first M-1 coordinates at zero and keeps the
admissible range of the last one (valid for rho < 1). Their union volume is a
certified lower bound for the admissible-cosine volume, which ``mc_volume``
estimates by hit-or-miss sampling.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .cone_core import Cone, in_neg_polar_many, nested_p
from .errors import DimensionMismatch, InvalidParameter, NotDisjoint
from .summation import exact_or_fsum

MAX_ENUM_DIM = 20
# pairwise disjointness checks are quadratic in 2^M
REPORT_PACKING_DIM = 12
MC_BLOCK = 1 << 16


@dataclass(frozen=True)
class Rectangle:
    """Product of open intervals; ``index`` is the (j_1, ..., j_M) tuple that built it."""

    intervals: tuple
    index: tuple = ()

    @property
    def dim(self) -> int:
        return len(self.intervals)

    @property
    def is_empty(self) -> bool:
        return any(lo >= hi for lo, hi in self.intervals)

    def volume(self):
        if self.is_empty:
            return 0.0
        v = 1
        for lo, hi in self.intervals:
            v *= hi - lo
        return v

    def corners(self):
        return itertools.product(*self.intervals)


@dataclass(frozen=True)
class VolumeReport:
    M: int
    rho: float
    exact_packing_volume: Optional[float]
    lower_bound: float
    mc_estimate: float
    mc_stderr: float
    samples: int
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


def _check_dim(M: int, cap: bool = True) -> None:
    if not isinstance(M, (int, np.integer)) or isinstance(M, bool) or M < 1:
        raise InvalidParameter(f"M must be a positive integer, got {M!r}")
    if cap and M > MAX_ENUM_DIM:
        raise InvalidParameter(f"rectangle enumeration is capped at M = {MAX_ENUM_DIM}, got {M}")


def _half(rho):
    return Fraction(1, 2) if isinstance(rho, (Fraction, int)) else 0.5


def rectangles_ge1(M: int, rho) -> list:
    """The 2^M bisection rectangles for rho >= 1.

    Coordinate k of the rectangle indexed by (j_1, ..., j_M) has left endpoint
    ``-P[t_{k+1}, ..., t_M] + j_k * P[1/2, t_{k+1}, ..., t_M]`` and width
    ``P[1/2, t_{k+1}, ..., t_M]`` where ``t_i = j_i / (2 rho)``.
    """
    _check_dim(M)
    if not math.isfinite(rho) or rho < 1:
        raise InvalidParameter(f"rectangles_ge1 needs rho >= 1, got {rho!r}")
    half = _half(rho)
    rects = []
    for js in itertools.product((0, 1), repeat=M):
        t = [half * j / rho for j in js]
        intervals = []
        for k in range(M):
            tail = t[k + 1:]
            width = nested_p([half] + tail)
            lo = -nested_p(tail) + js[k] * width
            intervals.append((lo, lo + width))
        rects.append(Rectangle(tuple(intervals), js))
    return rects


def rectangles_lt1(M: int, rho, keep_empty: bool = False) -> list:
    """Rectangles for 0 < rho < 1: (-j_k, 1 - j_k) for k < M, last coordinate
    (sum_k j_k rho^(M-k), 1). Empty ones are dropped unless ``keep_empty``."""
    _check_dim(M)
    if M < 2:
        raise InvalidParameter("rectangles_lt1 needs M >= 2")
    if not (0 < rho < 1):
        raise InvalidParameter(f"rectangles_lt1 needs 0 < rho < 1, got {rho!r}")
    one = rho / rho
    rects = []
    for js in itertools.product((0, 1), repeat=M - 1):
        intervals = [(-j * one, -j * one + 1) for j in js]
        start = sum(j * rho ** (M - k) for k, j in enumerate(js, start=1))
        intervals.append((start, one))
        rect = Rectangle(tuple(intervals), js)
        if keep_empty or not rect.is_empty:
            rects.append(rect)
    return rects


def packing_rectangles(M: int, rho) -> list:
    """The construction appropriate to rho (M = 1 is the same for every rho)."""
    if M == 1:
        return rectangles_ge1(1, _half(rho) * 2)
    return rectangles_ge1(M, rho) if rho >= 1 else rectangles_lt1(M, rho)


def _bounds(rects: Sequence[Rectangle]):
    if not rects:
        return np.zeros((0, 0)), np.zeros((0, 0))
    dims = {r.dim for r in rects}
    if len(dims) != 1:
        raise DimensionMismatch(f"rectangles of mixed dimensions {sorted(dims)}")
    lo = np.array([[float(a) for a, _ in r.intervals] for r in rects])
    hi = np.array([[float(b) for _, b in r.intervals] for r in rects])
    return lo, hi


def verify_disjoint(rects: Sequence[Rectangle]) -> bool:
    """True iff no two non-empty rectangles share interior points."""
    lo, hi = _bounds(rects)
    if len(rects) < 2:
        return True
    live = np.all(lo < hi, axis=1)
    lo, hi = lo[live], hi[live]
    for i in range(len(lo) - 1):
        overlap = np.maximum(lo[i], lo[i + 1:]) < np.minimum(hi[i], hi[i + 1:])
        if np.any(np.all(overlap, axis=1)):
            return False
    return True


def packing_volume(rects: Sequence[Rectangle]):
    if not verify_disjoint(rects):
        raise NotDisjoint("rectangles overlap")
    return exact_or_fsum(r.volume() for r in rects)


def rectangles_contained(rects: Sequence[Rectangle], cone: Cone, tol: float = 1e-12) -> bool:
    """Corner check: every corner lies in [-1, 1]^M and in -(B^rho)^#.

    Corners are tested in floating point with ``in_neg_polar``'s relative
    tolerance, one rectangle (2^M corners) at a time.
    """
    for rect in rects:
        if rect.is_empty:
            continue
        bounds = np.array([[float(lo), float(hi)] for lo, hi in rect.intervals])
        picks = np.array(list(itertools.product((0, 1), repeat=rect.dim)))
        corners = bounds[np.arange(rect.dim), picks]
        if np.any(np.abs(corners) > 1 + tol):
            return False
        if not np.all(in_neg_polar_many(corners, cone, 0.0, tol)):
            return False
    return True


def _eq5(M: int, rho: float) -> float:
    return (1 + (1 - 1 / M) / (4 * rho + 1 / M)) ** M


def lower_bound(M: int, rho) -> float:
    """Closed-form lower bound on Vol(-(B^rho)^# cap [-1, 1]^M).

    For rho >= 1 this is (1 + (1 - 1/M) / (4 rho + 1/M))^M. For rho < 1 it is
    the larger of 2^(M-1) (1 - rho / (2 (1 - rho))), clamped at zero, and the
    rho = 1 value, since the set only grows as rho decreases.
    """
    _check_dim(M, cap=False)
    rho = float(rho)
    if not math.isfinite(rho) or rho <= 0:
        raise InvalidParameter(f"rho must be positive and finite, got {rho!r}")
    if rho >= 1:
        return _eq5(M, rho)
    small = max(0.0, 2.0 ** (M - 1) * (1 - rho / (2 * (1 - rho))))
    return max(small, _eq5(M, 1.0))


def _block_key(seed: int, block: int) -> np.ndarray:
    return np.array([seed & 0xFFFFFFFFFFFFFFFF, block], dtype=np.uint64)


def uniform_block(seed: int, block: int, count: int, M: int) -> np.ndarray:
    """Points ``block*MC_BLOCK .. block*MC_BLOCK+count-1`` of the stream in [-1, 1]^M.

    A Philox generator keyed by (seed, block) makes each point a function of
    (seed, sample index) alone.
    """
    gen = np.random.Generator(np.random.Philox(key=_block_key(seed, block)))
    return 2.0 * gen.random((count, M)) - 1.0


def _count_hits(args):
    cone, seed, block, count = args
    pts = uniform_block(seed, block, count, cone.dim)
    return int(np.count_nonzero(in_neg_polar_many(pts, cone)))


def mc_volume(M: int, rho, samples: int, seed: int, workers: int = 1) -> VolumeReport:
    """Hit-or-miss estimate of Vol(-(B^rho)^# cap [-1, 1]^M)."""
    _check_dim(M, cap=False)
    if not isinstance(samples, (int, np.integer)) or samples < 1:
        raise InvalidParameter(f"samples must be a positive integer, got {samples!r}")
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise InvalidParameter(f"seed must be a nonnegative integer, got {seed!r}")
    cone = Cone(M, float(rho))
    nblocks = -(-samples // MC_BLOCK)
    tasks = [(cone, seed, b, min(MC_BLOCK, samples - b * MC_BLOCK)) for b in range(nblocks)]
    if workers > 1 and nblocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(_count_hits, tasks))
    else:
        hits = sum(map(_count_hits, tasks))
    frac = hits / samples
    box = 2.0**M
    stderr = box * math.sqrt(frac * (1 - frac) / samples)
    packing = None
    if M <= REPORT_PACKING_DIM:
        packing = float(packing_volume(packing_rectangles(M, float(rho))))
    return VolumeReport(M, float(rho), packing, lower_bound(M, rho), box * frac, stderr,
                        int(samples), int(seed))
