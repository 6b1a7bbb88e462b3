"""The ratio-chained cones B^rho and their polar duals.

For a block length ``M`` and ratio ``rho > 0`` the cone is

    B^rho = {beta in [0, inf)^M : beta_1 <= rho beta_2 <= ... <= rho^(M-1) beta_M}.

It is generated by the vectors ``x^(r) = (0, ..., 0, rho^-r, ..., rho^-M)`` and
its polar cone is cut out by the halfspaces ``sum_{j>=r} rho^-j y_j <= 0``.
Indices ``r`` and ``j`` are 1-based in all documentation; Python sequences are
of course 0-based.

Scalar routines accept ``fractions.Fraction`` entries and stay exact when every
input is rational, which is what the boundary-case tests rely on. The ``*_many``
helpers are vectorized float versions for sampling work.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Sequence, Union

import numpy as np

from .errors import DimensionMismatch, InvalidParameter
from .summation import exact_or_fsum

Number = Union[float, int, Fraction]

DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class Cone:
    """The cone B^rho in dimension ``dim``."""

    dim: int
    rho: Number

    def __post_init__(self):
        if isinstance(self.dim, bool) or not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise InvalidParameter(f"cone dimension must be a positive integer, got {self.dim!r}")
        if not isinstance(self.rho, Real) or not math.isfinite(self.rho) or self.rho <= 0:
            raise InvalidParameter(f"rho must be positive and finite, got {self.rho!r}")

    def weights(self) -> list:
        """(rho^-1, ..., rho^-M)."""
        return [_inv_pow(self.rho, j) for j in range(1, self.dim + 1)]


@dataclass(frozen=True)
class HalfspaceSystem:
    """Rows ``a_r`` with ``y`` in the polar cone iff ``a_r . y <= 0`` for all r."""

    rows: tuple

    def evaluate(self, y: Sequence[Number]) -> list:
        return [exact_or_fsum(a * v for a, v in zip(row, y)) for row in self.rows]

    def contains(self, y: Sequence[Number], tol: float = 0.0) -> bool:
        return all(v <= tol for v in self.evaluate(y))

    def as_array(self) -> np.ndarray:
        return np.array([[float(a) for a in row] for row in self.rows])


@dataclass(frozen=True)
class GammaShift:
    """Diagonal shift gamma*(1, ..., 1) applied to cosine vectors."""

    gamma: Number = 0.0

    def __post_init__(self):
        if not math.isfinite(self.gamma):
            raise InvalidParameter("gamma must be finite")


def _inv_pow(rho: Number, j: int) -> Number:
    if isinstance(rho, (Fraction, int)) and not isinstance(rho, bool):
        return Fraction(rho) ** (-j)
    return rho ** (-j)


def _vector(v: Sequence[Number], cone: Cone, name: str = "vector") -> list:
    vals = list(v.tolist() if isinstance(v, np.ndarray) else v)
    if len(vals) != cone.dim:
        raise DimensionMismatch(f"{name} has length {len(vals)}, cone dimension is {cone.dim}")
    return vals


def _scale(x: Number) -> Number:
    return max(1, abs(x))


def make_cone(M: int, rho: Number) -> Cone:
    return Cone(M, rho)


def in_brho(beta: Sequence[Number], cone: Cone, tol: float = DEFAULT_TOL) -> bool:
    """Membership of ``beta`` in B^rho using the chained ratio form.

    Each comparison is relaxed by ``tol * max(1, |beta_j|)``.
    """
    b = _vector(beta, cone, "beta")
    rho = cone.rho
    for v in b:
        if v < -tol * _scale(v):
            return False
    for j in range(cone.dim - 1):
        if b[j] > rho * b[j + 1] + tol * _scale(b[j]):
            return False
    return True


def generators(cone: Cone) -> list:
    """The generators x^(1), ..., x^(M) as tuples."""
    w = cone.weights()
    zero = w[0] * 0
    return [tuple(zero if j < r else w[j] for j in range(cone.dim)) for r in range(cone.dim)]


def cone_decompose(beta: Sequence[Number], cone: Cone) -> list:
    """Coefficients c with beta = sum_r c_r x^(r).

    c_1 = rho beta_1 and c_r = rho^r (beta_r - beta_{r-1} / rho). All c_r are
    nonnegative exactly when beta lies in B^rho.
    """
    b = _vector(beta, cone, "beta")
    rho = cone.rho
    coeffs = [rho * b[0]]
    for r in range(2, cone.dim + 1):
        coeffs.append(rho**r * (b[r - 1] - b[r - 2] / rho))
    return coeffs


def reconstruct(coeffs: Sequence[Number], cone: Cone) -> list:
    c = _vector(coeffs, cone, "coefficients")
    gens = generators(cone)
    return [exact_or_fsum(c[r] * gens[r][j] for r in range(j + 1)) for j in range(cone.dim)]


def polar_halfspaces(cone: Cone) -> HalfspaceSystem:
    return HalfspaceSystem(tuple(generators(cone)))


def _polar_sums(y: Sequence[Number], cone: Cone, gamma: Number):
    """Suffix sums sum_{j>=r} rho^-j (y_j - gamma) and their magnitude scales."""
    w = cone.weights()
    shifted = [v - gamma for v in y]
    sums, scales = [], []
    for r in range(cone.dim):
        sums.append(exact_or_fsum(w[j] * shifted[j] for j in range(r, cone.dim)))
        scales.append(exact_or_fsum(w[j] * _scale(shifted[j]) for j in range(r, cone.dim)))
    return sums, scales


def _gamma_value(shift) -> Number:
    return shift.gamma if isinstance(shift, GammaShift) else shift


def in_neg_polar(y: Sequence[Number], cone: Cone, shift: GammaShift | Number = 0.0,
                 tol: float = DEFAULT_TOL) -> bool:
    """Whether ``y - gamma*1`` lies in -(B^rho)^#.

    The r-th suffix sum may dip below zero by ``tol`` times the sum of the
    absolute weighted components it is built from.
    """
    vals = _vector(y, cone, "y")
    sums, scales = _polar_sums(vals, cone, _gamma_value(shift))
    return all(s >= -tol * sc for s, sc in zip(sums, scales))


def gamma_max(y: Sequence[Number], cone: Cone) -> Number:
    """Largest gamma for which ``in_neg_polar(y, cone, gamma, tol=0)`` holds."""
    vals = _vector(y, cone, "y")
    w = cone.weights()
    ratios = []
    for r in range(cone.dim):
        num = exact_or_fsum(w[j] * vals[j] for j in range(r, cone.dim))
        den = exact_or_fsum(w[r:])
        ratios.append(num / den)
    return min(ratios)


def nested_p(xs: Sequence[Number]) -> Number:
    """P[x_1, ..., x_n] = x_1 (1 + x_2 (1 + ... x_{n-1} (1 + x_n))); P[] = 0."""
    acc = 0
    for x in reversed(list(xs)):
        acc = x * (1 + acc)
    return acc


# -- vectorized float versions -------------------------------------------------

def _normalized_weights(cone: Cone) -> np.ndarray:
    # a positive common factor keeps every suffix sum's sign and avoids overflow
    j = np.arange(1, cone.dim + 1, dtype=float)
    rho = float(cone.rho)
    top = 1 if rho >= 1 else cone.dim
    return rho ** (top - j)


def _as_matrix(points, cone: Cone) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.shape[-1] != cone.dim:
        raise DimensionMismatch(f"points have dimension {arr.shape[-1]}, cone dimension is {cone.dim}")
    return arr


def neg_polar_suffix_sums(points, cone: Cone, gamma: float = 0.0) -> np.ndarray:
    """Rows of suffix sums, rescaled by a positive constant, for each point."""
    y = _as_matrix(points, cone) - gamma
    weighted = y * _normalized_weights(cone)
    return np.cumsum(weighted[:, ::-1], axis=1)[:, ::-1]


def in_neg_polar_many(points, cone: Cone, gamma: float = 0.0, tol: float = 0.0) -> np.ndarray:
    y = _as_matrix(points, cone) - gamma
    w = _normalized_weights(cone)
    sums = np.cumsum((y * w)[:, ::-1], axis=1)[:, ::-1]
    if tol == 0.0:
        return np.all(sums >= 0.0, axis=1)
    scales = np.cumsum((np.maximum(1.0, np.abs(y)) * w)[:, ::-1], axis=1)[:, ::-1]
    return np.all(sums >= -tol * scales, axis=1)


def in_brho_many(points, cone: Cone, tol: float = DEFAULT_TOL) -> np.ndarray:
    b = _as_matrix(points, cone)
    ok = np.all(b >= -tol * np.maximum(1.0, np.abs(b)), axis=1)
    if cone.dim > 1:
        lhs = b[:, :-1]
        rhs = float(cone.rho) * b[:, 1:] + tol * np.maximum(1.0, np.abs(lhs))
        ok &= np.all(lhs <= rhs, axis=1)
    return ok


def generator_matrix(cone: Cone) -> np.ndarray:
    """Generators as rows of an (M, M) float array."""
    return np.array([[float(v) for v in g] for g in generators(cone)])


def decompose_many(points, cone: Cone) -> np.ndarray:
    b = _as_matrix(points, cone)
    rho = float(cone.rho)
    r = np.arange(1, cone.dim + 1, dtype=float)
    prev = np.concatenate([np.zeros((b.shape[0], 1)), b[:, :-1]], axis=1)
    return rho**r * (b - prev / rho)
