"""Truncated Dirichlet series: evaluation, Taylor re-expansion and extension probes.

All sums run over n = 1..N in increasing order with the lane-compensated
reduction from :mod:`landau_kit.summation`, so every number reported here is
bit-stable across runs and machines with the same numpy build.

Radius estimation
-----------------
The Taylor coefficients of the raw truncation,

    c_k = (-1)^k / k! * sum_{n<=N} a_n n^-eps (log n)^k,

describe an entire function (a finite Dirichlet polynomial), and at desk-scale
N their growth is dominated by the cut at n = N rather than by the singularity
of the full series. The engine therefore also forms *resummed* coefficients:

1. the cut is replaced by a smooth window w(n/N) (1 up to N/2, a cubic
   smoothstep down to 0 at N), which suppresses the artificial edge;
2. the remainder of the series is modelled by a power-law density
   C alpha t^(-alpha-1), fitted from smoothed partial sums at dyadic
   truncations N, N/2, ..., N/64;
3. the modelled remainder's contribution to every c_k is added in closed form
   (upper incomplete gamma function plus a Gauss-Legendre quadrature over the
   window band).

When the partial sums settle faster than any power law (no detectable
remainder), step 3 is skipped. The radius is read off a log-linear fit of
|c_k| over the top quartile of k.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaincc, gammaln

from .errors import DegenerateExpansion, InvalidParameter
from .sequences import CoefficientSequence
from .summation import compensated_sum

TAIL_LEVELS = 6
TAIL_REL_FLOOR = 1e-13
# fitted decay exponents at or below this mean the series diverges at s = eps
MIN_TAIL_ALPHA = 0.02
_GL_WINDOW = np.polynomial.legendre.leggauss(60)
_GL_BAND = np.polynomial.legendre.leggauss(40)


@dataclass(frozen=True)
class TailModel:
    """Remainder model sum_{n>x} a_n n^-eps ~ constant * x^-alpha."""

    alpha: float
    constant: complex


@dataclass(frozen=True)
class TaylorExpansion:
    epsilon: float
    coefficients: tuple  # raw truncated c_k, complex
    N: int
    k_max: int
    resummed: tuple = ()
    tail: Optional[TailModel] = None
    exact: bool = False  # every nonzero coefficient sits below N/2
    divergent: bool = False  # partial sums at s = eps grow with N

    def __post_init__(self):
        if len(self.coefficients) != self.k_max + 1:
            raise InvalidParameter("coefficient list length must be k_max + 1")


@dataclass(frozen=True)
class ProbeThresholds:
    extends_radius: float = 1.2
    singular_radius: float = 1.05
    tail_slope: float = 0.5

    def verdict(self, epsilon: float, radius: float, slope: float) -> str:
        if radius >= self.extends_radius * epsilon and slope <= -self.tail_slope * (1 - epsilon):
            return "extends"
        if radius <= self.singular_radius * epsilon:
            return "singular"
        return "inconclusive"


@dataclass(frozen=True)
class TailScan:
    epsilon: float
    N_grid: tuple
    tails: tuple
    slope: float


@dataclass(frozen=True)
class AbscissaFit:
    estimate: float
    raw_slope: float
    bounded: bool
    N_grid: tuple
    partial_sums: tuple


@dataclass
class ProbeReport:
    sequence: str
    epsilon: float
    N: int
    k_max: int
    N_grid: list
    radius_estimate: float
    tail_slope: float
    verdict: str
    thresholds: ProbeThresholds = field(default_factory=ProbeThresholds)
    coefficients: list = field(default_factory=list)
    tail_alpha: Optional[float] = None
    tails: list = field(default_factory=list)
    tail_mode: str = "sharp"

    @property
    def radius_infinite(self) -> bool:
        return math.isinf(self.radius_estimate)

    def to_json(self) -> dict:
        return {
            "sequence": self.sequence,
            "epsilon": self.epsilon,
            "N": self.N,
            "k_max": self.k_max,
            "N_grid": [int(n) for n in self.N_grid],
            "radius_estimate": None if self.radius_infinite else self.radius_estimate,
            "radius_infinite": self.radius_infinite,
            "tail_slope": self.tail_slope if math.isfinite(self.tail_slope) else None,
            "tail_vanishes": self.tail_slope == -math.inf,
            "tail_alpha": self.tail_alpha,
            "tails": list(self.tails),
            "tail_mode": self.tail_mode,
            "verdict": self.verdict,
            "thresholds": {
                "extends_radius_factor": self.thresholds.extends_radius,
                "singular_radius_factor": self.thresholds.singular_radius,
                "tail_slope_factor": self.thresholds.tail_slope,
            },
            "coefficients": [[c.real, c.imag] for c in self.coefficients],
        }


# -- shared arrays ------------------------------------------------------------------

def _check_N(N) -> int:
    if isinstance(N, bool) or int(N) != N or N < 1:
        raise InvalidParameter(f"N must be a positive integer, got {N!r}")
    return int(N)


def _check_eps(epsilon) -> float:
    eps = float(epsilon)
    if not math.isfinite(eps) or eps <= 0:
        raise InvalidParameter(f"epsilon must be positive, got {epsilon!r}")
    return eps


def _coefficients(seq: CoefficientSequence, N: int):
    """(re, im, log n) arrays of a_n for n = 1..N."""
    mod, cos, sin = seq.arrays(N)
    return mod * cos, mod * sin, np.log(np.arange(1, N + 1, dtype=float))


def window(t):
    """1 on [0, 1/2], cubic smoothstep down to 0 on [1/2, 1], 0 beyond."""
    u = np.clip(2.0 * (np.asarray(t, dtype=float) - 0.5), 0.0, 1.0)
    return 1.0 - u * u * (3.0 - 2.0 * u)


def eval_partial(seq: CoefficientSequence, s: complex, N: int) -> complex:
    """sum_{n<=N} a_n n^-s."""
    N = _check_N(N)
    re, im, log_n = _coefficients(seq, N)
    s = complex(s)
    mag = np.exp(-s.real * log_n)
    phase = -s.imag * log_n
    c, sn = np.cos(phase), np.sin(phase)
    tr = mag * (re * c - im * sn)
    ti = mag * (re * sn + im * c)
    out = compensated_sum(np.vstack([tr, ti]))
    return complex(out[0], out[1])


# -- abscissa ------------------------------------------------------------------------

def abscissa_fit(seq: CoefficientSequence, N_grid: Sequence[int]) -> AbscissaFit:
    """Growth exponent of A(N) = sum_{n<=N} |a_n| over an increasing grid.

    With three or more grid points log A is fitted against
    (1, log N, log log N) and the log N coefficient is reported, so that
    logarithmic growth (sigma_a = 0 with a divergent sum at 0) does not bias
    the exponent upward. With two points the plain slope is used. Negative
    exponents are clamped at 0.
    """
    grid = [_check_N(n) for n in N_grid]
    if len(grid) < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidParameter("N_grid must be strictly increasing with at least 2 points")
    mod, _, _ = seq.arrays(grid[-1])
    bounds = [0] + grid
    partial = []
    acc = []
    for lo, hi in zip(bounds, bounds[1:]):
        acc.append(compensated_sum(mod[lo:hi]))
        partial.append(math.fsum(acc))
    A = np.array(partial)
    live = A > 0
    if live.sum() < 2:
        return AbscissaFit(0.0, 0.0, True, tuple(grid), tuple(partial))
    x = np.log(np.array(grid, dtype=float)[live])
    y = np.log(A[live])
    raw = float(np.polyfit(x, y, 1)[0])
    if live.sum() >= 3 and x[0] > 0:
        design = np.column_stack([np.ones_like(x), x, np.log(x)])
        coef = np.linalg.lstsq(design, y, rcond=None)[0]
        slope = float(coef[1])
    else:
        slope = raw
    bounded = bool(A[-1] > 0 and (A[-1] - A[-2]) <= 1e-3 * A[-1])
    return AbscissaFit(max(0.0, slope), raw, bounded, tuple(grid), tuple(partial))


def abscissa_abs_estimate(seq: CoefficientSequence, N_grid: Sequence[int]) -> float:
    return abscissa_fit(seq, N_grid).estimate


# -- Taylor coefficients -------------------------------------------------------------

def _log_weight(k: int, loglog: np.ndarray) -> np.ndarray:
    """(log n)^k / k! for n = 1..N (n = 1 contributes only at k = 0)."""
    if k == 0:
        return np.ones(loglog.shape)
    out = np.exp(k * loglog - gammaln(k + 1))
    out[0] = 0.0
    return out


def _g_alpha(alpha: float) -> float:
    """1 + int_{1/2}^{1} (1 - w(t)) alpha t^(-alpha-1) dt."""
    x, wts = _GL_WINDOW
    t = 0.5 + 0.25 * (x + 1.0)
    return 1.0 + 0.25 * float(np.sum(wts * (1.0 - window(t)) * alpha * t ** (-alpha - 1.0)))


def _smoothed_sum(br: np.ndarray, bi: np.ndarray, x: int) -> complex:
    t = np.arange(1, x + 1, dtype=float) / x
    w = window(t)
    out = compensated_sum(np.vstack([br[:x] * w, bi[:x] * w]))
    return complex(out[0], out[1])


def fit_tail(br: np.ndarray, bi: np.ndarray, N: int, levels: int = TAIL_LEVELS):
    """Fit the remainder model to smoothed partial sums at N/2^m.

    Returns ``(TailModel or None, divergent)``.
    """
    xs = [N >> m for m in range(levels, -1, -1)]
    xs = [x for x in xs if x >= 4]
    if len(xs) < 3:
        return None, False
    S = [_smoothed_sum(br, bi, x) for x in xs]
    D = np.array([S[i + 1] - S[i] for i in range(len(xs) - 1)])
    X = np.array(xs[:-1], dtype=float)
    keep = np.abs(D) > TAIL_REL_FLOOR * max(1.0, abs(S[-1]))
    if keep.sum() < 2:
        return None, False
    alpha = -float(np.polyfit(np.log(X[keep]), np.log(np.abs(D[keep])), 1)[0])
    if alpha <= MIN_TAIL_ALPHA:
        return None, True
    x_last = X[-1]
    constant = complex(D[-1]) / (_g_alpha(alpha) * x_last ** (-alpha) * (1.0 - 2.0 ** (-alpha)))
    return TailModel(alpha, constant), False


def _tail_terms(model: TailModel, N: int, k_max: int) -> np.ndarray:
    """Contribution of the modelled remainder to sum a_n n^-eps (1 - w(n/N)) (log n)^k / k!."""
    alpha = model.alpha
    LN = math.log(N)
    x, wts = _GL_BAND
    half = math.log(2.0) / 2.0
    u = LN - half * (1.0 - x)  # nodes on [log N - log 2, log N]
    damp = 1.0 - window(np.exp(u - LN))
    out = np.empty(k_max + 1)
    for k in range(k_max + 1):
        band = half * float(np.sum(wts * np.exp(k * np.log(u) - alpha * u - gammaln(k + 1)) * damp))
        beyond = float(gammaincc(k + 1, alpha * LN)) / alpha ** (k + 1)
        out[k] = alpha * (band + beyond)
    return model.constant * out


def taylor_coeffs(seq: CoefficientSequence, epsilon: float, k_max: int, N: int) -> TaylorExpansion:
    """Raw and resummed Taylor coefficients of the series about s = epsilon."""
    eps = _check_eps(epsilon)
    N = _check_N(N)
    if isinstance(k_max, bool) or int(k_max) != k_max or k_max < 1:
        raise InvalidParameter(f"k_max must be an integer >= 1, got {k_max!r}")
    k_max = int(k_max)
    re, im, log_n = _coefficients(seq, N)
    scale = np.exp(-eps * log_n)
    br, bi = re * scale, im * scale
    with np.errstate(divide="ignore"):
        loglog = np.log(log_n)
    nz = np.flatnonzero((re != 0) | (im != 0))
    exact = nz.size == 0 or (nz[-1] + 1) <= N // 2
    w = window(np.arange(1, N + 1, dtype=float) / N)
    bwr, bwi = br * w, bi * w
    raw, windowed = [], []
    for k in range(k_max + 1):
        lw = _log_weight(k, loglog)
        sums = compensated_sum(np.vstack([br * lw, bi * lw, bwr * lw, bwi * lw]))
        sign = -1.0 if k % 2 else 1.0
        raw.append(sign * complex(sums[0], sums[1]))
        windowed.append(sign * complex(sums[2], sums[3]))
    tail, divergent = (None, False) if exact else fit_tail(br, bi, N)
    if exact:
        resummed = list(raw)
    elif tail is None:
        resummed = windowed
    else:
        extra = _tail_terms(tail, N, k_max)
        resummed = [c + (-1.0 if k % 2 else 1.0) * extra[k] for k, c in enumerate(windowed)]
    return TaylorExpansion(eps, tuple(raw), N, k_max, tuple(resummed), tail, bool(exact), divergent)


def radius_estimate(expansion: TaylorExpansion) -> float:
    """Radius of convergence of the resummed expansion; ``math.inf`` flags an entire function.

    The estimate is exp(-slope) of a least-squares fit of log|c_k| over the top
    quartile of k. Exact Dirichlet polynomials, and expansions whose top
    coefficients all have |c_k|^(1/k) < 1e-12, are reported as infinite.
    """
    if expansion.k_max < 8:
        raise InvalidParameter("radius estimation needs k_max >= 8")
    coeffs = np.abs(np.array(expansion.resummed or expansion.coefficients, dtype=complex))
    if not np.any(coeffs > 0):
        raise DegenerateExpansion("all Taylor coefficients vanish")
    if expansion.exact:
        return math.inf
    ks = np.arange(expansion.k_max + 1)
    top = (ks >= int(0.75 * expansion.k_max)) & (ks > 0)
    roots = np.zeros(ks.shape)
    roots[top] = coeffs[top] ** (1.0 / ks[top])
    if np.all(roots[top] < 1e-12):
        return math.inf
    use = top & (coeffs > 0)
    if use.sum() < 2:
        return math.inf
    slope = float(np.polyfit(ks[use], np.log(coeffs[use]), 1)[0])
    return math.exp(-slope)


def root_test_radius(expansion: TaylorExpansion, resummed: bool = False) -> float:
    """1 / max_{k in top quartile} |c_k|^(1/k): the plain root-test reading."""
    coeffs = np.abs(np.array(expansion.resummed if resummed else expansion.coefficients))
    ks = np.arange(expansion.k_max + 1)
    top = (ks >= int(0.75 * expansion.k_max)) & (ks > 0)
    peak = float(np.max(coeffs[top] ** (1.0 / ks[top])))
    if peak < 1e-12:
        return math.inf
    return 1.0 / peak


# -- double series -------------------------------------------------------------------

def double_series_check(seq: CoefficientSequence, epsilon: float, r: float, k_max: int = 60,
                        N: int = 100_000):
    """(sum_k sum_n |a_n| n^-eps (log n)^k r^k / k!,  sum_n |a_n| n^-(eps - r))."""
    eps = _check_eps(epsilon)
    N = _check_N(N)
    r = float(r)
    if not (0 <= r < eps):
        raise InvalidParameter(f"need 0 <= r < epsilon, got r={r}, epsilon={eps}")
    if isinstance(k_max, bool) or int(k_max) != k_max or k_max < 1:
        raise InvalidParameter("k_max must be an integer >= 1")
    mod, _, _ = seq.arrays(N)
    log_n = np.log(np.arange(1, N + 1, dtype=float))
    with np.errstate(divide="ignore"):
        loglog = np.log(log_n)
    base = mod * np.exp(-eps * log_n)
    if r == 0:
        rows = [base]
    else:
        lr = math.log(r)
        rows = []
        for k in range(int(k_max) + 1):
            rows.append(base * _log_weight(k, loglog) * math.exp(k * lr))
    lhs = math.fsum(compensated_sum(np.vstack(rows)).tolist())
    rhs = compensated_sum(mod * np.exp(-(eps - r) * log_n))
    return lhs, rhs


# -- Cauchy tails --------------------------------------------------------------------

def default_grid(N: int, points: int = 8) -> list:
    grid = np.unique(np.geomspace(max(N // 1000, 1), max(N // 2, 2), points).astype(np.int64))
    return [int(v) for v in grid]


TAIL_MODES = ("sharp", "smooth")
_REFINE = 8


def cauchy_tail_scan(seq: CoefficientSequence, epsilon: float, N_grid: Sequence[int],
                     mode: str = "sharp") -> TailScan:
    """Tail sizes T(N) of S_N = sum_{n<=N} a_n n^eps and the slope of log T against log N.

    ``mode="sharp"``: T(N) = max_{N <= J <= 2N} |S_J - S_N| over every J.
    ``mode="smooth"``: the same with S_J replaced by the windowed sum
    sum_n a_n n^eps w(n/J), J running over N 2^(i/8), i = 0..8. This measures
    summability rather than convergence, e.g. for sum (-1)^n n^eps.

    The slope is ``-inf`` when fewer than two tails are nonzero.
    """
    eps = _check_eps(epsilon)
    if eps >= 1:
        raise InvalidParameter("epsilon must lie in (0, 1)")
    if mode not in TAIL_MODES:
        raise InvalidParameter(f"mode must be one of {TAIL_MODES}, got {mode!r}")
    grid = [_check_N(n) for n in N_grid]
    if len(grid) < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidParameter("N_grid must be strictly increasing with at least 2 points")
    top = 2 * grid[-1]
    re, im, log_n = _coefficients(seq, top)
    grow = np.exp(eps * log_n)
    tr, ti = re * grow, im * grow
    tails = []
    for n in grid:
        if mode == "sharp":
            # terms a_{N+1} .. a_{2N} (arrays are 0-based)
            cr = np.cumsum(tr[n:2 * n])
            ci = np.cumsum(ti[n:2 * n])
            tails.append(float(np.max(np.hypot(cr, ci))))
        else:
            js = sorted({int(round(n * 2.0 ** (i / _REFINE))) for i in range(_REFINE + 1)})
            base = _smoothed_sum(tr, ti, js[0])
            tails.append(max(abs(_smoothed_sum(tr, ti, j) - base) for j in js[1:]))
    T = np.array(tails)
    live = T > 0
    if live.sum() < 2:
        return TailScan(eps, tuple(grid), tuple(tails), -math.inf)
    slope = float(np.polyfit(np.log(np.array(grid, dtype=float)[live]), np.log(T[live]), 1)[0])
    return TailScan(eps, tuple(grid), tuple(tails), slope)


# -- probe ---------------------------------------------------------------------------

def landau_probe(seq: CoefficientSequence, epsilon: float, k_max: int = 40, N: int = 1_000_000,
                 N_grid: Optional[Sequence[int]] = None,
                 thresholds: ProbeThresholds = ProbeThresholds(),
                 tail_mode: str = "sharp") -> ProbeReport:
    """Resummed radius at s = epsilon plus the Cauchy-tail slope at s = -epsilon."""
    eps = _check_eps(epsilon)
    N = _check_N(N)
    grid = list(N_grid) if N_grid is not None else default_grid(N)
    expansion = taylor_coeffs(seq, eps, k_max, N)
    radius = radius_estimate(expansion)
    scan = cauchy_tail_scan(seq, eps, grid, tail_mode)
    verdict = thresholds.verdict(eps, radius, scan.slope)
    return ProbeReport(seq.description, eps, N, int(k_max), [int(g) for g in grid], radius,
                       scan.slope, verdict, thresholds, list(expansion.resummed),
                       expansion.tail.alpha if expansion.tail else None, list(scan.tails),
                       tail_mode)
