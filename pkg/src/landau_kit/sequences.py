"""Coefficient sequences a_n = |a_n| e^{i theta_n} and blockwise checks.

A sequence is a rule ``n -> (modulus, cos theta_n, sign of sin theta_n)``
plus an optional vectorized twin used by the numerical engine. Rules keep
``Fraction`` arithmetic exact where their parameters are rational, so the
block checks can be run without rounding at the cone boundary.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .cone_core import DEFAULT_TOL, Cone, gamma_max, in_brho
from .errors import DimensionMismatch, IndexOutOfRange, InvalidParameter
from .summation import compensated_sum, exact_or_fsum

Term = tuple
Rule = Callable[[int], Term]
VectorRule = Callable[[np.ndarray], tuple]

_ZERO_TERM = (0, 1, 1)


@dataclass(frozen=True, eq=False)
class CoefficientSequence:
    """A coefficient stream; coefficients below ``start_index`` (and above
    ``max_index`` when given) are zero."""

    rule: Rule
    start_index: int = 1
    description: str = ""
    vector_rule: Optional[VectorRule] = None
    max_index: Optional[int] = None
    spec: Optional[dict] = None

    def term(self, n: int) -> Term:
        if n < max(1, self.start_index) or (self.max_index is not None and n > self.max_index):
            return _ZERO_TERM
        return self.rule(n)

    def coefficient(self, n: int) -> complex:
        mod, c, sgn = self.term(n)
        mod, c = float(mod), float(c)
        return mod * complex(c, sgn * math.sqrt(max(0.0, 1.0 - c * c)))

    def arrays(self, N: int):
        """(modulus, cos, sin) float arrays for n = 1..N."""
        n = np.arange(1, N + 1)
        if self.vector_rule is not None:
            mod, cos, sgn = (np.asarray(v, dtype=float) for v in self.vector_rule(n))
            mod, cos, sgn = np.broadcast_arrays(mod, cos, sgn)
            mod, cos, sgn = mod.copy(), cos.copy(), sgn.copy()
        else:
            terms = [self.rule(int(k)) if k >= self.start_index else _ZERO_TERM for k in n]
            mod = np.array([float(t[0]) for t in terms])
            cos = np.array([float(t[1]) for t in terms])
            sgn = np.array([float(t[2]) for t in terms])
        dead = n < self.start_index
        if self.max_index is not None:
            dead |= n > self.max_index
        mod[dead] = 0.0
        cos[dead] = 1.0
        sgn[dead] = 1.0
        sin = sgn * np.sqrt(np.clip(1.0 - cos * cos, 0.0, None))
        return mod, cos, sin

    def to_json(self) -> dict:
        if self.spec is None:
            raise InvalidParameter(f"sequence {self.description!r} has no serializable form")
        return _plain(self.spec)

    def __eq__(self, other):
        if not isinstance(other, CoefficientSequence):
            return NotImplemented
        if self.spec is None or other.spec is None:
            return self is other
        return self.to_json() == other.to_json()

    def __hash__(self):
        return id(self)


@dataclass(frozen=True)
class BlockVectors:
    beta: tuple
    psi: tuple
    k: int
    l: int
    M: int

    def psi_tilde(self, gamma) -> tuple:
        return tuple(p - gamma for p in self.psi)


@dataclass
class ValidationReport:
    blocks_checked: int
    condition3_ok: bool
    condition4_ok: bool
    gamma_max_per_block: list
    worst_slack: float
    M: int = 0
    rho: float = 0.0
    rho_cos: float = 0.0
    gamma: float = 0.0
    l_min: int = 1
    first_condition3_failure: Optional[int] = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gamma_max_per_block"] = [_json_number(g) for g in self.gamma_max_per_block]
        for key in ("worst_slack", "rho", "rho_cos", "gamma"):
            d[key] = _json_number(d[key])
        return d

    @property
    def min_gamma_max(self):
        finite = [g for g in self.gamma_max_per_block if g != math.inf]
        return min(finite) if finite else math.inf


@dataclass(frozen=True)
class CounterexampleParams:
    M: int
    rho: Real
    c: Real
    lam: Real
    gamma: Real
    delta: tuple
    rho_prime: Optional[Real] = None

    def __post_init__(self):
        for d in self.delta:
            v = self.lam * d + self.gamma
            if v < -1 or v > 1:
                raise InvalidParameter(f"lambda*delta_j + gamma = {float(v)} lies outside [-1, 1]")

    @property
    def cosines(self) -> tuple:
        return tuple(self.lam * d + self.gamma for d in self.delta)

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "rho": _json_number(self.rho),
            "rho_prime": None if self.rho_prime is None else _json_number(self.rho_prime),
            "c": _json_number(self.c),
            "lambda": _json_number(self.lam),
            "gamma": _json_number(self.gamma),
            "delta": [_json_number(d) for d in self.delta],
        }


def _json_number(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, Fraction):
        return float(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _positive(name: str, value) -> None:
    if not isinstance(value, Real) or not math.isfinite(value) or value <= 0:
        raise InvalidParameter(f"{name} must be positive and finite, got {value!r}")


def _block_dim(M) -> None:
    if isinstance(M, bool) or not isinstance(M, (int, np.integer)) or M < 1:
        raise InvalidParameter(f"M must be a positive integer, got {M!r}")


def _exact(x):
    """Promote ints to Fractions so downstream arithmetic stays rational."""
    if isinstance(x, int) and not isinstance(x, bool):
        return Fraction(x)
    return x


# -- families --------------------------------------------------------------------

def zeta_sequence() -> CoefficientSequence:
    return CoefficientSequence(
        lambda n: (1, 1, 1), description="zeta",
        vector_rule=lambda n: (np.ones(n.shape), 1.0, 1.0), spec={"family": "zeta", "params": {}})


def eta_sequence() -> CoefficientSequence:
    def rule(n):
        return (1, 1 if n % 2 else -1, 1)

    return CoefficientSequence(
        rule, description="eta",
        vector_rule=lambda n: (np.ones(n.shape), np.where(n % 2 == 1, 1.0, -1.0), 1.0),
        spec={"family": "eta", "params": {}})


def harmonic_sequence() -> CoefficientSequence:
    return CoefficientSequence(
        lambda n: (Fraction(1, n), 1, 1), description="harmonic",
        vector_rule=lambda n: (1.0 / n, 1.0, 1.0), spec={"family": "harmonic", "params": {}})


def block_periodic(M: int, rho, cosines: Sequence, description: str = "",
                   spec: Optional[dict] = None) -> CoefficientSequence:
    """|a_{Ml+j}| = rho^-j / l, cos theta_{Ml+j} = cosines[j-1], sin sign (-1)^l.

    Terms with l = 0 (n <= M) are zero.
    """
    _block_dim(M)
    _positive("rho", rho)
    rho = _exact(rho)
    cos = tuple(_exact(c) for c in cosines)
    if len(cos) != M:
        raise DimensionMismatch(f"{len(cos)} cosines for block length {M}")
    if any(c < -1 or c > 1 for c in cos):
        raise InvalidParameter("cosines must lie in [-1, 1]")
    inv = [rho ** (-j) for j in range(1, M + 1)]

    def rule(n):
        l, j = divmod(n - 1, M)
        if l == 0:
            return _ZERO_TERM
        return (inv[j] / l, cos[j], 1 if l % 2 == 0 else -1)

    inv_f = np.array([float(v) for v in inv])
    cos_f = np.array([float(c) for c in cos])

    def vector_rule(n):
        l, j = np.divmod(n - 1, M)
        safe = np.maximum(l, 1)
        mod = np.where(l > 0, inv_f[j] / safe, 0.0)
        return mod, cos_f[j], np.where(l % 2 == 0, 1.0, -1.0)

    if spec is None:
        spec = {"family": "block-periodic", "params": {"M": M, "rho": rho, "cos": list(cos)}}
    return CoefficientSequence(rule, start_index=M + 1,
                               description=description or f"block-periodic (M={M}, rho={float(rho)})",
                               vector_rule=vector_rule, spec=spec)


def random_sequence(length: int, seed: int, cos_low: float = 0.0, cos_high: float = 1.0,
                    modulus: str = "harmonic") -> CoefficientSequence:
    """Explicit pseudo-random sequence of the given length.

    Cosines are uniform on [cos_low, cos_high], sin signs are fair coin flips and
    moduli are ``u_n / n`` (``modulus="harmonic"``) or ``u_n`` (``"flat"``) with
    u_n uniform on [0.5, 1.5].
    """
    if length < 1:
        raise InvalidParameter("length must be positive")
    if not (-1 <= cos_low <= cos_high <= 1):
        raise InvalidParameter("need -1 <= cos_low <= cos_high <= 1")
    gen = np.random.Generator(np.random.Philox(seed))
    u = gen.uniform(0.5, 1.5, length)
    cos = gen.uniform(cos_low, cos_high, length)
    sgn = np.where(gen.random(length) < 0.5, -1.0, 1.0)
    n = np.arange(1, length + 1)
    if modulus == "harmonic":
        mod = u / n
    elif modulus == "flat":
        mod = u
    else:
        raise InvalidParameter(f"unknown modulus law {modulus!r}")

    def rule(k):
        return (float(mod[k - 1]), float(cos[k - 1]), int(sgn[k - 1]))

    def vector_rule(k):
        idx = np.minimum(k, length) - 1
        return mod[idx], cos[idx], sgn[idx]

    spec = {"family": "random", "params": {"length": length, "seed": seed, "cos_low": cos_low,
                                           "cos_high": cos_high, "modulus": modulus}}
    return CoefficientSequence(rule, description=f"random (seed={seed})", vector_rule=vector_rule,
                               max_index=length, spec=spec)


def explicit_sequence(terms: Sequence, start_index: int = 1) -> CoefficientSequence:
    """Finite sequence from [[modulus, cos, sign], ...] starting at ``start_index``."""
    if start_index < 1:
        raise InvalidParameter("start_index must be >= 1")
    rows = []
    for t in terms:
        if len(t) != 3:
            raise InvalidParameter(f"explicit terms are [modulus, cos, sign], got {t!r}")
        mod, c, s = t
        if mod < 0 or c < -1 or c > 1 or s not in (-1, 1):
            raise InvalidParameter(f"invalid explicit term {t!r}")
        rows.append((mod, c, int(s)))
    rows = tuple(rows)
    last = start_index + len(rows) - 1
    arr = np.array([[float(v) for v in r] for r in rows]) if rows else np.zeros((0, 3))

    def rule(n):
        return rows[n - start_index]

    def vector_rule(n):
        idx = np.clip(n - start_index, 0, max(len(rows) - 1, 0))
        if not rows:
            return np.zeros(n.shape), 1.0, 1.0
        return arr[idx, 0], arr[idx, 1], arr[idx, 2]

    spec = {"explicit": [list(r) for r in rows], "start_index": start_index}
    return CoefficientSequence(rule, start_index=start_index, description="explicit",
                               vector_rule=vector_rule, max_index=last, spec=spec)


# -- counterexamples ---------------------------------------------------------------

def _auto_lambda(delta, slope):
    """0.9 * sup{lam : |lam * (delta_j + slope)| <= 1 for all j}; cos_j = lam*(delta_j + slope)."""
    peak = max(abs(d + slope) for d in delta)
    if peak == 0:
        return _exact(1)
    nine_tenths = Fraction(9, 10) if isinstance(peak, Fraction) else 0.9
    return nine_tenths / peak


def gen_counterexample_I(M: int, rho, c=1, lam=1):
    """Boundary family with gamma = 0 whose series still extends past s = 0.

    delta_j = c (-1)^(M-j) rho^j (with delta_1 = 0 when M is odd), so that
    sum_j rho^-j delta_j = 0. ``c`` is reduced when some |delta_j| > 1 and
    ``lam`` is replaced by the auto-scaled value when lam * |delta_j| > 1.
    """
    _block_dim(M)
    for name, v in (("rho", rho), ("c", c), ("lambda", lam)):
        _positive(name, v)
    rho, c, lam = _exact(rho), _exact(c), _exact(lam)
    delta = [c * (-1) ** (M - j) * rho**j for j in range(1, M + 1)]
    if M % 2 == 1:
        delta[0] = 0 * c
    peak = max(abs(d) for d in delta)
    if peak > 1:
        c = c / peak
        delta = [d / peak for d in delta]
    if lam * max(abs(d) for d in delta) > 1:
        lam = _auto_lambda(delta, 0)
    zero = 0 * lam
    params = CounterexampleParams(M, rho, c, lam, zero, tuple(delta))
    spec = {"family": "counterexample-I", "params": {"M": M, "rho": rho, "c": c, "lambda": lam}}
    seq = block_periodic(M, rho, params.cosines,
                         description=f"counterexample-I (M={M}, rho={float(rho)})", spec=spec)
    return seq, params


def gen_counterexample_II(M: int, rho, rho_prime, lam=None):
    """Family with gamma > 0 admissible for rho' < rho that still extends.

    delta = (-rho^-(M-1) - t, 0, ..., 0, 1) with t the midpoint
    (rho'^-(M-1) - rho^-(M-1)) / 2, rescaled into [-1, 1]^M if needed. Then
    delta lies strictly inside -(B^rho')^# while delta . (rho^-1, ..., rho^-M) < 0,
    and gamma = -lam (sum_j rho^-j delta_j) / (sum_j rho^-j) > 0.
    """
    _block_dim(M)
    if M < 2:
        raise InvalidParameter("counterexample II needs M >= 2")
    _positive("rho", rho)
    _positive("rho_prime", rho_prime)
    if rho_prime >= rho:
        raise InvalidParameter(f"need rho_prime < rho, got {rho_prime!r} >= {rho!r}")
    rho, rho_prime = _exact(rho), _exact(rho_prime)
    base = rho ** (-(M - 1))
    t = (rho_prime ** (-(M - 1)) - base) / 2
    delta = [-base - t] + [0 * t] * (M - 2) + [1 + 0 * t]
    peak = max(abs(d) for d in delta)
    if peak > 1:
        delta = [d / peak for d in delta]
    w = [rho ** (-j) for j in range(1, M + 1)]
    slope = -exact_or_fsum(wj * dj for wj, dj in zip(w, delta)) / exact_or_fsum(w)
    if lam is not None:
        _positive("lambda", lam)
        lam = _exact(lam)
        if max(abs(lam * (d + slope)) for d in delta) > 1:
            lam = None
    if lam is None:
        lam = _auto_lambda(delta, slope)
    params = CounterexampleParams(M, rho, 1 + 0 * lam, lam, lam * slope, tuple(delta), rho_prime)
    spec = {"family": "counterexample-II",
            "params": {"M": M, "rho": rho, "rho_prime": rho_prime, "lambda": lam}}
    seq = block_periodic(M, rho, params.cosines, spec=spec,
                         description=f"counterexample-II (M={M}, rho={float(rho)}, rho'={float(rho_prime)})")
    return seq, params


@dataclass(frozen=True)
class CatalogEntry:
    sequence: CoefficientSequence
    sigma_a: float
    sigma_c: Optional[float] = None
    note: str = ""


def builtin_sequences() -> dict:
    return {
        "zeta": CatalogEntry(zeta_sequence(), 1.0, 1.0, "pole at s = 1"),
        "eta": CatalogEntry(eta_sequence(), 1.0, 0.0, "entire"),
        "harmonic": CatalogEntry(harmonic_sequence(), 0.0, 0.0, "zeta(s + 1): pole at s = 0"),
        "counterexample-I": CatalogEntry(gen_counterexample_I(2, 1)[0], 0.0, None,
                                         "extends past s = 0"),
        "counterexample-II": CatalogEntry(gen_counterexample_II(2, 2, 1)[0], 0.0, None,
                                          "extends past s = 0"),
    }


def sequence_from_json(data: dict) -> CoefficientSequence:
    """Inverse of ``CoefficientSequence.to_json``."""
    if "explicit" in data:
        return explicit_sequence(data["explicit"], int(data.get("start_index", 1)))
    family = data.get("family")
    params = dict(data.get("params") or {})
    if family in ("zeta", "eta", "harmonic"):
        return builtin_sequences()[family].sequence
    if family == "counterexample-I":
        return gen_counterexample_I(int(params["M"]), params["rho"], params.get("c", 1),
                                    params.get("lambda", 1))[0]
    if family == "counterexample-II":
        return gen_counterexample_II(int(params["M"]), params["rho"], params["rho_prime"],
                                     params.get("lambda"))[0]
    if family == "block-periodic":
        return block_periodic(int(params["M"]), params["rho"], params["cos"])
    if family == "random":
        return random_sequence(int(params["length"]), int(params["seed"]),
                               params.get("cos_low", 0.0), params.get("cos_high", 1.0),
                               params.get("modulus", "harmonic"))
    raise InvalidParameter(f"unknown sequence family {family!r}")


# -- block machinery ---------------------------------------------------------------

def _log_power(n: int, k: int):
    return 1 if k == 0 else math.log(n) ** k


def block_vectors(seq: CoefficientSequence, M: int, k: int, l: int) -> BlockVectors:
    """beta_j = |a_{Ml+j}| (log(Ml+j))^k and psi_j = cos theta_{Ml+j}."""
    _block_dim(M)
    if k < 0:
        raise InvalidParameter("k must be nonnegative")
    if l < 0 or (l == 0 and seq.start_index <= M):
        raise IndexOutOfRange(f"block l={l} is not available for this sequence")
    if seq.max_index is not None and M * l + M > seq.max_index:
        raise IndexOutOfRange(f"block l={l} runs past the last defined index {seq.max_index}")
    beta, psi = [], []
    for j in range(1, M + 1):
        n = M * l + j
        mod, c, _ = seq.term(n)
        beta.append(mod * _log_power(n, k))
        psi.append(c)
    return BlockVectors(tuple(beta), tuple(psi), k, l, M)


def block_inequality_slack(bv: BlockVectors, gamma) -> float:
    """beta . psi - gamma (beta . 1); the block inequality holds iff this is >= 0."""
    if len(bv.beta) != len(bv.psi):
        raise DimensionMismatch("beta and psi lengths differ")
    return exact_or_fsum(b * (p - gamma) for b, p in zip(bv.beta, bv.psi))


def validate_theorem_T(seq: CoefficientSequence, M: int, rho, gamma=0, L_max: int = 100,
                       tol: float = DEFAULT_TOL, l_min: int = 1,
                       rho_cos=None) -> ValidationReport:
    """Check both block conditions for l = l_min .. L_max.

    Modulus condition: each modulus block lies in B^rho. Cosine condition: each
    cosine block lies in -(B^rho_cos)^# + gamma*1, with ``rho_cos`` defaulting to
    rho. Blocks whose moduli all vanish satisfy the modulus condition vacuously and carry no cosine
    constraint (their gamma_max is recorded as infinity).
    """
    _block_dim(M)
    if L_max < 1 or l_min < 0 or l_min > L_max:
        raise InvalidParameter("need 0 <= l_min <= L_max and L_max >= 1")
    mod_cone = Cone(M, _exact(rho))
    cos_cone = Cone(M, _exact(rho if rho_cos is None else rho_cos))
    cond3 = True
    first_fail = None
    gms = []
    for l in range(l_min, L_max + 1):
        terms = [seq.term(M * l + j) for j in range(1, M + 1)]
        mods = [t[0] for t in terms]
        if not in_brho(mods, mod_cone, tol):
            if cond3:
                first_fail = l
            cond3 = False
        if all(m == 0 for m in mods):
            gms.append(math.inf)
        else:
            gms.append(gamma_max([t[1] for t in terms], cos_cone))
    finite = [g for g in gms if g != math.inf]
    worst = (min(finite) - gamma) if finite else math.inf
    cond4 = worst >= -tol
    return ValidationReport(L_max - l_min + 1, cond3, cond4, gms, worst, M, float(rho),
                            float(cos_cone.rho), float(gamma), l_min, first_fail)


# -- key inequality -----------------------------------------------------------------

@dataclass
class _SeriesArrays:
    """Per-(sequence, N) arrays reused across epsilon and k."""

    mod: np.ndarray
    re: np.ndarray
    im: np.ndarray
    log_n: np.ndarray
    log_log_n: np.ndarray = field(repr=False, default=None)

    @classmethod
    def build(cls, seq: CoefficientSequence, N: int) -> "_SeriesArrays":
        mod, cos, sin = seq.arrays(N)
        n = np.arange(1, N + 1, dtype=float)
        log_n = np.log(n)
        with np.errstate(divide="ignore"):
            lln = np.log(log_n)
        return cls(mod, mod * cos, mod * sin, log_n, lln)

    def log_weights(self, epsilon: float, k: int) -> np.ndarray:
        """log(n^-eps (log n)^k), -inf at n = 1 when k > 0."""
        if k == 0:
            return -epsilon * self.log_n
        return k * self.log_log_n - epsilon * self.log_n


def _key_ratio(arrs: _SeriesArrays, epsilon: float, k: int) -> float:
    lw = arrs.log_weights(epsilon, k)
    live = arrs.mod > 0
    if not np.any(live & np.isfinite(lw)):
        raise InvalidParameter("all weighted terms vanish; the ratio is undefined")
    w = np.exp(lw - np.max(lw[live & np.isfinite(lw)]))
    num, re, im = (float(v) for v in compensated_sum(np.vstack([arrs.mod * w, arrs.re * w, arrs.im * w])))
    den = math.hypot(re, im)
    if num == 0:
        raise InvalidParameter("all weighted terms vanish; the ratio is undefined")
    if den < 1e-14 * num:
        return math.inf
    return num / den


def key_inequality_ratio(seq: CoefficientSequence, epsilon: float, k: int, N: int) -> float:
    """sum |a_n| n^-eps (log n)^k / |sum a_n n^-eps (log n)^k| over n <= N.

    Returns ``math.inf`` when the signed sum cancels below 1e-14 of the absolute one.
    """
    _check_key_args(seq, epsilon, k, N)
    return _key_ratio(_SeriesArrays.build(seq, N), float(epsilon), int(k))


class KeyRatioEvaluator:
    """key_inequality_ratio for one (sequence, N) at many (epsilon, k); the
    shared arrays are read-only, so one evaluator may serve several threads."""

    def __init__(self, seq: CoefficientSequence, N: int):
        if N < max(1, seq.start_index):
            raise InvalidParameter(f"N = {N} is below the start index {seq.start_index}")
        self.seq = seq
        self.N = N
        self._arrays = _SeriesArrays.build(seq, N)

    def __call__(self, epsilon: float, k: int) -> float:
        _check_key_args(self.seq, epsilon, k, self.N)
        return _key_ratio(self._arrays, float(epsilon), int(k))


def key_inequality_table(seq: CoefficientSequence, epsilons: Sequence[float], ks: Sequence[int],
                         N: int) -> list:
    """Rows (epsilon, k, ratio) in grid order, sharing one set of arrays."""
    arrs = None
    rows = []
    for eps in epsilons:
        for k in ks:
            _check_key_args(seq, eps, k, N)
            if arrs is None:
                arrs = _SeriesArrays.build(seq, N)
            rows.append((float(eps), int(k), _key_ratio(arrs, float(eps), int(k))))
    return rows


def _check_key_args(seq, epsilon, k, N):
    if not isinstance(epsilon, Real) or not epsilon > 0:
        raise InvalidParameter(f"epsilon must be positive, got {epsilon!r}")
    if isinstance(k, bool) or int(k) != k or k < 0:
        raise InvalidParameter(f"k must be a nonnegative integer, got {k!r}")
    if N < max(1, seq.start_index):
        raise InvalidParameter(f"N = {N} is below the start index {seq.start_index}")


def log_factorial(k: int) -> float:
    return float(gammaln(k + 1))
