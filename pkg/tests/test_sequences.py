import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from landau_kit.cone_core import Cone, gamma_max, in_neg_polar
from landau_kit.errors import DimensionMismatch, IndexOutOfRange, InvalidParameter
from landau_kit.sequences import (BlockVectors, CounterexampleParams, block_inequality_slack,
                                  block_periodic, block_vectors, builtin_sequences,
                                  eta_sequence, explicit_sequence, gen_counterexample_I,
                                  gen_counterexample_II, harmonic_sequence, key_inequality_ratio,
                                  key_inequality_table, random_sequence, sequence_from_json,
                                  validate_theorem_T, zeta_sequence)

F = Fraction

# sum_{n<=10^6} n^-1/2 / |sum_{n<=10^6} (-1)^(n+1) n^-1/2|, Hurwitz-zeta evaluation at 30 digits
ETA_RATIO_HALF_1E6 = 3306.65888620075636946


def test_coefficient_accessors():
    seq = explicit_sequence([[2, 0, 1], [1, -1, -1]], start_index=3)
    assert seq.coefficient(1) == 0
    assert seq.coefficient(3) == pytest.approx(2j)
    assert seq.coefficient(4) == pytest.approx(-1)
    assert seq.coefficient(5) == 0
    mod, cos, sin = seq.arrays(6)
    assert mod.tolist() == [0, 0, 2, 1, 0, 0]
    assert sin.tolist() == [0, 0, 1, 0, 0, 0]


def test_vector_rule_matches_scalar_rule():
    for seq in (eta_sequence(), harmonic_sequence(), gen_counterexample_I(3, F(1, 2))[0],
                gen_counterexample_II(3, 2, 1)[0], random_sequence(50, 3)):
        mod, cos, sin = seq.arrays(60)
        for n in range(1, 61):
            assert complex(mod[n - 1] * cos[n - 1], mod[n - 1] * sin[n - 1]) == \
                pytest.approx(seq.coefficient(n), abs=1e-15)


def test_block_vectors_examples():
    ones = zeta_sequence()
    assert block_vectors(ones, 2, 0, 1) == BlockVectors((1, 1), (1, 1), 0, 1, 2)
    bv = block_vectors(ones, 2, 1, 1)
    assert bv.beta == pytest.approx((1.0986122886681098, 1.3862943611198906))
    cx, _ = gen_counterexample_I(2, 1)
    bv = block_vectors(cx, 2, 0, 5)
    assert bv.beta == (F(1, 5), F(1, 5))
    assert bv.psi == (-1, 1)


def test_block_vectors_ranges():
    with pytest.raises(IndexOutOfRange):
        block_vectors(zeta_sequence(), 2, 0, 0)
    cx, _ = gen_counterexample_I(2, 1)
    assert block_vectors(cx, 2, 0, 0).beta == (0, 0)  # allowed because start_index > M
    with pytest.raises(IndexOutOfRange):
        block_vectors(explicit_sequence([[1, 1, 1]] * 5), 2, 0, 2)


def test_block_inequality_slack_examples():
    assert block_inequality_slack(BlockVectors((1, 1), (1, 1), 0, 1, 2), 1) == 0
    assert block_inequality_slack(BlockVectors((1, 1), (-1, 1), 0, 1, 2), 0) == 0
    assert block_inequality_slack(BlockVectors((2, 1), (-1, 1), 0, 1, 2), 0) == -1
    with pytest.raises(DimensionMismatch):
        block_inequality_slack(BlockVectors((1, 1), (1,), 0, 1, 2), 0)


def test_validate_harmonic():
    for M, rho in ((2, 1.5), (3, 2.0), (4, 1.25)):
        rep = validate_theorem_T(harmonic_sequence(), M, rho, 0.5, L_max=100)
        assert rep.condition3_ok and rep.condition4_ok
        assert rep.gamma_max_per_block == [1] * 100
        assert rep.worst_slack == 0.5


def test_validate_positive_cosines():
    seq = random_sequence(2000, 9, cos_low=0.4, cos_high=1.0, modulus="flat")
    for rho in (0.3, 1.0, 4.0):
        assert validate_theorem_T(seq, 3, rho, 0.4, L_max=600).condition4_ok


def test_validate_reports_first_failure():
    rep = validate_theorem_T(zeta_sequence(), 2, 0.5, 0, L_max=10)
    assert not rep.condition3_ok and rep.first_condition3_failure == 1


@pytest.mark.parametrize("M", [2, 3, 4, 5])
@pytest.mark.parametrize("rho", [F(1, 3), F(1, 2), 1, 2, F(7, 2)])
def test_counterexample_I_exact(M, rho):
    seq, params = gen_counterexample_I(M, rho)
    w = [F(rho) ** -j for j in range(1, M + 1)]
    assert sum(wj * d for wj, d in zip(w, params.delta)) == 0
    assert all(-1 <= c <= 1 for c in params.cosines)
    rep = validate_theorem_T(seq, M, rho, 0, L_max=60)
    assert rep.condition3_ok and rep.condition4_ok
    assert all(g == 0 and isinstance(g, F) for g in rep.gamma_max_per_block)
    # moduli sit on the boundary: every chained ratio equals rho
    for l in (1, 7):
        beta = block_vectors(seq, M, 0, l).beta
        assert all(beta[j] == rho * beta[j + 1] for j in range(M - 1))


def test_counterexample_I_examples():
    _, p = gen_counterexample_I(2, 1, 1, 1)
    assert p.delta == (-1, 1) and p.cosines == (-1, 1)
    _, p = gen_counterexample_I(3, 1, 1)
    assert p.delta == (0, -1, 1)
    _, p = gen_counterexample_I(2, 3, 1, 1)  # delta_2 = 9 is rescaled into [-1, 1]
    assert max(abs(d) for d in p.delta) == 1
    with pytest.raises(InvalidParameter):
        gen_counterexample_I(2, 1, -1)


def test_counterexample_II_example():
    seq, p = gen_counterexample_II(2, 2, 1, F(1, 2))
    assert p.delta == (F(-3, 4), 1)
    assert sum(F(2) ** -(j + 1) * d for j, d in enumerate(p.delta)) == F(-1, 8)
    assert in_neg_polar(p.delta, Cone(2, 1), 0, tol=0)
    assert p.gamma == F(1, 12)
    assert p.cosines == (F(-7, 24), F(7, 12))
    with pytest.raises(InvalidParameter):
        gen_counterexample_II(2, 1, 1)


@pytest.mark.parametrize("args", [(2, 2, 1), (3, 2, 1), (3, 1, F(1, 2)), (4, 3, F(5, 2)),
                                  (5, F(3, 2), F(1, 2))])
def test_counterexample_II_structure(args):
    M, rho, rho_p = args
    seq, p = gen_counterexample_II(M, rho, rho_p)
    assert p.gamma > 0
    assert max(abs(c) for c in p.cosines) == F(9, 10)  # auto-scaled lambda
    assert gamma_max(p.delta, Cone(M, rho_p)) > 0  # strictly inside at rho'
    assert gamma_max(p.cosines, Cone(M, rho)) == 0  # boundary at rho
    ok = validate_theorem_T(seq, M, rho, p.gamma, L_max=50, rho_cos=rho_p)
    assert ok.condition3_ok and ok.condition4_ok
    assert not validate_theorem_T(seq, M, rho, F(1, 10**6), L_max=50).condition4_ok


def test_counterexample_params_invariant():
    with pytest.raises(InvalidParameter):
        CounterexampleParams(2, 1, 1, 2, 0, (-1, 1))


def test_builtin_catalog():
    cat = builtin_sequences()
    assert cat["zeta"].sigma_a == 1 and cat["zeta"].sequence.coefficient(7) == 1
    assert cat["eta"].sigma_a == 1 and cat["eta"].sigma_c == 0
    assert cat["eta"].sequence.coefficient(4) == -1
    assert cat["harmonic"].sigma_a == 0
    assert cat["harmonic"].sequence.coefficient(4) == pytest.approx(0.25)


def test_json_round_trip():
    seqs = [zeta_sequence(), eta_sequence(), harmonic_sequence(), gen_counterexample_I(3, 2)[0],
            gen_counterexample_II(3, 1, F(1, 2))[0], random_sequence(30, 4),
            block_periodic(2, F(1, 2), (F(1, 3), 1)), explicit_sequence([[1, 0.5, -1]], 2)]
    for seq in seqs:
        text = json.dumps(seq.to_json(), sort_keys=True)
        again = sequence_from_json(json.loads(text))
        assert again == seq
        mod, cos, sin = again.arrays(40)
        mod0, cos0, sin0 = seq.arrays(40)
        assert np.allclose(mod, mod0, atol=1e-15) and np.allclose(cos, cos0, atol=1e-15)
    with pytest.raises(InvalidParameter):
        sequence_from_json({"family": "nope"})


def test_key_ratio_landau_case_is_one():
    for seq in (zeta_sequence(), harmonic_sequence(), random_sequence(500, 1, 1.0, 1.0)):
        for eps in (0.05, 1.0):
            for k in (0, 3, 30):
                assert key_inequality_ratio(seq, eps, k, 500) == 1.0


def test_key_ratio_eta_oracle():
    r = key_inequality_ratio(eta_sequence(), 0.5, 0, 10**6)
    assert r == pytest.approx(ETA_RATIO_HALF_1E6, rel=1e-9)
    smaller = key_inequality_ratio(eta_sequence(), 0.5, 0, 10**4)
    assert smaller < r


def test_key_ratio_cancellation_flag():
    # a_1 = 1/2, a_2 = -1: at eps = 1, k = 0 the signed sum 1/2 - 2^-1 vanishes exactly
    seq = explicit_sequence([[0.5, 1, 1], [1, -1, 1]], start_index=1)
    assert key_inequality_ratio(seq, 1.0, 0, 2) == math.inf
    assert key_inequality_ratio(seq, 1.0, 1, 2) == 1.0  # n = 1 drops out for k >= 1


def test_key_ratio_errors():
    with pytest.raises(InvalidParameter):
        key_inequality_ratio(zeta_sequence(), 0, 0, 10)
    with pytest.raises(InvalidParameter):
        key_inequality_ratio(zeta_sequence(), 0.1, -1, 10)
    with pytest.raises(InvalidParameter):
        key_inequality_ratio(gen_counterexample_I(3, 1)[0], 0.1, 0, 3)


def test_key_ratio_large_k_finite():
    r = key_inequality_ratio(gen_counterexample_II(2, 2, 1)[0], 0.1, 200, 10**5)
    assert math.isfinite(r) and r >= 1


def test_key_ratio_table_matches_single_calls():
    seq = random_sequence(3000, 2, cos_low=-0.5)
    rows = key_inequality_table(seq, [0.1, 0.2], [0, 5], 3000)
    assert [(e, k) for e, k, _ in rows] == [(0.1, 0), (0.1, 5), (0.2, 0), (0.2, 5)]
    for eps, k, r in rows:
        assert r == key_inequality_ratio(seq, eps, k, 3000)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.05, 0.1, 0.2]), st.integers(0, 30))
def test_key_ratio_positive_cosine_bound(seed, eps, k):
    gamma = 0.3
    seq = random_sequence(2000, seed, cos_low=gamma)
    assert key_inequality_ratio(seq, eps, k, 2000) <= 1 / gamma


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.sampled_from([F(1, 2), 1, F(3, 2), 2]),
       st.fractions(min_value=F(1, 10), max_value=F(1, 2), max_denominator=20))
def test_conditions_imply_block_inequality(M, rho, gamma):
    # block-periodic family built to pass both conditions at level gamma
    cos = [gamma + (1 - gamma) * F(j, 2 * M) for j in range(M)]
    seq = block_periodic(M, rho, cos)
    rep = validate_theorem_T(seq, M, rho, gamma, L_max=20)
    assert rep.condition3_ok and rep.condition4_ok
    for l in range(1, 21):
        for k in range(31):
            bv = block_vectors(seq, M, k, l)
            norm = math.sqrt(sum(float(b) ** 2 for b in bv.beta))
            assert float(block_inequality_slack(bv, gamma)) >= -1e-9 * norm
