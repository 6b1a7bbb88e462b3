"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line; the pytest terminal summary repeats
them as a table. Run on its own with ``pytest tests/test_acceptance.py -s``.
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import criterion
from landau_kit import cli
from landau_kit.cone_core import (Cone, cone_decompose, decompose_many, generator_matrix, in_brho,
                                  in_neg_polar_many)
from landau_kit.dirichlet_engine import (double_series_check, landau_probe, radius_estimate,
                                         taylor_coeffs)
from landau_kit.sequences import (gen_counterexample_I, gen_counterexample_II,
                                  harmonic_sequence, key_inequality_ratio, KeyRatioEvaluator,
                                  random_sequence, validate_theorem_T)
from landau_kit.volume import (lower_bound, mc_volume, packing_rectangles, packing_volume,
                               rectangles_contained, rectangles_ge1, verify_disjoint)

HALF = Fraction(1, 2)


def report(number, ok, detail=""):
    print(f"criterion {number:2d} {'PASS' if ok else 'FAIL'} {detail}")


@criterion(1, "volume bound chain over {2..5} x {0.1..10}")
def test_criterion_01_volume_bound_chain():
    start = time.perf_counter()
    failures = []
    for M in (2, 3, 4, 5):
        for rho in (0.1, 0.25, 0.5, 1, 2, 4, 10):
            rects = packing_rectangles(M, rho)
            cone = Cone(M, rho)
            vol = float(packing_volume(rects))
            rep = mc_volume(M, rho, 10**6, seed=1000 * M + int(100 * rho))
            checks = {
                "disjoint": verify_disjoint(rects),
                "contained": rectangles_contained(rects, cone, tol=1e-12),
                "bound": vol >= lower_bound(M, rho) - 1e-9,
                "mc": rep.mc_estimate >= vol - 4 * rep.mc_stderr,
            }
            failures += [(M, rho, name) for name, ok in checks.items() if not ok]
    elapsed = time.perf_counter() - start
    report(1, not failures and elapsed < 60, f"failures={failures} runtime={elapsed:.1f}s")
    assert not failures
    assert elapsed < 60


@criterion(2, "closed-form cross-checks (M=2 packing 5/4, MC = 1 + 1/(2 rho))")
def test_criterion_02_closed_forms():
    exact = packing_volume(rectangles_ge1(2, 1))
    assert exact == Fraction(5, 4)
    assert exact == (1 + Fraction(1, 4)) ** (2 - 1)
    deviations = {}
    for rho in (1, 2, 4):
        rep = mc_volume(2, rho, 10**6, seed=rho)
        deviations[rho] = abs(rep.mc_estimate - (1 + 1 / (2 * rho))) / rep.mc_stderr
    ok = all(d <= 4 for d in deviations.values())
    report(2, ok, f"packing={exact} sigma-deviations={ {k: round(v, 2) for k, v in deviations.items()} }")
    assert ok


@criterion(3, "rho -> 0 freedom limit (M=3, rho=0.01)")
def test_criterion_03_small_rho_limit():
    rep = mc_volume(3, 0.01, 10**6, seed=3)
    ok = rep.mc_estimate >= 0.95 * 2 ** (3 - 1)
    report(3, ok, f"mc={rep.mc_estimate:.5f} >= 3.8")
    assert ok


@criterion(4, "duality, decomposition round trip and exact sign/membership equivalence")
def test_criterion_04_duality_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(20240604)
    worst_pair = math.inf
    worst_roundtrip = 0.0
    for M in (2, 3, 5):
        for rho in (0.5, 1.0, 2.0):
            cone = Cone(M, rho)
            G = generator_matrix(cone)
            beta = rng.exponential(size=(10**5, M)) @ G
            ys = []
            while sum(len(y) for y in ys) < 10**5:
                cand = rng.uniform(-1, 1, size=(4 * 10**5, M))
                ys.append(cand[in_neg_polar_many(cand, cone)])
            y = np.concatenate(ys)[:10**5]
            dots = np.einsum("ij,ij->i", beta, y)
            scale = np.linalg.norm(beta, axis=1) * np.linalg.norm(y, axis=1)
            worst_pair = min(worst_pair, float(np.min(dots / scale)))
            v = rng.normal(size=(10**5, M))
            back = decompose_many(v, cone) @ G
            rel = np.linalg.norm(back - v, axis=1) / np.linalg.norm(v, axis=1)
            worst_roundtrip = max(worst_roundtrip, float(rel.max()))
    mismatches = 0
    rng2 = np.random.default_rng(7)
    for _ in range(1000):
        M = int(rng2.integers(1, 6))
        rho = Fraction(int(rng2.integers(1, 5)), int(rng2.integers(1, 5)))
        cone = Cone(M, rho)
        if rng2.random() < 0.5:
            # exact points on or near the boundary
            coeffs = [Fraction(int(rng2.integers(-1, 4)), int(rng2.integers(1, 4))) for _ in range(M)]
            beta = [sum(coeffs[r] * rho ** -(j + 1) for r in range(j + 1)) for j in range(M)]
        else:
            beta = [Fraction(int(rng2.integers(-2, 6)), int(rng2.integers(1, 4))) for _ in range(M)]
        signs_ok = all(c >= 0 for c in cone_decompose(beta, cone))
        mismatches += signs_ok != in_brho(beta, cone, tol=0)
    elapsed = time.perf_counter() - start
    ok = worst_pair >= -1e-9 and worst_roundtrip <= 1e-10 and mismatches == 0 and elapsed < 30
    report(4, ok, f"min scaled beta.y={worst_pair:.3g} max round-trip={worst_roundtrip:.2g} "
                  f"mismatches={mismatches} runtime={elapsed:.1f}s")
    assert worst_pair >= -1e-9
    assert worst_roundtrip <= 1e-10
    assert mismatches == 0
    assert elapsed < 30


@criterion(5, "sharpness part I: exact gamma_max = 0, probe extends, tail slope <= -0.8")
def test_criterion_05_counterexample_I():
    rows = []
    for M in (2, 3, 4):
        for rho in (HALF, 1, 2):
            seq, params = gen_counterexample_I(M, rho)
            rep = validate_theorem_T(seq, M, rho, 0, L_max=200)
            exact_zero = all(isinstance(g, Fraction) and g == 0 for g in rep.gamma_max_per_block)
            probe = landau_probe(seq, 0.1, k_max=40, N=10**6)
            rows.append((M, rho, rep.condition3_ok and rep.condition4_ok and exact_zero,
                         probe.verdict, probe.tail_slope))
    ok = all(v and verdict == "extends" and slope <= -0.8 for _, _, v, verdict, slope in rows)
    report(5, ok, " ".join(f"({M},{rho}):{verdict},{slope:.3f}" for M, rho, _, verdict, slope in rows))
    for row in rows:
        assert row[2], row
        assert row[3] == "extends", row
        assert row[4] <= -0.8, row


@criterion(6, "sharpness part II: gamma > 0 admissible at rho', fails at rho, probe extends")
def test_criterion_06_counterexample_II():
    rows = []
    for M, rho, rho_p in ((2, 2, 1), (3, 2, 1), (3, 1, HALF)):
        seq, params = gen_counterexample_II(M, rho, rho_p)
        at_prime = validate_theorem_T(seq, M, rho, params.gamma, L_max=200, rho_cos=rho_p)
        at_rho = [validate_theorem_T(seq, M, rho, g, L_max=200).condition4_ok
                  for g in (Fraction(1, 10**6), Fraction(1, 1000), params.gamma, HALF)]
        probe = landau_probe(seq, 0.1, k_max=40, N=10**6)
        rows.append(((M, rho, rho_p), params.gamma > 0,
                     at_prime.condition3_ok and at_prime.condition4_ok, not any(at_rho),
                     probe.verdict))
    ok = all(g and a and b and v == "extends" for _, g, a, b, v in rows)
    report(6, ok, " ".join(f"{key}:gamma>0={g},admissible={a},fails_at_rho={b},{v}"
                           for key, g, a, b, v in rows))
    for row in rows:
        assert row[1] and row[2] and row[3], row
        assert row[4] == "extends", row


@criterion(7, "Landau positive control: harmonic ratio 1, radius 0.5, singular")
def test_criterion_07_harmonic_control():
    seq = harmonic_sequence()
    ratios = [key_inequality_ratio(seq, eps, k, 10**5) for eps in (0.05, 0.5) for k in range(31)]
    radius = radius_estimate(taylor_coeffs(seq, 0.5, 40, 10**6))
    probe = landau_probe(seq, 0.5, k_max=40, N=10**6)
    ok = all(r == 1.0 for r in ratios) and abs(radius - 0.5) <= 0.05 and probe.verdict == "singular"
    report(7, ok, f"ratios==1: {all(r == 1.0 for r in ratios)} radius={radius:.6f} verdict={probe.verdict}")
    assert all(r == 1.0 for r in ratios)
    assert radius == pytest.approx(0.5, rel=0.1)
    assert probe.verdict == "singular"


@criterion(8, "cos >= 0.3 regime: key ratio <= (1/0.3) * 1.05")
def test_criterion_08_positive_cosine_regime():
    gamma = 0.3
    worst = 0.0
    for seed in range(20):
        seq = random_sequence(10**5, seed, cos_low=gamma, cos_high=1.0)
        ratio = KeyRatioEvaluator(seq, 10**5)
        for eps in (0.05, 0.1, 0.2):
            for k in range(31):
                worst = max(worst, ratio(eps, k))
    ok = worst <= (1 / gamma) * 1.05
    report(8, ok, f"max ratio={worst:.4f} limit={(1 / gamma) * 1.05:.4f}")
    assert ok


@criterion(9, "rearrangement identity within 1e-8 relative")
def test_criterion_09_rearrangement():
    seqs = [harmonic_sequence()] + [random_sequence(10**5, 100 + i, 1.0, 1.0) for i in range(5)]
    worst = 0.0
    for seq in seqs:
        for eps, r in ((1.0, 0.5), (0.5, 0.25)):
            lhs, rhs = double_series_check(seq, eps, r, k_max=60, N=10**5)
            worst = max(worst, abs(lhs - rhs) / abs(rhs))
    ok = worst <= 1e-8
    report(9, ok, f"max relative gap={worst:.3g}")
    assert ok


def _sweep_suite(directory, threads):
    runs = {
        "volume.csv": ["sweep", "--kind", "volume", "--grid", "rho=0.25,0.5,1,2,4,8", "--M", "3",
                       "--samples", "200000", "--seed", "42", "--format", "csv"],
        "volume_2d.json": ["sweep", "--kind", "volume", "--grid", "M=2,3", "--grid", "rho=0.5,2",
                           "--samples", "100000", "--seed", "9"],
        "key_ratio.csv": ["sweep", "--kind", "key-ratio", "--seq", "eta", "--grid",
                          "epsilon=0.05,0.1,0.2", "--grid", "k=0:30", "--N", "20000",
                          "--format", "csv"],
        "probe.csv": ["sweep", "--kind", "probe", "--seq", "harmonic", "--grid",
                      "epsilon=0.1,0.5", "--N", "100000", "--format", "csv"],
        "volume.json": ["volume", "--M", "3", "--rho", "0.5", "--samples", "300000", "--seed", "5"],
    }
    out = {}
    for name, argv in runs.items():
        path = directory / name
        code = cli.main(argv + ["--threads", str(threads), "--out", str(path)])
        assert code == 0, name
        out[name] = path.read_bytes()
    return out


@criterion(10, "CLI sweep suite byte-identical across thread counts")
def test_criterion_10_reproducibility(tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    first = _sweep_suite(tmp_path / "a", threads=1)
    second = _sweep_suite(tmp_path / "b", threads=4)
    differing = sorted(name for name in first if first[name] != second[name])
    report(10, not differing, f"files={len(first)} differing={differing}")
    assert not differing
