"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``ACCEPTANCE <n> PASS|FAIL`` line with its measured
numbers and wall time, then asserts. Run ``pytest tests/test_acceptance.py -s``
to see the lines inline; they are also visible in ``-v`` output on failure.
"""

import math
import time

import numpy as np
import pytest

from conftest import random_pd
from critline import counting as ct
from critline import eisenstein as es
from critline import epstein as ep
from critline import specialfns as sf
from critline import sweep as sw
from critline.eisenstein import LatticeId
from critline.forms import (GramForm, HyperbolicPoint, difference_form, dual, scale,
                            unimodular_transform)

from test_eisenstein import C_CAL

I2 = GramForm.identity(2)
GEN = GramForm.positive([[1.0, 0.3], [0.3, 1.7]])


def report(capsys, n, ok, detail, t0):
    with capsys.disabled():
        print(f"\nACCEPTANCE {n} {'PASS' if ok else 'FAIL'}  {detail}  ({time.perf_counter() - t0:.1f} s)")


def test_1_direct_vs_theta(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(5):
        Q = random_pd(rng, 2)
        for s in (2.0, 1.5 + 3j):
            th = ep.eval_theta(Q, s)
            worst = max(worst, abs(ep.eval_direct(Q, s) - th) / (1 + abs(th)))
    ok = worst <= 1e-7
    report(capsys, 1, ok, f"max rel diff {worst:.2e} (<= 1e-7)", t0)
    assert ok


def test_2_functional_equation(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for m in (2, 3, 4):
        Q = random_pd(rng, m)
        for t in (0.7, 5.0, 20.0):
            worst = max(worst, ep.functional_residual(Q, complex(m / 4, t)))
    ok = worst <= 1e-8
    report(capsys, 2, ok, f"max residual {worst:.2e} (<= 1e-8)", t0)
    assert ok


def four_zeta_l(t):
    s = complex(0.5, t)
    return 4 * sf.riemann_zeta(s) * sf.dirichlet_L_chi4(s)


def test_3_afe_calibration(capsys):
    t0 = time.perf_counter()
    v, dv = sw.epstein_values(I2, 5000)
    cal = max(abs(ep.eval_afe(I2, t, v, dv) - ep.eval_theta(I2, complex(0.5, t))) / math.log(t)
              for t in np.arange(10.0, 30.0 + 1e-9, 0.5))
    big = max(abs(ep.eval_afe(I2, t, v, dv) - four_zeta_l(t)) / math.log(t) for t in (1e2, 1e3, 5e3))
    ok = math.isfinite(cal) and abs(cal - C_CAL) < 1e-9 * C_CAL and big <= 2 * cal
    report(capsys, 3, ok, f"C_cal {cal:.6f}, large-t ratio {big:.4f} (<= {2 * cal:.4f})", t0)
    assert ok


@pytest.mark.slow
def test_4_epstein_mean_square(capsys):
    t0 = time.perf_counter()
    parts, ok = [], True
    for name, Q in (("identity", I2), ("generic", GEN)):
        v, dv = sw.epstein_values(Q, 2 * max(sw.T_LADDER))
        M = [sw.mean_square_epstein(Q, T, values=v, dual_values=dv).integral for T in sw.T_LADDER]
        slope = sw.fit_exponent(zip(sw.T_LADDER, M)).slope
        norm = [x / (T * math.log(T) ** 2) for x, T in zip(M, sw.T_LADDER)]
        spread = max(norm) / min(norm)
        ok &= 0.9 <= slope <= 1.25 and spread <= 3
        parts.append(f"{name}: slope {slope:.4f} in [0.9, 1.25], spread {spread:.3f} <= 3")
    report(capsys, 4, ok, "; ".join(parts), t0)
    assert ok


@pytest.mark.slow
def test_5_eisenstein_mean_square(capsys):
    t0 = time.perf_counter()
    worst_slope, worst_ratio = -math.inf, 0.0
    for z in sw.fundamental_grid(3, 3):
        reps = sw.eisenstein_ladder(z, sw.T_LADDER)
        slope = sw.fit_exponent((r.T, r.integral) for r in reps).slope
        norm = [r.integral / (r.T * math.log(r.T) ** 4) for r in reps]
        worst_slope = max(worst_slope, slope)
        worst_ratio = max(worst_ratio, max(norm) / norm[0])
    ok = worst_slope <= 1.3 and worst_ratio <= 2
    report(capsys, 5, ok, f"max slope {worst_slope:.4f} (<= 1.3), max I/I(128) normalized "
           f"{worst_ratio:.3f} (<= 2)", t0)
    assert ok


def test_6_picard_growth(capsys):
    t0 = time.perf_counter()
    fit = sw.pointwise_picard_growth([100 * 2 ** k for k in range(7)])
    ok = 0.35 <= fit.slope <= 0.65
    report(capsys, 6, ok, f"slope {fit.slope:.4f} in [0.35, 0.65]", t0)
    assert ok


@pytest.mark.slow
def test_7_counting_shape(capsys):
    t0 = time.perf_counter()
    r22 = ct.dyadic_table(difference_form(I2), [20, 40, 80, 160], [1, 2, 4])
    r21 = ct.dyadic_table(GramForm(np.diag([1.0, 1.0, -1.0])), [50, 100, 200, 400], [1, 2])
    spread = [max(x) / min(x) for x in ([r.normalized_log for r in r22], [r.normalized_log for r in r21])]
    exact = all(
        ct.count_difference(Q, A, B, region="joint").count
        == ct.count_box(ct.CountQuery(difference_form(Q), A, B)).count
        for Q in (I2, GEN) for A in range(1, 9) for B in (0.5, 1.0, 2.0)
    )
    ok = spread[0] <= 4 and spread[1] <= 4 and exact
    report(capsys, 7, ok, f"spread (2,2) {spread[0]:.3f}, (2,1) {spread[1]:.3f} (<= 4), "
           f"fast == slow for A <= 8: {exact}", t0)
    assert ok


def test_8_identity_end_to_end(capsys):
    t0 = time.perf_counter()
    i, j = HyperbolicPoint.h2(0.0, 1.0), HyperbolicPoint.h3(0.0, 0.0, 1.0)
    X = es.coprime_cutoff(LatticeId.MODULAR, 2, i, 1e-6)
    d_mod = abs(es.eis_direct_coprime(2, i, X).value - es.eis_modular(2, i))
    d_pic = abs(es.eis_direct_coprime(3, j, 300).value - es.eis_picard(3, j))
    ok = d_mod <= 1e-4 and d_pic <= 1e-4
    report(capsys, 8, ok, f"modular {d_mod:.1e}, Picard {d_pic:.1e} (<= 1e-4)", t0)
    assert ok


def test_9_properties(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    Q = random_pd(rng, 3)
    s = 2.3 + 4.1j
    checks = {}
    checks["conjugation"] = abs(ep.eval_theta(Q, s.conjugate()) - ep.eval_theta(Q, s).conjugate()) < 1e-10
    checks["homogeneity"] = abs(ep.eval_theta(scale(Q, 3.0), s) - 3.0 ** -s * ep.eval_theta(Q, s)) < 1e-9
    U = [[1, 2, 0], [0, 1, -1], [1, 2, 1]]
    checks["unimodular"] = abs(ep.eval_theta(unimodular_transform(Q, U), s) - ep.eval_theta(Q, s)) < 1e-9
    checks["dual involution"] = np.allclose(dual(dual(Q)).gram, Q.gram, rtol=1e-12, atol=0)
    z0 = [ep.eval_theta(Q, k * 1e-3).real for k in (1, 2, 4)]  # s = 0 is guarded; extrapolate
    checks["Z(0) = -1"] = abs((8 * z0[0] - 6 * z0[1] + z0[2]) / 3 + 1) < 1e-6
    h = 1e-5
    lim = (h * ep.eval_theta(Q, 1.5 + h) - h * ep.eval_theta(Q, 1.5 - h)) / 2
    checks["residue"] = abs(lim - ep.residue_at_pole(Q)) < 1e-6
    z2, z3 = HyperbolicPoint.h2(0.3, 1.1), HyperbolicPoint.h3(0.1, 0.2, 1.1)
    e2, e3 = es.eis_modular(2.5, z2), es.eis_picard(3.0, z3)
    checks["modular invariance"] = all(abs(es.eis_modular(2.5, w) - e2) < 1e-6
                                       for w in (z2.translate(), z2.invert()))
    checks["Picard invariance"] = all(abs(es.eis_picard(3.0, w) - e3) < 1e-6
                                      for w in (z3.translate(1.0, 0.0), z3.translate(0.0, 1.0), z3.invert()))
    v, dv = sw.epstein_values(GEN, 128)
    checks["sweep determinism"] = len({sw.mean_square_epstein(GEN, 64, values=v, dual_values=dv,
                                                              threads=k) for k in (1, 3, 8)}) == 1
    ok = all(checks.values())
    failed = [k for k, good in checks.items() if not good]
    report(capsys, 9, ok, f"{len(checks) - len(failed)}/{len(checks)} properties"
           + (f", failed: {', '.join(failed)}" if failed else ""), t0)
    assert ok
