"""Acceptance suite: one test and one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines are printed
even without ``-s``.
"""

import math
import time

import numpy as np
import pytest
from scipy import stats

from cubevar.exact import exact_cov_tilde, exact_cov_W, scaling_check
from cubevar.kernel import phi
from cubevar.limits import (
    IntegralConstant,
    ModK,
    RationalConstant,
    RhoFunction,
    cum_cov,
    gamma,
    integral_f_L,
    sigma_matrix,
)
from cubevar.quadrature import adaptive_simpson
from cubevar.series import TruncationBudget, f_L, f_L_values, f_mL, kappa_L_sq, kappa_sq, series_tail_bound
from cubevar.simulate import McConfig, fgn_sample, independence_diagnostic, mc_cov, normality_diagnostics, w_at

B8 = TruncationBudget(tol=1e-8)
N_CASES = 10_000


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def test_criterion_1_kappa_consistency(capsys):
    budget = TruncationBudget(tol=1e-10)

    def work():
        k2 = kappa_sq(budget)
        f0 = f_L(1.0, 0.0, budget)
        fh = f_L(1.0, 0.5, budget)
        return k2, f0, fh

    (k2, f0, fh), elapsed = _timed(work)
    via_f = 0.75 * f0.value
    agree = abs(k2.value - via_f) <= k2.error_bound + 0.75 * f0.error_bound
    checks = {
        "agree": agree,
        "kappa_low": k2.value - k2.error_bound > 4.95,
        "f0_low": f0.value - f0.error_bound > 6.6,
        "fhalf_high": fh.value + fh.error_bound < 0.1,
        "runtime": elapsed < 1.0,
    }
    ok = all(checks.values())
    report(capsys, 1, ok, f"kappa^2={k2.value:.12f} (3/4)f_1(0)={via_f:.12f} runtime={elapsed:.2f}s {checks}")
    assert ok


def test_criterion_2_reproduce_gamma_values(capsys):
    cases = [
        ("rational L=2", RationalConstant(2, 1), 1.0, 0.201928),
        ("rational L=5", RationalConstant(5, 1), 1.0, 0.043837),
        ("integral L=1", IntegralConstant(1), 1.0, 0.101932),
        ("integral L=2", IntegralConstant(2), 1.0, 0.0468229),
        ("mod-k L=k=1 t=0.8", ModK(1, 1), 0.8, 0.0750475),
    ]
    t0 = time.perf_counter()
    got = {label: gamma(RhoFunction(reg, B8), t).value for label, reg, t, _ in cases}
    elapsed = time.perf_counter() - t0
    errs = {label: abs(got[label] - want) for label, _, _, want in cases}
    ok = all(e <= 1e-4 for e in errs.values()) and elapsed < 30
    detail = ", ".join(f"{k}={got[k]:.7f}" for k in got)
    report(capsys, 2, ok, f"{detail}; max abs err={max(errs.values()):.2e} runtime={elapsed:.1f}s")
    assert ok


def test_criterion_3_exact_ground_truths(capsys):
    tilde = exact_cov_tilde(1, 1, 1, 1).value
    W = exact_cov_W(1, 1, 1, 1).value
    rng = np.random.default_rng(3)
    worst = 0.0
    cases = 0
    while cases < 10:
        r = int(rng.integers(1, 5))
        a = int(rng.integers(1, 400))
        b = int(rng.integers(1, 10**7 // (a * r * r) + 1))
        t = float(rng.uniform(0.1, 1.0))
        lhs, rhs = scaling_check(a, b, r, t)
        if rhs == 0.0:
            continue
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
        cases += 1
    ok = abs(tilde - 6) <= 1e-12 and abs(W - 15) <= 1e-12 and worst <= 1e-10
    report(capsys, 3, ok, f"tilde(1,1)={tilde!r} W(1,1)={W!r} worst scaling rel err={worst:.2e}")
    assert ok


def _decay_ok(errs):
    strictly = all(x > y for x, y in zip(errs, errs[1:]))
    return strictly and errs[-1] <= errs[0] / 4


def test_criterion_4_convergence_to_limits(capsys):
    t0 = time.perf_counter()
    ns = (64, 256, 1024, 4096)
    k2_2 = kappa_L_sq(2, TruncationBudget(tol=1e-10)).value
    errs_ratio = [abs(exact_cov_tilde(n, 2 * n, 1, 1).value - k2_2) for n in ns]
    target = cum_cov(RhoFunction(ModK(1, 1), B8), 1.0).value
    errs_modk = [abs(exact_cov_tilde(n, n + 1, 1, 1).value - target) for n in ns]
    elapsed = time.perf_counter() - t0
    ok = _decay_ok(errs_ratio) and _decay_ok(errs_modk) and elapsed < 120
    fmt = lambda xs: "[" + ", ".join(f"{x:.2e}" for x in xs) + "]"  # noqa: E731
    report(capsys, 4, ok, f"(n,2n) errs={fmt(errs_ratio)} (n,n+1) errs={fmt(errs_modk)} runtime={elapsed:.1f}s")
    assert ok


def test_criterion_5_degenerate_regime(capsys):
    vals = [abs(exact_cov_tilde(n, n * n, 1, 1).value) for n in (32, 64, 128, 256)]
    ok = all(x > y for x, y in zip(vals, vals[1:])) and vals[-1] <= vals[0] / 2
    report(capsys, 5, ok, "|tilde(n,n^2)|=[" + ", ".join(f"{v:.3e}" for v in vals) + "]")
    assert ok


def test_criterion_6_banded_soundness(capsys):
    rng = np.random.default_rng(6)
    worst_ratio = 0.0
    sound = True
    for _ in range(20):
        a = int(rng.integers(1, 4000))
        b = int(rng.integers(1, 10**7 // a + 1))
        lo = max(3, -(-b // a) + 1)
        M = int(rng.integers(lo, lo + 40))
        s, t = (float(x) for x in rng.uniform(0.1, 1.0, 2))
        full = exact_cov_tilde(a, b, s, t)
        band = exact_cov_tilde(a, b, s, t, band=M)
        gap = abs(full.value - band.value)
        sound &= gap <= band.certified_remainder
        if band.certified_remainder > 0:
            worst_ratio = max(worst_ratio, gap / band.certified_remainder)
    full_t = min(_timed(lambda: exact_cov_tilde(4096, 4096, 1, 1))[1] for _ in range(3))
    band_t = min(_timed(lambda: exact_cov_tilde(4096, 4096, 1, 1, band=32))[1] for _ in range(3))
    speedup = full_t / band_t
    ok = sound and speedup >= 5
    report(capsys, 6, ok, f"max gap/remainder={worst_ratio:.3f} speedup at 4096x4096 M=32: {speedup:.1f}x")
    assert ok


def test_criterion_7_monte_carlo(capsys):
    t0 = time.perf_counter()
    cfg = McConfig(paths=10_000, seed=7)
    z = {}
    for a, b in ((64, 64), (32, 64), (64, 65)):
        est = mc_cov(a, b, 1, 1, cfg)
        z[(a, b)] = est.z_score(exact_cov_W(a, b, 1, 1).value)
    z_ind = [independence_diagnostic(a, t, cfg).z_score(0.0) for a, t in ((64, 1.0), (256, 0.5))]

    n = 10_000
    crit = float(stats.kstwo.ppf(0.99, n))
    w = w_at(fgn_sample(512, 1, seed=7, paths=n), 1) / math.sqrt(exact_cov_W(512, 512, 1, 1).value)
    ks = normality_diagnostics(w).ks_stat
    w1 = w_at(fgn_sample(1, 1, seed=7, paths=n), 1) / math.sqrt(15.0)
    ks_control = normality_diagnostics(w1).ks_stat
    elapsed = time.perf_counter() - t0

    ok = (
        all(abs(v) <= 4 for v in z.values())
        and all(abs(v) <= 4 for v in z_ind)
        and ks < crit < ks_control
        and elapsed < 300
    )
    zs = ", ".join(f"{k}: z={v:+.2f}" for k, v in z.items())
    report(
        capsys, 7, ok,
        f"{zs}; independence z={[round(v, 2) for v in z_ind]}; KS={ks:.4f} < crit={crit:.4f} < control={ks_control:.4f};"
        f" runtime={elapsed:.1f}s",
    )
    assert ok


def _kernel_identities(rng):
    s, t, u, v = rng.uniform(-10, 10, (4, N_CASES))
    scale = sum(np.cbrt(np.abs(d)) for d in (t - u, s - v, s - u, t - v))
    base = phi(s, t, u, v)
    c = rng.uniform(0, 50, N_CASES)
    lam = rng.uniform(0.01, 100, N_CASES)
    return {
        "symmetry": bool(np.array_equal(base, phi(u, v, s, t))),
        "swap": bool(np.all(np.abs(base - phi(t, t + v - u, v, v + t - s)) <= 1e-12 * scale)),
        "translation": bool(np.all(np.abs(phi(s + c, t + c, u + c, v + c) - base) <= 1e-12 * scale)),
        "scaling": bool(
            np.all(np.abs(phi(lam * s, lam * t, lam * u, lam * v) - np.cbrt(lam) * base) <= 1e-12 * np.cbrt(lam) * scale)
        ),
    }


def _lipschitz(rng):
    m = rng.integers(-50, 50, N_CASES)
    L = rng.uniform(0.01, 10, N_CASES)
    Lp = rng.uniform(0.01, 10, N_CASES)
    x = rng.uniform(0, 1, N_CASES)
    return bool(np.all(np.abs(f_mL(m, L, x) - f_mL(m, Lp, x)) <= 24 * np.cbrt(np.abs(L - Lp)) + 1e-12))


def _reflection(rng):
    M = 1024
    ok = True
    for L in (1, 2, 3):
        x = rng.uniform(0, 1, N_CASES)
        gap = np.abs(f_L_values(float(L), x, M) - f_L_values(float(L), 1.0 - x, M))
        ok &= bool(np.all(gap <= 2 * series_tail_bound(M, L) + 1e-12))
    return ok


def _integral_identity(rng):
    # randomized: E f_hat_L(kU) against E f_L(U') for independent uniforms, plus a deterministic quadrature check
    M = 4096
    budget = TruncationBudget(M=M)
    worst_z = 0.0
    quad_ok = True
    for L in (1, 2):
        exact = integral_f_L(float(L), 1.0, budget)
        plain = f_L_values(float(L), rng.uniform(0, 1, N_CASES), M)
        for k in (1, 2, 3):
            y = k * rng.uniform(0, 1, N_CASES)
            hat = f_L_values(float(L), y - np.floor(y), M)
            se = math.sqrt(hat.var(ddof=1) / N_CASES + plain.var(ddof=1) / N_CASES)
            worst_z = max(worst_z, abs(hat.mean() - plain.mean()) / se)

            def integrand(x, L=L, k=k):
                y = k * np.asarray(x)
                return f_L_values(float(L), y - np.floor(y), M)

            direct = adaptive_simpson(integrand, 0.0, 1.0, 1e-9, breakpoints=[i / k for i in range(1, k)])
            quad_ok &= abs(direct.value - exact.value) <= exact.total_error + direct.error_estimate + 1e-9
    return worst_z <= 4 and quad_ok, worst_z


def _sigma(rng):
    r = rng.uniform(-1, 1, N_CASES)
    k2 = rng.uniform(0.01, 100, N_CASES)
    for ri, ki in zip(r, k2):
        s = sigma_matrix(ri * ki, ki)
        want = np.array([[ki, ri * ki], [ri * ki, ki]])
        if not np.allclose(s @ s.T, want, rtol=0, atol=1e-12 * ki):
            return False
    return True


def test_criterion_8_identity_suite(capsys):
    rng = np.random.default_rng(8)
    checks = _kernel_identities(rng)
    checks["lipschitz"] = _lipschitz(rng)
    checks["reflection"] = _reflection(rng)
    checks["integral_identity"], worst_z = _integral_identity(rng)
    checks["sigma"] = _sigma(rng)
    ok = all(checks.values())
    report(capsys, 8, ok, f"{checks} (integral identity worst z={worst_z:.2f})")
    assert ok


# --- criterion 9 ------------------------------------------------------------

FINITE_N_TOL = 1e-5


def _oscillation_limits(t):
    odd = cum_cov(RhoFunction(ModK(1, 2), B8), t)
    even = cum_cov(RhoFunction(ModK(1, 1), B8), t)
    return odd, even


@pytest.fixture(scope="module")
def oscillation():
    out = {}
    for t in (1.0, 0.25):
        odd, even = _oscillation_limits(t)
        sep = abs(odd.value - even.value) > odd.total_error + even.total_error
        dists = {}
        for n in (999, 1000):
            b = n * n + (2 if n % 2 else 1)
            lim = odd if n % 2 else even
            dists[n] = abs(exact_cov_tilde(n * n, b, t, t, band=64).value - lim.value)
        out[t] = (odd, even, sep, dists)
    return out


def test_criterion_9_oscillation(capsys, oscillation):
    literal_sep = oscillation[1.0][2]
    parts = []
    for t, (odd, even, sep, dists) in oscillation.items():
        parts.append(
            f"t={t}: odd={odd.value:.12f} even={even.value:.12f} separated={sep}"
            f" finite-n dist n=999:{dists[999]:.1e} n=1000:{dists[1000]:.1e}"
        )
    report(capsys, 9, literal_sep, "; ".join(parts))
    # the two limits coincide at t=1, k=1: with kt an integer both equal t (3/4) int_0^1 f_1
    odd, even, _, _ = oscillation[1.0]
    assert odd.value == pytest.approx(even.value, abs=odd.total_error + even.total_error)


@pytest.mark.xfail(strict=True, reason="the two subsequential limits are equal at t=1, k=1")
def test_criterion_9_literal_separation_at_t1(oscillation):
    assert oscillation[1.0][2]


def test_criterion_9_separation_off_integer_times(oscillation):
    assert oscillation[0.25][2]


@pytest.mark.parametrize("t", [1.0, 0.25])
def test_criterion_9_finite_n_near_limits(oscillation, t):
    dists = oscillation[t][3]
    assert max(dists.values()) <= FINITE_N_TOL
