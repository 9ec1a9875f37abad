import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubevar.errors import DomainError, PreconditionError
from cubevar.limits import (
    Degenerate,
    IntegralConstant,
    ModK,
    RationalConstant,
    RhoFunction,
    cum_cov,
    gamma,
    integral_f_L,
    limit_cov,
    rho_value,
    sample_limit_process,
    sigma_matrix,
    validate_regime,
)
from cubevar.quadrature import adaptive_simpson
from cubevar.series import TruncationBudget, f_L_values, kappa_sq

B8 = TruncationBudget(tol=1e-8)
KAPPA_SQ = 5.391164368226856

# mpmath oracles (30 digits): sums over m in Z and integrals over the real line
GAMMA_RATIONAL = {2: 0.20192750576246835, 5: 0.04383703135168563}
GAMMA_INTEGRAL = {1: 0.10193205624063631, 2: 0.04682288143518449}
GAMMA_MODK_08 = 0.07504751862079239
INT_F1_0_TO_HALF = 0.36635497972307627
INT_F1_0_TO_QUARTER = 0.32363839830031599


def _close(cv, want, slack=1e-12):
    return abs(cv.value - want) <= cv.total_error + slack


# --- regimes -------------------------------------------------------------


def test_regime_invariants():
    with pytest.raises(PreconditionError):
        RationalConstant(4, 2)
    with pytest.raises(PreconditionError):
        RationalConstant(0, 1)
    with pytest.raises(PreconditionError):
        IntegralConstant(-1.0)
    with pytest.raises(PreconditionError):
        ModK(1.0, 0)
    assert RationalConstant(3, 2).L == 1.5
    assert hash(RhoFunction(ModK(1.0, 1), B8)) == hash(RhoFunction(ModK(1.0, 1), B8))


def test_validate_regime_examples():
    assert validate_regime(ModK(1, 1), [(n, n + 1) for n in range(1, 101)])
    assert validate_regime(RationalConstant(2, 1), [(n, 2 * n) for n in range(1, 101)])
    assert not validate_regime(ModK(1, 1), [(n * n, (n + 1) ** 2) for n in range(1, 101)])


def test_validate_regime_other_variants():
    assert validate_regime(Degenerate(), [(n, n * n) for n in range(2, 60)])
    assert not validate_regime(Degenerate(), [(n, 2 * n) for n in range(2, 60)])
    assert validate_regime(IntegralConstant(1), [(n * n, n * n + n) for n in range(1, 60)])
    assert not validate_regime(IntegralConstant(1), [(n, n) for n in range(1, 60)])
    # finitely many exceptions at the start are allowed
    pairs = [(1, 5), (2, 7)] + [(n, 2 * n) for n in range(10, 50)]
    assert validate_regime(RationalConstant(2, 1), pairs)
    assert validate_regime(ModK(2, 3), [(n, 2 * n + 3) for n in range(4, 50)])


def test_validate_regime_preconditions():
    with pytest.raises(PreconditionError):
        validate_regime(ModK(1, 1), [])
    with pytest.raises(PreconditionError):
        validate_regime(ModK(1, 1), [(2, 3), (2, 4)])


# --- rho -----------------------------------------------------------------


def test_rho_examples():
    zero = rho_value(RhoFunction(Degenerate(), B8), 3.7)
    assert zero.value == 0.0 and zero.error_bound == 0.0
    assert _close(rho_value(RhoFunction(RationalConstant(1, 1), B8), 2.0), KAPPA_SQ)
    assert _close(rho_value(RhoFunction(ModK(1, 1), B8), 0.0), KAPPA_SQ)
    with pytest.raises(PreconditionError):
        rho_value(RhoFunction(ModK(1, 1), B8), -1.0)


def test_modk_rho_not_constant():
    rf = RhoFunction(ModK(1, 3), B8)
    low = rho_value(rf, 0.5 / 3)
    high = rho_value(rf, 2.0 / 3)
    assert low.value + low.error_bound < 0.75 * 0.1
    assert high.value - high.error_bound > 0.75 * 6.6


@pytest.mark.parametrize(
    "regime",
    [Degenerate(), RationalConstant(2, 1), RationalConstant(3, 2), IntegralConstant(1.5), ModK(2, 1), ModK(0.5, 2)],
)
def test_rho_bounded_by_kappa_sq(regime):
    rf = RhoFunction(regime, TruncationBudget(tol=1e-6))
    k2 = kappa_sq(rf.budget)
    for t in np.linspace(0, 2, 9):
        r = rho_value(rf, float(t))
        assert abs(r.value) <= k2.value + k2.error_bound + r.total_error


def test_rational_rho_formula():
    # p/q = 3/2: (3 / 4p) (f_{1.5}(1/2) + f_{1.5}(1))
    M = 2048
    want = 0.25 * f_L_values(1.5, [0.5, 1.0], M).sum()
    got = rho_value(RhoFunction(RationalConstant(3, 2), TruncationBudget(M=M)), 0.0)
    assert got.value == pytest.approx(want, rel=1e-14)


# --- cumulative covariance ------------------------------------------------


def test_cum_cov_constant_regime():
    rf = RhoFunction(RationalConstant(2, 1), B8)
    assert cum_cov(rf, 0.7).value == rho_value(rf, 0.0).value * 0.7


def test_cum_cov_modk_integer_periods():
    rf = RhoFunction(ModK(1, 2), B8)
    full = integral_f_L(1.0, 1.0, B8, rf.quad_tol).value * 0.75
    assert cum_cov(rf, 1.5).value == pytest.approx(1.5 * full, rel=1e-14)
    assert cum_cov(rf, 0.0).value == 0.0


def test_cum_cov_partial_oracles():
    assert _close(cum_cov(RhoFunction(ModK(1, 2), B8), 0.25), 0.375 * INT_F1_0_TO_HALF)
    assert _close(cum_cov(RhoFunction(ModK(1, 1), B8), 0.25), 0.75 * INT_F1_0_TO_QUARTER)


def test_cum_cov_additivity():
    # difference of cum_cov against a direct quadrature of rho between t1 and t2
    M = 4096
    budget = TruncationBudget(M=M)
    rf = RhoFunction(ModK(2.0, 3), budget)
    t1, t2 = 0.2, 0.9
    rho = lambda x: 0.375 * f_L_values(2.0, 3 * x - np.floor(3 * x), M)  # noqa: E731
    direct = adaptive_simpson(rho, t1, t2, 1e-9, breakpoints=[1 / 3, 2 / 3])
    diff = cum_cov(rf, t2).value - cum_cov(rf, t1).value
    assert abs(diff - direct.value) <= cum_cov(rf, t2).heuristic_error + cum_cov(rf, t1).heuristic_error + 2e-9


# --- gamma ----------------------------------------------------------------


def test_gamma_oracles():
    for L, want in GAMMA_RATIONAL.items():
        assert _close(gamma(RhoFunction(RationalConstant(L, 1), B8), 1.0), want)
    for L, want in GAMMA_INTEGRAL.items():
        assert _close(gamma(RhoFunction(IntegralConstant(L), B8), 1.0), want)
    assert _close(gamma(RhoFunction(ModK(1, 1), B8), 0.8), GAMMA_MODK_08)


def test_gamma_constant_in_t():
    rf = RhoFunction(RationalConstant(5, 1), B8)
    assert gamma(rf, 0.3).value == gamma(rf, 1.7).value


def test_gamma_requires_positive_t():
    with pytest.raises(PreconditionError):
        gamma(RhoFunction(Degenerate(), B8), 0.0)


def test_gamma_modk_small_t_tends_to_ratio():
    # gamma(t) -> f_L(0) / (L f_1(0)) as t -> 0, here 1; the approach is slow (like t^{1/3})
    rf = RhoFunction(ModK(1, 1), TruncationBudget(M=4096))
    vals = [gamma(rf, t).value for t in (1e-3, 1e-6, 1e-9, 1e-12)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(1.0, abs=1e-3)


# --- sigma and the limit process ------------------------------------------


def test_sigma_examples():
    k = math.sqrt(KAPPA_SQ)
    np.testing.assert_allclose(sigma_matrix(0.0, KAPPA_SQ), k * np.eye(2))
    np.testing.assert_allclose(sigma_matrix(KAPPA_SQ, KAPPA_SQ), [[0, k], [0, k]])
    with pytest.raises(DomainError):
        sigma_matrix(KAPPA_SQ * 1.01, KAPPA_SQ)
    with pytest.raises(DomainError):
        sigma_matrix(0.0, 0.0)


@settings(max_examples=300, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(0.01, 100.0))
def test_sigma_reconstructs_covariance(r, k2):
    s = sigma_matrix(r * k2, k2)
    np.testing.assert_allclose(s @ s.T, [[k2, r * k2], [r * k2, k2]], atol=1e-12 * k2, rtol=0)


def test_limit_cov():
    assert limit_cov(RhoFunction(Degenerate(), B8), 1.0, 2.0)[0, 1] == 0.0
    rf = RhoFunction(RationalConstant(2, 1), B8)
    rho = rho_value(rf, 0.0).value
    c = limit_cov(rf, 1.5, 1.5)
    np.testing.assert_allclose(c, [[KAPPA_SQ * 1.5, rho * 1.5], [rho * 1.5, KAPPA_SQ * 1.5]], rtol=1e-12)
    np.testing.assert_array_equal(limit_cov(rf, 0.5, 3.0), limit_cov(rf, 0.5, 0.9))


def test_sample_limit_process_statistics():
    grid = [0.0, 0.5, 1.0]
    n = 10_000
    x1, x2 = sample_limit_process(RhoFunction(Degenerate(), B8), grid, seed=11, size=n)
    v = x1[:, -1]
    se_var = math.sqrt(2.0) * KAPPA_SQ / math.sqrt(n)
    assert abs(v.var(ddof=1) - KAPPA_SQ) < 4 * se_var
    corr = np.corrcoef(x1[:, -1], x2[:, -1])[0, 1]
    assert abs(corr) < 4 / math.sqrt(n)

    rf = RhoFunction(RationalConstant(2, 1), B8)
    rho = rho_value(rf, 0.0).value
    x1, x2 = sample_limit_process(rf, grid, seed=12, size=n)
    prod = x1[:, -1] * x2[:, -1]
    assert abs(prod.mean() - rho) < 4 * prod.std(ddof=1) / math.sqrt(n)


def test_sample_limit_process_modk_and_determinism():
    rf = RhoFunction(ModK(1, 1), TruncationBudget(tol=1e-6))
    a = sample_limit_process(rf, [0.0, 0.25, 0.5], seed=3)
    b = sample_limit_process(rf, [0.0, 0.25, 0.5], seed=3)
    assert a[0].shape == (3,)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    with pytest.raises(PreconditionError):
        sample_limit_process(rf, [0.1, 0.5], seed=3)
    with pytest.raises(PreconditionError):
        sample_limit_process(rf, [0.0, 0.5, 0.5], seed=3)
