"""Asymptotic covariance of (W_{a_n}, W_{b_n}) for the classified regimes.

Each regime yields a limiting cross-covariance density ``rho(t)``:

* ``Degenerate``         b_n / a_n -> 0 or infinity: rho = 0.
* ``RationalConstant``   b_n / a_n = p/q eventually: rho = 3/(4p) sum_{j=1}^q f_L(j/q).
* ``IntegralConstant``   b_n / a_n -> L without attaining it and
                         gcd(a_n, b_n) -> infinity: rho = 3/(4L) int_0^1 f_L.
                         With bounded gcd the same constant is only known to
                         describe t = 1.
* ``ModK``               b_n = k mod a_n: rho(t) = 3/(4L) f_hat_L(k t).

Integrals of f_L split the series in two: the few terms whose cusps fall in
[0, 1] go through adaptive Simpson, the remaining (analytic on [0, 1]) terms
through fixed Gauss-Legendre rules.  The series tail beyond the cutoff is a
rigorous ``error_bound``; quadrature error is reported separately as
``heuristic_error``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .errors import DomainError, PreconditionError
from .quadrature import adaptive_simpson
from .series import (
    CertifiedValue,
    TruncationBudget,
    _block_sums,
    _resolve_cutoff,
    f_L_values,
    kappa_sq,
    series_tail_bound,
)

__all__ = [
    "Degenerate",
    "RationalConstant",
    "IntegralConstant",
    "ModK",
    "RegimeSpec",
    "RhoFunction",
    "integral_f_L",
    "validate_regime",
    "rho_value",
    "cum_cov",
    "gamma",
    "sigma_matrix",
    "limit_cov",
    "sample_limit_process",
]


@dataclass(frozen=True)
class Degenerate:
    """Mesh ratio tends to 0 or infinity."""


@dataclass(frozen=True)
class RationalConstant:
    p: int
    q: int

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise PreconditionError("p and q must be positive")
        if math.gcd(self.p, self.q) != 1:
            raise PreconditionError("p and q must be coprime")

    @property
    def L(self) -> float:
        return self.p / self.q


@dataclass(frozen=True)
class IntegralConstant:
    L: float

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise PreconditionError("L must be positive and finite")


@dataclass(frozen=True)
class ModK:
    L: float
    k: int

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise PreconditionError("L must be positive and finite")
        if int(self.k) != self.k or self.k < 1:
            raise PreconditionError("k must be a positive integer")


RegimeSpec = Union[Degenerate, RationalConstant, IntegralConstant, ModK]


@dataclass(frozen=True)
class RhoFunction:
    """A regime plus the accuracy to evaluate it with.

    ``budget.tol`` is used both as the series truncation target and as the
    quadrature tolerance; with ``budget.M`` the quadrature tolerance
    defaults to 1e-8.
    """

    regime: RegimeSpec
    budget: TruncationBudget = field(default_factory=lambda: TruncationBudget(tol=1e-8))

    @property
    def quad_tol(self) -> float:
        return self.budget.tol if self.budget.tol is not None else 1e-8

    @property
    def is_constant(self) -> bool:
        return not isinstance(self.regime, ModK)


# ---------------------------------------------------------------------------
# integrals of f_L

_GL = {n: np.polynomial.legendre.leggauss(n) for n in (20, 28)}


def _near_cutoff(L: float) -> int:
    # f_{m,L} has cusps at m - 1, m, m + L - 1, m + L; none lies in [0, 1] for |m| > this
    return max(3, math.ceil(L) + 1)


def _near_values(L: float, xs: np.ndarray, m_near: int) -> np.ndarray:
    col = np.asarray(xs, dtype=float).reshape(-1, 1)
    return _block_sums(L, col, -m_near, m_near + 1)


def _far_values(L: float, xs: np.ndarray, m_near: int, M: int) -> np.ndarray:
    col = np.asarray(xs, dtype=float).reshape(-1, 1)
    parts = []
    hi = M
    width = max(256, (1 << 21) // col.shape[0])
    while hi > m_near:
        lo = max(m_near + 1, hi - width + 1)
        parts.append(_block_sums(L, col, -hi, -lo + 1))
        parts.append(_block_sums(L, col, lo, hi + 1))
        hi = lo - 1
    if not parts:
        return np.zeros(col.shape[0])
    return np.array([math.fsum(r) for r in np.stack(parts, axis=1)])


def _gauss(values_fn, upper: float, n: int) -> float:
    nodes, weights = _GL[n]
    x = 0.5 * upper * (nodes + 1.0)
    return 0.5 * upper * float(np.dot(weights, values_fn(x)))


@lru_cache(maxsize=256)
def integral_f_L(L: float, upper: float, budget: TruncationBudget, quad_tol: float = 1e-8) -> CertifiedValue:
    """``int_0^upper f_L(x) dx`` for ``0 <= upper <= 1``.

    ``error_bound`` covers the truncated series tail (``upper`` times the
    uniform tail bound); ``heuristic_error`` is the quadrature estimate.
    """
    if not L > 0:
        raise PreconditionError("L must be positive")
    if not 0.0 <= upper <= 1.0:
        raise PreconditionError("upper limit must lie in [0, 1]")
    M = _resolve_cutoff(budget, L, scale=max(upper, 1e-300))
    if upper == 0.0:
        return CertifiedValue(0.0, 0.0, M)
    m_near = min(_near_cutoff(L), M)
    frac = L - math.floor(L)
    breaks = [frac] if frac > 0 else []
    near = adaptive_simpson(lambda x: _near_values(L, x, m_near), 0.0, upper, 0.5 * quad_tol, breakpoints=breaks)
    far_fn = lambda x: _far_values(L, x, m_near, M)  # noqa: E731
    far20 = _gauss(far_fn, upper, 20)
    far28 = _gauss(far_fn, upper, 28)
    value = near.value + far28
    heuristic = near.error_estimate + abs(far28 - far20)
    return CertifiedValue(value, upper * series_tail_bound(M, L), M, heuristic)


# ---------------------------------------------------------------------------
# regime checks


def validate_regime(spec: RegimeSpec, pairs: Sequence[tuple[int, int]]) -> bool:
    """Sanity-check a declared regime against finitely many ``(a_n, b_n)``.

    Conditions stated "for all but finitely many n" are checked on the
    second half of the list.  Regime membership is asymptotic, so a ``True``
    here is evidence, not proof.
    """
    if len(pairs) == 0:
        raise PreconditionError("need at least one (a, b) pair")
    pairs = [(int(a), int(b)) for a, b in pairs]
    if any(a < 1 or b < 1 for a, b in pairs):
        raise PreconditionError("mesh counts must be positive")
    for (a0, b0), (a1, b1) in zip(pairs[:-1], pairs[1:]):
        if not (a1 > a0 and b1 > b0):
            raise PreconditionError("pairs must be strictly increasing in both coordinates")
    tail = pairs[len(pairs) // 2 :]

    if isinstance(spec, Degenerate):
        logs = [abs(math.log(b / a)) for a, b in tail]
        nondecreasing = all(y >= x for x, y in zip(logs[:-1], logs[1:]))
        first = abs(math.log(pairs[0][1] / pairs[0][0]))
        return nondecreasing and logs[-1] - first >= math.log(2.0)
    if isinstance(spec, RationalConstant):
        return all(b * spec.q == a * spec.p for a, b in tail)
    if isinstance(spec, IntegralConstant):
        dev = [abs(b / a - spec.L) for a, b in tail]
        return all(d > 0 for d in dev) and dev[-1] <= abs(pairs[0][1] / pairs[0][0] - spec.L)
    if isinstance(spec, ModK):
        if not all((b - spec.k) % a == 0 for a, b in pairs):
            return False
        return all((b - spec.k) // a == spec.L for a, b in tail)
    raise PreconditionError(f"unknown regime {spec!r}")


# ---------------------------------------------------------------------------
# rho, cumulative covariance, correlation


def _constant_rho(rf: RhoFunction) -> CertifiedValue:
    reg = rf.regime
    if isinstance(reg, Degenerate):
        return CertifiedValue(0.0, 0.0, 0)
    if isinstance(reg, RationalConstant):
        L = reg.L
        scale = 3.0 / (4.0 * reg.p)
        M = _resolve_cutoff(rf.budget, L, scale=scale * reg.q)
        xs = np.arange(1, reg.q + 1) / reg.q
        vals = f_L_values(L, xs, M)
        return CertifiedValue(scale * math.fsum(vals), scale * reg.q * series_tail_bound(M, L), M)
    if isinstance(reg, IntegralConstant):
        integral = integral_f_L(float(reg.L), 1.0, rf.budget, rf.quad_tol)
        return integral.scaled(3.0 / (4.0 * reg.L))
    raise PreconditionError("regime has no constant density")


def rho_value(rf: RhoFunction, t: float) -> CertifiedValue:
    """Limiting cross-covariance density ``rho(t)``."""
    if not t >= 0 or not math.isfinite(t):
        raise PreconditionError("t must be finite and nonnegative")
    reg = rf.regime
    if isinstance(reg, ModK):
        scale = 3.0 / (4.0 * reg.L)
        x = reg.k * t
        x -= math.floor(x)
        M = _resolve_cutoff(rf.budget, reg.L, scale=scale)
        val = float(f_L_values(reg.L, [x], M)[0])
        return CertifiedValue(scale * val, scale * series_tail_bound(M, reg.L), M)
    return _constant_rho(rf)


def cum_cov(rf: RhoFunction, t: float) -> CertifiedValue:
    """``int_0^t rho(x) dx``, the limit of ``E[W_{a_n}(t) W_{b_n}(t)]``.

    For ``ModK`` the integral of the periodic density is folded into whole
    periods plus a remainder:
    ``(3/4L) [ floor(kt)/k * int_0^1 f_L + (1/k) int_0^{kt - floor(kt)} f_L ]``.
    """
    if not t >= 0 or not math.isfinite(t):
        raise PreconditionError("t must be finite and nonnegative")
    reg = rf.regime
    if not isinstance(reg, ModK):
        return _constant_rho(rf).scaled(t)
    if t == 0:
        return CertifiedValue(0.0, 0.0, 0)
    scale = 3.0 / (4.0 * reg.L)
    kt = reg.k * t
    whole = math.floor(kt)
    rest = kt - whole
    parts = []
    if whole:
        parts.append(integral_f_L(float(reg.L), 1.0, rf.budget, rf.quad_tol).scaled(whole / reg.k))
    if rest > 0:
        parts.append(integral_f_L(float(reg.L), rest, rf.budget, rf.quad_tol).scaled(1.0 / reg.k))
    value = math.fsum(p.value for p in parts)
    err = math.fsum(p.error_bound for p in parts)
    heur = math.fsum(p.heuristic_error for p in parts)
    return CertifiedValue(value, err, max(p.cutoff_used for p in parts), heur).scaled(scale)


def _ratio_bracket(num: float, num_err: float, den: float, den_err: float) -> float:
    if den - den_err <= 0:
        return math.inf
    centre = num / den
    corners = [(num + sn * num_err) / (den + sd * den_err) for sn in (-1, 1) for sd in (-1, 1)]
    return max(abs(c - centre) for c in corners)


def gamma(rf: RhoFunction, t: float) -> CertifiedValue:
    """Asymptotic correlation ``int_0^t rho / (kappa^2 t)``.

    Errors are propagated by interval arithmetic over the two certified
    inputs, separately for the rigorous and the total (with heuristic) parts.
    """
    if not t > 0 or not math.isfinite(t):
        raise PreconditionError("t must be positive")
    k2 = kappa_sq(rf.budget)
    if rf.is_constant:
        # rho t / (kappa^2 t) without the rounding of the two t factors
        c, t = _constant_rho(rf), 1.0
    else:
        c = cum_cov(rf, t)
    value = c.value / (k2.value * t)
    rigorous = _ratio_bracket(c.value, c.error_bound, k2.value, k2.error_bound) / t
    total = _ratio_bracket(c.value, c.total_error, k2.value, k2.total_error) / t
    return CertifiedValue(value, rigorous, max(c.cutoff_used, k2.cutoff_used), max(0.0, total - rigorous))


# ---------------------------------------------------------------------------
# limit process


def sigma_matrix(rho_t: float, kappa_sq_val: float) -> np.ndarray:
    """Diffusion matrix ``kappa [[sqrt(1 - r^2), r], [0, 1]]`` with ``r = rho / kappa^2``.

    ``sigma @ sigma.T`` equals ``[[kappa^2, rho], [rho, kappa^2]]``.
    """
    if not kappa_sq_val > 0:
        raise DomainError("kappa^2 must be positive")
    if not abs(rho_t) <= kappa_sq_val:
        raise DomainError(f"|rho|={abs(rho_t)!r} exceeds kappa^2={kappa_sq_val!r}")
    kappa = math.sqrt(kappa_sq_val)
    r = rho_t / kappa_sq_val
    return kappa * np.array([[math.sqrt(max(0.0, 1.0 - r * r)), r], [0.0, 1.0]])


def limit_cov(rf: RhoFunction, s: float, t: float) -> np.ndarray:
    """``Cov(X(s), X(t))`` for the limit process, a 2x2 matrix.

    Only ``min(s, t)`` matters because the limit has independent increments.
    """
    if not (s >= 0 and t >= 0):
        raise PreconditionError("times must be nonnegative")
    u = min(s, t)
    k2 = kappa_sq(rf.budget).value
    c = cum_cov(rf, u).value
    return np.array([[k2 * u, c], [c, k2 * u]])


def sample_limit_process(rf: RhoFunction, grid: Sequence[float], seed, size: int | None = None):
    """Exact Gaussian sample of ``(X^1, X^2)`` at the grid times.

    Increments over ``[t_i, t_{i+1}]`` are independent with covariance
    ``[[kappa^2 dt, dC], [dC, kappa^2 dt]]`` where ``C`` is :func:`cum_cov`.
    Returns two arrays of shape ``(len(grid),)``, or ``(size, len(grid))``
    when ``size`` is given.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
        raise PreconditionError("grid must be strictly increasing and start at 0")
    k2 = kappa_sq(rf.budget).value
    if rf.is_constant:
        rho = _constant_rho(rf).value
        cums = rho * grid
    else:
        cums = np.array([cum_cov(rf, float(t)).value for t in grid])
    dt = np.diff(grid)
    dc = np.diff(cums)
    var = k2 * dt
    loading = dc / np.sqrt(var)
    resid = np.sqrt(np.maximum(var - loading * loading, 0.0))

    rng = np.random.default_rng(seed)
    n = 1 if size is None else int(size)
    z = rng.standard_normal((n, 2, dt.size))
    inc1 = np.sqrt(var) * z[:, 0]
    inc2 = loading * z[:, 0] + resid * z[:, 1]
    x1 = np.concatenate([np.zeros((n, 1)), np.cumsum(inc1, axis=1)], axis=1)
    x2 = np.concatenate([np.zeros((n, 1)), np.cumsum(inc2, axis=1)], axis=1)
    if size is None:
        return x1[0], x2[0]
    return x1, x2
