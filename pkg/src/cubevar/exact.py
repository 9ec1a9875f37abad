"""Exact finite-n covariances of the cubic variations.

Writing ``W_a(s) = W~_a(s) + 3 a^{-1/3} B(floor(as)/a)`` splits the cubic
variation into its third and first Wiener chaos components.  These are
uncorrelated, and for the third-chaos parts

    E[W~_a(s) W~_b(t)] = (3/4) sum_{j <= as} sum_{k <= bt} phi_n(j, k)^3,

with ``phi_n`` twice the increment covariance (so ``3/4 = 3! / 2^3``).

Full mode sums every term.  Banded mode keeps only ``|k - floor(jb/a)| <= M``
and returns a rigorous bound on the discarded part.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta

from .errors import PreconditionError, ResourceError
from .kernel import GridPair, cov_R

__all__ = [
    "CovRequest",
    "CovResult",
    "hermite3",
    "grid_floor",
    "band_remainder",
    "exact_cov_tilde",
    "exact_cov_W",
    "scaling_check",
    "cross_chaos_cov",
]

_ROWS = 64
_INT_LIMIT = 1 << 53


@dataclass(frozen=True)
class CovResult:
    value: float
    certified_remainder: float = 0.0


@dataclass(frozen=True)
class CovRequest:
    """Arguments of one covariance evaluation; ``band=None`` means Full mode."""

    g: GridPair
    s: float
    t: float
    band: int | None = None

    def tilde(self, threads: int = 1) -> CovResult:
        return exact_cov_tilde(self.g.a, self.g.b, self.s, self.t, self.band, threads=threads)

    def W(self, threads: int = 1) -> CovResult:
        return exact_cov_W(self.g.a, self.g.b, self.s, self.t, self.band, threads=threads)


def hermite3(x):
    """Third Hermite polynomial ``x^3 - 3x``."""
    x = np.asarray(x, dtype=float)
    out = x * x * x - 3.0 * x
    return out[()] if out.ndim == 0 else out


def grid_floor(n: int, t: float) -> int:
    """``floor(n t)``, snapping products within rounding of an integer.

    ``3 * 0.1`` evaluates to ``0.30000000000000004`` and ``10 * 0.3`` to
    ``3.0000000000000004``; grid points entered as decimals should land on
    the intended index either way.
    """
    if not (t >= 0 and math.isfinite(t)):
        raise PreconditionError("times must be finite and nonnegative")
    v = n * t
    r = round(v)
    if abs(v - r) <= 1e-9 * max(1.0, abs(v)):
        return int(r)
    return math.floor(v)


def _check_mesh(a: int, b: int) -> tuple[int, int]:
    g = GridPair(a, b)
    try:
        return tuple(g.validate())
    except ValueError as exc:
        raise PreconditionError(str(exc)) from None


def _min_band(a: int, b: int) -> int:
    return max(3, -(-b // a) + 1)


def band_remainder(a: int, b: int, J: int, M: int) -> float:
    """Bound on the terms with ``|k - floor(jb/a)| > M`` over rows ``j <= J``.

    For fixed ``j`` and ``m`` there is at most one ``k``, and
    ``|phi_n|^3 <= C_m / a`` with ``C_m = 27 (|m| - M0)^{-3}`` beyond
    ``M0 = max(2, ceil(b/a))``.  Summing both signs of ``m`` gives
    ``(3/4) (J/a) 54 zeta(3, M + 1 - M0)``.
    """
    M0 = max(2, -(-b // a))
    if M <= M0:
        raise PreconditionError(f"band {M} must exceed {M0}")
    return 0.75 * (J / a) * 54.0 * float(zeta(3.0, M + 1 - M0))


def _full_rows(a: int, b: int, j0: int, j1: int, K: int) -> np.ndarray:
    # E[i, k] = |j b - k a|^{1/3} for j = j0 - 1 + i, k = 0..K
    j = np.arange(j0 - 1, j1 + 1, dtype=np.int64)[:, None]
    k = np.arange(0, K + 1, dtype=np.int64)[None, :]
    E = np.cbrt(np.abs(j * b - k * a).astype(float))
    z = (E[1:, :-1] + E[:-1, 1:]) - (E[:-1, :-1] + E[1:, 1:])
    return (z * z * z).sum(axis=1)


def _banded_rows(a: int, b: int, j0: int, j1: int, K: int, M: int) -> np.ndarray:
    j = np.arange(j0, j1 + 1, dtype=np.int64)[:, None]
    centre = (j * b) // a
    k = centre + np.arange(-M, M + 1, dtype=np.int64)[None, :]
    jb = j * b
    j1b = jb - b
    ka = k * a
    k1a = ka - a
    z = (np.cbrt(np.abs(jb - k1a).astype(float)) + np.cbrt(np.abs(j1b - ka).astype(float))) - (
        np.cbrt(np.abs(j1b - k1a).astype(float)) + np.cbrt(np.abs(jb - ka).astype(float))
    )
    cubes = z * z * z
    cubes[(k < 1) | (k > K)] = 0.0
    return cubes.sum(axis=1)


def exact_cov_tilde(a: int, b: int, s: float, t: float, band: int | None = None, *, threads: int = 1) -> CovResult:
    """``E[W~_a(s) W~_b(t)]``.

    Rows are reduced in fixed 64-row chunks and combined with ``math.fsum``,
    so the result does not depend on ``threads``.  Full mode evaluates the
    pair in a canonical orientation, which makes
    ``exact_cov_tilde(a, b, s, t) == exact_cov_tilde(b, a, t, s)`` bit for bit.
    """
    a, b = _check_mesh(a, b)
    J = grid_floor(a, s)
    K = grid_floor(b, t)
    if band is not None:
        band = int(band)
        if band < _min_band(a, b):
            raise PreconditionError(f"band must be at least {_min_band(a, b)} for a={a}, b={b}")
    if max(J, 1) * b >= _INT_LIMIT or max(K, 1) * a >= _INT_LIMIT:
        raise ResourceError("grid indices exceed exact integer range")
    if J == 0 or K == 0:
        return CovResult(0.0, 0.0)

    if band is None:
        if (b, a, K, J) < (a, b, J, K):
            a, b, J, K = b, a, K, J
        if J * (K + 1) > 1 << 34:
            raise ResourceError("full double sum too large; use banded mode")
        step = _ROWS
        work = lambda lo: _full_rows(a, b, lo, min(lo + step - 1, J), K)  # noqa: E731
        remainder = 0.0
    else:
        step = max(1, (1 << 20) // (2 * band + 1))
        work = lambda lo: _banded_rows(a, b, lo, min(lo + step - 1, J), K, band)  # noqa: E731
        remainder = band_remainder(a, b, J, band)
    starts = range(1, J + 1, step)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            chunks = list(pool.map(work, starts))
    else:
        chunks = [work(lo) for lo in starts]
    total = math.fsum(np.concatenate(chunks))
    return CovResult(0.75 * total / (float(a) * float(b)), remainder)


def exact_cov_W(a: int, b: int, s: float, t: float, band: int | None = None, *, threads: int = 1) -> CovResult:
    """``E[W_a(s) W_b(t)]``: the third-chaos part plus ``9 (ab)^{-1/3} R(floor(as)/a, floor(bt)/b)``."""
    tilde = exact_cov_tilde(a, b, s, t, band, threads=threads)
    a, b = _check_mesh(a, b)
    J = grid_floor(a, s)
    K = grid_floor(b, t)
    first = 9.0 / float(np.cbrt(float(a) * float(b))) * float(cov_R(J / a, K / b))
    return CovResult(tilde.value + first, tilde.certified_remainder)


def scaling_check(a: int, b: int, r: int, t: float, *, threads: int = 1) -> tuple[float, float]:
    """Both sides of ``E[W~_a(rt) W~_b(rt)] = r E[W~_{ra}(t) W~_{rb}(t)]``."""
    a, b = _check_mesh(a, b)
    if int(r) != r or r < 1:
        raise PreconditionError("r must be a positive integer")
    r = int(r)
    if r * a * r * b >= _INT_LIMIT:
        raise ResourceError("r a and r b overflow the exact integer range")
    lhs = exact_cov_tilde(a, b, r * t, r * t, threads=threads).value
    rhs = r * exact_cov_tilde(r * a, r * b, t, t, threads=threads).value
    return lhs, rhs


def cross_chaos_cov(a: int, s: float, t: float) -> float:
    """``E[W~_a(s) B(t)]``, zero because the chaoses are orthogonal."""
    _check_mesh(a, a)
    grid_floor(a, s)
    if not (t >= 0 and math.isfinite(t)):
        raise PreconditionError("times must be finite and nonnegative")
    return 0.0
