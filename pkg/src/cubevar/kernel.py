"""Covariance kernel of fractional Brownian motion with Hurst index 1/6.

With ``H = 1/6`` the covariance is

    R(s, t) = (|t|^{1/3} + |s|^{1/3} - |t - s|^{1/3}) / 2

and the four-point function

    phi(s, t, u, v) = 2 E[(B(t) - B(s)) (B(v) - B(u))]
                    = |t-u|^{1/3} + |s-v|^{1/3} - |s-u|^{1/3} - |t-v|^{1/3}

is the basic building block of every covariance in this package.  Grid
increments use the same factor-2 convention: ``phi_n`` is ``phi`` evaluated
at grid points, i.e. twice the covariance of the two increments.

All cube roots go through :func:`numpy.cbrt`, which is sign-preserving and
exact for perfect cubes; fractional powers of negative numbers never occur.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DomainError

__all__ = [
    "Quad",
    "GridPair",
    "cov_R",
    "phi",
    "phi_n",
    "phi_envelopes",
]


class Quad(NamedTuple):
    """Four time points ``(s, t, u, v)``; ``phi(*quad)`` evaluates the kernel."""

    s: float
    t: float
    u: float
    v: float


class GridPair(NamedTuple):
    """Mesh counts ``a`` and ``b`` of the two uniform grids ``j/a`` and ``k/b``."""

    a: int
    b: int

    def validate(self) -> "GridPair":
        if int(self.a) != self.a or int(self.b) != self.b or self.a < 1 or self.b < 1:
            raise DomainError("mesh counts must be positive integers")
        return GridPair(int(self.a), int(self.b))


def _check_finite(*args) -> None:
    for a in args:
        if not np.all(np.isfinite(a)):
            raise DomainError("time arguments must be finite")


def cov_R(s, t):
    """Covariance ``E[B(s) B(t)]`` of two-sided fBm with H = 1/6.

    Works elementwise on arrays.
    """
    _check_finite(s, t)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    out = 0.5 * (np.cbrt(np.abs(t)) + np.cbrt(np.abs(s)) - np.cbrt(np.abs(t - s)))
    return out[()] if out.ndim == 0 else out


def phi(s, t, u, v):
    """Twice the covariance of ``B(t) - B(s)`` and ``B(v) - B(u)``.

    The expression is written so that swapping the two increments,
    ``phi(u, v, s, t)``, reproduces the same floating point result bit for bit.
    """
    _check_finite(s, t, u, v)
    s, t, u, v = (np.asarray(z, dtype=float) for z in (s, t, u, v))
    out = (np.cbrt(np.abs(t - u)) + np.cbrt(np.abs(s - v))) - (
        np.cbrt(np.abs(s - u)) + np.cbrt(np.abs(t - v))
    )
    return out[()] if out.ndim == 0 else out


def phi_n(a: int, b: int, j, k):
    """``phi((j-1)/a, j/a, (k-1)/b, k/b)`` for meshes ``a`` and ``b``.

    The time differences are formed in exact integer arithmetic,
    ``j/a - (k-1)/b = (j*b - (k-1)*a) / (a*b)``, and the common factor
    ``(a*b)^{-1/3}`` is applied last.  Accepts integer arrays for ``j``/``k``.
    """
    if a < 1 or b < 1:
        raise DomainError("mesh counts must be positive")
    j = np.asarray(j, dtype=np.int64)
    k = np.asarray(k, dtype=np.int64)
    a = int(a)
    b = int(b)
    jb = j * b
    j1b = jb - b
    ka = k * a
    k1a = ka - a
    bracket = (np.cbrt(np.abs(jb - k1a).astype(float)) + np.cbrt(np.abs(j1b - ka).astype(float))) - (
        np.cbrt(np.abs(j1b - k1a).astype(float)) + np.cbrt(np.abs(jb - ka).astype(float))
    )
    out = bracket / np.cbrt(float(a) * float(b))
    return out[()] if out.ndim == 0 else out


def phi_envelopes(s: float, t: float, u: float, v: float) -> list[tuple[str, float]]:
    """Upper bounds on ``|phi(s, t, u, v)|``.

    Always returns the coarse bound ``2 (|t-s| ^ |v-u|)^{1/3}``.  When
    ``u < v < s < t`` (the two increments are disjoint, the ``(u, v)`` one on
    the left) three decay bounds in the gap ``s - v`` are added; when
    ``u < s < t < v`` (nested increments) the interior bound is added.
    Other orderings get only the coarse bound.
    """
    _check_finite(s, t, u, v)
    out = [("coarse", 2.0 * float(np.cbrt(min(abs(t - s), abs(v - u)))))]
    if u < v < s < t:
        gap = s - v
        out.append(("separated_product", (2.0 / 9.0) * (t - s) * (v - u) * gap ** (-5.0 / 3.0)))
        out.append(("separated_left", (t - s) ** 0.25 * (v - u) ** (11.0 / 12.0) * gap ** (-5.0 / 6.0)))
        out.append(("separated_right", (t - s) ** (11.0 / 12.0) * (v - u) ** 0.25 * gap ** (-5.0 / 6.0)))
    elif u < s < t < v:
        out.append(("interleaved", (t - s) * ((v - t) ** (-2.0 / 3.0) + (s - u) ** (-2.0 / 3.0)) / 3.0))
    return out
