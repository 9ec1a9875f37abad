"""Adaptive Simpson quadrature with batched integrand evaluation.

The integrand is called with a 1-D array of abscissae and must return an
array of the same shape.  All intervals still being refined at a given depth
are evaluated in one call, which matters when each evaluation is a long
vectorised series.

Refinement is global: every panel carries the estimate ``|S2 - S1|`` and
the panels holding most of the summed estimate are halved until the sum
drops below the tolerance.  This copes with the ``|x|^{1/3}`` cusps of the
integrands used here, where a per-panel tolerance proportional to the width
would force absurd depths.

The returned value includes the Richardson correction ``(S2 - S1) / 15``.
The error estimate deliberately omits the 1/15 factor: next to a cube-root
cusp the panel error only shrinks by ``2^{4/3}`` per halving, and the
smooth-case factor would understate it by an order of magnitude.  It is a
heuristic, not a bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import PreconditionError

__all__ = ["QuadResult", "adaptive_simpson"]


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    evaluations: int
    depth_limited: bool


def adaptive_simpson(
    func: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float,
    breakpoints: Sequence[float] = (),
    max_depth: int = 60,
    initial_panels: int = 8,
) -> QuadResult:
    """Integrate ``func`` over ``[a, b]`` to absolute tolerance ``tol``.

    ``breakpoints`` inside ``(a, b)`` (cusps, kinks) become panel edges so no
    Simpson panel straddles them.
    """
    if not tol > 0:
        raise PreconditionError("tol must be positive")
    if b < a:
        res = adaptive_simpson(func, b, a, tol, breakpoints, max_depth, initial_panels)
        return QuadResult(-res.value, res.error_estimate, res.evaluations, res.depth_limited)
    if b == a:
        return QuadResult(0.0, 0.0, 0, False)

    edges = sorted({a, b, *(p for p in breakpoints if a < p < b)})
    lo = np.concatenate([np.linspace(e0, e1, initial_panels + 1)[:-1] for e0, e1 in zip(edges[:-1], edges[1:])])
    hi = np.concatenate([np.linspace(e0, e1, initial_panels + 1)[1:] for e0, e1 in zip(edges[:-1], edges[1:])])
    mid = 0.5 * (lo + hi)
    pts = np.concatenate([lo, mid, hi[-1:], 0.5 * (lo + mid), 0.5 * (mid + hi)])
    vals = np.asarray(func(pts), dtype=float)
    evals = pts.size
    n = lo.size
    flo, fmid = vals[:n], vals[n : 2 * n]
    fhi = np.append(flo[1:], vals[2 * n])
    fq1, fq3 = vals[2 * n + 1 : 3 * n + 1], vals[3 * n + 1 :]
    min_width = (b - a) * 2.0**-max_depth

    depth_limited = False
    while True:
        whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
        left = (mid - lo) / 6.0 * (flo + 4.0 * fq1 + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * fq3 + fhi)
        delta = left + right - whole
        err = np.abs(delta)
        total_err = float(err.sum())
        if total_err <= tol:
            break
        # split the largest-error panels until the untouched ones carry at most tol / 2
        order = np.argsort(-err, kind="stable")
        cum = np.cumsum(err[order])
        count = int(np.searchsorted(cum, total_err - 0.5 * tol)) + 1
        chosen = order[:count]
        chosen = chosen[(hi[chosen] - lo[chosen]) > min_width]
        if chosen.size == 0:
            depth_limited = True
            break
        keep = np.ones(lo.size, dtype=bool)
        keep[chosen] = False
        c_lo, c_mid, c_hi = lo[chosen], mid[chosen], hi[chosen]
        c_q1, c_q3 = 0.5 * (c_lo + c_mid), 0.5 * (c_mid + c_hi)
        # children [lo, mid] and [mid, hi] need their own quarter points
        new_pts = np.concatenate([0.5 * (c_lo + c_q1), 0.5 * (c_q1 + c_mid), 0.5 * (c_mid + c_q3), 0.5 * (c_q3 + c_hi)])
        fv = np.asarray(func(new_pts), dtype=float)
        evals += fv.size
        m = chosen.size
        f_a, f_b, f_c, f_d = fv[:m], fv[m : 2 * m], fv[2 * m : 3 * m], fv[3 * m :]
        lo = np.concatenate([lo[keep], c_lo, c_mid])
        mid = np.concatenate([mid[keep], c_q1, c_q3])
        hi = np.concatenate([hi[keep], c_mid, c_hi])
        new_flo = np.concatenate([flo[keep], flo[chosen], fmid[chosen]])
        new_fmid = np.concatenate([fmid[keep], fq1[chosen], fq3[chosen]])
        new_fhi = np.concatenate([fhi[keep], fmid[chosen], fhi[chosen]])
        fq1 = np.concatenate([fq1[keep], f_a, f_c])
        fq3 = np.concatenate([fq3[keep], f_b, f_d])
        flo, fmid, fhi = new_flo, new_fmid, new_fhi

    order = np.argsort(lo, kind="stable")
    value = float(np.sum((left + right + delta / 15.0)[order]))
    return QuadResult(value, total_err, evals, depth_limited)
