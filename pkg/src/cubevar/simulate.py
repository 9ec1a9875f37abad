"""Seeded simulation of fBm (H = 1/6) increments and cubic-variation functionals.

Increments on the grid ``j/n`` are stationary with autocovariance

    c(h) = (n^{-1/3} / 2) (|h+1|^{1/3} + |h-1|^{1/3} - 2|h|^{1/3}).

They are drawn by circulant embedding (Davies-Harte): the first row of the
size-2N circulant is diagonalised by the FFT, and the real part of the
transformed complex noise has exactly the target covariance.  For H < 1/2 the
embedding is nonnegative; should an eigenvalue come out below -1e-9 anyway,
small problems fall back to an eigendecomposition of the Toeplitz matrix.

Path ``i`` of seed ``s`` always uses the stream ``SeedSequence(s, spawn_key=(i,))``,
so batches, single draws and threaded runs agree path by path.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy import stats

from .errors import DomainError, PreconditionError, ResourceError
from .exact import grid_floor
from .kernel import cov_R

__all__ = [
    "PathSample",
    "McConfig",
    "McEstimate",
    "NormalityReport",
    "MAX_POINTS",
    "DENSE_LIMIT",
    "fgn_autocov",
    "fgn_sample",
    "coupled_sample",
    "w_path",
    "w_at",
    "mc_cov",
    "normality_diagnostics",
    "independence_diagnostic",
]

MAX_POINTS = 1 << 22
DENSE_LIMIT = 4096
_BATCH_VALUES = 1 << 22


@dataclass(frozen=True)
class PathSample:
    """Increments ``B(j/n) - B((j-1)/n)``, ``j = 1..nT``.

    ``increments`` has shape ``(nT,)`` for one path or ``(paths, nT)`` for a batch.
    """

    n: int
    T: float
    increments: np.ndarray

    def B(self) -> np.ndarray:
        """Running values ``B(j/n)``, ``j = 1..nT``."""
        return np.cumsum(self.increments, axis=-1)


@dataclass(frozen=True)
class McConfig:
    paths: int
    seed: int
    grid_strategy: str = "lcm"
    threads: int = 1
    fallback: bool = True

    def __post_init__(self):
        if int(self.paths) != self.paths or self.paths < 2:
            raise PreconditionError("need at least 2 paths")
        if self.grid_strategy not in ("lcm", "union"):
            raise PreconditionError("grid_strategy must be 'lcm' or 'union'")
        if self.threads < 1:
            raise PreconditionError("threads must be positive")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    paths_used: int

    def z_score(self, target: float) -> float:
        return (self.mean - target) / self.std_error if self.std_error > 0 else math.inf


class NormalityReport(NamedTuple):
    ks_stat: float
    skew: float
    excess_kurtosis: float


def _grid_count(n: int, T: float) -> int:
    if not (T > 0 and math.isfinite(T)):
        raise PreconditionError("horizon T must be positive")
    N = grid_floor(n, T)
    if abs(N - n * T) > 1e-9 * max(1.0, n * T):
        raise PreconditionError(f"n*T must be an integer (n={n}, T={T})")
    if N > MAX_POINTS:
        raise ResourceError(f"{N} grid points exceed the limit {MAX_POINTS}")
    return N


def _stream(seed: int, i: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))


def fgn_autocov(n: int, lags) -> np.ndarray:
    """Autocovariance of the grid-``1/n`` increments at integer lags."""
    h = np.abs(np.asarray(lags, dtype=float))
    return 0.5 * np.cbrt(1.0 / n) * (np.cbrt(h + 1.0) + np.cbrt(np.abs(h - 1.0)) - 2.0 * np.cbrt(h))


@lru_cache(maxsize=16)
def _spectrum(n: int, N: int) -> np.ndarray | None:
    c = fgn_autocov(n, np.arange(N + 1))
    row = np.concatenate([c, c[-2:0:-1]])
    lam = np.fft.fft(row).real
    if lam.min() < -1e-9:
        return None
    return np.sqrt(np.maximum(lam, 0.0) / row.size)


@lru_cache(maxsize=16)
def _dense_factor(n: int, N: int) -> np.ndarray:
    c = fgn_autocov(n, np.arange(N))
    idx = np.arange(N)
    cov = c[np.abs(idx[:, None] - idx[None, :])]
    w, v = np.linalg.eigh(cov)
    return v * np.sqrt(np.maximum(w, 0.0))


def _fgn_rows(n: int, N: int, seed: int, rows: range, method: str) -> np.ndarray:
    if method == "spectral":
        sqrt_lam = _spectrum(n, N)
        if sqrt_lam is None:
            if N > DENSE_LIMIT:
                raise ResourceError("circulant embedding failed and the path is too long for dense factorisation")
            method = "dense"
    if method == "dense":
        if N > DENSE_LIMIT:
            raise ResourceError(f"dense factorisation limited to {DENSE_LIMIT} points")
        factor = _dense_factor(n, N)
        z = np.stack([_stream(seed, i).standard_normal(N) for i in rows])
        return z @ factor.T
    if method != "spectral":
        raise PreconditionError("method must be 'spectral' or 'dense'")
    m = sqrt_lam.size
    z = np.stack([_stream(seed, i).standard_normal(2 * m) for i in rows])
    w = sqrt_lam * (z[:, :m] + 1j * z[:, m:])
    return np.fft.fft(w, axis=1).real[:, :N]


def _batched(fn, paths: int, width: int, threads: int) -> np.ndarray:
    ranges = _ranges(paths, width)
    if threads > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(fn, ranges))
    else:
        parts = [fn(r) for r in ranges]
    return np.concatenate(parts, axis=0)


def fgn_sample(n: int, T: float, seed: int, paths: int | None = None, *, method: str = "spectral",
               threads: int = 1) -> PathSample:
    """Increments of fBm on the grid ``j/n`` up to ``T``.

    ``paths=None`` gives one path (stream 0); otherwise a ``(paths, nT)`` batch.
    ``method='dense'`` forces the eigendecomposition route.
    """
    if int(n) != n or n < 1:
        raise PreconditionError("n must be a positive integer")
    n = int(n)
    N = _grid_count(n, T)
    count = 1 if paths is None else int(paths)
    inc = _batched(lambda r: _fgn_rows(n, N, seed, r, method), count, 2 * N, threads)
    return PathSample(n, T, inc[0] if paths is None else inc)


def _union_rows(a: int, b: int, T: int | float, seed: int, rows: range):
    Na, Nb = grid_floor(a, T), grid_floor(b, T)
    points = sorted({Fraction(j, a) for j in range(1, Na + 1)} | {Fraction(k, b) for k in range(1, Nb + 1)})
    pos = {p: i for i, p in enumerate(points)}
    factor = _union_factor(tuple(float(p) for p in points))
    z = np.stack([_stream(seed, i).standard_normal(len(points)) for i in rows])
    values = z @ factor.T
    ia = np.array([pos[Fraction(j, a)] for j in range(1, Na + 1)])
    ib = np.array([pos[Fraction(k, b)] for k in range(1, Nb + 1)])
    zero = np.zeros((values.shape[0], 1))
    inc_a = np.diff(np.concatenate([zero, values[:, ia]], axis=1), axis=1)
    inc_b = np.diff(np.concatenate([zero, values[:, ib]], axis=1), axis=1)
    return inc_a, inc_b


@lru_cache(maxsize=8)
def _union_factor(points: tuple[float, ...]) -> np.ndarray:
    p = np.asarray(points)
    cov = cov_R(p[:, None], p[None, :])
    return np.linalg.cholesky(cov)


def _coupled_batches(a: int, b: int, T: float, cfg: McConfig):
    """Yield ``(inc_a, inc_b)`` blocks of consecutive paths, in path order."""
    for n in (a, b):
        if int(n) != n or n < 1:
            raise PreconditionError("mesh counts must be positive integers")
    a, b = int(a), int(b)
    Na, Nb = _grid_count(a, T), _grid_count(b, T)
    strategy = cfg.grid_strategy
    lcm = math.lcm(a, b)
    if strategy == "lcm" and lcm * T > MAX_POINTS:
        if not cfg.fallback:
            raise ResourceError(f"lcm grid of {lcm * T:g} points exceeds {MAX_POINTS}")
        strategy = "union"
    if strategy == "union":
        if Na + Nb > DENSE_LIMIT:
            raise ResourceError(f"union grid larger than {DENSE_LIMIT} points")
        for r in _ranges(cfg.paths, Na + Nb):
            yield _union_rows(a, b, T, cfg.seed, r)
        return
    N = _grid_count(lcm, T)
    for r in _ranges(cfg.paths, 2 * N):
        fine = _fgn_rows(lcm, N, cfg.seed, r, "spectral")
        yield fine.reshape(len(r), Na, lcm // a).sum(axis=2), fine.reshape(len(r), Nb, lcm // b).sum(axis=2)


def coupled_sample(a: int, b: int, T: float, cfg: McConfig) -> tuple[PathSample, PathSample]:
    """Increments on meshes ``a`` and ``b`` taken from the same fBm paths.

    ``lcm``: simulate at mesh ``lcm(a, b)`` and sum blocks of fine increments.
    ``union``: factor the covariance of ``B`` at the union of both grids.
    If the lcm grid is too long and ``cfg.fallback`` is set, the union route
    is used when it fits, otherwise a resource error is raised.
    """
    blocks = list(_coupled_batches(a, b, T, cfg))
    inc_a = np.concatenate([blk[0] for blk in blocks])
    inc_b = np.concatenate([blk[1] for blk in blocks])
    return PathSample(int(a), T, inc_a), PathSample(int(b), T, inc_b)


def _ranges(paths: int, width: int) -> list[range]:
    size = max(1, _BATCH_VALUES // max(width, 1))
    return [range(i, min(i + size, paths)) for i in range(0, paths, size)]


def w_path(p: PathSample, tilde: bool = False, method: str = "hermite") -> np.ndarray:
    """Running sums ``W_n(j/n)`` (or ``W~_n(j/n)``) for ``j = 1..nT``.

    ``W~`` is computed either as ``sum n^{-1/2} h_3(n^{1/6} dB)`` (``hermite``)
    or as ``W_n - 3 n^{-1/3} B`` (``subtract``).
    """
    dB = np.asarray(p.increments, dtype=float)
    if not tilde:
        return np.cumsum(dB * dB * dB, axis=-1)
    if method == "hermite":
        x = dB * np.cbrt(float(p.n)) ** 0.5
        return np.cumsum((x * x * x - 3.0 * x) / math.sqrt(p.n), axis=-1)
    if method == "subtract":
        return np.cumsum(dB * dB * dB, axis=-1) - 3.0 / np.cbrt(float(p.n)) * np.cumsum(dB, axis=-1)
    raise PreconditionError("method must be 'hermite' or 'subtract'")


def w_at(p: PathSample, t: float, tilde: bool = False) -> np.ndarray | float:
    """``W_n(t)`` from a path sample; zero when ``floor(nt) = 0``."""
    j = grid_floor(p.n, t)
    N = np.shape(p.increments)[-1]
    if j > N:
        raise PreconditionError("t lies beyond the simulated horizon")
    if j == 0:
        return np.zeros(np.shape(p.increments)[:-1]) if np.ndim(p.increments) > 1 else 0.0
    return w_path(p, tilde)[..., j - 1]


def _estimate(products: np.ndarray) -> McEstimate:
    n = products.size
    return McEstimate(float(products.mean()), float(products.std(ddof=1) / math.sqrt(n)), n)


def _horizon(*times: float) -> int:
    return max(1, math.ceil(max(times)))


def mc_cov(a: int, b: int, s: float, t: float, cfg: McConfig, tilde: bool = False) -> McEstimate:
    """Monte Carlo estimate of ``E[W_a(s) W_b(t)]``.

    Both functionals have mean zero exactly, so the estimator is the mean of
    per-path products; its standard error is ``sd / sqrt(paths)``.
    """
    T = _horizon(s, t)
    products = []
    for inc_a, inc_b in _coupled_batches(a, b, T, cfg):
        wa = w_at(PathSample(int(a), T, inc_a), s, tilde)
        wb = w_at(PathSample(int(b), T, inc_b), t, tilde)
        products.append(np.asarray(wa) * np.asarray(wb))
    return _estimate(np.concatenate(products))


def normality_diagnostics(samples) -> NormalityReport:
    """KS statistic against ``N(0, sample variance)`` plus skewness and excess kurtosis."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 100:
        raise PreconditionError("need at least 100 samples")
    sd = float(x.std(ddof=1))
    if not sd > 0:
        raise DomainError("sample has zero variance")
    ks = stats.kstest(x, "norm", args=(0.0, sd)).statistic
    return NormalityReport(float(ks), float(stats.skew(x)), float(stats.kurtosis(x)))


def independence_diagnostic(a: int, t: float, cfg: McConfig) -> McEstimate:
    """Monte Carlo ``E[W~_a(t) B(floor(at)/a)]``, zero by chaos orthogonality."""
    if int(a) != a or a < 1:
        raise PreconditionError("a must be a positive integer")
    if not t > 0:
        raise PreconditionError("t must be positive")
    p = fgn_sample(int(a), _horizon(t), cfg.seed, cfg.paths, threads=cfg.threads)
    j = grid_floor(p.n, t)
    B = p.B()[:, j - 1] if j else np.zeros(cfg.paths)
    return _estimate(np.asarray(w_at(p, t, tilde=True)) * B)
