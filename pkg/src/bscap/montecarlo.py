"""Monte Carlo oracle: dependent fading pairs drawn through the copula.

Draws are organised in fixed-size blocks, and block ``k`` always uses the
generator ``PCG64(SeedSequence(seed, spawn_key=(k,)))``.  A stream is just a
contiguous run of blocks handled by one worker, so the sample set and its
order depend on ``seed`` alone; ``n_streams`` only changes how the work is
split.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from .capacity import LOG2E
from .copulas import Comonotone, Copula, Countermonotone
from .errors import DomainError, UnsupportedVariantError
from .snr import SnrModel, cdf_on_log_grid, log_range

BLOCK = 1 << 16
N_BATCHES = 32
THREADS_ENV = "BSCAP_THREADS"


def default_threads():
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            n = int(raw)
        except ValueError as exc:
            raise DomainError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from exc
        if n < 1:
            raise DomainError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
        return n
    return os.cpu_count() or 1


@dataclass(frozen=True)
class SimSpec:
    model: SnrModel
    n_samples: int
    seed: int = 0
    n_streams: int = 1

    def __post_init__(self):
        if not isinstance(self.model.dependence, Copula):
            raise UnsupportedVariantError("Monte Carlo sampling needs a copula dependence")
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise DomainError(f"n_samples must be a positive integer, got {self.n_samples}")
        if int(self.n_streams) != self.n_streams or self.n_streams < 1:
            raise DomainError(f"n_streams must be a positive integer, got {self.n_streams}")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class Estimate:
    mean: float
    std_error: float
    n: int


def _block_pairs(spec, k, size):
    ss = np.random.SeedSequence(spec.seed, spawn_key=(k,))
    rng = np.random.Generator(np.random.PCG64(ss))
    # one (u, w) pair per row, so a shorter run is a prefix of a longer one
    uw = rng.random((size, 2))
    copula = spec.model.dependence
    marg = spec.model.marginal
    u1, u2 = copula.sample_pair(uw[:, 0], uw[:, 1])
    g_f = marg.quantile(u1)
    if isinstance(copula, Comonotone):
        g_b = g_f.copy()
    elif isinstance(copula, Countermonotone):
        # isf(u) is quantile(1 - u) without rounding 1 - u
        g_b = marg.isf(u1)
    else:
        g_b = marg.quantile(u2)
    return g_f, g_b


def _stream_blocks(n_blocks, n_streams):
    # contiguous, near-equal runs of block indices
    bounds = np.linspace(0, n_blocks, min(n_streams, n_blocks) + 1).round().astype(int)
    return [range(a, b) for a, b in zip(bounds[:-1], bounds[1:])]


def sample_gains(spec: SimSpec, threads=None):
    """All (g_f, g_b) draws, returned as two arrays in block order."""
    n = int(spec.n_samples)
    n_blocks = -(-n // BLOCK)
    sizes = [min(BLOCK, n - k * BLOCK) for k in range(n_blocks)]

    def run(blocks):
        return [_block_pairs(spec, k, sizes[k]) for k in blocks]

    runs = _stream_blocks(n_blocks, int(spec.n_streams))
    workers = min(threads or default_threads(), len(runs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, runs))
    else:
        parts = [run(r) for r in runs]
    flat = [pair for part in parts for pair in part]
    g_f = np.concatenate([p[0] for p in flat])
    g_b = np.concatenate([p[1] for p in flat])
    return g_f, g_b


def sample_snr(spec: SimSpec, threads=None):
    g_f, g_b = sample_gains(spec, threads)
    return spec.model.snr_hat * g_f * g_b


def _mean_estimate(x):
    n = x.size
    se = float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Estimate(float(np.mean(x)), se, n)


def estimate_capacity(spec: SimSpec, threads=None) -> Estimate:
    """Sample mean of log2(1 + gamma) with its standard error."""
    return _mean_estimate(np.log1p(sample_snr(spec, threads)) * LOG2E)


def estimate_moment(spec: SimSpec, order, threads=None) -> Estimate:
    """Sample mean of gamma^order."""
    return _mean_estimate(sample_snr(spec, threads) ** order)


def _pearson(x, y):
    dx = x - x.mean()
    dy = y - y.mean()
    return float(np.dot(dx, dy) / math.sqrt(np.dot(dx, dx) * np.dot(dy, dy)))


def estimate_correlation(spec: SimSpec, threads=None) -> Estimate:
    """Plug-in Pearson correlation of (g_f, g_b); std error from 32 batch means."""
    if spec.n_samples < 2 * N_BATCHES:
        raise DomainError(f"correlation needs at least {2 * N_BATCHES} samples")
    g_f, g_b = sample_gains(spec, threads)
    rho = _pearson(g_f, g_b)
    batch = g_f.size // N_BATCHES
    parts = [_pearson(g_f[i * batch:(i + 1) * batch], g_b[i * batch:(i + 1) * batch])
             for i in range(N_BATCHES)]
    se = float(np.std(parts, ddof=1) / math.sqrt(N_BATCHES))
    return Estimate(rho, se, g_f.size)


# ---------------------------------------------------------------------------
# goodness of fit
# ---------------------------------------------------------------------------

def ks_threshold(n):
    """Critical Kolmogorov distance 1.63 / sqrt(n)."""
    return 1.63 / math.sqrt(n)


def _model_cdf_at(s_sorted, model, step):
    dep = model.dependence
    marg = model.marginal
    if isinstance(dep, Comonotone):
        return marg.cdf(np.exp(0.5 * s_sorted))
    if isinstance(dep, Countermonotone):
        # parametric table: u -> (ln q(u) q(1-u), 2u), dense in ln u and near u = 1/2
        u = np.unique(np.concatenate([np.logspace(-300, np.log10(0.5), 4000),
                                      0.5 - np.logspace(-12, np.log10(0.49), 4000)]))
        u = u[(u > 0) & (u <= 0.5)]
        with np.errstate(divide="ignore"):
            s_tab = np.log(marg.quantile(u)) + np.log(marg.isf(u))
        keep = np.isfinite(s_tab)
        s_tab, idx = np.unique(s_tab[keep], return_index=True)
        F_tab = 2.0 * u[keep][idx]
        interp = PchipInterpolator(s_tab, F_tab, extrapolate=False)
        out = interp(s_sorted)
        out = np.where(s_sorted >= s_tab[-1], 1.0, out)
        return np.where(np.isnan(out), 0.0, out)
    # below the truncation point of the density the CDF is < 1e-20; count it as 0
    floor = log_range(model.m)[0]
    lo, hi = max(s_sorted[0], floor), max(s_sorted[-1], floor)
    n_grid = max(int(math.ceil((hi - lo) / step)), 1) + 1
    grid = np.linspace(lo, hi, n_grid) if hi > lo else np.array([lo, lo + step])
    F, dF = cdf_on_log_grid(model, grid)
    out = CubicHermiteSpline(grid, F, dF)(np.maximum(s_sorted, lo))
    return np.where(s_sorted < floor, 0.0, out)


def ks_distance(gamma, model: SnrModel, step=0.05) -> float:
    """Kolmogorov distance between the empirical law of ``gamma`` and the model CDF.

    The model CDF is evaluated on a grid in ln gamma and interpolated with
    cubic Hermite splines through the exact derivative.
    """
    g = np.sort(np.asarray(gamma, dtype=float).ravel())
    g = g[g > 0]
    n = g.size
    if n == 0:
        raise DomainError("no positive samples")
    s = np.log(g / model.snr_hat)
    F = np.clip(_model_cdf_at(s, model, step), 0.0, 1.0)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
