"""Sampling and manipulation of trace-class (fractional) Brownian driving paths.

A path is stored as its standard mode components on a uniform grid; the
covariance weights ``q_j**0.5`` are applied downstream where tensors are
assembled, keeping all kernel scalings in one place.  Mode components are
sampled exactly in distribution: a circulant embedding of the increment
covariance by default, a triangular factorization of the dense covariance as
fallback, and plain cumulative sums of iid Gaussians for hurst = 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, toeplitz

from . import defaults

__all__ = [
    "CovarianceSpec",
    "PathGrid",
    "fgn_autocovariance",
    "sample_fbm_1d",
    "sample_fbm_ensemble",
    "sample_qfbm",
    "coarsen",
    "eval_linear",
    "shift",
    "increment",
    "increments",
    "holder_seminorm",
]

#: relative eigenvalue floor below which a circulant embedding is rejected
_CIRCULANT_TOL = 1e-10


@dataclass(frozen=True)
class CovarianceSpec:
    """Trace-class diagonal covariance weights q_j of the driving noise."""

    weights: np.ndarray
    law: str = "explicit"
    decay: float | None = None

    def __post_init__(self):
        q = np.asarray(self.weights, dtype=float)
        if q.ndim != 1 or q.size == 0:
            raise ValueError("weights must be a non-empty 1-d sequence")
        if not np.all(q > 0.0):
            raise ValueError("all covariance weights must be positive")
        if self.law not in ("explicit", "power"):
            raise ValueError(f"unknown covariance law {self.law!r}")
        if self.law == "power" and (self.decay is None or self.decay <= 1.0):
            raise ValueError("power-law weights need decay > 1 for a finite trace")
        q.setflags(write=False)
        object.__setattr__(self, "weights", q)

    @classmethod
    def power_law(cls, mode_count: int, decay: float = defaults.COVARIANCE_DECAY) -> "CovarianceSpec":
        """Weights q_j = j**(-decay), decay > 1."""
        if mode_count < 1:
            raise ValueError("mode_count must be positive")
        j = np.arange(1, mode_count + 1, dtype=float)
        return cls(j ** (-float(decay)), law="power", decay=float(decay))

    @property
    def mode_count(self) -> int:
        return int(self.weights.size)

    @property
    def trace(self) -> float:
        return float(np.sum(self.weights))


@dataclass(frozen=True)
class PathGrid:
    """Mode components sampled on a uniform grid of spacing ``step``.

    ``values`` has shape (mode_count, step_count + 1) with values[:, 0] == 0.
    ``level`` is set when the grid is the dyadic partition of its sampling
    horizon (step_count == 2**level); grids derived by ``shift`` keep the step
    but may have any cell count, in which case ``level`` is None.
    """

    horizon: float
    step: float
    hurst: float
    values: np.ndarray
    seed: int
    generator_tag: str
    level: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[1] < 2:
            raise ValueError("values must be (mode_count, step_count + 1) with at least one cell")
        if np.any(v[:, 0] != 0.0):
            raise ValueError("paths must start at zero")
        n_cells = v.shape[1] - 1
        if not math.isclose(self.horizon, self.step * n_cells, rel_tol=1e-9, abs_tol=0.0):
            raise ValueError("horizon must equal step * step_count")
        if self.level is not None and n_cells != 2 ** self.level:
            raise ValueError(f"level {self.level} inconsistent with {n_cells} cells")
        if not 0.0 < self.hurst < 1.0:
            raise ValueError(f"hurst must lie in (0, 1), got {self.hurst}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def mode_count(self) -> int:
        return int(self.values.shape[0])

    @property
    def step_count(self) -> int:
        return int(self.values.shape[1] - 1)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.step_count + 1) * self.step


def fgn_autocovariance(lags, hurst: float, step: float):
    """Autocovariance gamma(k) of grid increments of fBm with spacing ``step``.

    gamma(k) = 0.5 (|k+1|^2H - 2|k|^2H + |k-1|^2H) * step^2H; for hurst = 1/2
    this is step at lag 0 and vanishes elsewhere.
    """
    k = np.abs(np.asarray(lags, dtype=float))
    h2 = 2.0 * hurst
    out = 0.5 * ((k + 1.0) ** h2 - 2.0 * k ** h2 + np.abs(k - 1.0) ** h2) * step ** h2
    return out


class _CirculantEmbeddingError(RuntimeError):
    pass


def _fgn_circulant(hurst, n_steps, step, rng, count):
    """Exact fGn via the circulant embedding of the increment covariance.

    The embedding doubles the Toeplitz row into a circulant whose FFT gives
    the eigenvalues; a Hermitian-symmetric Gaussian vector in eigenspace maps
    back to ``count`` rows of exactly distributed increments.
    """
    n = int(n_steps)
    m = 2 * n
    gam = fgn_autocovariance(np.arange(n + 1), hurst, step)
    circ = np.concatenate([gam, gam[n - 1:0:-1]]) if n > 1 else gam
    lam = np.fft.fft(circ).real
    if lam.min() < -_CIRCULANT_TOL * lam.max():
        raise _CirculantEmbeddingError(f"negative circulant spectrum at hurst={hurst}, n={n}")
    lam = np.clip(lam, 0.0, None)
    z = rng.standard_normal((count, m))
    a = np.zeros((count, m), dtype=complex)
    a[:, 0] = np.sqrt(lam[0] / m) * z[:, 0]
    a[:, n] = np.sqrt(lam[n] / m) * z[:, 1]
    if n > 1:
        k = np.arange(1, n)
        a[:, k] = np.sqrt(lam[k] / (2.0 * m)) * (z[:, 2:n + 1] + 1j * z[:, n + 1:m])
        a[:, m - k] = np.conj(a[:, k])
    x = np.fft.fft(a, axis=1)
    return np.ascontiguousarray(x[:, :n].real)


def _fgn_cholesky(hurst, n_steps, step, rng, count):
    """Exact fGn through a triangular factor of the dense increment covariance."""
    gam = fgn_autocovariance(np.arange(n_steps), hurst, step)
    lower = cholesky(toeplitz(gam), lower=True)
    z = rng.standard_normal((count, n_steps))
    return z @ lower.T


def _sample_fgn(hurst, n_steps, step, rng, count, generator):
    if generator == "auto":
        generator = "cumsum" if hurst == 0.5 else "circulant"
    if generator == "cumsum":
        if hurst != 0.5:
            raise ValueError("cumulative-sum sampling is exact only for hurst = 1/2")
        return rng.standard_normal((count, n_steps)) * math.sqrt(step), "cumulative-sum"
    if generator == "circulant":
        try:
            return _fgn_circulant(hurst, n_steps, step, rng, count), "circulant-embedding"
        except _CirculantEmbeddingError:
            return _fgn_cholesky(hurst, n_steps, step, rng, count), "triangular-factor"
    if generator == "cholesky":
        return _fgn_cholesky(hurst, n_steps, step, rng, count), "triangular-factor"
    raise ValueError(f"unknown generator {generator!r}")


def _rng_from(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def mode_seed(seed: int, j: int) -> np.random.SeedSequence:
    """Splittable per-mode substream: independent of evaluation order."""
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(int(j),))


def _validate_grid(hurst, level, horizon):
    if not 0.0 < hurst < 1.0:
        raise ValueError(f"hurst must lie in (0, 1), got {hurst}")
    if level < 0:
        raise ValueError(f"level must be nonnegative, got {level}")
    if horizon <= 0.0:
        raise ValueError(f"horizon must be positive, got {horizon}")


def sample_fbm_1d(hurst, level, horizon=defaults.HORIZON, seed=0, generator="auto"):
    """One exact fBm sample on the dyadic grid; returns 2**level + 1 values from 0.

    ``seed`` may be an int or a numpy SeedSequence (the latter makes the call
    reproducible as one mode substream of a multi-mode sample).
    """
    values, _ = _sample_fbm_values(hurst, level, horizon, seed, generator, count=1)
    return values[0]


def _sample_fbm_values(hurst, level, horizon, seed, generator, count):
    _validate_grid(hurst, level, horizon)
    n_steps = 2 ** int(level)
    step = horizon / n_steps
    incr, tag = _sample_fgn(hurst, n_steps, step, _rng_from(seed), count, generator)
    values = np.zeros((count, n_steps + 1))
    np.cumsum(incr, axis=1, out=values[:, 1:])
    return values, tag


def sample_fbm_ensemble(hurst, level, horizon=defaults.HORIZON, seed=0, count=1, generator="auto"):
    """Batch of independent fBm samples, shape (count, 2**level + 1), one stream."""
    values, _ = _sample_fbm_values(hurst, level, horizon, seed, generator, count)
    return values


def sample_qfbm(cov: CovarianceSpec, hurst, level, horizon=defaults.HORIZON, seed=0,
                generator="auto") -> PathGrid:
    """Sample the mode components of a trace-class driving path.

    Stores the unscaled standard components; mode j draws from the substream
    ``mode_seed(seed, j)`` so results do not depend on evaluation order.
    """
    _validate_grid(hurst, level, horizon)
    n_steps = 2 ** int(level)
    step = horizon / n_steps
    values = np.zeros((cov.mode_count, n_steps + 1))
    tag = None
    for j in range(cov.mode_count):
        incr, tag = _sample_fgn(hurst, n_steps, step, _rng_from(mode_seed(seed, j)), 1, generator)
        np.cumsum(incr[0], out=values[j, 1:])
    return PathGrid(horizon=float(horizon), step=step, hurst=float(hurst), values=values,
                    seed=int(seed), generator_tag=tag, level=int(level))


def coarsen(path: PathGrid, level: int) -> PathGrid:
    """Subsample to the dyadic grid of the given coarser level.

    Grid values are kept verbatim, so the coarse grid agrees with the fine one
    at all shared partition points.
    """
    if path.level is None:
        raise ValueError("only dyadic sampled grids can be coarsened")
    if level > path.level or level < 0:
        raise ValueError(f"target level {level} must lie in 0..{path.level}")
    stride = 2 ** (path.level - level)
    return PathGrid(horizon=path.horizon, step=path.step * stride, hurst=path.hurst,
                    values=path.values[:, ::stride], seed=path.seed,
                    generator_tag=path.generator_tag, level=level)


def eval_linear(path: PathGrid, j: int, t):
    """Piecewise-linear interpolant of mode j at time(s) t in [0, horizon]."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < -1e-12) or np.any(t_arr > path.horizon * (1 + 1e-12)):
        raise ValueError(f"time outside [0, {path.horizon}]")
    out = np.interp(t_arr, path.times, path.values[j])
    return float(out) if np.ndim(t) == 0 else out


def aligned_index(t: float, step: float) -> int:
    """Grid index of a grid-aligned time; rejects non-aligned values."""
    m = round(t / step)
    if not math.isclose(m * step, t, rel_tol=1e-9, abs_tol=1e-12 * step):
        raise ValueError(f"time {t} is not aligned to the grid of step {step}")
    return int(m)


def shift(path: PathGrid, tau: float) -> PathGrid:
    """Wiener shift: the path t -> omega(t + tau) - omega(tau) on [0, horizon - tau].

    tau must be grid-aligned so the identity holds without interpolation; the
    step is preserved and ``level`` survives only if the remaining cell count
    is again a power of two.
    """
    m0 = aligned_index(tau, path.step)
    if m0 < 0 or m0 >= path.step_count:
        raise ValueError(f"shift {tau} leaves no cells of the horizon {path.horizon}")
    if m0 == 0:
        return path
    vals = path.values[:, m0:] - path.values[:, m0:m0 + 1]
    n_cells = path.step_count - m0
    level = int(math.log2(n_cells)) if (n_cells & (n_cells - 1)) == 0 else None
    return PathGrid(horizon=path.step * n_cells, step=path.step, hurst=path.hurst,
                    values=vals, seed=path.seed, generator_tag=path.generator_tag,
                    level=level)


def increment(path: PathGrid, j: int, m: int) -> float:
    """Cell increment over the m-th cell, 1 <= m <= step_count."""
    if not 1 <= m <= path.step_count:
        raise IndexError(f"cell index {m} outside 1..{path.step_count}")
    return float(path.values[j, m] - path.values[j, m - 1])


def increments(path: PathGrid) -> np.ndarray:
    """All cell increments, shape (mode_count, step_count)."""
    return np.diff(path.values, axis=1)


def _pair_scan(values, step, beta):
    # supremum over all grid pairs, one vector pass per lag
    best = 0.0
    n = values.size - 1
    for lag in range(1, n + 1):
        num = np.max(np.abs(values[lag:] - values[:-lag]))
        best = max(best, num / (lag * step) ** beta)
    return best


def holder_seminorm(values, beta: float, step: float,
                    subsample_cap: int = defaults.HOLDER_SUBSAMPLE_CAP) -> float:
    """Discrete beta-Hoelder seminorm sup |f(t)-f(s)| / (t-s)^beta over grid pairs.

    Exhaustive up to ``subsample_cap`` grid points; beyond that the scan runs
    on a strided subset plus all adjacent full-resolution pairs and the result
    is a lower bound of the full-grid supremum.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("need at least two grid values")
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    if v.size <= subsample_cap:
        return _pair_scan(v, step, beta)
    stride = math.ceil(v.size / subsample_cap)
    capped = _pair_scan(v[::stride], step * stride, beta)
    adjacent = np.max(np.abs(np.diff(v))) / step ** beta
    return max(capped, adjacent)
