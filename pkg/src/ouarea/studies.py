"""Experiment harness: convergence, moment, stationarity and auxiliary checks.

Every study is a pure function of (config, seed) returning a StudyReport whose
pass/fail flags are recomputable from the recorded metrics and the central
tolerance table.  Path seeds derive from the master seed by fixed offsets, and
ensembles use explicit substreams, so reports reproduce bit-for-bit.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy.signal import lfilter
from scipy.stats import ks_2samp, t as student_t

from . import defaults
from .area import WindowPair, _window_components, hs_norm, phi, psi, scaled_tensor
from .noise import (CovarianceSpec, PathGrid, coarsen, holder_seminorm,
                    sample_fbm_1d, sample_qfbm, shift)
from .spectrum import SpectrumConfig, eigenvalue

__all__ = [
    "StudyReport",
    "fit_loglog",
    "t_interval",
    "holder_field_norm",
    "grr_functional",
    "dyadic_windows",
    "convergence_study",
    "level1_rate_study",
    "moment_suite",
    "bdg_check",
    "multinomial_bound_check",
    "stationarity_check",
]


@dataclass
class StudyReport:
    """Structured study outcome: parameters, per-level metrics, fits, checks."""

    kind: str
    params: dict
    metrics: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    def to_dict(self) -> dict:
        return _jsonable({
            "kind": self.kind,
            "params": self.params,
            "metrics": self.metrics,
            "fits": self.fits,
            "checks": self.checks,
            "passed": self.passed,
        })

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, int, float, str)) or obj is None:
        return obj
    return str(obj)


def _check(passed: bool, observed, target=None, tol=None) -> dict:
    entry = {"passed": bool(passed), "observed": observed}
    if target is not None:
        entry["target"] = target
    if tol is not None:
        entry["tolerance"] = tol
    return entry


def fit_loglog(x, y):
    """Least-squares slope and intercept of log y against log x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise ValueError("log-log fit needs positive data")
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope), float(intercept)


def t_interval(samples, level: float = 0.95):
    """Mean and symmetric t confidence interval of a small sample."""
    arr = np.asarray(samples, dtype=float)
    mean = float(arr.mean())
    if arr.size < 2:
        return mean, mean, mean
    half = float(student_t.ppf(0.5 + level / 2.0, arr.size - 1) * arr.std(ddof=1) / math.sqrt(arr.size))
    return mean, mean - half, mean + half


def holder_field_norm(values, beta2: float) -> float:
    """Discrete field norm sup |v(s, t)| / (t - s)^beta2 over supplied pairs.

    ``values`` maps (s, t) pairs with t > s to field magnitudes; the result is
    a lower bound of the continuum supremum.
    """
    if not values:
        raise ValueError("need at least one window pair")
    best = 0.0
    for (s, t), v in values.items():
        if t <= s:
            raise ValueError(f"window ({s}, {t}) is not increasing")
        best = max(best, abs(v) / (t - s) ** beta2)
    return best


def grr_functional(field, times, beta: float, p: int, band: float | None = None) -> float:
    """Discrete double-integral functional (sum |A|^2p / (t-s)^(4 beta p + 2))^(1/2p).

    ``field[m0, m1]`` holds A(t_m0, t_m1) for m0 <= m1; the integrand extends
    symmetrically across the diagonal and pairs closer than ``band`` (default:
    one grid step) are excluded and must be accounted by the caller.
    """
    a = np.asarray(field, dtype=float)
    times = np.asarray(times, dtype=float)
    n = times.size
    if a.shape != (n, n):
        raise ValueError(f"field shape {a.shape} does not match {n} grid times")
    if p < 1:
        raise ValueError("p must be >= 1")
    step = times[1] - times[0]
    if band is None:
        band = step
    w = np.full(n, step)
    w[0] *= 0.5
    w[-1] *= 0.5
    m0, m1 = np.triu_indices(n, k=1)
    dt = times[m1] - times[m0]
    keep = dt >= band - 1e-12 * band
    m0, m1, dt = m0[keep], m1[keep], dt[keep]
    integrand = np.abs(a[m0, m1]) ** (2 * p) / dt ** (4.0 * beta * p + 2.0)
    total = 2.0 * np.sum(w[m0] * w[m1] * integrand)
    return float(total ** (1.0 / (2 * p)))


def dyadic_windows(step_count: int, scales=(1, 2, 3, 4)):
    """All aligned windows of widths step_count / 2**scale, as index pairs."""
    wins = []
    for sc in scales:
        width = step_count // 2 ** sc
        if width * 2 ** sc != step_count:
            raise ValueError(f"step count {step_count} not divisible at scale {sc}")
        wins.extend((a * width, (a + 1) * width) for a in range(2 ** sc))
    return wins


def _scale_factors(cfg: SpectrumConfig, cov: CovarianceSpec) -> np.ndarray:
    root_q = np.sqrt(cov.weights)
    return (cfg.eigenvalues ** -cfg.kappa)[:, None, None] * root_q[None, :, None] * root_q[None, None, :]


def convergence_study(*, spectrum: SpectrumConfig, cov: CovarianceSpec, hurst: float = 0.5,
                      levels=range(4, 10), ref_level: int = 12, seeds: int = 20, seed: int = 0,
                      horizon: float = defaults.HORIZON, beta: float | None = None,
                      window_scales=(1, 2, 3, 4), generator: str = "auto") -> StudyReport:
    """Error decay of coarse-level window tensors against a fine reference level.

    One path per seed is sampled at ``ref_level`` and coarsened, so all levels
    see the same trajectory; errors are Hilbert-Schmidt norms of scaled tensor
    differences over a fixed dyadic window family, summarized per level as RMS
    and as the discrete field norm with exponent 2 beta.
    """
    levels = sorted(levels)
    if ref_level < levels[-1] + 2:
        raise ValueError("reference level must exceed the finest level by at least 2")
    beta = hurst - defaults.BETA_OFFSET if beta is None else beta
    factors = _scale_factors(spectrum, cov)
    wins_ref = dyadic_windows(2 ** ref_level, window_scales)
    widths = np.array([(b - a) for a, b in wins_ref], dtype=float) * horizon / 2 ** ref_level
    errs = np.zeros((seeds, len(levels), len(wins_ref)))
    for s_idx in range(seeds):
        path = sample_qfbm(cov, hurst, ref_level, horizon, seed=seed + s_idx, generator=generator)
        incr_ref = np.diff(path.values, axis=1)
        ref = {win: _window_components(incr_ref, spectrum.eigenvalues, win[0], win[1], path.step) * factors
               for win in wins_ref}
        for l_idx, lvl in enumerate(levels):
            coarse = coarsen(path, lvl)
            incr = np.diff(coarse.values, axis=1)
            f = 2 ** (ref_level - lvl)
            for w_idx, (a, b) in enumerate(wins_ref):
                comp = _window_components(incr, spectrum.eigenvalues, a // f, b // f, coarse.step)
                errs[s_idx, l_idx, w_idx] = np.sqrt(np.sum((comp * factors - ref[(a, b)]) ** 2))
    deltas = np.array([horizon / 2 ** lvl for lvl in levels])
    rms = np.sqrt((errs ** 2).mean(axis=(0, 2)))
    field = (errs / widths[None, None, :] ** (2.0 * beta)).max(axis=2).mean(axis=0)
    widest_ratio = (errs[:, :, 0] / widths[0] ** (2.0 * beta)).mean(axis=0)
    slope, intercept = fit_loglog(deltas, rms)
    per_seed = [fit_loglog(deltas, np.sqrt((errs[s] ** 2).mean(axis=1)))[0] for s in range(seeds)]
    mean_slope, ci_lo, ci_hi = t_interval(per_seed)
    lo, hi = defaults.TOLERANCES["wz_slope_low"], defaults.TOLERANCES["wz_slope_high"]
    checks = {
        "errors_decrease": _check(bool(np.all(np.diff(rms) < 0.0)), rms.tolist()),
        "field_dominates_pointwise": _check(bool(np.all(field >= widest_ratio - 1e-12)),
                                            {"field": field.tolist(), "widest": widest_ratio.tolist()}),
    }
    if hurst == 0.5:
        checks["slope_in_range"] = _check(lo <= slope <= hi, slope, target=[lo, hi])
    else:
        checks["slope_positive"] = _check(ci_lo > 0.0, {"slope": slope, "ci": [ci_lo, ci_hi]}, target="> 0")
    return StudyReport(
        kind="convergence",
        params={"hurst": hurst, "levels": list(levels), "ref_level": ref_level, "seeds": seeds,
                "seed": seed, "horizon": horizon, "beta": beta,
                "modes": {"I": spectrum.mode_count, "J": cov.mode_count},
                "kappa": spectrum.kappa, "window_scales": list(window_scales),
                "windows": len(wins_ref)},
        metrics={"levels": list(levels), "delta": deltas.tolist(), "rms_error": rms.tolist(),
                 "field_norm": field.tolist()},
        fits={"rms_slope": {"slope": slope, "intercept": intercept,
                            "per_seed_mean": mean_slope, "ci": [ci_lo, ci_hi],
                            "level_range": [levels[0], levels[-1]], "seeds": seeds}},
        checks=checks,
    )


def level1_rate_study(*, hurst: float, beta: float | None = None, levels=range(4, 11),
                      ref_level: int = 12, seeds: int = 20, seed: int = 0,
                      horizon: float = defaults.HORIZON,
                      subsample_cap: int = defaults.HOLDER_SUBSAMPLE_CAP) -> StudyReport:
    """Decay of the interpolation error of dyadic piecewise-linear approximants.

    Measures both the sup norm (decay rate about hurst) and the beta-Hoelder
    seminorm (rate about hurst - beta) of path minus interpolant, per level,
    against the finest sampled grid.
    """
    levels = sorted(levels)
    if ref_level < levels[-1] + 2:
        raise ValueError("reference level must exceed the finest level by at least 2")
    beta = hurst - defaults.BETA_OFFSET if beta is None else beta
    if not beta < hurst:
        raise ValueError(f"need beta < hurst, got beta={beta}, hurst={hurst}")
    fine_times = np.arange(2 ** ref_level + 1) * (horizon / 2 ** ref_level)
    step_fine = horizon / 2 ** ref_level
    sup = np.zeros((seeds, len(levels)))
    semi = np.zeros((seeds, len(levels)))
    for s_idx in range(seeds):
        fine = sample_fbm_1d(hurst, ref_level, horizon, seed=seed + s_idx)
        for l_idx, lvl in enumerate(levels):
            stride = 2 ** (ref_level - lvl)
            interp = np.interp(fine_times, fine_times[::stride], fine[::stride])
            diff = fine - interp
            sup[s_idx, l_idx] = np.max(np.abs(diff))
            semi[s_idx, l_idx] = holder_seminorm(diff, beta, step_fine, subsample_cap)
    deltas = np.array([horizon / 2 ** lvl for lvl in levels])
    sup_slope, _ = fit_loglog(deltas, sup.mean(axis=0))
    semi_slope, _ = fit_loglog(deltas, semi.mean(axis=0))
    semi_per_seed = [fit_loglog(deltas, semi[s])[0] for s in range(seeds)]
    semi_mean, semi_lo, semi_hi = t_interval(semi_per_seed)
    rate_tol = defaults.TOLERANCES["sup_rate_vs_hurst"]
    checks = {
        "holder_slope_positive": _check(semi_lo > 0.0,
                                        {"slope": semi_slope, "ci": [semi_lo, semi_hi]}, target="> 0"),
        "sup_slope_near_hurst": _check(abs(sup_slope - hurst) <= rate_tol, sup_slope,
                                       target=hurst, tol=rate_tol),
    }
    return StudyReport(
        kind="level1_rate",
        params={"hurst": hurst, "beta": beta, "levels": list(levels), "ref_level": ref_level,
                "seeds": seeds, "seed": seed, "horizon": horizon, "subsample_cap": subsample_cap},
        metrics={"levels": list(levels), "delta": deltas.tolist(),
                 "sup_error": sup.mean(axis=0).tolist(), "holder_error": semi.mean(axis=0).tolist()},
        fits={"sup_slope": {"slope": sup_slope, "level_range": [levels[0], levels[-1]], "seeds": seeds},
              "holder_slope": {"slope": semi_slope, "per_seed_mean": semi_mean,
                               "ci": [semi_lo, semi_hi], "level_range": [levels[0], levels[-1]],
                               "seeds": seeds}},
        checks=checks,
    )


def _chunks(total: int, size: int):
    done = 0
    while done < total:
        take = min(size, total - done)
        yield done, take
        done += take


def _component_samples(incr: np.ndarray, lam: float, j: int, k: int, m0: int, m1: int,
                       step: float) -> np.ndarray:
    """Window component for one (lam, j, k) over a batch of increment arrays."""
    dj = incr[:, j, m0:m1]
    dk = incr[:, k, m0:m1]
    x = lam * step
    carried = lfilter([1.0], [1.0, -math.exp(-x)], dj, axis=-1)
    lagged = np.concatenate([np.zeros((dj.shape[0], 1)), carried[:, :-1]], axis=-1)
    return phi(x) * np.einsum("bm,bm->b", dj, dk) + psi(x) * np.einsum("bm,bm->b", lagged, dk)


def _bootstrap_ci(samples: np.ndarray, rng: np.random.Generator, n_boot: int = 800,
                  level: float = 0.95):
    means = np.empty(n_boot)
    n = samples.size
    for b in range(n_boot):
        means[b] = samples[rng.integers(0, n, n)].mean()
    lo, hi = np.quantile(means, [(1 - level) / 2.0, 0.5 + level / 2.0])
    return float(lo), float(hi)


def moment_suite(*, spectrum: SpectrumConfig, cov: CovarianceSpec, i: int = 1, j: int = 1,
                 k: int = 2, p: int = 1, level: int = 8, samples: int = 10_000, seed: int = 0,
                 horizon: float = defaults.HORIZON, widths=(0.125, 0.25, 0.5),
                 diff_ref_offset: int = 3, chunk: int = 512) -> StudyReport:
    """Monte Carlo moment checks for Brownian driving paths.

    Verifies the window-width scaling of E ||tensor||^(2p), the closed-form
    mean of diagonal components width * phi(lam * step), the vanishing mean of
    off-diagonal components, and the decay in the grid step of the difference
    to a finer reference level.
    """
    if samples < 10_000:
        raise ValueError("moment estimates need at least 1e4 samples")
    if j == k:
        raise ValueError("pass distinct modes; the diagonal check uses (i, j, j) internally")
    n_cells = 2 ** level
    step = horizon / n_cells
    lam_i = eigenvalue(spectrum, i)
    jj, kk = j - 1, k - 1
    factors = _scale_factors(spectrum, cov)
    win_cells = [max(1, int(round(w * n_cells / horizon))) for w in widths]
    rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(0,)))
    norm_pow = {wc: np.empty(samples) for wc in win_cells}
    diag = np.empty(samples)
    offd = np.empty(samples)
    base_cells = max(win_cells)
    for done, take in _chunks(samples, chunk):
        incr = rng.standard_normal((take, cov.mode_count, n_cells)) * math.sqrt(step)
        comps = _window_components(incr, spectrum.eigenvalues, 0, base_cells, step)
        diag[done:done + take] = comps[:, i - 1, jj, jj]
        offd[done:done + take] = comps[:, i - 1, jj, kk]
        for wc in win_cells:
            if wc == base_cells:
                scaled = comps * factors
            else:
                scaled = _window_components(incr, spectrum.eigenvalues, 0, wc, step) * factors
            norm_pow[wc][done:done + take] = np.sum(scaled ** 2, axis=(1, 2, 3)) ** p
    width_times = [wc * step for wc in win_cells]
    moments = [float(norm_pow[wc].mean()) for wc in win_cells]
    boot = np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(1,)))
    moment_cis = [_bootstrap_ci(norm_pow[wc], boot) for wc in win_cells]
    exponent, _ = fit_loglog(width_times, moments)
    sig = defaults.TOLERANCES["mean_check_sigmas"]
    base_width = base_cells * step
    diag_target = base_width * phi(lam_i * step)
    diag_se = float(diag.std(ddof=1) / math.sqrt(samples))
    offd_se = float(offd.std(ddof=1) / math.sqrt(samples))
    # difference decay against a finer reference of the same trajectories
    ref_level = level + diff_ref_offset
    f = 2 ** diff_ref_offset
    rng_diff = np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(2,)))
    diff_levels = [level - 2, level - 1, level]
    diff_pow = {lvl: np.empty(samples) for lvl in diff_levels}
    step_ref = horizon / 2 ** ref_level
    for done, take in _chunks(samples, chunk):
        incr_ref = rng_diff.standard_normal((take, 2, 2 ** ref_level)) * math.sqrt(step_ref)
        values = np.concatenate([np.zeros((take, 2, 1)), np.cumsum(incr_ref, axis=-1)], axis=-1)
        a_ref = _component_samples(incr_ref, lam_i, 0, 1, 0, (base_cells * f), step_ref)
        for lvl in diff_levels:
            stride = 2 ** (ref_level - lvl)
            incr_lvl = np.diff(values[:, :, ::stride], axis=-1)
            a_lvl = _component_samples(incr_lvl, lam_i, 0, 1, 0, base_cells // 2 ** (level - lvl),
                                       horizon / 2 ** lvl)
            diff_pow[lvl][done:done + take] = np.abs(a_lvl - a_ref) ** (2 * p)
    diff_moments = [float(diff_pow[lvl].mean()) for lvl in diff_levels]
    diff_deltas = [horizon / 2 ** lvl for lvl in diff_levels]
    diff_power, _ = fit_loglog(diff_deltas, diff_moments)
    tol = defaults.TOLERANCES["moment_exponent_tol"]
    checks = {
        "norm_scaling_exponent": _check(abs(exponent - 2 * p) <= tol, exponent, target=2 * p, tol=tol),
        "diag_mean": _check(abs(diag.mean() - diag_target) <= sig * diag_se,
                            {"mean": float(diag.mean()), "se": diag_se}, target=diag_target,
                            tol=f"{sig} se"),
        "offdiag_mean": _check(abs(offd.mean()) <= sig * offd_se,
                               {"mean": float(offd.mean()), "se": offd_se}, target=0.0,
                               tol=f"{sig} se"),
        "difference_decay": _check(bool(np.all(np.diff(diff_moments) < 0.0)) and diff_power > 0.0,
                                   {"moments": diff_moments, "power": diff_power}, target="> 0"),
    }
    return StudyReport(
        kind="moments",
        params={"i": i, "j": j, "k": k, "p": p, "level": level, "samples": samples, "seed": seed,
                "horizon": horizon, "widths": list(widths),
                "modes": {"I": spectrum.mode_count, "J": cov.mode_count}, "kappa": spectrum.kappa},
        metrics={"width": width_times, "norm_moment": moments,
                 "norm_moment_ci": moment_cis, "diff_delta": diff_deltas,
                 "diff_moment": diff_moments,
                 "diag_mean": float(diag.mean()), "diag_target": diag_target,
                 "offdiag_mean": float(offd.mean())},
        fits={"norm_exponent": {"slope": exponent, "target": 2 * p},
              "difference_power": {"slope": diff_power}},
        checks=checks,
    )


def bdg_check(*, p: int = 1, horizon: float = defaults.HORIZON, level: int = 10,
              samples: int = 50_000, seed: int = 0, chunk: int = 4096) -> StudyReport:
    """Even-moment bound for the martingale integral of the path against itself.

    The left side E (int_0^T w dw)^(2p) comes from forward-convention sums on
    a fine grid; the right side (p(2p-1))^p T^(p-1) E int_0^T w^(2p) dxi has a
    closed form for Brownian paths and is also cross-checked by Monte Carlo.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    n_cells = 2 ** level
    step = horizon / n_cells
    rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(0,)))
    ito = np.empty(samples)
    rhs_mc_acc = 0.0
    for done, take in _chunks(samples, chunk):
        incr = rng.standard_normal((take, n_cells)) * math.sqrt(step)
        values = np.cumsum(incr, axis=1)
        left_nodes = np.concatenate([np.zeros((take, 1)), values[:, :-1]], axis=1)
        ito[done:done + take] = np.einsum("bm,bm->b", left_nodes, incr)
        rhs_mc_acc += float(np.sum(np.sum(values ** (2 * p), axis=1) * step))
    lhs_pow = ito ** (2 * p)
    lhs = float(lhs_pow.mean())
    se = float(lhs_pow.std(ddof=1) / math.sqrt(samples))
    double_fact = math.prod(range(2 * p - 1, 0, -2))
    rhs = (p * (2 * p - 1)) ** p * horizon ** (p - 1) * double_fact * horizon ** (p + 1) / (p + 1)
    rhs_mc = (p * (2 * p - 1)) ** p * horizon ** (p - 1) * rhs_mc_acc / samples
    passed = lhs <= rhs + 3.0 * se
    return StudyReport(
        kind="bdg",
        params={"p": p, "horizon": horizon, "level": level, "samples": samples, "seed": seed},
        metrics={"lhs": lhs, "lhs_se": se, "rhs_analytic": rhs, "rhs_mc": rhs_mc},
        checks={"bound_holds": _check(passed, {"lhs": lhs, "se": se}, target=rhs, tol="3 se slack")},
    )


def _compositions(total: int, parts: int):
    # weak compositions via bar placements; exact and tiny for p <= 4, M <= 8
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(total + parts - 2 - prev)
        yield out


def multinomial_bound_check(p_max: int = 4, m_max: int = 8) -> StudyReport:
    """Exact even-multinomial sums against the c_p M^p bound, integer arithmetic."""
    rows = []
    ok = True
    for p in range(1, p_max + 1):
        for m in range(1, m_max + 1):
            total = 0
            count = 0
            for comp in _compositions(p, m):
                term = factorial(2 * p)
                for kpart in comp:
                    term //= factorial(2 * kpart)
                total += term
                count += 1
            bound = factorial(2 * p) * m ** p
            passed = total <= bound and count <= m ** p
            ok = ok and passed
            rows.append({"p": p, "M": m, "sum": total, "bound": bound,
                         "compositions": count, "passed": passed})
    return StudyReport(
        kind="multinomial",
        params={"p_max": p_max, "m_max": m_max},
        metrics={"rows": rows},
        checks={"all_bounded": _check(ok, f"{len(rows)} cases")},
    )


def stationarity_check(*, spectrum: SpectrumConfig, cov: CovarianceSpec, hurst: float = 0.5,
                       level: int = 8, cases: int = 100, seed: int = 0,
                       horizon: float = defaults.HORIZON, ensemble_samples: int = 10_000,
                       ensemble_level: int = 6, generator: str = "auto") -> StudyReport:
    """Pathwise and distributional checks of shift invariance of window tensors.

    Pathwise: the tensor of the shifted path over a window equals the tensor of
    the original path over the shifted window, to rounding.  Distributional:
    window components over disjoint ensembles, one shifted and one not, agree
    in mean, variance and Kolmogorov-Smirnov distance.
    """
    tol = defaults.TOLERANCES["stationarity_pathwise"]
    n_cells = 2 ** level
    pick = np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(10,)))
    worst = 0.0
    case_rows = []
    for c_idx in range(cases):
        path = sample_qfbm(cov, hurst, level, horizon, seed=seed + c_idx, generator=generator)
        m_tau = int(pick.integers(1, n_cells - 1))
        m0 = int(pick.integers(0, n_cells - m_tau))
        m1 = int(pick.integers(m0 + 1, n_cells - m_tau + 1))
        w = WindowPair(m0, m1, path.step)
        shifted = shift(path, m_tau * path.step)
        a = scaled_tensor(shifted, spectrum, cov, w).scaled()
        b = scaled_tensor(path, spectrum, cov, w.shifted(m_tau)).scaled()
        err = float(np.max(np.abs(a - b) / (1.0 + np.abs(b))))
        worst = max(worst, err)
        case_rows.append({"case": c_idx, "tau": m_tau * path.step, "s": w.s, "t": w.t, "error": err})
    lam = eigenvalue(spectrum, 1)
    n_ens = 2 ** ensemble_level
    step_ens = horizon / n_ens
    m_tau = n_ens // 4
    m_w = n_ens // 2
    def ensemble_areas(sub_key: int, m_start: int):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(sub_key,)))
        if hurst == 0.5:
            incr = rng.standard_normal((ensemble_samples, 2, n_ens)) * math.sqrt(step_ens)
        else:
            from .noise import _sample_fgn
            rows = [_sample_fgn(hurst, n_ens, step_ens, rng, ensemble_samples, generator)[0]
                    for _ in range(2)]
            incr = np.stack(rows, axis=1)
        return _component_samples(incr, lam, 0, 1, m_start, m_start + m_w, step_ens)
    shifted_samples = ensemble_areas(11, m_tau)
    base_samples = ensemble_areas(12, 0)
    ks = ks_2samp(shifted_samples, base_samples)
    alpha = defaults.TOLERANCES["ks_alpha"]
    critical = math.sqrt(-math.log(alpha / 2.0) / 2.0) * math.sqrt(2.0 / ensemble_samples)
    mean_gap = abs(float(shifted_samples.mean() - base_samples.mean()))
    mean_se = math.sqrt(shifted_samples.var(ddof=1) / ensemble_samples
                        + base_samples.var(ddof=1) / ensemble_samples)
    var_ratio = float(shifted_samples.var(ddof=1) / base_samples.var(ddof=1))
    var_band = 3.0 * math.sqrt(4.0 / ensemble_samples)
    sig = defaults.TOLERANCES["mean_check_sigmas"]
    checks = {
        "pathwise_equality": _check(worst <= tol, worst, tol=tol),
        "ks_below_critical": _check(ks.statistic < critical, float(ks.statistic), target=critical),
        "mean_agreement": _check(mean_gap <= sig * mean_se, {"gap": mean_gap, "se": mean_se},
                                 tol=f"{sig} se"),
        "variance_ratio": _check(abs(var_ratio - 1.0) <= var_band, var_ratio, target=1.0,
                                 tol=var_band),
    }
    return StudyReport(
        kind="stationarity",
        params={"hurst": hurst, "level": level, "cases": cases, "seed": seed, "horizon": horizon,
                "ensemble_samples": ensemble_samples, "ensemble_level": ensemble_level,
                "modes": {"I": spectrum.mode_count, "J": cov.mode_count}},
        metrics={"worst_pathwise": worst, "cases": case_rows,
                 "ks_statistic": float(ks.statistic), "ks_pvalue": float(ks.pvalue),
                 "mean_gap": mean_gap, "variance_ratio": var_ratio},
        checks=checks,
    )
