import math

import numpy as np
import pytest

from ouarea.area import WindowPair, area_component, phi, plain_area_component
from ouarea.fractional import (FracQuadConfig, correction_integral, correction_report,
                               default_alpha, frac_deriv_left, frac_deriv_right, graded_nodes,
                               kernel_bound_check)
from ouarea.noise import CovarianceSpec, sample_fbm_ensemble, sample_qfbm

from .conftest import *  # noqa: F401,F403  (fixtures)


def test_default_alpha_inside_admissible_band():
    beta = 0.45
    alpha = default_alpha(beta)
    assert 1 - beta < alpha < 0.9
    with pytest.raises(ValueError):
        default_alpha(0.05)


def test_graded_nodes_integrate_power_singularity():
    # int_0^1 u^(-0.6) du = 2.5; clustering at the left endpoint
    nodes, weights = graded_nodes(0.0, 1.0, 4096, grade=4.0, cluster="left")
    val = float(np.sum(nodes ** -0.6 * weights))
    assert val == pytest.approx(2.5, rel=1e-5)


def test_frac_deriv_left_constant():
    c, s, alpha, xi = 2.5, 0.0, 0.6, 0.8
    val = frac_deriv_left(lambda r: c * np.ones_like(np.asarray(r)), s, alpha, xi)
    expected = c * (xi - s) ** -alpha / math.gamma(1 - alpha)
    assert val == pytest.approx(expected, rel=1e-12)


def test_frac_deriv_left_linear_half_order():
    # D^(1/2) of r -> r - s at xi - s = 1 equals 2/sqrt(pi)
    val = frac_deriv_left(lambda r: np.asarray(r) - 0.5, 0.5, 0.5, 1.5, level=13)
    assert val == pytest.approx(2.0 / math.sqrt(math.pi), rel=1e-6)


def test_frac_deriv_left_self_convergence_smooth():
    f = lambda r: np.sin(3.0 * np.asarray(r))
    coarse = frac_deriv_left(f, 0.0, 0.7, 0.9, level=12)
    fine = frac_deriv_left(f, 0.0, 0.7, 0.9, level=13)
    assert abs(fine - coarse) < 1e-6 * (1 + abs(fine))


def test_frac_deriv_left_grid_input():
    step = 1.0 / 256
    values = (np.arange(257) * step) ** 2
    by_grid = frac_deriv_left(values, 0.0, 0.5, 0.75, step=step)
    by_call = frac_deriv_left(lambda r: np.asarray(r) ** 2, 0.0, 0.5, 0.75)
    # grid input interpolates, so agreement is limited by the grid resolution
    assert by_grid == pytest.approx(by_call, rel=1e-3)


def test_frac_deriv_left_rejects_bad_arguments():
    with pytest.raises(ValueError):
        frac_deriv_left(lambda r: r, 0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        frac_deriv_left(lambda r: r, 0.0, 1.5, 0.5)


def test_frac_deriv_right_constant_is_zero():
    values = np.full(17, 3.3)
    assert frac_deriv_right(values, 1.0, 0.6, 0.4, step=1 / 16) == pytest.approx(0.0, abs=1e-14)


def test_frac_deriv_right_linear_matches_analytic():
    # slope-one data: D = -2 sqrt(t - xi) / sqrt(pi) at alpha = 1/2
    step = 1.0 / 32
    values = np.arange(33) * step
    for xi in (0.25, 0.6, 0.96875):
        expected = -2.0 * math.sqrt(1.0 - xi) / math.sqrt(math.pi)
        assert frac_deriv_right(values, 1.0, 0.5, xi, step=step) == pytest.approx(expected, rel=1e-12)


def test_frac_deriv_right_rejects_bad_arguments():
    values = np.arange(9.0)
    with pytest.raises(ValueError):
        frac_deriv_right(values, 1.0, 0.5, 1.5, step=1 / 8)
    with pytest.raises(ValueError):
        frac_deriv_right(values, 0.33, 0.5, 0.1, step=1 / 8)


def test_frac_deriv_right_brownian_scaling_exponent():
    # |D| scales like (t - xi)^(alpha - 1/2) in the mean for Brownian data
    from ouarea.fractional import _frac_deriv_right_batch
    alpha = 0.76
    level, count = 7, 400
    step = 2.0 ** -level
    paths = sample_fbm_ensemble(0.5, level, 1.0, seed=71, count=count)
    gaps = np.array([2.0 ** -k for k in (3, 4, 5, 6)])
    xi = 1.0 - gaps
    means = np.zeros(len(xi))
    for row in paths:
        means += np.abs(_frac_deriv_right_batch(row, step, 2 ** level, alpha, xi))
    means /= count
    slope = np.polyfit(np.log(gaps), np.log(means), 1)[0]
    assert slope == pytest.approx(alpha - 0.5, abs=0.1)


def test_correction_integral_degenerate_cases(brownian_path):
    path = brownian_path(seed=41, level=5)
    w = WindowPair(4, 20, path.step)
    assert correction_integral(path, 0.0, 0, 1, w) == 0.0
    assert correction_integral(path, 7.0, 0, 1, WindowPair(4, 4, path.step)) == 0.0


def test_correction_integral_linear_path(make_grid):
    times = np.linspace(0.0, 1.0, 33)
    path = make_grid([1.4 * times, -0.8 * times], step=1 / 32)
    lam = 6.0
    w = WindowPair(0, 32, path.step)
    closed = plain_area_component(path, 0, 1, w) - area_component(path, lam, 0, 1, w)
    frak = correction_integral(path, lam, 0, 1, w)
    assert frak == pytest.approx(closed, rel=1e-4)


@pytest.mark.parametrize("lam,j,k", [(2.0, 0, 1), (88.8, 0, 1), (640.0, 1, 0), (88.8, 0, 0)])
def test_correction_integral_matches_closed_form(brownian_path, lam, j, k):
    path = brownian_path(seed=43, level=6)
    w = WindowPair(0, 64, path.step)
    closed = plain_area_component(path, j, k, w) - area_component(path, lam, j, k, w)
    frak = correction_integral(path, lam, j, k, w)
    assert abs(frak - closed) <= 1e-3 * (1.0 + abs(closed))


def test_correction_integral_partial_window(brownian_path):
    path = brownian_path(seed=47, level=6)
    lam = 30.0
    w = WindowPair(8, 40, path.step)
    closed = plain_area_component(path, 0, 1, w) - area_component(path, lam, 0, 1, w)
    frak = correction_integral(path, lam, 0, 1, w)
    assert abs(frak - closed) <= 1e-3 * (1.0 + abs(closed))


def test_correction_report_flags_convergence(brownian_path):
    path = brownian_path(seed=53, level=5)
    w = WindowPair(0, 32, path.step)
    rep = correction_report(path, 10.0, 0, 1, w)
    assert rep.converged
    assert rep.rel_change < 1e-3
    assert rep.refined == pytest.approx(rep.value, abs=1e-3 * (1 + abs(rep.refined)))


def test_kernel_bound_check_linear_path(make_grid):
    times = np.linspace(0.0, 1.0, 65)
    c, lam, beta = 2.0, 5.0, 0.45
    path = make_grid([c * times], step=1 / 64)
    w = WindowPair(0, 64, path.step)
    rep = kernel_bound_check(path, lam, 0, w, beta)
    # inner function is c lam (xi-s)^2 phi(lam (xi-s)): near-quadratic decay at s
    assert rep.small_time_rate == pytest.approx(2.0, abs=0.2)
    assert rep.small_time_rate >= beta
    assert rep.bounded
    assert rep.empirical_constant > 0.0
    inner_end = lam * c * 1.0 * phi(lam * 1.0)
    from ouarea.noise import holder_seminorm
    hnorm = holder_seminorm(path.values[0], beta, path.step)
    assert rep.empirical_constant >= inner_end / hnorm - 1e-12


def test_kernel_bound_check_brownian(brownian_path):
    path = brownian_path(seed=59, level=7)
    w = WindowPair(0, 128, path.step)
    rep = kernel_bound_check(path, 20.0, 0, w, beta=0.45)
    assert rep.bounded
    assert rep.small_time_rate >= 0.45 - 0.05
    assert rep.empirical_constant > 0.0


def test_kernel_bound_check_constant_path(make_grid):
    path = make_grid([np.zeros(33)], step=1 / 32)
    rep = kernel_bound_check(path, 5.0, 0, WindowPair(0, 32, 1 / 32), beta=0.45)
    assert rep.empirical_constant == 0.0
    assert rep.bounded
    assert math.isinf(rep.small_time_rate)


def test_frac_quad_config_validation():
    with pytest.raises(ValueError):
        FracQuadConfig(alpha=1.2)
    with pytest.raises(ValueError):
        FracQuadConfig(alpha=0.7, level=1)
    cfg = FracQuadConfig(alpha=0.8)
    assert cfg.grading == pytest.approx(15.0)
    assert FracQuadConfig(alpha=0.5).grading == pytest.approx(6.0)
    assert cfg.nodes == 4096
