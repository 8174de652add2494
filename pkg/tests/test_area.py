import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ouarea.area import (WindowPair, area_component, cell_rectangle, cell_triangle, chen_residual,
                         conv_integral_left, conv_integral_right, displacement_convolution,
                         hs_norm, ito_stratonovich_correction, kernel_displacement_integral, phi,
                         plain_area_component, psi, scaled_tensor)
from ouarea.noise import CovarianceSpec, sample_qfbm, shift
from ouarea.spectrum import SpectrumConfig

from .oracles import (naive_area, phi_ref, psi_ref, quad_conv_left, quad_displacement,
                      quad_rectangle, quad_triangle)


def _bpath(seed, level, modes=2, hurst=0.5):
    return sample_qfbm(CovarianceSpec.power_law(modes), hurst, level, 1.0, seed=seed)


# ------------------------------------------------------------- cell kernels

def test_phi_special_values():
    assert phi(0.0) == 0.5
    assert phi(1.0) == pytest.approx(math.exp(-1.0), rel=1e-15)
    assert phi(50.0) == pytest.approx(49.0 / 2500.0, abs=1e-12)
    with pytest.raises(ValueError):
        phi(-0.1)


def test_phi_matches_high_precision_reference():
    for x in (1e-9, 5e-5, 1e-4, 2e-4, 0.3, 4.2, 80.0):
        assert phi(x) == pytest.approx(phi_ref(x), rel=1e-14)


def test_phi_monotone_decreasing():
    xs = np.linspace(0.0, 20.0, 200)
    vals = phi(xs)
    assert np.all(np.diff(vals) < 0.0)
    assert vals[0] == 0.5


def test_psi_special_values():
    assert psi(0.0) == 1.0
    assert psi(1.0) == pytest.approx((1.0 - math.exp(-1.0)) ** 2, rel=1e-15)
    with pytest.raises(ValueError):
        psi(-1e-9)


def test_psi_matches_high_precision_reference():
    for x in (1e-9, 1e-4, 0.7, 3.0, 40.0):
        assert psi(x) == pytest.approx(psi_ref(x), rel=1e-14)


def test_psi_bounded_and_decreasing():
    xs = np.linspace(0.0, 30.0, 300)
    vals = psi(xs)
    assert np.all(vals <= 1.0) and np.all(np.diff(vals) < 0.0)


def test_cell_triangle_values():
    assert cell_triangle(2.0, 3.0, 0.0) == pytest.approx(3.0, rel=1e-15)  # dj dk / 2
    assert cell_triangle(1.0, 1.0, 1.0) == pytest.approx(math.exp(-1.0), rel=1e-15)
    assert cell_triangle(0.0, 5.0, 2.3) == 0.0


@pytest.mark.parametrize("x", [0.05, 1.0, 3.7])
def test_cell_triangle_against_quadrature(x):
    assert cell_triangle(1.0, 1.0, x) == pytest.approx(quad_triangle(x), abs=1e-10)


def test_cell_rectangle_values():
    assert cell_rectangle(2.0, 3.0, 1, 0.0) == pytest.approx(6.0, rel=1e-15)
    with pytest.raises(ValueError):
        cell_rectangle(1.0, 1.0, 0, 1.0)


@pytest.mark.parametrize("x,gap", [(1.0, 1), (0.3, 2), (2.5, 4)])
def test_cell_rectangle_against_quadrature(x, gap):
    # r in cell [0, 1], xi in cell [gap, gap + 1]: cell-index separation = gap
    assert cell_rectangle(1.0, 1.0, gap, x) == pytest.approx(quad_rectangle(x, gap), abs=1e-10)


def test_cell_rectangle_gap_decay():
    v1 = cell_rectangle(1.3, -0.7, 2, 0.8)
    v2 = cell_rectangle(1.3, -0.7, 4, 0.8)
    assert v2 == pytest.approx(v1 * math.exp(-0.8 * 2), rel=1e-13)


# --------------------------------------------------------- window components

def test_area_component_empty_and_single_cell(brownian_path):
    path = brownian_path(seed=1, level=4)
    w_empty = WindowPair(5, 5, path.step)
    assert area_component(path, 3.0, 0, 1, w_empty) == 0.0
    w_one = WindowPair(5, 6, path.step)
    dj = path.values[0, 6] - path.values[0, 5]
    dk = path.values[1, 6] - path.values[1, 5]
    expected = cell_triangle(dj, dk, 3.0 * path.step)
    assert area_component(path, 3.0, 0, 1, w_one) == pytest.approx(expected, rel=1e-14)


@settings(max_examples=25)
@given(seed=st.integers(0, 10_000), level=st.integers(2, 6), lam=st.floats(0.0, 200.0),
       j=st.integers(0, 1), k=st.integers(0, 1), data=st.data())
def test_area_component_matches_naive_double_sum(seed, level, lam, j, k, data):
    path = _bpath(seed, level)
    n = path.step_count
    m0 = data.draw(st.integers(0, n - 1))
    m1 = data.draw(st.integers(m0 + 1, n))
    fast = area_component(path, lam, j, k, WindowPair(m0, m1, path.step))
    slow = naive_area(path, lam, j, k, m0, m1)
    assert abs(fast - slow) <= 1e-12 * (1.0 + abs(slow))


def test_area_component_rejects_foreign_window(brownian_path):
    path = brownian_path(seed=1, level=4)
    with pytest.raises(ValueError):
        area_component(path, 1.0, 0, 1, WindowPair(0, 2, path.step * 1.5))
    with pytest.raises(ValueError):
        area_component(path, 1.0, 0, 1, WindowPair(0, 17, path.step))


def test_window_from_times_alignment(brownian_path):
    path = brownian_path(seed=1, level=3)
    w = WindowPair.from_times(0.25, 0.75, path.step)
    assert (w.start, w.stop) == (2, 6)
    with pytest.raises(ValueError):
        WindowPair.from_times(0.3, 0.75, path.step)


def test_plain_area_diagonal_is_half_square(brownian_path):
    path = brownian_path(seed=7, level=6)
    w = WindowPair(3, 49, path.step)
    gain = path.values[0, 49] - path.values[0, 3]
    assert plain_area_component(path, 0, 0, w) == pytest.approx(0.5 * gain ** 2, rel=1e-12)


def test_plain_area_single_cell(make_grid):
    path = make_grid([[0.0, 2.0], [0.0, 3.0]], step=1.0)
    assert plain_area_component(path, 0, 1, WindowPair(0, 1, 1.0)) == pytest.approx(3.0)


def test_area_component_tends_to_plain_area(brownian_path):
    path = brownian_path(seed=9, level=6)
    w = WindowPair(0, 64, path.step)
    twisted = area_component(path, 1e-8, 0, 1, w)
    plain = plain_area_component(path, 0, 1, w)
    assert twisted == pytest.approx(plain, rel=1e-6)


def test_classical_chen_for_plain_areas(brownian_path):
    path = brownian_path(seed=11, level=5)
    w = path.values
    m0, mt, m1 = 2, 13, 30
    lhs = (plain_area_component(path, 0, 1, WindowPair(m0, m1, path.step))
           - plain_area_component(path, 0, 1, WindowPair(mt, m1, path.step))
           - plain_area_component(path, 0, 1, WindowPair(m0, mt, path.step)))
    rhs = (w[0, mt] - w[0, m0]) * (w[1, m1] - w[1, mt])
    assert lhs == pytest.approx(rhs, abs=1e-12)


# ---------------------------------------------------- convolution integrals

def test_conv_integrals_at_zero_eigenvalue(brownian_path):
    path = brownian_path(seed=13, level=5)
    w = WindowPair(4, 20, path.step)
    gain_j = path.values[0, 20] - path.values[0, 4]
    gain_k = path.values[1, 20] - path.values[1, 4]
    assert conv_integral_left(path, 0.0, 0, w) == pytest.approx(gain_j, rel=1e-12)
    assert conv_integral_right(path, 0.0, 1, w) == pytest.approx(gain_k, rel=1e-12)


def test_conv_integrals_single_cell(make_grid):
    path = make_grid([[0.0, 1.0]], step=1.0)
    w = WindowPair(0, 1, 1.0)
    assert conv_integral_left(path, 1.0, 0, w) == pytest.approx(1.0 - math.exp(-1.0), rel=1e-14)
    assert conv_integral_right(path, 1.0, 0, w) == pytest.approx(1.0 - math.exp(-1.0), rel=1e-14)
    assert conv_integral_left(path, 1.0, 0, WindowPair(1, 1, 1.0)) == 0.0


def test_conv_integral_against_quadrature(make_grid):
    x = 2.2
    path = make_grid([[0.0, 1.0]], step=1.0)
    w = WindowPair(0, 1, 1.0)
    assert conv_integral_left(path, x, 0, w) == pytest.approx(quad_conv_left(x), abs=1e-12)


def test_conv_left_multicell_against_quadrature(brownian_path):
    from scipy.integrate import quad
    path = brownian_path(seed=15, level=4)
    lam = 3.0
    w = WindowPair(2, 10, path.step)
    d = np.diff(path.values[0])
    total = 0.0
    for m in range(2, 10):  # slope dj/step on each cell
        total += quad(lambda r, m=m: math.exp(-lam * (w.t - r)) * d[m] / path.step,
                      m * path.step, (m + 1) * path.step, epsabs=1e-13)[0]
    assert conv_integral_left(path, lam, 0, w) == pytest.approx(total, abs=1e-11)


# ------------------------------------------------------ displacement pieces

def test_displacement_convolution_linear_path(make_grid):
    # w(r) = c r: g(xi) = c (xi - s)^2 phi(lam (xi - s)) for s = 0
    c, lam = 1.7, 4.0
    times = np.linspace(0.0, 1.0, 33)
    path = make_grid([c * times], step=1 / 32)
    for xi in (0.125, 0.4, 1.0):
        expected = c * xi ** 2 * phi(lam * xi)
        assert displacement_convolution(path, lam, 0, 0.0, xi) == pytest.approx(expected, rel=1e-12)


def test_displacement_convolution_against_quadrature(brownian_path):
    path = brownian_path(seed=17, level=4)
    lam, s = 5.0, 0.25
    for xi in (0.3, 0.55, 0.8125, 1.0):
        expected = quad_displacement(path, lam, 0, s, xi)
        assert displacement_convolution(path, lam, 0, s, xi) == pytest.approx(expected, abs=1e-11)


def test_integration_by_parts_identity(brownian_path):
    for seed in range(5):
        path = brownian_path(seed=seed, level=6)
        for lam in (0.5, 9.87, 88.8):
            w = WindowPair(4, 57, path.step)
            plain = plain_area_component(path, 0, 1, w)
            twisted = area_component(path, lam, 0, 1, w)
            weighted = kernel_displacement_integral(path, lam, 0, 1, w)
            assert abs(twisted - (plain - lam * weighted)) < 1e-10


# ------------------------------------------------------------- chen split

def test_chen_residual_degenerate_splits(brownian_path):
    path = brownian_path(seed=19, level=5)
    assert chen_residual(path, 7.0, 0, 1, 0.25, 0.25, 0.75) == pytest.approx(0.0, abs=1e-14)
    assert chen_residual(path, 7.0, 0, 1, 0.25, 0.75, 0.75) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(ValueError):
        chen_residual(path, 7.0, 0, 1, 0.5, 0.25, 0.75)


@settings(max_examples=25)
@given(seed=st.integers(0, 10_000), lam=st.floats(0.0, 300.0), data=st.data())
def test_chen_residual_vanishes(seed, lam, data):
    path = _bpath(seed, 5)
    n = path.step_count
    m0 = data.draw(st.integers(0, n - 2))
    m1 = data.draw(st.integers(m0 + 2, n))
    mt = data.draw(st.integers(m0, m1))
    res = chen_residual(path, lam, 0, 1, m0 * path.step, mt * path.step, m1 * path.step)
    whole = area_component(path, lam, 0, 1, WindowPair(m0, m1, path.step))
    assert abs(res) <= 1e-10 * (1.0 + abs(whole))


def test_shift_covariance_of_areas(brownian_path):
    path = brownian_path(seed=23, level=6)
    m_tau = 13
    moved = shift(path, m_tau * path.step)
    for lam in (0.0, 5.0, 100.0):
        w = WindowPair(3, 29, path.step)
        a = area_component(moved, lam, 0, 1, w)
        b = area_component(path, lam, 0, 1, w.shifted(m_tau))
        assert a == pytest.approx(b, rel=1e-12, abs=1e-15)


# ------------------------------------------------------------ tensor level

def test_scaled_tensor_unit_weights_identity(brownian_path):
    path = brownian_path(seed=25, level=4, modes=2)
    spec = SpectrumConfig([1.0], kappa=0.77)
    cov = CovarianceSpec([1.0, 1.0])
    tensor = scaled_tensor(path, spec, cov, WindowPair(0, 16, path.step))
    assert np.array_equal(tensor.scaled(), tensor.components)


def test_scaled_tensor_kappa_zero_scaling(brownian_path):
    path = brownian_path(seed=25, level=4, modes=2)
    spec = SpectrumConfig([4.0, 9.0], kappa=0.0)
    cov = CovarianceSpec([0.5, 0.125])
    tensor = scaled_tensor(path, spec, cov, WindowPair(0, 16, path.step))
    q = np.sqrt(cov.weights)
    assert np.allclose(tensor.scaled(), tensor.components * q[None, :, None] * q[None, None, :])


def test_scaled_tensor_components_match_scalar_op(brownian_path):
    path = brownian_path(seed=27, level=5, modes=2)
    spec = SpectrumConfig([2.0, 11.0], kappa=0.3)
    cov = CovarianceSpec.power_law(2)
    w = WindowPair(4, 21, path.step)
    tensor = scaled_tensor(path, spec, cov, w)
    for i, lam in enumerate(spec.eigenvalues):
        for j in range(2):
            for k in range(2):
                assert tensor.components[i, j, k] == pytest.approx(
                    area_component(path, lam, j, k, w), rel=1e-13, abs=1e-15)


def test_single_mode_tensor_is_weighted_area(brownian_path):
    path = brownian_path(seed=29, level=4, modes=1)
    spec = SpectrumConfig([3.0], kappa=0.5)
    cov = CovarianceSpec([0.25])
    w = WindowPair(0, 16, path.step)
    tensor = scaled_tensor(path, spec, cov, w)
    expected = area_component(path, 3.0, 0, 0, w) * 0.25 * 3.0 ** -0.5
    assert tensor.scaled()[0, 0, 0] == pytest.approx(expected, rel=1e-13)


def test_empty_window_tensor_is_zero(brownian_path):
    path = brownian_path(seed=29, level=4, modes=2)
    spec = SpectrumConfig.power_law(3)
    cov = CovarianceSpec.power_law(2)
    tensor = scaled_tensor(path, spec, cov, WindowPair(7, 7, path.step))
    assert np.all(tensor.components == 0.0)
    assert hs_norm(tensor) == 0.0


def test_hs_norm_single_component_and_homogeneity():
    w = WindowPair(0, 1, 1.0)
    comp = np.zeros((1, 1, 1))
    comp[0, 0, 0] = -0.75
    from ouarea.area import AreaTensor
    tensor = AreaTensor(window=w, components=comp, eigenvalues=np.array([1.0]),
                        weights=np.array([1.0]), kappa=0.4)
    assert hs_norm(tensor) == pytest.approx(0.75)
    scaled3 = AreaTensor(window=w, components=3.0 * comp, eigenvalues=np.array([1.0]),
                         weights=np.array([1.0]), kappa=0.4)
    assert hs_norm(scaled3) == pytest.approx(3 * 0.75)


def test_hs_norm_matches_weighted_sum(brownian_path):
    path = brownian_path(seed=31, level=5, modes=3)
    spec = SpectrumConfig.power_law(2, kappa=0.3)
    cov = CovarianceSpec.power_law(3)
    w = WindowPair(0, 32, path.step)
    tensor = scaled_tensor(path, spec, cov, w)
    q = cov.weights
    lam = spec.eigenvalues
    direct = 0.0
    for i in range(2):
        for j in range(3):
            for k in range(3):
                direct += q[j] * q[k] * lam[i] ** -0.6 * tensor.components[i, j, k] ** 2
    assert hs_norm(tensor) == pytest.approx(math.sqrt(direct), rel=1e-13)


def test_ito_stratonovich_correction_values():
    w = WindowPair(0, 4, 0.25)
    assert ito_stratonovich_correction(1, 2, w) == 0.0
    assert ito_stratonovich_correction(2, 2, w) == pytest.approx(0.5)
    empty = WindowPair(3, 3, 0.25)
    assert ito_stratonovich_correction(2, 2, empty) == 0.0


def test_diagonal_mean_matches_kernel_mean():
    # E a_(i,j,j) over a window = width * phi(lam step) for Brownian modes
    n, level, lam = 5000, 6, 9.87
    cov = CovarianceSpec([1.0])
    rng_areas = []
    from ouarea.studies import _component_samples
    rng = np.random.default_rng(101)
    step = 1.0 / 64
    incr = rng.standard_normal((n, 1, 64)) * math.sqrt(step)
    areas = _component_samples(incr, lam, 0, 0, 0, 32, step)
    target = 0.5 * phi(lam * step)
    se = areas.std(ddof=1) / math.sqrt(n)
    assert abs(areas.mean() - target) < 4 * se
