"""Exponential-kernel Levy areas of trace-class (fractional) Brownian paths.

The package samples mode-wise driving paths, evaluates the kernel-twisted
second-order window integrals of their piecewise-linear interpolants in closed
form, cross-checks them through an independent fractional-calculus route, and
runs convergence, moment, stationarity and auxiliary-bound experiments with
reproducible manifests.
"""

from .area import (AreaTensor, WindowPair, area_component, cell_rectangle, cell_triangle,
                   chen_residual, conv_integral_left, conv_integral_right,
                   displacement_convolution, hs_norm, ito_stratonovich_correction,
                   kernel_displacement_integral, phi, plain_area_component, psi, scaled_tensor)
from .fractional import (CorrectionCheck, FracQuadConfig, KernelBoundReport, correction_integral,
                         correction_report, default_alpha, frac_deriv_left, frac_deriv_right,
                         graded_nodes, kernel_bound_check)
from .noise import (CovarianceSpec, PathGrid, coarsen, eval_linear, fgn_autocovariance,
                    holder_seminorm, increment, increments, sample_fbm_1d, sample_fbm_ensemble,
                    sample_qfbm, shift)
from .spectrum import (SpectrumConfig, SummabilityEntry, SummabilityReport, eigenvalue,
                       semigroup_factor, summability_report, vkappa_norm)
from .studies import (StudyReport, bdg_check, convergence_study, dyadic_windows, fit_loglog,
                      grr_functional, holder_field_norm, level1_rate_study, moment_suite,
                      multinomial_bound_check, stationarity_check)

__version__ = "0.1.0"
