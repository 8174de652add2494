"""Central defaults and the tolerance table embedded in every run manifest."""

import math

HORIZON = 1.0
SPECTRUM_MODES = 16
NOISE_MODES = 16
SPECTRUM_COEFF = math.pi ** 2
SPECTRUM_DIM = 1.0
KAPPA = 0.3
NU = 0.5
COVARIANCE_DECAY = 2.0

# Hoelder exponents default to hurst - BETA_OFFSET (constants blow up as beta -> H).
BETA_OFFSET = 0.05

HOLDER_SUBSAMPLE_CAP = 4096

# Every declared assertion reads its tolerance from this table so that a manifest
# alone is enough to re-check a run.
TOLERANCES = {
    "chen_rel": 1e-10,
    "recursion_vs_naive_rel": 1e-12,
    "ibp_identity_abs": 1e-10,
    "fractional_oracle_rel": 1e-3,
    "fractional_oracle_rel_stiff": 1e-2,
    "fractional_stiff_threshold": 10.0,
    "plain_limit_rel": 1e-6,
    "stationarity_pathwise": 1e-12,
    "wz_slope_low": 0.35,
    "wz_slope_high": 0.65,
    "sup_rate_vs_hurst": 0.15,
    "moment_exponent_tol": 0.3,
    "mean_check_sigmas": 3.0,
    "ks_alpha": 0.01,
    "semigroup_property_rel": 1e-14,
    "holder_cap_stability": 0.05,
    "grr_band_stability": 0.05,
}
