"""
src/config/constants.py
Static fallback numerics. Used when config.yaml is missing, unreadable, or omits a key.
Every module reads tunables through src.config.loader.settings(), never from here directly.
"""

# ---------------------------------------------------------------------
# NUMERICS: quadrature, truncation, derivatives, searches
# ---------------------------------------------------------------------

DEFAULT_NUMERICS = {
    "quad_abs_tol": 1e-10,
    "quad_rel_tol": 1e-12,
    "quad_limit": 400,
    "quad_fail_tol": 1e-8,
    "gaussian_window_sigmas": 20.0,
    "max_index": 20,
    "hermite_max_order": 60,
    "fd_step": 1e-5,
    "golden_tol": 1e-10,
    "golden_max_iter": 200,
    "bisection_tol": 1e-10,
    "bisection_max_iter": 200,
    "support_tol": 1e-12,
    "probability_floor": 1e-12,
    "negativity_tol": 1e-10,
    "small_sep_eps": [1e-2, 5e-3, 2.5e-3],
    "validity_theta": 1.0,
    "validity_eps": 1.0,
}

# ---------------------------------------------------------------------
# SIMULATION: Monte Carlo defaults
# ---------------------------------------------------------------------

DEFAULT_SIMULATION = {
    "seed": 20210401,
    "n_photons": 200,
    "n_trials": 10000,
    "mle_grid_points": 2001,
    "mle_eps_max": 2.0,
    "chunk_size": 2000,
}

# ---------------------------------------------------------------------
# OUTPUT: where CLI tables land
# ---------------------------------------------------------------------

DEFAULT_OUTPUT = {
    "dir": "data/results",
    "format": "csv",
    "float_format": "%.17g",
}

DEFAULTS = {
    "numerics": DEFAULT_NUMERICS,
    "simulation": DEFAULT_SIMULATION,
    "output": DEFAULT_OUTPUT,
}

TOOL_NAME = "superres"
TOOL_VERSION = "1.0.0"
