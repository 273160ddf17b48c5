"""
Configuration file for the subcash reserve engine.
Centralizes paths, tolerances, grid budgets, solver settings, and exit codes.
"""
import logging
import os
from pathlib import Path

# Project root directory
PROJECT_ROOT = Path(__file__).parent.absolute()

# Output directories (created by the writers that use them)
RESULTS_DIR = PROJECT_ROOT / "results"
ACCEPTANCE_DIR = RESULTS_DIR / "acceptance"
LOGS_DIR = PROJECT_ROOT / "logs"

# Numerical tolerances
TOLERANCE_CONFIG = {
    'closed_form': 1e-9,
    'probability': 1e-12,
    'mass': 1e-12,
    'document_probability': 1e-9,
    'dynamic_monotonicity': 1e-10,
    'dynamic_exact': 1e-12,
    'dual_control': 1e-10,
}

# "Bounded away from zero" threshold for discount factors
DISCOUNT_EPSILON = 1e-6

# Default lambdas for calibration checks (both signs and zero)
CALIBRATION_LAMBDAS = (-2.0, -1.0, 0.0, 1.0, 2.0)

# Grid enumeration
GRID_CONFIG = {
    'default_resolution': 21,
    'max_points': 10**7,
    'warn_evaluations': 10**6,
    'truncation_multiplier': 4.0,
    'min_bound': 1.0,
}

# Inf-convolution descent
SOLVER_CONFIG = {
    'tolerance': 1e-10,
    'max_sweeps': 400,
    'line_tolerance': 1e-11,
    'box_doublings': 3,
    'initial_radius': 8.0,
    'uniqueness_step': 1e-3,
    'certify_resolution': 41,
    'certify_max_atoms': 3,
}

# Implicit BSDE scheme
BSDE_CONFIG = {
    'fixed_point_tolerance': 1e-13,
    'max_iterations': 200,
}

# Process exit codes
EXIT_CODES = {
    'ok': 0,
    'check_failed': 1,
    'parse': 2,
    'validation': 3,
    'numeric': 4,
    'capacity': 5,
    'io': 6,
}


def _read_max_workers() -> int:
    raw = os.environ.get('SUBCASH_THREADS')
    default = os.cpu_count() or 1
    if raw is None or raw == '':
        return default
    try:
        value = int(raw)
    except ValueError:
        logging.getLogger(__name__).warning("ignoring non-integer SUBCASH_THREADS=%r", raw)
        return 1
    return max(1, value)


# Worker cap for restarts and grid sweeps
MAX_WORKERS = _read_max_workers()

# Logging configuration
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_DATE_FORMAT = '%Y-%m-%d %H:%M:%S'
LOG_LEVEL = 'WARNING'
