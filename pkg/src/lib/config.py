"""Configuration constants, environment overrides and the key = value config loader."""

import os
from pathlib import Path
from typing import Any, Dict

from dotenv import load_dotenv

from .errors import ConfigError

load_dotenv()

# Reproducibility
DEFAULT_SEED = int(os.getenv("DRRM_SEED", "42"))

# Logging
LOG_LEVEL = os.getenv("DRRM_LOG_LEVEL", "INFO")
LOG_FORMAT = os.getenv("DRRM_LOG_FORMAT", "console")

# Mesh geometry
DEGENERATE_AREA_MM2 = 1e-12
DEGENERATE_AREA_2D = 1e-14
BOUNDARY_RADIUS_TOLERANCE = 1e-9

# Sparse solves
SOLVER_RTOL = 1e-10
SOLVER_MAX_ITERATIONS = 20000

# Beltrami machinery
DEFAULT_EPSILON = 0.05
CONFORMAL_SINGULARITY_EPS = 1e-14

# Registration
DEFAULT_SMOOTHNESS_WEIGHT = 0.1
DEFAULT_STEP_SIZE = 0.05
DEFAULT_BACKTRACKING = 0.5
DEFAULT_MAX_HALVINGS = 20
DEFAULT_MAX_OUTER_ITERATIONS = 200
DEFAULT_ENERGY_TOLERANCE = 1e-6
DEFAULT_R2_THRESHOLD = 0.1
DEFAULT_SMOOTH_CONVENTION = "displacement"
DEFAULT_DESCENT = "gauss_newton"

# Template interpolation: outside points within this distance of the
# boundary are projected onto it, the rest are flagged invalid.
PROJECTION_BAND = 0.02

# Flattening
DEFAULT_REFINE_ITERATIONS = 0
DEFAULT_FLATTEN_WEIGHTING = "cotangent"

# pRF forward model
DEFAULT_STIMULUS_EXTENT_DEG = 20.0
DEFAULT_STIMULUS_RESOLUTION = 101
DEFAULT_TR = 1.0
DEFAULT_HRF_DURATION = 32.0
DEFAULT_PEAK_DELAY = 6.0
DEFAULT_UNDERSHOOT_DELAY = 16.0
DEFAULT_PEAK_DISPERSION = 1.0
DEFAULT_UNDERSHOOT_DISPERSION = 1.0
DEFAULT_UNDERSHOOT_RATIO = 1.0 / 6.0
AIC_PARAMETER_COUNT = 5
MIN_SERIES_LENGTH = 8
PRF_BATCH_SIZE = 256

# Synthetic data
DEFAULT_MESH_RESOLUTION = 5000
DEFAULT_ECC_RANGE = (2.0, 90.0)
DEFAULT_WEDGE_DEG = 360.0
DEFAULT_PATCH_RADIUS_MM = 30.0
DEFAULT_SIGMA_INTERCEPT = 0.1
DEFAULT_SIGMA_SLOPE = 0.25
DEFAULT_R2_BASE = 0.8
DEFAULT_R2_DECAY = 0.01
DEFAULT_BOLD_SNR = 0.45
DEFAULT_N_SWEEPS = 4
DEFAULT_FRAMES_PER_SWEEP = 20
DEFORMATION_MAX_ORDER = 3
DEFORMATION_RESCALE_ATTEMPTS = 30
# Realised max |mu| must reach this fraction of the requested bound
DEFORMATION_TARGET_FRACTION = 0.9
DEFORMATION_PRESCRIBED_LIMIT = 0.99

# Evaluation
DEFAULT_DV_WEIGHTING = "none"

# Plots
SVG_HASH_SALT = "drrm"
PLOT_SIZE_INCHES = 4.0

# Case directory conventions
MANIFEST_FILE = "manifest.json"
MESH_FILE = "mesh.retmesh"
UV_FILE = "uv.retuv"
PRF_FILE = "prf.csv"
STIMULUS_FILE = "stimulus.retstim"
BOLD_FILE = "bold.csv"
BOLD_NOISELESS_FILE = "bold_noiseless.csv"
DEFORMATION_FILE = "deformation.retuv"

# Pipeline outputs
ENERGY_TRACE_FILE = "energy_trace.csv"
REGISTRATION_SUMMARY_FILE = "registration.json"
REGISTERED_PRF_FILE = "registered_prf.csv"
REGISTRATION_MAP_FILE = "f.retuv"
MU_DUMP_FILE = "mu.retmu"
REPORT_BASENAME = "report"
VERTEX_REPORT_FILE = "report_vertices.csv"

REGISTRATION_CONFIG_KEYS = frozenset({
    "smoothness_weight",
    "epsilon",
    "max_outer_iterations",
    "energy_tolerance",
    "step_size",
    "backtracking",
    "max_halvings",
    "r2_threshold",
    "smooth_convention",
    "descent",
    "seed",
})


def load_key_value_config(config_path: Path) -> Dict[str, Any]:
    """
    Parse a flat ``key = value`` configuration file.

    Blank lines and lines starting with ``#`` are ignored. Values are returned
    as strings; typed validation happens in the pydantic model that consumes them.

    Args:
        config_path: Path to the configuration file

    Returns:
        Dictionary of raw string values

    Raises:
        ConfigError: If a line is malformed, a key repeats or is unknown
    """
    values: Dict[str, Any] = {}
    text = Path(config_path).read_text(encoding="utf-8")
    for line_number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{config_path}:{line_number}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in REGISTRATION_CONFIG_KEYS:
            raise ConfigError(f"{config_path}:{line_number}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"{config_path}:{line_number}: duplicate key '{key}'")
        values[key] = value
    return values
