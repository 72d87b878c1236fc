"""Runtime constants used by the engine and its tools.

`runtime_constants.py` wraps this module so that an older deployed copy
without some of these names still resolves a value.
"""

# Period length in hours; MW and MWh-per-period coincide at 1 h.
DEFAULT_PERIOD_LENGTH_H: float = 1.0

# Root seed and ensemble size used when a scenario does not set them.
DEFAULT_SEED: int = 20_181_126
DEFAULT_NUM_TRACES: int = 100

# Bisection tolerance for EFC / ELCC / calibration searches (MW).
DEFAULT_TOL_MW: float = 1.0

# Fixed-point auction iteration cap and EFC-change stopping tolerance (MW).
DEFAULT_MAX_ITER: int = 10
DEFAULT_EFC_TOL_MW: float = 0.5

# Share of accepted EFC above which a resource is "lumpy".
DEFAULT_LUMPY_SHARE: float = 0.1

# Step for central finite differences (MW).
DEFAULT_FD_STEP_MW: float = 1.0

# GB magnitudes: 17 GBP/kWh and 49 GBP/kW-year expressed per MWh and per MW.
GB_VOLL_PER_MWH: float = 17_000.0
GB_CONE_PER_MW_YEAR: float = 49_000.0

# Output precision (significant digits) for golden-stable artifacts.
OUTPUT_SIGNIFICANT_DIGITS: int = 6

# Artifact directory when neither the CLI nor the agent is told otherwise.
DEFAULT_OUT_DIR: str = "out"
