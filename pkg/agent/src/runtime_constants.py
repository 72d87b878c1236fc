"""
Runtime constants wrapper:

Imports values from the deployed `constants` module when available. If a
value is missing (older registry builds), provides a safe default so tools
can import a single source without scattering try/excepts.
"""

from typing import Any

try:
    import constants as _CONST  # type: ignore[import-not-found]
except Exception:
    _CONST = None  # type: ignore[assignment]


def _get(name: str, default: Any) -> Any:
    if _CONST is not None and hasattr(_CONST, name):
        return getattr(_CONST, name)
    return default


# Defaults used when not provided by deployed constants
DEFAULT_PERIOD_LENGTH_H: float = float(_get("DEFAULT_PERIOD_LENGTH_H", 1.0))
DEFAULT_SEED: int = int(_get("DEFAULT_SEED", 20_181_126))
DEFAULT_NUM_TRACES: int = int(_get("DEFAULT_NUM_TRACES", 100))
DEFAULT_TOL_MW: float = float(_get("DEFAULT_TOL_MW", 1.0))
DEFAULT_MAX_ITER: int = int(_get("DEFAULT_MAX_ITER", 10))
DEFAULT_EFC_TOL_MW: float = float(_get("DEFAULT_EFC_TOL_MW", 0.5))
DEFAULT_LUMPY_SHARE: float = float(_get("DEFAULT_LUMPY_SHARE", 0.1))
DEFAULT_FD_STEP_MW: float = float(_get("DEFAULT_FD_STEP_MW", 1.0))
GB_VOLL_PER_MWH: float = float(_get("GB_VOLL_PER_MWH", 17_000.0))
GB_CONE_PER_MW_YEAR: float = float(_get("GB_CONE_PER_MW_YEAR", 49_000.0))
OUTPUT_SIGNIFICANT_DIGITS: int = int(_get("OUTPUT_SIGNIFICANT_DIGITS", 6))
DEFAULT_OUT_DIR: str = str(_get("DEFAULT_OUT_DIR", "out"))
