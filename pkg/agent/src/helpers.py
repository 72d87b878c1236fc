import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, TypeVar, Union

import numpy as np
import pandas as pd

from errors import ConfigurationError
from runtime_constants import OUTPUT_SIGNIFICANT_DIGITS

T = TypeVar("T")
R = TypeVar("R")

# ──────────────────────────────────────────────────────────────
# GLOBAL STATE
# ──────────────────────────────────────────────────────────────
# Substream families; the counter layout is (seed, stream, trace, key).
BACKGROUND_STREAM: int = 0     # fleet draws that build the background
RESOURCE_STREAM: int = 1       # generators evaluated inside candidate sets
FIXTURE_STREAM: int = 2        # synthetic scenario construction

_executor: Optional[ThreadPoolExecutor] = None
_executor_threads: int = 0


def resolve_threads(threads: Optional[int] = None) -> int:
    """Worker count: explicit value, then ADEQUACY_THREADS, then all cores."""
    if threads is None:
        env_value = os.getenv("ADEQUACY_THREADS")
        if env_value:
            try:
                threads = int(env_value)
            except ValueError as e:
                raise ConfigurationError(f"ADEQUACY_THREADS must be an integer (got {env_value!r})") from e
    if threads is None:
        threads = os.cpu_count() or 1
    if threads < 1:
        raise ConfigurationError(f"threads must be >= 1 (got {threads})")
    return threads


def ensure_executor(threads: Optional[int] = None) -> ThreadPoolExecutor:
    """Return a long-lived worker pool, re-creating it only when the size changes."""

    global _executor, _executor_threads

    size = resolve_threads(threads)
    if _executor is None or _executor_threads != size:
        if _executor is not None:
            _executor.shutdown(wait=True)
        _executor = ThreadPoolExecutor(max_workers=size, thread_name_prefix="adequacy")
        _executor_threads = size
    return _executor


def parallel_map(fn: Callable[[T], R], items: Sequence[T], threads: Optional[int] = None) -> List[R]:
    """
    Map `fn` over `items` on the shared pool.

    Results come back in input order, so any reduction over them is
    independent of the thread count.
    """
    if len(items) <= 1 or resolve_threads(threads) == 1:
        return [fn(item) for item in items]
    return list(ensure_executor(threads).map(fn, items))


def chunk_indices(count: int, parts: int) -> List[np.ndarray]:
    """Split range(count) into at most `parts` contiguous, ordered chunks."""
    parts = max(1, min(parts, count))
    return [chunk for chunk in np.array_split(np.arange(count), parts) if chunk.size]


# ──────────────────────────────────────────────────────────────
# Random substreams
# ──────────────────────────────────────────────────────────────

def resource_key(resource_id: str) -> int:
    """Stable 63-bit key for a resource id (independent of PYTHONHASHSEED)."""
    digest = hashlib.blake2b(resource_id.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1


def substream(seed: int, stream: int, trace: int, key: int = 0) -> np.random.Generator:
    """
    Counter-based generator for one (stream, trace, key) cell.

    The same cell always yields the same draws whatever else is simulated,
    which is what makes risk differences between candidate sets
    common-random-number comparisons.
    """
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), int(trace), int(key)))
    return np.random.default_rng(sequence)


# ──────────────────────────────────────────────────────────────
# Output formatting
# ──────────────────────────────────────────────────────────────

def round_sig(value: float, digits: int = OUTPUT_SIGNIFICANT_DIGITS) -> float:
    """Round to `digits` significant digits; zero and non-finite pass through."""
    if value == 0 or not math.isfinite(value):
        return float(value)
    return float(f"{value:.{digits}g}")


def to_jsonable(obj: Any) -> Any:
    """Recursively convert numpy values and round floats for stable artifacts."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [to_jsonable(v) for v in items]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return round_sig(float(obj))
    return obj


def dumps_json(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), indent=2, sort_keys=True) + "\n"


def write_json(path: Union[str, Path], payload: Any) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(dumps_json(payload), encoding="utf-8")
    return target


def write_csv(path: Union[str, Path], rows: Iterable[Dict[str, Any]], columns: Optional[List[str]] = None) -> Path:
    """Write rows with fixed precision; column order is stable across runs."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([to_jsonable(r) for r in rows], columns=columns)
    frame.to_csv(target, index=False, float_format=f"%.{OUTPUT_SIGNIFICANT_DIGITS}g", lineterminator="\n")
    return target


def format_mw(value: float) -> str:
    return f"{value:,.1f} MW"


def format_number(value: float, digits: int = OUTPUT_SIGNIFICANT_DIGITS) -> str:
    return f"{value:.{digits}g}"
