"""Physical resources and the simulated background shortfall ensemble."""

import logging
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from adequacy_types import DemandTrace, FloatArray, GeneratorUnit, Overflow, ShortfallEnsemble, TimeGrid, parse_overflow
from errors import ConfigurationError
from helpers import (
    BACKGROUND_STREAM,
    RESOURCE_STREAM,
    chunk_indices,
    parallel_map,
    resolve_threads,
    resource_key,
    substream,
)

logger = logging.getLogger(__name__)


def transition_probabilities(
    unit: GeneratorUnit, period_length: float, overflow: Overflow = "cap"
) -> Tuple[float, float]:
    """
    Per-period leave probabilities (fail, repair) of the two-state chain.

    Starts from period_length/mttf and period_length/mttr. With "cap" a
    value above 1 is cut to 1. With "scale" both are divided by the larger
    one instead, which keeps the equilibrium availability at exactly
    mttf / (mttf + mttr).
    """
    p_fail = period_length / unit.mttf
    p_repair = period_length / unit.mttr
    if parse_overflow(overflow) == "scale":
        scale = max(1.0, p_fail, p_repair)
        return p_fail / scale, p_repair / scale
    return min(p_fail, 1.0), min(p_repair, 1.0)


def simulate_availability(
    unit: GeneratorUnit, grid: TimeGrid, rng: np.random.Generator, overflow: Overflow = "cap"
) -> FloatArray:
    """Available MW per period: 0 or unit.capacity, with geometric sojourns."""
    n = grid.n
    p_fail, p_repair = transition_probabilities(unit, grid.period_length, overflow)
    # start in the chain's own equilibrium
    up = bool(rng.random() < p_repair / (p_fail + p_repair))
    mean_cycle = 1.0 / p_fail + 1.0 / p_repair

    blocks: List[np.ndarray] = []
    filled = 0
    while filled < n:
        m = int((n - filled) / mean_cycle) + 2
        first = rng.geometric(p_fail if up else p_repair, size=m)
        second = rng.geometric(p_repair if up else p_fail, size=m)
        lengths = np.empty(2 * m, dtype=np.int64)
        lengths[0::2] = first
        lengths[1::2] = second
        # nothing past the horizon matters
        np.minimum(lengths, n, out=lengths)
        states = np.empty(2 * m, dtype=bool)
        states[0::2] = up
        states[1::2] = not up
        block = np.repeat(states, lengths)
        blocks.append(block)
        filled += block.size

    available = np.concatenate(blocks)[:n]
    return np.where(available, float(unit.capacity), 0.0)


@lru_cache(maxsize=8192)
def generator_availability(
    unit: GeneratorUnit, grid: TimeGrid, seed: int, trace: int, overflow: Overflow = "cap"
) -> FloatArray:
    """
    Availability of a candidate-set generator in one trace.

    Drawn from the resource stream keyed by (unit id, trace), so the same unit
    sees the same outages in every candidate set it is evaluated in.
    """
    profile = simulate_availability(unit, grid, substream(seed, RESOURCE_STREAM, trace, resource_key(unit.id)), overflow)
    profile.setflags(write=False)
    return profile


def _demand_matrix(demand_net_wind: Union[DemandTrace, Sequence[DemandTrace]], grid: TimeGrid) -> np.ndarray:
    traces = [demand_net_wind] if isinstance(demand_net_wind, DemandTrace) else list(demand_net_wind)
    if not traces:
        raise ConfigurationError("At least one demand-net-of-wind trace is required")
    for trace in traces:
        if len(trace) != grid.n:
            raise ConfigurationError(
                f"Demand trace `{trace.label}` has {len(trace)} periods, grid expects {grid.n}"
            )
    # MWh per period -> MW
    return np.vstack([t.values for t in traces]) / grid.period_length


def build_background(
    fleet: Sequence[GeneratorUnit],
    demand_net_wind: Union[DemandTrace, Sequence[DemandTrace]],
    num_traces: int,
    seed: int,
    grid: TimeGrid,
    threads: Optional[int] = None,
    overflow: Overflow = "cap",
) -> ShortfallEnsemble:
    """
    Simulate the residual demand process the auction is run against.

    Trace k is demand k mod m (weather years) minus an independent fleet
    draw; each (trace, unit) pair has its own substream, so the result is a
    pure function of (fleet, demand, seed) whatever the thread count.
    `overflow` picks the rule for leave probabilities above 1.
    """
    if num_traces < 1:
        raise ConfigurationError(f"num_traces must be >= 1 (got {num_traces})")
    parse_overflow(overflow)
    ids = [u.id for u in fleet]
    if len(ids) != len(set(ids)):
        raise ConfigurationError("Fleet contains duplicate generator ids")

    demand = _demand_matrix(demand_net_wind, grid)
    keys = [resource_key(u.id) for u in fleet]

    def simulate_chunk(trace_ids: np.ndarray) -> np.ndarray:
        rows = np.empty((trace_ids.size, grid.n))
        for row, k in enumerate(trace_ids):
            residual = demand[int(k) % demand.shape[0]].copy()
            for unit, key in zip(fleet, keys):
                residual -= simulate_availability(unit, grid, substream(seed, BACKGROUND_STREAM, int(k), key), overflow)
            rows[row] = residual
        return rows

    chunks = chunk_indices(num_traces, resolve_threads(threads))
    residual = np.vstack(parallel_map(simulate_chunk, chunks, threads))
    logger.info(
        "background built: %d traces x %d periods, %d units, seed=%d, shortfall periods=%d",
        num_traces, grid.n, len(fleet), seed, int((residual > 0).sum()),
    )
    return ShortfallEnsemble(residual=residual, grid=grid, seed=seed, overflow=overflow)


__all__ = [
    "transition_probabilities",
    "simulate_availability",
    "generator_availability",
    "build_background",
]
