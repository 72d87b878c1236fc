"""LOLE and EEU of a resource set against the background ensemble."""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np

from adequacy_types import FloatArray, Metric, ResourceSet, ShortfallEnsemble
from errors import ConfigurationError
from helpers import chunk_indices, parallel_map, resolve_threads
from storage_dispatch import greedy_discharge, is_empty
from system_model import generator_availability

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RiskReport:
    """
    Ensemble risk of one resource set.

    `loss_periods` and `unserved` hold one entry per trace; `lole` (hours)
    and `eeu` (MWh) are their means. `lole_without_empty` is the LOLE of the
    system in which stores that did not run empty on a day act as firm
    capacity at their power rating that day; its negative is dEEU/dy.
    """

    loss_periods: np.ndarray
    unserved: FloatArray
    period_length: float
    lole_without_empty: float

    @property
    def lole(self) -> float:
        return float(self.loss_periods.mean() * self.period_length)

    @property
    def eeu(self) -> float:
        return float(self.unserved.mean())

    @property
    def num_traces(self) -> int:
        return int(self.unserved.size)

    @property
    def per_trace(self) -> List[Tuple[int, float]]:
        return [(int(c), float(e)) for c, e in zip(self.loss_periods, self.unserved)]

    def metric(self, name: Metric) -> float:
        return self.lole if name == "lole" else self.eeu

    def to_dict(self) -> Dict[str, object]:
        return {
            "lole_h": self.lole,
            "eeu_mwh": self.eeu,
            "num_traces": self.num_traces,
            "lole_without_empty_stores_h": self.lole_without_empty,
        }

    def rows(self) -> List[Dict[str, object]]:
        return [
            {"trace": k, "loss_periods": c, "unserved_mwh": e}
            for k, (c, e) in enumerate(self.per_trace)
        ]


def _variable_row(output: FloatArray, trace: int, n: int, resource_id: str) -> FloatArray:
    row = output if output.ndim == 1 else output[trace % output.shape[0]]
    if row.size != n:
        raise ConfigurationError(f"Variable generator `{resource_id}` has {row.size} periods, grid expects {n}")
    return row


def net_residual(resources: ResourceSet, background: ShortfallEnsemble, trace: int) -> FloatArray:
    """Residual demand (MW) of one trace after firm, generators and variable output."""
    grid = background.grid
    net = background.residual[trace] - resources.firm
    for unit in resources.generators:
        net = net - generator_availability(unit, grid, background.seed, trace, background.overflow)
    for gen in resources.variable:
        net = net - _variable_row(gen.output, trace, grid.n, gen.id)
    return net


def _evaluate_chunk(
    resources: ResourceSet, background: ShortfallEnsemble, trace_ids: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    grid = background.grid
    L = grid.period_length
    count = trace_ids.size

    net = np.vstack([net_residual(resources, background, int(k)) for k in trace_ids])
    days = net.reshape(-1, grid.periods_per_day)
    residual = np.where(days > 0, days, 0.0)
    without_empty = residual.copy()

    stores = sorted(resources.stores, key=lambda s: s.id)
    if stores:
        hit = (days > 0).any(axis=1)
        if hit.any():
            power = np.array([s.power for s in stores])
            energy = np.array([s.energy for s in stores])
            depths = days[hit]
            residual[hit], remaining, _ = greedy_discharge(power, energy, depths, L)
            still_holding = ~is_empty(remaining, energy)
            without_empty[hit] = depths - (still_holding * power).sum(axis=1)[:, None]

    loss = (residual > 0).reshape(count, -1).sum(axis=1)
    unserved = residual.reshape(count, -1).sum(axis=1) * L
    loss_without_empty = (without_empty > 0).reshape(count, -1).sum(axis=1)
    return loss, unserved, loss_without_empty


def _evaluate(resources: ResourceSet, background: ShortfallEnsemble, threads: int) -> RiskReport:
    chunks = chunk_indices(background.num_traces, threads)
    parts = parallel_map(lambda ids: _evaluate_chunk(resources, background, ids), chunks, threads)
    loss = np.concatenate([p[0] for p in parts])
    unserved = np.concatenate([p[1] for p in parts])
    without_empty = np.concatenate([p[2] for p in parts])
    L = background.grid.period_length
    return RiskReport(
        loss_periods=loss,
        unserved=unserved,
        period_length=L,
        lole_without_empty=float(without_empty.mean() * L),
    )


@lru_cache(maxsize=4096)
def _evaluate_cached(resources: ResourceSet, background: ShortfallEnsemble, threads: int) -> RiskReport:
    return _evaluate(resources, background, threads)


def evaluate(
    resources: ResourceSet,
    background: ShortfallEnsemble,
    threads: Optional[int] = None,
    memo: bool = True,
) -> RiskReport:
    """
    Evaluate LOLE and EEU with stores dispatched by the greedy policy.

    A period is lost iff its residual depth is strictly positive. Results
    are memoised per (resource set, background); the thread count only
    changes how traces are split, never the numbers. Pass `memo=False` for
    one-off backgrounds (the load-shifted ones of an ELCC search) so they
    are not kept alive by the memo table.
    """
    if not memo:
        return _evaluate(resources, background, resolve_threads(threads))
    return _evaluate_cached(resources, background, resolve_threads(threads))


def clear_cache() -> None:
    _evaluate_cached.cache_clear()
    generator_availability.cache_clear()


def direct_eeu(background: ShortfallEnsemble, firm: float = 0.0) -> float:
    """Storage-free EEU straight from the residual process, for cross-checks."""
    shortfall = np.maximum(background.residual - firm, 0.0)
    return float(shortfall.sum(axis=1).mean() * background.grid.period_length)


__all__ = ["RiskReport", "net_residual", "evaluate", "clear_cache", "direct_eeu"]
