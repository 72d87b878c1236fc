"""Scheduling of energy-limited stores over a day of shortfall.

`dispatch_min_eeu` is the production policy: at each period the remaining
depth is met by stores in descending order of residual lifetime (remaining
energy / power), which minimises unserved energy. `dispatch_min_lole` and
`dispatch_min_peak` are single-store illustrative policies.

Stores start every day full and never recharge within the day.
"""

import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from adequacy_types import FloatArray, Store
from errors import ConfigurationError

logger = logging.getLogger(__name__)

# Below this a depth or a store's remaining energy is treated as zero.
ZERO_TOL: float = 1e-9

POLICIES: Tuple[str, ...] = ("min_eeu", "min_lole", "min_peak")


@dataclass(frozen=True, eq=False)
class Episode:
    """A maximal run of consecutive shortfall periods within one day."""

    day: int
    periods: np.ndarray
    depths: FloatArray

    @property
    def energy(self) -> float:
        return float(self.depths.sum())


def episodes(day_depths: Sequence[float], day: int = 0) -> List[Episode]:
    """Split a day into its shortfall episodes, in time order."""
    depths = np.asarray(day_depths, dtype=float)
    positive = depths > 0
    out: List[Episode] = []
    edges = np.flatnonzero(np.diff(np.concatenate(([False], positive, [False])).astype(np.int8)))
    for start, stop in zip(edges[0::2], edges[1::2]):
        idx = np.arange(start, stop)
        out.append(Episode(day=day, periods=idx, depths=depths[idx]))
    return out


@dataclass(frozen=True, eq=False)
class DispatchResult:
    store_ids: Tuple[str, ...]
    depths: FloatArray
    discharge: FloatArray
    residual: FloatArray
    empty_set: FrozenSet[str]
    policy: str = "min_eeu"
    period_length: float = 1.0

    @property
    def loss_periods(self) -> int:
        return int((self.residual > 0).sum())

    @property
    def residual_energy(self) -> float:
        return float(self.residual.sum() * self.period_length)

    def discharge_of(self, store_id: str) -> FloatArray:
        return self.discharge[self.store_ids.index(store_id)]

    def rows(self) -> List[Dict[str, object]]:
        """Per-period rows for plotting: period, depth_before, depth_after, policy."""
        return [
            {
                "period": t,
                "depth_before": float(self.depths[t]),
                "depth_after": float(self.residual[t]),
                "policy": self.policy,
            }
            for t in range(self.depths.size)
        ]


# ──────────────────────────────────────────────────────────────
# Greedy residual-lifetime policy (batched)
# ──────────────────────────────────────────────────────────────

def greedy_discharge(
    power: FloatArray,
    energy: FloatArray,
    depths: np.ndarray,
    period_length: float = 1.0,
    keep_discharge: bool = False,
) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """
    Longest-residual-lifetime-first dispatch over a batch of days.

    `depths` is (days, periods_per_day); stores are given in tie-break order
    (position breaks equal lifetimes). Returns residual depths (days, P),
    remaining energy (days, S) and, if asked, discharge (days, S, P).
    """
    depths = np.atleast_2d(np.asarray(depths, dtype=float))
    power = np.asarray(power, dtype=float)
    energy = np.asarray(energy, dtype=float)
    days, periods = depths.shape
    count = power.size

    residual = np.maximum(depths, 0.0)
    remaining = np.broadcast_to(energy, (days, count)).copy()
    discharge = np.zeros((days, count, periods)) if keep_discharge else None
    if count == 0 or days == 0:
        return residual, remaining, discharge

    rank = np.broadcast_to(np.arange(count), (days, count))
    for t in range(periods):
        need = residual[:, t]
        active = need > 0
        if not active.any():
            continue
        lifetime = remaining / power
        order = np.lexsort((rank, -lifetime), axis=1)
        available = np.minimum(power, remaining / period_length)
        available_sorted = np.take_along_axis(available, order, axis=1)
        before = np.cumsum(available_sorted, axis=1) - available_sorted
        give_sorted = np.clip(need[:, None] - before, 0.0, available_sorted)
        give_sorted[~active] = 0.0
        give = np.empty_like(give_sorted)
        np.put_along_axis(give, order, give_sorted, axis=1)

        remaining = np.maximum(remaining - give * period_length, 0.0)
        left = need - give.sum(axis=1)
        residual[:, t] = np.where(left > ZERO_TOL, left, 0.0)
        if discharge is not None:
            discharge[:, :, t] = give
    return residual, remaining, discharge


def is_empty(remaining: np.ndarray, energy: np.ndarray) -> np.ndarray:
    return remaining <= ZERO_TOL * np.maximum(energy, 1.0)


def dispatch_min_eeu(stores: Sequence[Store], day_depths: Sequence[float], period_length: float = 1.0) -> DispatchResult:
    """EEU-optimal dispatch of one day; equal lifetimes go to the lower id first."""
    depths = np.asarray(day_depths, dtype=float)
    if depths.ndim != 1:
        raise ConfigurationError("day_depths must be a 1-D sequence")
    ordered = sorted(stores, key=lambda s: s.id)
    power = np.array([s.power for s in ordered], dtype=float)
    energy = np.array([s.energy for s in ordered], dtype=float)

    residual, remaining, discharge = greedy_discharge(
        power, energy, depths[None, :], period_length, keep_discharge=True
    )
    assert discharge is not None
    empty = is_empty(remaining[0], energy)
    return DispatchResult(
        store_ids=tuple(s.id for s in ordered),
        depths=depths,
        discharge=discharge[0],
        residual=residual[0],
        empty_set=frozenset(s.id for s, e in zip(ordered, empty) if e),
        policy="min_eeu",
        period_length=period_length,
    )


# ──────────────────────────────────────────────────────────────
# Single-store illustrative policies
# ──────────────────────────────────────────────────────────────

def _single_result(store: Store, depths: FloatArray, give: FloatArray, policy: str, period_length: float) -> DispatchResult:
    residual = depths.clip(min=0.0) - give
    residual[residual <= ZERO_TOL] = 0.0
    used = float(give.sum() * period_length)
    empty = store.energy - used <= ZERO_TOL * max(store.energy, 1.0)
    return DispatchResult(
        store_ids=(store.id,),
        depths=depths,
        discharge=give[None, :],
        residual=residual,
        empty_set=frozenset({store.id}) if empty else frozenset(),
        policy=policy,
        period_length=period_length,
    )


def dispatch_min_lole(store: Store, day_depths: Sequence[float], period_length: float = 1.0) -> DispatchResult:
    """
    Eliminate as many shortfall periods as the energy allows.

    Periods with depth <= power are cleared shallowest first. Energy left
    over after the last clearable period goes to the deepest remaining
    periods, which lowers EEU without changing the loss-period count.
    """
    depths = np.asarray(day_depths, dtype=float)
    give = np.zeros_like(depths)
    budget = float(store.energy)

    eliminable = [t for t in np.argsort(depths, kind="stable") if 0 < depths[t] <= store.power]
    for t in eliminable:
        cost = depths[t] * period_length
        if cost > budget + ZERO_TOL:
            break
        give[t] = depths[t]
        budget -= cost

    for t in np.argsort(-depths, kind="stable"):
        if budget <= ZERO_TOL or depths[t] <= 0:
            break
        if give[t] > 0:
            continue
        take = min(store.power, depths[t], budget / period_length)
        give[t] = take
        budget -= take * period_length

    return _single_result(store, depths, give, "min_lole", period_length)


def dispatch_min_peak(store: Store, day_depths: Sequence[float], period_length: float = 1.0) -> DispatchResult:
    """Water-fill from the top: residual = depth - min(power, max(0, depth - level))."""
    depths = np.asarray(day_depths, dtype=float)
    positive = depths.clip(min=0.0)

    def shaved(level: float) -> FloatArray:
        return np.minimum(store.power, np.maximum(positive - level, 0.0))

    full = float(shaved(0.0).sum() * period_length)
    if store.energy >= full or positive.max(initial=0.0) <= 0:
        level = 0.0
    else:
        level = brentq(
            lambda x: float(shaved(x).sum() * period_length) - store.energy,
            0.0,
            float(positive.max()),
            xtol=1e-12,
        )
    return _single_result(store, depths, shaved(level), "min_peak", period_length)


def compare_policies(store: Store, day_depths: Sequence[float], period_length: float = 1.0) -> Dict[str, DispatchResult]:
    """The three policies side by side for one store and one day."""
    return {
        "min_eeu": dispatch_min_eeu([store], day_depths, period_length),
        "min_lole": dispatch_min_lole(store, day_depths, period_length),
        "min_peak": dispatch_min_peak(store, day_depths, period_length),
    }


__all__ = [
    "ZERO_TOL",
    "POLICIES",
    "Episode",
    "episodes",
    "DispatchResult",
    "greedy_discharge",
    "is_empty",
    "dispatch_min_eeu",
    "dispatch_min_lole",
    "dispatch_min_peak",
    "compare_policies",
]
