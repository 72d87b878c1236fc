"""Checks of the continuity and local-additivity assumptions behind the auction."""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from adequacy_types import ResourceSet, ShortfallEnsemble, Store
from auction import Bid, EfcMap, merit_order, portfolio
from efc import calibrate_firm, rho
from errors import ConfigurationError
from risk_metrics import evaluate
from runtime_constants import DEFAULT_TOL_MW

logger = logging.getLogger(__name__)

TRIAL_ENERGY_MWH: float = 100.0
TRIAL_POWERS_MW: Tuple[float, ...] = (10.0, 20.0, 30.0, 40.0, 50.0)


@dataclass(frozen=True)
class ContinuityScan:
    points: Tuple[Tuple[float, float], ...]
    target_eeu: float
    ids: Tuple[str, ...] = ()
    window: float = 0.5
    tol: float = 0.0

    @property
    def gaps(self) -> List[float]:
        return [b[0] - a[0] for a, b in zip(self.points, self.points[1:])]

    @property
    def max_gap(self) -> float:
        return max(self.gaps, default=0.0)

    @property
    def max_gap_near_target(self) -> float:
        """Largest EFC step whose EEU span touches target x (1 +/- window)."""
        lo, hi = self.target_eeu * (1 - self.window), self.target_eeu * (1 + self.window)
        near = [
            b[0] - a[0]
            for a, b in zip(self.points, self.points[1:])
            if min(a[1], b[1]) <= hi and max(a[1], b[1]) >= lo
        ]
        return max(near, default=0.0)

    @property
    def efc_drops(self) -> Tuple[int, ...]:
        """Steps whose cumulative EFC falls below the previous one by more than `tol`."""
        return tuple(
            i for i, (a, b) in enumerate(zip(self.points, self.points[1:]), start=1) if b[0] < a[0] - self.tol
        )

    @property
    def monotone(self) -> bool:
        """EEU never rises and cumulative EFC never falls along the scan."""
        eeu_ok = all(b[1] <= a[1] for a, b in zip(self.points, self.points[1:]))
        return eeu_ok and not self.efc_drops

    def rows(self) -> List[Dict[str, object]]:
        labels = ("",) + self.ids
        return [
            {"step": i, "added": labels[i], "cumulative_efc_mw": efc, "residual_eeu_mwh": eeu}
            for i, (efc, eeu) in enumerate(self.points)
        ]

    def to_dict(self) -> Dict[str, object]:
        return {
            "target_eeu_mwh": self.target_eeu,
            "num_points": len(self.points),
            "max_gap_mw": self.max_gap,
            "max_gap_near_target_mw": self.max_gap_near_target,
            "monotone": self.monotone,
            "efc_drop_steps": list(self.efc_drops),
        }


def continuity_scan(
    bids: Sequence[Bid],
    background: ShortfallEnsemble,
    efc: EfcMap,
    target_eeu: float,
    step: int = 1,
    tol: float = DEFAULT_TOL_MW,
    threads: Optional[int] = None,
) -> ContinuityScan:
    """
    Add resources in merit order and track (whole-set EFC, residual EEU).

    The cumulative EFC at each step is the firm capacity giving the same EEU
    as everything added so far, which does not depend on the order of
    addition. `step` > 1 records every step-th prefix plus the full set.
    Values are recorded as calibrated; a fall beyond `tol` shows up in
    `efc_drops`.
    """
    if not bids:
        raise ConfigurationError("Continuity scan needs at least one bid")
    if step < 1:
        raise ConfigurationError(f"step must be >= 1 (got {step})")
    order = merit_order(bids, efc)
    sizes = list(range(0, len(order), step)) + [len(order)]

    points: List[Tuple[float, float]] = []
    for m in sizes:
        prefix = portfolio(order[:m])
        eeu = rho(prefix, background, "eeu", threads)
        if prefix.is_storage_free:
            firm = prefix.firm
        else:
            firm = calibrate_firm(background, "eeu", eeu, tol, threads=threads)
        points.append((firm, eeu))

    ids = tuple(order[m - 1].id for m in sizes[1:])
    scan = ContinuityScan(points=tuple(points), target_eeu=target_eeu, ids=ids, tol=tol)
    if scan.efc_drops:
        logger.warning("continuity scan: cumulative EFC falls at steps %s", list(scan.efc_drops))
    logger.info(
        "continuity scan: %d points, max gap %.1f MW (%.1f MW near target)",
        len(points), scan.max_gap, scan.max_gap_near_target,
    )
    return scan


# ──────────────────────────────────────────────────────────────
# Local additivity
# ──────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SmoothnessGrid:
    powers: Tuple[float, ...]
    energy: float
    deviation: np.ndarray
    noise_floor: float = 0.0

    @property
    def max_deviation(self) -> float:
        finite = self.deviation[np.isfinite(self.deviation)]
        return float(finite.max()) if finite.size else 0.0

    def cell(self, p_i: float, p_j: float) -> float:
        return float(self.deviation[self.powers.index(p_i), self.powers.index(p_j)])

    def rows(self) -> List[Dict[str, object]]:
        return [
            {"power_i_mw": p_i, "power_j_mw": p_j, "deviation_pct": float(self.deviation[a, b])}
            for (a, p_i), (b, p_j) in itertools.product(enumerate(self.powers), repeat=2)
        ]

    def to_dict(self) -> Dict[str, object]:
        return {
            "trial_energy_mwh": self.energy,
            "powers_mw": list(self.powers),
            "max_deviation_pct": self.max_deviation,
            "noise_floor_pct": self.noise_floor,
        }


def _trial(name: str, power: float, energy: float) -> Optional[Store]:
    return Store(name, power, energy) if power > 0 else None


def _with(base: ResourceSet, *stores: Optional[Store]) -> ResourceSet:
    out = base
    for s in stores:
        if s is not None:
            out = out.with_resource(s)
    return out


def cell_deviation(
    base: ResourceSet,
    background: ShortfallEnsemble,
    power_i: float,
    power_j: float,
    energy: float = TRIAL_ENERGY_MWH,
    threads: Optional[int] = None,
) -> float:
    """
    Percentage gap between [rho(R+i+j) - rho(R+j)] and [rho(R+i) - rho(R)].

    A zero-power trial store is absent, so its cells are exactly 0.
    """
    i = _trial("trial_i", power_i, energy)
    j = _trial("trial_j", power_j, energy)
    if i is None or j is None:
        return 0.0

    def eeu(resources: ResourceSet) -> float:
        return evaluate(resources, background, threads).eeu

    lhs = eeu(_with(base, i, j)) - eeu(_with(base, j))
    rhs = eeu(_with(base, i)) - eeu(base)
    if rhs == 0:
        return 0.0 if lhs == 0 else math.inf
    return 100.0 * abs(lhs - rhs) / abs(rhs)


def smoothness_grid(
    base: ResourceSet,
    background: ShortfallEnsemble,
    energy: float = TRIAL_ENERGY_MWH,
    powers: Sequence[float] = TRIAL_POWERS_MW,
    noise_floor: float = 0.0,
    threads: Optional[int] = None,
) -> SmoothnessGrid:
    """Deviation from local additivity for every pair of trial-store powers."""
    grid = tuple(float(p) for p in powers)
    deviation = np.zeros((len(grid), len(grid)))
    for (a, p_i), (b, p_j) in itertools.product(enumerate(grid), repeat=2):
        value = cell_deviation(base, background, p_i, p_j, energy, threads)
        deviation[a, b] = 0.0 if value < noise_floor else value
    result = SmoothnessGrid(powers=grid, energy=float(energy), deviation=deviation, noise_floor=noise_floor)
    logger.info("smoothness grid %s MW x %.0f MWh: max deviation %.2f%%", list(grid), energy, result.max_deviation)
    return result


@dataclass(frozen=True)
class NoiseFloor:
    power_i: float
    power_j: float
    deviations: Tuple[float, ...]

    @property
    def floor(self) -> float:
        """Mean plus two standard deviations of the repeated cell."""
        values = np.array(self.deviations)
        return float(values.mean() + 2 * values.std()) if values.size else 0.0

    def to_dict(self) -> Dict[str, object]:
        return {
            "power_i_mw": self.power_i,
            "power_j_mw": self.power_j,
            "deviations_pct": list(self.deviations),
            "floor_pct": self.floor,
        }


def estimate_noise_floor(
    base: ResourceSet,
    background_for_seed: Callable[[int], ShortfallEnsemble],
    seeds: Sequence[int],
    power_i: float = TRIAL_POWERS_MW[0],
    power_j: float = TRIAL_POWERS_MW[0],
    energy: float = TRIAL_ENERGY_MWH,
    threads: Optional[int] = None,
) -> NoiseFloor:
    """Repeat one smoothness cell over independently seeded backgrounds."""
    if not seeds:
        raise ConfigurationError("Noise floor needs at least one seed")
    deviations = tuple(
        cell_deviation(base, background_for_seed(seed), power_i, power_j, energy, threads) for seed in seeds
    )
    return NoiseFloor(power_i=power_i, power_j=power_j, deviations=deviations)


__all__ = [
    "TRIAL_ENERGY_MWH",
    "TRIAL_POWERS_MW",
    "ContinuityScan",
    "continuity_scan",
    "SmoothnessGrid",
    "cell_deviation",
    "smoothness_grid",
    "NoiseFloor",
    "estimate_noise_floor",
]
