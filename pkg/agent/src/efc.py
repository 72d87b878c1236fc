"""Equivalent firm capacity, the EEU slope and ELCC."""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import bisect

from adequacy_types import (
    FirmBlock,
    Metric,
    Resource,
    ResourceSet,
    ShortfallEnsemble,
    Store,
    bundle_of,
    nominal_capacity,
)
from errors import FlatRiskError, UnreachableTargetError, ZeroDerivativeError
from risk_metrics import evaluate
from runtime_constants import DEFAULT_TOL_MW

logger = logging.getLogger(__name__)

EfcMethod = Literal["exact-bisection", "marginal-ratio", "elcc-bisection"]
ResourceLike = Union[Resource, Iterable[Resource]]


@dataclass(frozen=True)
class EfcEstimate:
    value: float
    method: EfcMethod
    tolerance: float = 0.0
    derivative_used: Optional[float] = None
    iterations: int = 0
    resource_id: str = ""

    def to_row(self) -> Dict[str, object]:
        return {
            "resource_id": self.resource_id,
            "method": self.method,
            "value_mw": self.value,
            "tolerance_mw": self.tolerance,
            "derivative": self.derivative_used,
            "iterations": self.iterations,
        }


def label_of(resource: ResourceLike) -> str:
    items = bundle_of(resource)
    if len(items) == 1:
        return items[0].id
    return f"bundle[{len(items)}]"


def rho(resources: ResourceSet, background: ShortfallEnsemble, metric: Metric = "eeu", threads: Optional[int] = None) -> float:
    return evaluate(resources, background, threads).metric(metric)


def _threshold(
    risk: Callable[[float], float], target: float, lower: float, upper: float, tol: float
) -> Tuple[float, int]:
    """
    Smallest x in [lower, upper] with risk(x) <= target, for nonincreasing risk.

    Only the sign of the bracketing function matters to bisection, so plateaus
    at the target (common under LOLE) resolve to their left edge.
    """

    def excess(x: float) -> float:
        value = risk(x) - target
        return value if value > 0 else -1.0

    root, info = bisect(excess, lower, upper, xtol=tol, full_output=True, disp=False)
    x = float(root)
    if risk(x) > target:
        x = min(x + tol, upper)
    return x, int(info.iterations)


def iteration_bound(upper: float, tol: float) -> int:
    return max(1, math.ceil(math.log2(max(upper, tol) / tol)))


# ──────────────────────────────────────────────────────────────
# Exact EFC
# ──────────────────────────────────────────────────────────────

def efc_exact(
    resource: ResourceLike,
    base: ResourceSet,
    background: ShortfallEnsemble,
    metric: Metric = "eeu",
    tol: float = DEFAULT_TOL_MW,
    threads: Optional[int] = None,
) -> EfcEstimate:
    """
    Firm capacity y with rho(base + y) = rho(base with the resource).

    A bundle (e.g. every accepted store) is valued as a single unit. The
    search bracket is [0, nominal capacity].
    """
    upper = nominal_capacity(resource)
    label = label_of(resource)

    def risk(y: float) -> float:
        return rho(base.plus_firm(y), background, metric, threads)

    r0 = risk(0.0)
    r_upper = risk(upper)
    if r0 == r_upper:
        raise FlatRiskError(
            f"{metric.upper()} does not change between firm +0 and +{upper:.6g} MW; EFC of `{label}` is undefined",
            {"resource_id": label, "metric": metric, "risk": r0, "upper_mw": upper},
        )
    target = rho(base.with_resource(resource), background, metric, threads)
    if target >= r0:
        return EfcEstimate(0.0, "exact-bisection", tol, resource_id=label)
    if target < r_upper:
        logger.warning("`%s` beats firm capacity of its own rating (%.6g < %.6g); clipping EFC", label, target, r_upper)
        return EfcEstimate(upper, "exact-bisection", tol, resource_id=label)

    value, iterations = _threshold(risk, target, 0.0, upper, tol)
    logger.debug("efc_exact(%s) = %.3f MW after %d iterations", label, value, iterations)
    return EfcEstimate(value, "exact-bisection", tol, iterations=iterations, resource_id=label)


# ──────────────────────────────────────────────────────────────
# EEU slope and marginal EFC
# ──────────────────────────────────────────────────────────────

def eeu_derivative(resources: ResourceSet, background: ShortfallEnsemble, threads: Optional[int] = None) -> float:
    """
    dEEU/dy for firm capacity y added to the set.

    Equals -LOLE of the system in which, per trace and day, stores that did
    not run empty are replaced by firm capacity at their power rating. With
    no stores this is simply -LOLE(R).
    """
    return -evaluate(resources, background, threads).lole_without_empty


def marginal_ratio(
    with_set: ResourceSet,
    without_set: ResourceSet,
    reference: ResourceSet,
    background: ShortfallEnsemble,
    threads: Optional[int] = None,
) -> Tuple[float, float]:
    """(EEU(without) - EEU(with)) / -EEU'(reference), plus the slope used."""
    slope = eeu_derivative(reference, background, threads)
    if slope == 0:
        raise ZeroDerivativeError(
            "LOLE with non-empty stores counted as firm is zero; marginal EFC is undefined",
            {"firm_mw": reference.firm, "num_stores": len(reference.stores)},
        )
    drop = evaluate(without_set, background, threads).eeu - evaluate(with_set, background, threads).eeu
    return drop / -slope, slope


def efc_marginal(
    resource: ResourceLike,
    base: ResourceSet,
    background: ShortfallEnsemble,
    threads: Optional[int] = None,
) -> EfcEstimate:
    upper = nominal_capacity(resource)
    if all(isinstance(r, FirmBlock) for r in bundle_of(resource)):
        # firm capacity is its own EFC
        return EfcEstimate(value=upper, method="marginal-ratio", resource_id=label_of(resource))
    value, slope = marginal_ratio(base.with_resource(resource), base, base, background, threads)
    return EfcEstimate(
        value=float(np.clip(value, 0.0, upper)),
        method="marginal-ratio",
        derivative_used=slope,
        resource_id=label_of(resource),
    )


# ──────────────────────────────────────────────────────────────
# ELCC and calibration
# ──────────────────────────────────────────────────────────────

def elcc(
    resource: ResourceLike,
    base: ResourceSet,
    background: ShortfallEnsemble,
    metric: Metric = "eeu",
    tol: float = DEFAULT_TOL_MW,
    threads: Optional[int] = None,
) -> EfcEstimate:
    """Largest constant extra load x with rho(base with resource, load + x) <= rho(base)."""
    upper = nominal_capacity(resource)
    label = label_of(resource)
    r0 = rho(base, background, metric, threads)
    if r0 == rho(base.plus_firm(upper), background, metric, threads):
        raise FlatRiskError(
            f"{metric.upper()} is flat over the ELCC bracket of `{label}`",
            {"resource_id": label, "metric": metric, "risk": r0, "upper_mw": upper},
        )
    enlarged = base.with_resource(resource)

    def shortfall_gain(x: float) -> float:
        # nonincreasing in x: how far below the base risk the loaded system stays
        loaded = background.with_load(x)
        return r0 - evaluate(enlarged, loaded, threads, memo=False).metric(metric)

    if shortfall_gain(upper) >= 0:
        return EfcEstimate(upper, "elcc-bisection", tol, resource_id=label)

    def negated(x: float) -> float:
        return -shortfall_gain(x)

    def excess(x: float) -> float:
        value = negated(x)
        return value if value > 0 else -1.0

    root, info = bisect(excess, 0.0, upper, xtol=tol, full_output=True, disp=False)
    value = float(root)
    if negated(value) > 0:
        value = max(value - tol, 0.0)
    return EfcEstimate(value, "elcc-bisection", tol, iterations=int(info.iterations), resource_id=label)


def calibrate_firm(
    background: ShortfallEnsemble,
    metric: Metric,
    target: float,
    tol: float = DEFAULT_TOL_MW,
    base: Optional[ResourceSet] = None,
    upper: Optional[float] = None,
    threads: Optional[int] = None,
) -> float:
    """
    Smallest firm capacity y with rho(base + y) <= target.

    The default bracket ends where firm capacity covers the deepest
    shortfall in the ensemble, so any target >= 0 is reachable there.
    """
    start = base if base is not None else ResourceSet()
    if upper is None:
        upper = max(float(background.residual.max()), 0.0) + tol

    def risk(y: float) -> float:
        return rho(start.plus_firm(y), background, metric, threads)

    r0 = risk(0.0)
    if r0 <= target:
        return 0.0
    r_upper = risk(upper)
    if r_upper > target:
        raise UnreachableTargetError(
            f"{metric.upper()} target {target:.6g} not reached within +{upper:.6g} MW of firm capacity",
            {"metric": metric, "target": target, "risk_at_upper": r_upper, "upper_mw": upper},
        )
    y, iterations = _threshold(risk, target, 0.0, upper, tol)
    logger.info("calibrated firm capacity %.3f MW for %s <= %.6g (%d iterations)", y, metric.upper(), target, iterations)
    return y


# ──────────────────────────────────────────────────────────────
# Reports
# ──────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class StorageDilution:
    store_id: str
    matched_firm_mw: float
    efc_storage_free: float
    efc_storage_rich: float

    @property
    def diluted(self) -> bool:
        return self.efc_storage_rich <= self.efc_storage_free

    def to_dict(self) -> Dict[str, object]:
        return {
            "store_id": self.store_id,
            "matched_firm_mw": self.matched_firm_mw,
            "efc_storage_free_mw": self.efc_storage_free,
            "efc_storage_rich_mw": self.efc_storage_rich,
            "diluted": self.diluted,
        }


def storage_dilution(
    store: Store,
    storage_rich_base: ResourceSet,
    background: ShortfallEnsemble,
    tol: float = DEFAULT_TOL_MW,
    threads: Optional[int] = None,
) -> StorageDilution:
    """
    Marginal EFC of one store against a storage-rich base and against the
    storage-free base (firm only) that has the same EEU.
    """
    free = storage_rich_base.without_stores()
    target = rho(storage_rich_base, background, "eeu", threads)
    matched = calibrate_firm(background, "eeu", target, tol, base=free, threads=threads)
    free_base = free.plus_firm(matched)
    return StorageDilution(
        store_id=store.id,
        matched_firm_mw=free_base.firm,
        efc_storage_free=efc_marginal(store, free_base, background, threads).value,
        efc_storage_rich=efc_marginal(store, storage_rich_base, background, threads).value,
    )


def efc_report(
    resources: Sequence[Resource],
    base: ResourceSet,
    background: ShortfallEnsemble,
    metric: Metric = "eeu",
    tol: float = DEFAULT_TOL_MW,
    threads: Optional[int] = None,
) -> List[EfcEstimate]:
    """Exact, marginal and ELCC values for each resource against one base."""
    rows: List[EfcEstimate] = []
    for resource in resources:
        rows.append(efc_exact(resource, base, background, metric, tol, threads))
        rows.append(efc_marginal(resource, base, background, threads))
        rows.append(elcc(resource, base, background, metric, tol, threads))
    return rows


__all__ = [
    "EfcEstimate",
    "rho",
    "iteration_bound",
    "efc_exact",
    "eeu_derivative",
    "marginal_ratio",
    "efc_marginal",
    "elcc",
    "calibrate_firm",
    "StorageDilution",
    "storage_dilution",
    "efc_report",
]
