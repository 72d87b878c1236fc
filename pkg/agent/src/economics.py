"""Economic criterion: minimise VOLL x EEU + procurement cost.

For storage-free resource families the optimum of the economic criterion is
where LOLE equals the marginal cost of firm capacity over VOLL, which is why
an LOLE standard of CONE / VOLL can stand in for it.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from adequacy_types import (
    Metric,
    ResourceSet,
    ShortfallEnsemble,
    Standard,
    VariableGenerator,
)
from auction import (
    AuctionOutcome,
    Bid,
    EfcMap,
    build_outcome,
    clear,
    naive_efcs,
    portfolio,
    run_clock,
    unit_prices,
)
from efc import calibrate_firm, rho
from errors import AdequacyError, ConfigurationError, InfeasibleError, StorageFamilyError
from helpers import FIXTURE_STREAM, substream
from risk_metrics import evaluate, net_residual
from runtime_constants import DEFAULT_FD_STEP_MW, DEFAULT_TOL_MW

logger = logging.getLogger(__name__)

CostFn = Callable[[float], float]


class DemandCurve:
    """Piecewise-linear target capacity (MW) as a function of price; flat beyond the end knots."""

    def __init__(self, knots: Sequence[Tuple[float, float]]) -> None:
        if not knots:
            raise ConfigurationError("Demand curve needs at least one (price, capacity) knot")
        pairs = sorted((float(p), float(c)) for p, c in knots)
        prices = np.array([p for p, _ in pairs])
        capacity = np.array([c for _, c in pairs])
        if np.any(np.diff(prices) <= 0):
            raise ConfigurationError("Demand curve prices must be strictly increasing")
        if np.any(np.diff(capacity) > 0):
            raise ConfigurationError("Demand curve capacity must not increase with price")
        if np.any(capacity < 0):
            raise ConfigurationError("Demand curve capacity must be >= 0")
        self.prices = prices
        self.capacity = capacity

    def __call__(self, price: float) -> float:
        return float(np.interp(price, self.prices, self.capacity))

    @classmethod
    def vertical(cls, capacity_mw: float) -> "DemandCurve":
        return cls([(0.0, capacity_mw)])

    @property
    def knots(self) -> List[Tuple[float, float]]:
        return [(float(p), float(c)) for p, c in zip(self.prices, self.capacity)]

    @property
    def mid_price(self) -> float:
        return float(0.5 * (self.prices[0] + self.prices[-1]))


@dataclass(frozen=True)
class EconParams:
    voll: float
    cone: Optional[float] = None
    demand_curve: Optional[DemandCurve] = None

    def __post_init__(self) -> None:
        if not self.voll > 0:
            raise ConfigurationError(f"VOLL must be > 0 (got {self.voll})")
        if self.cone is not None and self.cone < 0:
            raise ConfigurationError(f"CONE must be >= 0 (got {self.cone})")

    @property
    def lole_standard_h(self) -> Optional[float]:
        """CONE / VOLL, the LOLE level the economic optimum pivots to."""
        return None if self.cone is None else self.cone / self.voll

    def linear_cost(self) -> CostFn:
        if self.cone is None:
            raise ConfigurationError("A linear cost function needs CONE")
        cone = self.cone
        return lambda y: cone * y


def total_cost(
    resources: ResourceSet,
    background: ShortfallEnsemble,
    econ: EconParams,
    procurement_cost: float,
    threads: Optional[int] = None,
) -> float:
    return econ.voll * evaluate(resources, background, threads).eeu + procurement_cost


# ──────────────────────────────────────────────────────────────
# Optimal firm capacity
# ──────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class OptimalFirm:
    firm_mw: float
    lole_h: float
    eeu_mwh: float
    total_cost: float
    marginal_cost: float
    at_boundary: bool
    left_slope: float
    right_slope: float
    voll: float

    @property
    def lole_target_h(self) -> float:
        return self.marginal_cost / self.voll

    @property
    def pivot_gap_h(self) -> float:
        return abs(self.lole_h - self.lole_target_h)

    @property
    def stationary(self) -> bool:
        return self.left_slope <= 0 <= self.right_slope

    def to_dict(self) -> Dict[str, object]:
        return {
            "firm_mw": self.firm_mw,
            "lole_h": self.lole_h,
            "eeu_mwh": self.eeu_mwh,
            "total_cost": self.total_cost,
            "marginal_cost": self.marginal_cost,
            "lole_target_h": self.lole_target_h,
            "pivot_gap_h": self.pivot_gap_h,
            "at_boundary": self.at_boundary,
            "stationary": self.stationary,
        }


def optimal_firm(
    background: ShortfallEnsemble,
    econ: EconParams,
    cost_fn: Optional[CostFn] = None,
    base: Optional[ResourceSet] = None,
    upper: Optional[float] = None,
    fd_step: float = DEFAULT_FD_STEP_MW,
    tol: float = DEFAULT_TOL_MW,
    threads: Optional[int] = None,
) -> OptimalFirm:
    """
    Firm capacity y minimising VOLL x EEU(base + y) + cost_fn(y).

    Refuses bases holding storage: with stores the LOLE pivot does not
    apply. The result carries the finite-difference marginal cost and the
    one-sided slopes of the total cost around y, which bracket zero at an
    interior optimum.
    """
    start = base if base is not None else ResourceSet()
    if start.stores:
        raise StorageFamilyError(
            "The LOLE pivot of the economic criterion only holds for storage-free resource families",
            {"num_stores": len(start.stores)},
        )
    cost = cost_fn if cost_fn is not None else econ.linear_cost()
    if upper is None:
        upper = max(float(background.residual.max()) - start.firm, 0.0) + tol

    def objective(y: float) -> float:
        return total_cost(start.plus_firm(y), background, econ, cost(y), threads)

    result = minimize_scalar(objective, bounds=(0.0, upper), method="bounded", options={"xatol": tol})
    y = float(result.x)
    h = fd_step
    marginal = (cost(y + h) - cost(max(y - h, 0.0))) / (y + h - max(y - h, 0.0))
    left = (objective(y) - objective(max(y - h, 0.0))) / h if y > 0 else -math.inf
    right = (objective(min(y + h, upper)) - objective(y)) / h if y < upper else math.inf
    report = evaluate(start.plus_firm(y), background, threads)
    at_boundary = y <= tol or y >= upper - tol
    if at_boundary:
        logger.warning("economic optimum %.3f MW sits on the search bracket [0, %.3f]", y, upper)
    return OptimalFirm(
        firm_mw=y,
        lole_h=report.lole,
        eeu_mwh=report.eeu,
        total_cost=float(result.fun),
        marginal_cost=marginal,
        at_boundary=at_boundary,
        left_slope=left,
        right_slope=right,
        voll=econ.voll,
    )


def cost_scan(
    background: ShortfallEnsemble,
    econ: EconParams,
    cost_fn: CostFn,
    levels: Sequence[float],
    base: Optional[ResourceSet] = None,
    threads: Optional[int] = None,
) -> List[Dict[str, float]]:
    """Total cost over a grid of firm levels (for convexity checks and plots)."""
    start = base if base is not None else ResourceSet()
    rows = []
    for y in levels:
        report = evaluate(start.plus_firm(y), background, threads)
        rows.append(
            {
                "firm_mw": float(y),
                "lole_h": report.lole,
                "eeu_mwh": report.eeu,
                "total_cost": econ.voll * report.eeu + cost_fn(float(y)),
            }
        )
    return rows


# ──────────────────────────────────────────────────────────────
# Demand-curve clearing
# ──────────────────────────────────────────────────────────────

def lole_demand_curve(
    background: ShortfallEnsemble,
    voll: float,
    prices: Sequence[float],
    base: Optional[ResourceSet] = None,
    tol: float = DEFAULT_TOL_MW,
    threads: Optional[int] = None,
) -> DemandCurve:
    """Curve whose capacity at price q is the firm level with LOLE = q / VOLL."""
    knots = []
    for q in sorted(set(float(p) for p in prices)):
        knots.append((q, calibrate_firm(background, "lole", q / voll, tol, base=base, threads=threads)))
    # LOLE plateaus can make neighbouring calibrations disagree by a bisection step
    capacity = np.minimum.accumulate([c for _, c in knots])
    return DemandCurve([(q, float(c)) for (q, _), c in zip(knots, capacity)])


def clear_with_demand_curve(
    bids: Sequence[Bid],
    background: ShortfallEnsemble,
    econ: EconParams,
    price_grid: Optional[Sequence[float]] = None,
    efc: Optional[EfcMap] = None,
    metric: Metric = "lole",
    tol: float = DEFAULT_TOL_MW,
    threads: Optional[int] = None,
) -> AuctionOutcome:
    """
    Descending clock where the target at price q is curve(q) MW of firm
    capacity, checked by full risk: the active set must be at least as
    reliable as firm capacity curve(q).
    """
    curve = econ.demand_curve
    if curve is None:
        raise ConfigurationError("Demand-curve clearing needs econ.demand_curve")
    if not bids:
        raise InfeasibleError("No bids offered", {"num_bids": 0})

    def firm_risk(price: float) -> float:
        return rho(ResourceSet(firm=curve(price)), background, metric, threads)

    reference = Standard(metric, firm_risk(curve.mid_price))
    fixed = dict(efc) if efc is not None else naive_efcs(bids, background, reference, tol, threads)
    prices = unit_prices(bids, fixed)
    grid = list(price_grid) if price_grid is not None else sorted(
        {p for p in prices.values() if math.isfinite(p)} | set(curve.prices.tolist())
    )

    def covered(resources: ResourceSet, price: float) -> bool:
        return rho(resources, background, metric, threads) <= firm_risk(price)

    try:
        accepted, rounds = run_clock(bids, fixed, grid, covered)
    except InfeasibleError as e:
        raise InfeasibleError(f"Demand curve never intersected by the offers: {e}", e.details) from e
    price = prices[accepted[-1]] if accepted else 0.0
    standard = Standard(metric, firm_risk(price))
    return build_outcome(bids, accepted, price, fixed, background, standard, rounds, "demandcurve", tol, threads, (accepted,))


# ──────────────────────────────────────────────────────────────
# EEU <-> LOLE correspondence
# ──────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Family:
    name: str
    members: Tuple[ResourceSet, ...]


@dataclass(frozen=True)
class FamilyCheck:
    name: str
    points: Tuple[Tuple[float, float], ...]
    violations: int

    @property
    def one_one(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> Dict[str, object]:
        return {
            "family": self.name,
            "points": [{"eeu_mwh": e, "lole_h": l} for e, l in self.points],
            "violations": self.violations,
            "one_one": self.one_one,
        }


def firm_family(levels: Sequence[float], base: Optional[ResourceSet] = None) -> Family:
    start = base if base is not None else ResourceSet()
    return Family("firm", tuple(start.plus_firm(y) for y in levels))


def variable_family(
    background: ShortfallEnsemble,
    capacity_mw: float,
    scales: Sequence[float],
    base: Optional[ResourceSet] = None,
) -> Family:
    """Variable output drawn independently of demand, scaled across members."""
    start = base if base is not None else ResourceSet()
    rng = substream(background.seed, FIXTURE_STREAM, 0, 0)
    profile = rng.uniform(0.0, capacity_mw, size=background.grid.n)
    members = tuple(
        start.with_resource(VariableGenerator(f"wind_x{s:g}", profile * s)) if s > 0 else start for s in scales
    )
    return Family("independent_variable", members)


def mid_shortfall_solar_family(
    background: ShortfallEnsemble,
    scales: Sequence[float],
    base: Optional[ResourceSet] = None,
) -> Family:
    """
    Output that appears only inside shortfall periods and never clears one.

    Each member supplies `scale / 2` of the depth left by the base in every
    shortfall period (scale < 2), so EEU falls while LOLE stays put.
    """
    start = base if base is not None else ResourceSet()
    depth = np.vstack([np.maximum(net_residual(start, background, k), 0.0) for k in range(background.num_traces)])
    members = []
    for s in scales:
        if not 0 <= s < 2:
            raise ConfigurationError(f"Mid-shortfall scale must lie in [0, 2) (got {s})")
        members.append(start.with_resource(VariableGenerator(f"solar_x{s:g}", depth * s / 2)) if s > 0 else start)
    return Family("mid_shortfall_solar", tuple(members))


def check_one_one(
    background: ShortfallEnsemble,
    families: Sequence[Family],
    eeu_rel_tol: float = 0.01,
    threads: Optional[int] = None,
) -> List[FamilyCheck]:
    """
    Test whether LOLE is a function of EEU across each family.

    Members are sorted by EEU; a consecutive pair violates the
    correspondence when EEU moves by more than `eeu_rel_tol` while LOLE does
    not move the same way.
    """
    out: List[FamilyCheck] = []
    for family in families:
        if any(m.stores for m in family.members):
            raise StorageFamilyError(f"Family `{family.name}` contains storage", {"family": family.name})
        points = sorted(
            ((evaluate(m, background, threads).eeu, evaluate(m, background, threads).lole) for m in family.members),
            reverse=True,
        )
        violations = 0
        for (e1, l1), (e2, l2) in zip(points, points[1:]):
            if e1 - e2 > eeu_rel_tol * max(e1, 1e-12) and not l2 < l1:
                violations += 1
        check = FamilyCheck(family.name, tuple(points), violations)
        logger.info("one-one check %s: %d points, %d violations", family.name, len(points), violations)
        out.append(check)
    return out


def default_families(background: ShortfallEnsemble, firm_levels: Sequence[float]) -> List[Family]:
    """Firm, demand-independent variable output and the mid-shortfall counterexample."""
    top = max(firm_levels) if firm_levels else 0.0
    scales = [0.0, 0.5, 1.0, 1.5]
    return [
        firm_family(firm_levels),
        variable_family(background, max(top, 1.0), scales),
        mid_shortfall_solar_family(background, scales),
    ]


# ──────────────────────────────────────────────────────────────
# Storage-inclusive brute force
# ──────────────────────────────────────────────────────────────

def storage_cost_scan(
    bids: Sequence[Bid],
    background: ShortfallEnsemble,
    econ: EconParams,
    ks: Sequence[float],
    metric: Metric = "eeu",
    threads: Optional[int] = None,
) -> List[Dict[str, object]]:
    """
    Clear the auction at each standard k and price the result economically.

    With storage the economic optimum has no LOLE pivot, so this grid search
    is the only answer offered and every row is marked non-pivotable.
    """
    rows: List[Dict[str, object]] = []
    for k in ks:
        row: Dict[str, object] = {"k": float(k), "metric": metric, "pivotable": False}
        try:
            outcome = clear(bids, background, Standard(metric, float(k)), threads=threads)
        except AdequacyError as e:
            row.update({"status": e.code})
            rows.append(row)
            continue
        chosen = [b for b in bids if b.id in outcome.accepted_set]
        eeu = evaluate(portfolio(chosen), background, threads).eeu
        row.update(
            {
                "status": "ok",
                "procurement_cost": outcome.total_cost,
                "eeu_mwh": eeu,
                "total_cost": econ.voll * eeu + outcome.total_cost,
            }
        )
        rows.append(row)
    ok = [r for r in rows if r["status"] == "ok"]
    if ok:
        best = min(ok, key=lambda r: float(r["total_cost"]))  # type: ignore[arg-type]
        best["best"] = True
    return rows


__all__ = [
    "DemandCurve",
    "EconParams",
    "total_cost",
    "OptimalFirm",
    "optimal_firm",
    "cost_scan",
    "lole_demand_curve",
    "clear_with_demand_curve",
    "Family",
    "FamilyCheck",
    "firm_family",
    "variable_family",
    "mid_shortfall_solar_family",
    "check_one_one",
    "default_families",
    "storage_cost_scan",
]
