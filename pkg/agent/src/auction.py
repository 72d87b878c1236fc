"""Capacity-market clearing with endogenous EFCs.

Bids are ranked by unit price c_i / efc_i; the cheapest prefix whose full
risk evaluation meets the standard is accepted and the marginal bid sets a
pay-as-clear price p. `clear` re-estimates every EFC against the accepted
set and repeats until the set reproduces itself.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np

from adequacy_types import FirmBlock, ResourceSet, ShortfallEnsemble, Standard, Store
from efc import calibrate_firm, efc_exact, eeu_derivative, rho
from errors import ConfigurationError, FlatRiskError, InfeasibleError, NonConvergenceError, ZeroDerivativeError
from risk_metrics import evaluate
from runtime_constants import DEFAULT_EFC_TOL_MW, DEFAULT_LUMPY_SHARE, DEFAULT_MAX_ITER, DEFAULT_TOL_MW

logger = logging.getLogger(__name__)

EfcMap = Dict[str, float]
CoverRule = Callable[[ResourceSet, float], bool]


@dataclass(frozen=True)
class Bid:
    resource: Union[FirmBlock, Store]
    min_total_price: float

    def __post_init__(self) -> None:
        if not self.min_total_price >= 0:
            raise ConfigurationError(f"Bid `{self.resource.id}` needs min_total_price >= 0")

    @property
    def id(self) -> str:
        return self.resource.id

    @property
    def is_store(self) -> bool:
        return isinstance(self.resource, Store)

    @property
    def nominal_mw(self) -> float:
        if isinstance(self.resource, Store):
            return float(self.resource.power)
        return float(self.resource.capacity)


@dataclass(frozen=True)
class AuctionOutcome:
    accepted: Tuple[str, ...]
    clearing_price: float
    efc: EfcMap
    payments: Dict[str, float]
    total_cost: float
    total_payment: float
    risk_achieved: float
    standard: Standard
    iterations: int
    mode: str
    accepted_firm_mw: float = 0.0
    sum_marginal_storage_efc: float = 0.0
    whole_set_storage_efc: Optional[float] = None
    unit_prices: Dict[str, float] = field(default_factory=dict)
    history: Tuple[Tuple[str, ...], ...] = ()
    lumpy_adjusted: bool = False

    @property
    def accepted_set(self) -> FrozenSet[str]:
        return frozenset(self.accepted)

    def to_dict(self) -> Dict[str, object]:
        return {
            "mode": self.mode,
            "standard": {"metric": self.standard.metric, "k": self.standard.k},
            "accepted": sorted(self.accepted),
            "clearing_price": self.clearing_price,
            "efc_mw": dict(sorted(self.efc.items())),
            "payments": dict(sorted(self.payments.items())),
            "total_cost": self.total_cost,
            "total_payment": self.total_payment,
            "risk_achieved": self.risk_achieved,
            "iterations": self.iterations,
            "accepted_firm_mw": self.accepted_firm_mw,
            "sum_marginal_storage_efc_mw": self.sum_marginal_storage_efc,
            "whole_set_storage_efc_mw": self.whole_set_storage_efc,
            "lumpy_adjusted": self.lumpy_adjusted,
        }

    def rows(self) -> List[Dict[str, object]]:
        accepted = self.accepted_set
        return [
            {
                "id": bid_id,
                "efc_mw": self.efc[bid_id],
                "unit_price": self.unit_prices.get(bid_id, math.inf),
                "accepted": bid_id in accepted,
                "payment": self.payments.get(bid_id, 0.0),
            }
            for bid_id in sorted(self.efc)
        ]


# ──────────────────────────────────────────────────────────────
# Merit-order stack
# ──────────────────────────────────────────────────────────────

def _check_bids(bids: Sequence[Bid]) -> None:
    ids = [b.id for b in bids]
    if len(ids) != len(set(ids)):
        raise ConfigurationError("Bid list contains duplicate resource ids")


def portfolio(bids: Sequence[Bid]) -> ResourceSet:
    """Resource set of a group of bids, in canonical (id) order."""
    ordered = sorted(bids, key=lambda b: b.id)
    firm = float(sum(b.resource.capacity for b in ordered if isinstance(b.resource, FirmBlock)))
    stores = tuple(b.resource for b in ordered if isinstance(b.resource, Store))
    return ResourceSet(firm=firm, stores=stores)


def unit_prices(bids: Sequence[Bid], efc: EfcMap) -> Dict[str, float]:
    out: Dict[str, float] = {}
    for b in bids:
        value = efc.get(b.id, 0.0)
        out[b.id] = b.min_total_price / value if value > 0 else math.inf
    return out


def merit_order(bids: Sequence[Bid], efc: EfcMap) -> List[Bid]:
    """Ascending unit price, lower id first on ties; zero-EFC bids are dropped."""
    prices = unit_prices(bids, efc)
    finite = [b for b in bids if math.isfinite(prices[b.id])]
    return sorted(finite, key=lambda b: (prices[b.id], b.id))


@dataclass(frozen=True)
class _Stack:
    accepted: Tuple[str, ...]
    price: float
    risk: float


def _standard_rule(background: ShortfallEnsemble, standard: Standard, threads: Optional[int]) -> CoverRule:
    def covered(resources: ResourceSet, price: float) -> bool:
        return rho(resources, background, standard.metric, threads) <= standard.k

    return covered


def merit_clear(
    bids: Sequence[Bid],
    efc: EfcMap,
    background: ShortfallEnsemble,
    standard: Standard,
    threads: Optional[int] = None,
) -> _Stack:
    """
    Smallest merit-order prefix meeting the standard.

    Risk is nonincreasing along the stack, so the first admission that meets
    the standard is found by binary search over prefix lengths, each step a
    full risk evaluation of the prefix.
    """
    order = merit_order(bids, efc)
    prices = unit_prices(bids, efc)

    def prefix_risk(m: int) -> float:
        return rho(portfolio(order[:m]), background, standard.metric, threads)

    full = prefix_risk(len(order))
    if full > standard.k:
        raise InfeasibleError(
            f"All {len(order)} offered resources give {standard.metric.upper()} {full:.6g}; standard is {standard.describe()}",
            {"metric": standard.metric, "k": standard.k, "risk_all_offered": full, "num_bids": len(bids)},
        )
    lo, hi = 0, len(order)
    while lo < hi:
        mid = (lo + hi) // 2
        if prefix_risk(mid) <= standard.k:
            hi = mid
        else:
            lo = mid + 1
    accepted = tuple(b.id for b in order[:lo])
    price = prices[accepted[-1]] if accepted else 0.0
    return _Stack(accepted=accepted, price=price, risk=prefix_risk(lo))


# ──────────────────────────────────────────────────────────────
# EFC estimation against a candidate set
# ──────────────────────────────────────────────────────────────

def efcs_against(
    bids: Sequence[Bid],
    accepted: FrozenSet[str],
    background: ShortfallEnsemble,
    threads: Optional[int] = None,
    reference: Optional[ResourceSet] = None,
) -> EfcMap:
    """
    Marginal EFC of every bid relative to R = the accepted bids.

    Stores already held in R are valued by removal, the others by addition,
    both divided by -EEU'(R). An explicit `reference` may already hold
    stores that are not in `accepted`. Firm blocks are worth exactly their
    capacity.
    """
    by_id = {b.id: b for b in bids}
    R = reference if reference is not None else portfolio([by_id[i] for i in accepted])
    out: EfcMap = {b.id: b.nominal_mw for b in bids if not b.is_store}
    stores = [b for b in bids if b.is_store]
    if not stores:
        return out

    slope = eeu_derivative(R, background, threads)
    if slope == 0:
        raise ZeroDerivativeError(
            "EEU slope of the candidate set is zero; store EFCs are undefined",
            {"accepted": sorted(accepted), "firm_mw": R.firm},
        )
    eeu_R = evaluate(R, background, threads).eeu
    held = {s.id for s in R.stores}
    for b in stores:
        if b.id in held:
            drop = evaluate(R.without(b.resource), background, threads).eeu - eeu_R
        else:
            drop = eeu_R - evaluate(R.with_resource(b.resource), background, threads).eeu
        out[b.id] = float(np.clip(drop / -slope, 0.0, b.nominal_mw))
    return out


def initial_reference(background: ShortfallEnsemble, standard: Standard, tol: float, threads: Optional[int]) -> ResourceSet:
    """Firm-only set calibrated to the standard."""
    y0 = calibrate_firm(background, standard.metric, standard.k, tol, threads=threads)
    return ResourceSet(firm=y0)


def naive_efcs(
    bids: Sequence[Bid],
    background: ShortfallEnsemble,
    standard: Standard,
    tol: float = DEFAULT_TOL_MW,
    threads: Optional[int] = None,
) -> EfcMap:
    reference = initial_reference(background, standard, tol, threads)
    try:
        return efcs_against(bids, frozenset(), background, threads, reference=reference)
    except ZeroDerivativeError:
        # a zero-risk reference gains nothing from any store
        logger.warning("calibrated firm set has no unserved energy; naive store EFCs are zero")
        return {b.id: (0.0 if b.is_store else b.nominal_mw) for b in bids}


def exact_efcs(
    bids: Sequence[Bid],
    accepted: FrozenSet[str],
    background: ShortfallEnsemble,
    tol: float = DEFAULT_TOL_MW,
    threads: Optional[int] = None,
) -> EfcMap:
    """
    EFCs by exact bisection, for accepted sets whose EEU slope is zero.

    A zero slope means the set has no unserved energy left, so a store
    outside it adds nothing; held stores are valued against the set
    without them.
    """
    by_id = {b.id: b for b in bids}
    R = portfolio([by_id[i] for i in accepted])
    out: EfcMap = {b.id: b.nominal_mw for b in bids if not b.is_store}
    for b in bids:
        if not b.is_store:
            continue
        if b.id not in accepted:
            out[b.id] = 0.0
            continue
        try:
            out[b.id] = efc_exact(b.resource, R.without(b.resource), background, "eeu", tol, threads).value
        except FlatRiskError:
            out[b.id] = 0.0
    return out


def efcs_for(
    bids: Sequence[Bid],
    accepted: FrozenSet[str],
    background: ShortfallEnsemble,
    tol: float = DEFAULT_TOL_MW,
    threads: Optional[int] = None,
) -> EfcMap:
    """Marginal EFCs against the accepted set, exact ones where the slope vanishes."""
    try:
        return efcs_against(bids, accepted, background, threads)
    except ZeroDerivativeError as e:
        logger.warning("%s; using exact EFCs against the accepted set", e)
        return exact_efcs(bids, accepted, background, tol, threads)


def priced_set(bids: Sequence[Bid], accepted: FrozenSet[str], efc: EfcMap) -> Tuple[Tuple[str, ...], float]:
    """Accepted ids in merit order and the unit price of the marginal one."""
    prices = unit_prices(bids, efc)
    ordered = tuple(sorted(accepted, key=lambda i: (prices[i], i)))
    finite = [prices[i] for i in ordered if math.isfinite(prices[i])]
    return ordered, max(finite, default=0.0)


# ──────────────────────────────────────────────────────────────
# Outcome assembly
# ──────────────────────────────────────────────────────────────

def build_outcome(
    bids: Sequence[Bid],
    accepted: Tuple[str, ...],
    price: float,
    efc: EfcMap,
    background: ShortfallEnsemble,
    standard: Standard,
    iterations: int,
    mode: str,
    tol: float,
    threads: Optional[int],
    history: Tuple[Tuple[str, ...], ...] = (),
) -> AuctionOutcome:
    by_id = {b.id: b for b in bids}
    chosen = [by_id[i] for i in accepted]
    R = portfolio(chosen)
    stores = [b.resource for b in chosen if isinstance(b.resource, Store)]

    whole_set: Optional[float] = None
    if stores:
        try:
            whole_set = efc_exact(stores, R.without_stores(), background, "eeu", tol, threads).value
        except FlatRiskError as e:
            logger.warning("whole-set storage EFC unavailable: %s", e)

    payments = {i: price * efc[i] for i in accepted}
    return AuctionOutcome(
        accepted=accepted,
        clearing_price=price,
        efc=dict(efc),
        payments=payments,
        total_cost=float(sum(by_id[i].min_total_price for i in accepted)),
        total_payment=float(sum(payments.values())),
        risk_achieved=rho(R, background, standard.metric, threads),
        standard=standard,
        iterations=iterations,
        mode=mode,
        accepted_firm_mw=R.firm,
        sum_marginal_storage_efc=float(sum(efc[s.id] for s in stores)),
        whole_set_storage_efc=whole_set,
        unit_prices=unit_prices(bids, efc),
        history=history,
    )


# ──────────────────────────────────────────────────────────────
# Clearing modes
# ──────────────────────────────────────────────────────────────

def clear_naive_firm_efc(
    bids: Sequence[Bid],
    background: ShortfallEnsemble,
    standard: Standard,
    tol: float = DEFAULT_TOL_MW,
    threads: Optional[int] = None,
) -> AuctionOutcome:
    """One merit-order pass with EFCs measured against the firm-only calibrated set."""
    _check_bids(bids)
    efc = naive_efcs(bids, background, standard, tol, threads)
    stack = merit_clear(bids, efc, background, standard, threads)
    return build_outcome(bids, stack.accepted, stack.price, efc, background, standard, 1, "naive", tol, threads, (stack.accepted,))


def clear(
    bids: Sequence[Bid],
    background: ShortfallEnsemble,
    standard: Standard,
    max_iter: int = DEFAULT_MAX_ITER,
    efc_tol: float = DEFAULT_EFC_TOL_MW,
    tol: float = DEFAULT_TOL_MW,
    threads: Optional[int] = None,
) -> AuctionOutcome:
    """
    Fixed-point clearing.

    Iteration 1 uses the naive EFCs, so it reproduces `clear_naive_firm_efc`.
    Stops when the merit order rebuilt from EFCs measured against the
    accepted set returns that same set, or when no EFC moves by efc_tol or
    more; the latter keeps the current set priced at its own EFCs. A
    2-cycle is damped once by averaging the two EFC maps. Sets with no EEU
    slope left are valued by exact EFCs.
    """
    _check_bids(bids)
    if max_iter < 1:
        raise ConfigurationError(f"max_iter must be >= 1 (got {max_iter})")

    efc = naive_efcs(bids, background, standard, tol, threads)
    basis: Optional[FrozenSet[str]] = None
    history: List[Tuple[str, ...]] = []
    damped = False

    for iteration in range(1, max_iter + 1):
        stack = merit_clear(bids, efc, background, standard, threads)
        current = frozenset(stack.accepted)
        history.append(stack.accepted)
        logger.info(
            "auction iteration %d: %d accepted, p=%.6g, %s=%.6g",
            iteration, len(current), stack.price, standard.metric, stack.risk,
        )
        if basis is not None and current == basis:
            return build_outcome(bids, stack.accepted, stack.price, efc, background, standard, iteration, "fixedpoint", tol, threads, tuple(history))

        fresh = efcs_for(bids, current, background, tol, threads)
        change = max(abs(fresh[i] - efc[i]) for i in fresh) if fresh else 0.0
        if change < efc_tol:
            # keep the set the fresh EFCs were measured against
            ordered, price = priced_set(bids, current, fresh)
            logger.info("auction EFCs settled (max change %.3g MW < %.3g)", change, efc_tol)
            return build_outcome(bids, ordered, price, fresh, background, standard, iteration, "fixedpoint", tol, threads, tuple(history))

        cycling = len(history) >= 3 and current == frozenset(history[-3]) and current != frozenset(history[-2])
        if cycling:
            if damped:
                raise NonConvergenceError(
                    "Auction keeps alternating between two accepted sets after damping",
                    {"sets": [sorted(history[-2]), sorted(history[-1])], "iterations": iteration},
                )
            logger.warning("auction 2-cycle detected at iteration %d; averaging EFC maps", iteration)
            efc = {i: 0.5 * (efc[i] + fresh[i]) for i in fresh}
            basis = None
            damped = True
            continue
        efc, basis = fresh, current

    raise NonConvergenceError(
        f"Auction did not reach a fixed point in {max_iter} iterations",
        {"sets": [sorted(s) for s in history[-2:]], "iterations": max_iter},
    )


def run_clock(
    bids: Sequence[Bid],
    efc: EfcMap,
    price_grid: Sequence[float],
    covered: CoverRule,
) -> Tuple[Tuple[str, ...], int]:
    """
    Descending clock with a pluggable stop rule.

    Bid i is active while price >= c_i / efc_i. The clock stops at the first
    grid price where the active set is no longer covered; exits inside that
    final round are then taken in descending unit price until the next exit
    would break cover. Returns the accepted ids (merit order) and rounds run.
    """
    grid = sorted({float(q) for q in price_grid}, reverse=True)
    if not grid:
        raise ConfigurationError("Price grid is empty")
    order = merit_order(bids, efc)
    prices = unit_prices(bids, efc)

    def active(q: float) -> List[Bid]:
        return [b for b in order if prices[b.id] <= q]

    start = active(grid[0])
    if not covered(portfolio(start), grid[0]):
        raise InfeasibleError(
            f"Offers active at the opening price {grid[0]:.6g} do not meet the target",
            {"opening_price": grid[0], "active_bids": len(start)},
        )

    remaining = start
    rounds = 1
    for q in grid[1:] + [-math.inf]:
        rounds += 1
        nxt = active(q) if math.isfinite(q) else []
        if nxt and covered(portfolio(nxt), q):
            remaining = nxt
            continue
        # final round: exit one bid at a time, highest unit price first
        while len(remaining) > len(nxt):
            candidate = remaining[:-1]
            if not covered(portfolio(candidate), prices[remaining[-1].id]):
                break
            remaining = candidate
        break
    return tuple(b.id for b in remaining), rounds


def descending_clock(
    bids: Sequence[Bid],
    background: ShortfallEnsemble,
    standard: Standard,
    price_grid: Sequence[float],
    efc: Optional[EfcMap] = None,
    tol: float = DEFAULT_TOL_MW,
    threads: Optional[int] = None,
) -> AuctionOutcome:
    """Clock auction with fixed EFCs (naive estimates unless supplied)."""
    _check_bids(bids)
    if not bids:
        raise InfeasibleError("No bids offered", {"num_bids": 0})
    fixed = dict(efc) if efc is not None else naive_efcs(bids, background, standard, tol, threads)
    accepted, rounds = run_clock(bids, fixed, price_grid, _standard_rule(background, standard, threads))
    prices = unit_prices(bids, fixed)
    price = prices[accepted[-1]] if accepted else 0.0
    return build_outcome(bids, accepted, price, fixed, background, standard, rounds, "clock", tol, threads, (accepted,))


# ──────────────────────────────────────────────────────────────
# Checks and adjustments
# ──────────────────────────────────────────────────────────────

def lumpy_recheck(
    outcome: AuctionOutcome,
    bids: Sequence[Bid],
    background: ShortfallEnsemble,
    standard: Standard,
    share: float = DEFAULT_LUMPY_SHARE,
    tol: float = DEFAULT_TOL_MW,
    threads: Optional[int] = None,
) -> AuctionOutcome:
    """
    Test whether a large accepted resource overshoots the standard.

    Each accepted bid above `share` of the accepted EFC is dropped, and the
    gap is refilled from rejected bids in merit order; a single like-for-one
    swap is tried too. The cheapest covering alternative replaces the
    outcome only if it lowers total cost.
    """
    by_id = {b.id: b for b in bids}
    accepted = [by_id[i] for i in outcome.accepted]
    total = sum(outcome.efc[b.id] for b in accepted)
    large = [b for b in accepted if outcome.efc[b.id] > share * total]
    if not large:
        return outcome

    rejected = [b for b in merit_order(bids, outcome.efc) if b.id not in outcome.accepted_set]
    covered = _standard_rule(background, standard, threads)

    def cost(group: Sequence[Bid]) -> float:
        return float(sum(b.min_total_price for b in group))

    best: Optional[List[Bid]] = None
    best_cost = outcome.total_cost
    for big in sorted(large, key=lambda b: (-outcome.efc[b.id], b.id)):
        rest = [b for b in accepted if b.id != big.id]
        refill = list(rest)
        for b in rejected:
            if covered(portfolio(refill), 0.0):
                break
            refill.append(b)
        options = [refill] + [rest + [b] for b in rejected]
        for group in options:
            if cost(group) < best_cost and covered(portfolio(group), 0.0):
                best, best_cost = group, cost(group)

    if best is None:
        return outcome

    current = frozenset(b.id for b in best)
    efc = efcs_for(bids, current, background, tol, threads)
    ordered, price = priced_set(bids, current, efc)
    logger.info("lumpy recheck: cost %.6g -> %.6g", outcome.total_cost, best_cost)
    adjusted = build_outcome(bids, ordered, price, efc, background, standard, outcome.iterations, outcome.mode, tol, threads, outcome.history)
    return replace(adjusted, lumpy_adjusted=True)


@dataclass(frozen=True)
class EquilibriumCheck:
    reliable: bool
    violations: Tuple[str, ...]
    risk: float
    efc: EfcMap

    @property
    def ok(self) -> bool:
        return self.reliable and not self.violations


def verify_equilibrium(
    outcome: AuctionOutcome,
    bids: Sequence[Bid],
    background: ShortfallEnsemble,
    standard: Standard,
    rel_tol: float = 1e-9,
    threads: Optional[int] = None,
) -> EquilibriumCheck:
    """Recompute EFCs against the final set and re-test both market conditions."""
    by_id = {b.id: b for b in bids}
    efc = efcs_for(bids, outcome.accepted_set, background, threads=threads)
    p = outcome.clearing_price
    violations: List[str] = []
    for b in bids:
        value = p * efc[b.id]
        slack = rel_tol * max(1.0, abs(value), b.min_total_price)
        if b.id in outcome.accepted_set and b.min_total_price > value + slack:
            violations.append(f"accepted `{b.id}` bids {b.min_total_price:.6g} above its value {value:.6g}")
        elif b.id not in outcome.accepted_set and b.min_total_price < value - slack:
            violations.append(f"rejected `{b.id}` bids {b.min_total_price:.6g} below its value {value:.6g}")
    risk = rho(portfolio([by_id[i] for i in outcome.accepted]), background, standard.metric, threads)
    return EquilibriumCheck(reliable=risk <= standard.k, violations=tuple(violations), risk=risk, efc=efc)


__all__ = [
    "Bid",
    "AuctionOutcome",
    "portfolio",
    "unit_prices",
    "merit_order",
    "merit_clear",
    "efcs_against",
    "build_outcome",
    "naive_efcs",
    "exact_efcs",
    "efcs_for",
    "priced_set",
    "clear_naive_firm_efc",
    "clear",
    "run_clock",
    "descending_clock",
    "lumpy_recheck",
    "EquilibriumCheck",
    "verify_equilibrium",
]
