"""Scenario files and the bundled synthetic scenario builders.

A scenario is a JSON document. File references (fleet, demand, bids,
demand curve) are CSV paths resolved relative to the JSON file:

    fleet CSV         id,capacity_mw,mttf_h,mttr_h
    demand CSV        period,mwh                  (one file per weather year)
    bids CSV          id,type,power_mw,energy_mwh,min_total_price
    demand curve CSV  price,capacity_mw

A document with a "builder" key ("gb_shaped" or "economic") is generated in
code from its parameters instead.
"""

import json
import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from adequacy_types import (
    DemandTrace,
    FirmBlock,
    GeneratorUnit,
    Overflow,
    ResourceSet,
    ShortfallEnsemble,
    Standard,
    Store,
    TimeGrid,
    parse_metric,
    parse_overflow,
)
from auction import Bid, efcs_against
from economics import DemandCurve, EconParams
from efc import calibrate_firm, rho
from errors import ConfigurationError, ZeroDerivativeError
from helpers import FIXTURE_STREAM, substream
from runtime_constants import (
    DEFAULT_NUM_TRACES,
    DEFAULT_SEED,
    GB_CONE_PER_MW_YEAR,
    GB_VOLL_PER_MWH,
)
from system_model import build_background

logger = logging.getLogger(__name__)

FLEET_COLUMNS = ("id", "capacity_mw", "mttf_h", "mttr_h")
DEMAND_COLUMNS = ("period", "mwh")
BID_COLUMNS = ("id", "type", "power_mw", "energy_mwh", "min_total_price")
CURVE_COLUMNS = ("price", "capacity_mw")


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    grid: TimeGrid
    fleet: Tuple[GeneratorUnit, ...]
    demand: Tuple[DemandTrace, ...]
    num_traces: int = DEFAULT_NUM_TRACES
    seed: int = DEFAULT_SEED
    load_shift_mw: float = 0.0
    resources: ResourceSet = field(default_factory=ResourceSet)
    bids: Tuple[Bid, ...] = ()
    standard: Optional[Standard] = None
    econ: Optional[EconParams] = None
    price_grid: Tuple[float, ...] = ()
    firm_levels: Tuple[float, ...] = ()
    storage_scan_ks: Tuple[float, ...] = ()
    transition_overflow: Overflow = "cap"

    def __post_init__(self) -> None:
        if self.num_traces < 1:
            raise ConfigurationError(f"Scenario `{self.name}` needs num_traces >= 1")
        if not self.demand:
            raise ConfigurationError(f"Scenario `{self.name}` has no demand trace")

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=int(seed))

    def background(self, threads: Optional[int] = None) -> ShortfallEnsemble:
        return _background(
            self.fleet, self.demand, self.num_traces, self.seed, self.grid, self.load_shift_mw, threads,
            self.transition_overflow,
        )

    def require_standard(self) -> Standard:
        if self.standard is None:
            raise ConfigurationError(f"Scenario `{self.name}` defines no reliability standard")
        return self.standard

    def require_econ(self) -> EconParams:
        if self.econ is None:
            raise ConfigurationError(f"Scenario `{self.name}` defines no economic parameters")
        return self.econ


MAX_CACHED_BACKGROUNDS = 8
_BACKGROUNDS: "OrderedDict[Tuple[Any, ...], ShortfallEnsemble]" = OrderedDict()


def _background(
    fleet: Tuple[GeneratorUnit, ...],
    demand: Tuple[DemandTrace, ...],
    num_traces: int,
    seed: int,
    grid: TimeGrid,
    load_shift_mw: float,
    threads: Optional[int],
    overflow: Overflow = "cap",
) -> ShortfallEnsemble:
    # one ensemble object per content, so risk memoisation keeps hitting;
    # least recently used ensembles are dropped past MAX_CACHED_BACKGROUNDS
    key = (fleet, demand, num_traces, seed, grid, load_shift_mw, overflow)
    if key in _BACKGROUNDS:
        _BACKGROUNDS.move_to_end(key)
        return _BACKGROUNDS[key]
    raw = build_background(fleet, list(demand), num_traces, seed, grid, threads, overflow)
    built = raw.with_load(load_shift_mw) if load_shift_mw else raw
    _BACKGROUNDS[key] = built
    while len(_BACKGROUNDS) > MAX_CACHED_BACKGROUNDS:
        _BACKGROUNDS.popitem(last=False)
    return built


# ──────────────────────────────────────────────────────────────
# CSV readers
# ──────────────────────────────────────────────────────────────

def _read_csv(
    path: Path, columns: Sequence[str], required: Sequence[str], text_columns: Sequence[str] = ()
) -> pd.DataFrame:
    if not path.is_file():
        raise ConfigurationError(f"File not found: {path}")
    try:
        frame = pd.read_csv(path, dtype={c: str for c in text_columns})
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ConfigurationError(f"Cannot parse {path}: {e}") from e
    frame.columns = [str(c).strip().lower() for c in frame.columns]
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise ConfigurationError(f"{path.name} is missing column(s) {', '.join(missing)}; expected {','.join(columns)}")
    return frame


def read_fleet(path: Path) -> Tuple[GeneratorUnit, ...]:
    frame = _read_csv(path, FLEET_COLUMNS, FLEET_COLUMNS, ("id",))
    return tuple(
        GeneratorUnit(str(r.id), float(r.capacity_mw), float(r.mttf_h), float(r.mttr_h))
        for r in frame.itertuples(index=False)
    )


def read_demand(path: Path, grid: TimeGrid) -> DemandTrace:
    frame = _read_csv(path, DEMAND_COLUMNS, DEMAND_COLUMNS).sort_values("period")
    if len(frame) != grid.n:
        raise ConfigurationError(f"{path.name} has {len(frame)} rows, grid expects {grid.n}")
    return DemandTrace(frame["mwh"].to_numpy(dtype=float), label=path.stem)


def bid_from_record(record: Dict[str, Any]) -> Bid:
    kind = str(record.get("type", "")).strip().lower()
    bid_id = str(record["id"])
    price = float(record["min_total_price"])
    if kind == "firm":
        return Bid(FirmBlock(bid_id, float(record["power_mw"])), price)
    if kind == "store":
        energy = record.get("energy_mwh")
        if energy is None or (isinstance(energy, float) and math.isnan(energy)):
            raise ConfigurationError(f"Store bid `{bid_id}` needs energy_mwh")
        return Bid(Store(bid_id, float(record["power_mw"]), float(energy)), price)
    raise ConfigurationError(f"Bid `{bid_id}` has unknown type '{kind}' (expected firm or store)")


def read_bids(path: Path) -> Tuple[Bid, ...]:
    frame = _read_csv(path, BID_COLUMNS, ("id", "type", "power_mw", "min_total_price"), ("id", "type"))
    return tuple(bid_from_record(r) for r in frame.to_dict(orient="records"))


def read_demand_curve(path: Path) -> DemandCurve:
    frame = _read_csv(path, CURVE_COLUMNS, CURVE_COLUMNS)
    return DemandCurve(list(zip(frame["price"].astype(float), frame["capacity_mw"].astype(float))))


# ──────────────────────────────────────────────────────────────
# JSON scenario documents
# ──────────────────────────────────────────────────────────────

def _resources_from(doc: Dict[str, Any]) -> ResourceSet:
    stores = tuple(Store(str(s["id"]), float(s["power_mw"]), float(s["energy_mwh"])) for s in doc.get("stores", []))
    generators = tuple(
        GeneratorUnit(str(g["id"]), float(g["capacity_mw"]), float(g["mttf_h"]), float(g["mttr_h"]))
        for g in doc.get("generators", [])
    )
    return ResourceSet(firm=float(doc.get("firm_mw", 0.0)), generators=generators, stores=stores)


def _econ_from(doc: Optional[Dict[str, Any]], root: Path) -> Optional[EconParams]:
    if not doc:
        return None
    curve: Optional[DemandCurve] = None
    if isinstance(doc.get("demand_curve"), str):
        curve = read_demand_curve(root / doc["demand_curve"])
    elif doc.get("demand_curve"):
        curve = DemandCurve([(float(p), float(c)) for p, c in doc["demand_curve"]])
    cone = doc.get("cone")
    return EconParams(voll=float(doc["voll"]), cone=None if cone is None else float(cone), demand_curve=curve)


def scenario_from_dict(doc: Dict[str, Any], root: Path) -> Scenario:
    builder = doc.get("builder")
    if builder is not None:
        params = {k: v for k, v in doc.items() if k not in ("builder", "name")}
        builders = {"gb_shaped": gb_shaped_scenario, "economic": economic_scenario}
        if builder not in builders:
            raise ConfigurationError(f"Unknown scenario builder '{builder}'")
        try:
            return builders[builder](**params)
        except TypeError as e:
            raise ConfigurationError(f"Bad parameters for builder '{builder}': {e}") from e

    try:
        grid = TimeGrid(**doc["grid"])
        name = str(doc.get("name", "scenario"))
        fleet_ref = doc.get("fleet", [])
        if isinstance(fleet_ref, str):
            fleet = read_fleet(root / fleet_ref)
        else:
            fleet = tuple(
                GeneratorUnit(str(u["id"]), float(u["capacity_mw"]), float(u["mttf_h"]), float(u["mttr_h"]))
                for u in fleet_ref
            )
        demand_refs = doc["demand"] if isinstance(doc["demand"], list) else [doc["demand"]]
        demand = tuple(read_demand(root / ref, grid) for ref in demand_refs)

        bids_ref = doc.get("bids", [])
        bids = read_bids(root / bids_ref) if isinstance(bids_ref, str) else tuple(bid_from_record(b) for b in bids_ref)

        standard = None
        if doc.get("standard"):
            standard = Standard(parse_metric(doc["standard"]["metric"]), float(doc["standard"]["k"]))

        return Scenario(
            name=name,
            grid=grid,
            fleet=fleet,
            demand=demand,
            num_traces=int(doc.get("num_traces", DEFAULT_NUM_TRACES)),
            seed=int(doc.get("seed", DEFAULT_SEED)),
            load_shift_mw=float(doc.get("load_shift_mw", 0.0)),
            resources=_resources_from(doc.get("resources", {})),
            bids=bids,
            standard=standard,
            econ=_econ_from(doc.get("econ"), root),
            price_grid=tuple(float(p) for p in doc.get("price_grid", [])),
            firm_levels=tuple(float(y) for y in doc.get("firm_levels", [])),
            storage_scan_ks=tuple(float(k) for k in doc.get("storage_scan_ks", [])),
            transition_overflow=parse_overflow(str(doc.get("transition_overflow", "cap"))),
        )
    except KeyError as e:
        raise ConfigurationError(f"Scenario document is missing key {e}") from e
    except TypeError as e:
        raise ConfigurationError(f"Malformed scenario document: {e}") from e


def load_scenario(path: Union[str, Path], seed: Optional[int] = None) -> Scenario:
    """Read a scenario document; `seed` overrides the one it declares."""
    target = Path(path)
    if not target.is_file():
        raise ConfigurationError(f"Scenario file not found: {target}")
    try:
        doc = json.loads(target.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Scenario {target.name} is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigurationError(f"Scenario {target.name} must be a JSON object")
    if seed is not None:
        doc["seed"] = int(seed)
    scenario = scenario_from_dict(doc, target.parent)
    logger.info("loaded scenario `%s` from %s", scenario.name, target)
    return scenario


# ──────────────────────────────────────────────────────────────
# Synthetic builders
# ──────────────────────────────────────────────────────────────

GB_FLEET_UNITS = 230
GB_FLEET_MW = 61_360.0
GB_MTTF_H = 50.0
GB_TARGET_FIRM_MW = 1973.0
GB_STANDARD_LOLE_H = 3.0

# (power MW, [(energy MWh, count), ...]) for the 120 storage bids
GB_STORE_MIX: Tuple[Tuple[float, Tuple[Tuple[float, int], ...]], ...] = (
    (50.0, ((12.5, 10), (25.0, 15), (50.0, 15), (100.0, 20))),
    (100.0, ((25.0, 10), (50.0, 15), (100.0, 15), (200.0, 20))),
)
GB_FIRM_SIZES_MW: Tuple[float, ...] = tuple(float(10 * m) for m in range(1, 11))
GB_FIRM_COPIES = 3
GB_UNIT_PRICE = 25_000.0
# firm share of the requirement in the set that prices the offers
GB_REFERENCE_FIRM_SHARE = 0.3


def synthetic_fleet(
    seed: int,
    units: int = GB_FLEET_UNITS,
    total_mw: float = GB_FLEET_MW,
    mttf_h: float = GB_MTTF_H,
    availability: Tuple[float, float] = (0.85, 0.95),
) -> Tuple[GeneratorUnit, ...]:
    """Lognormal unit sizes scaled to the fleet total; availability uniform in the given range."""
    rng = substream(seed, FIXTURE_STREAM, 0, 1)
    sizes = rng.lognormal(mean=0.0, sigma=0.6, size=units)
    sizes *= total_mw / sizes.sum()
    avail = rng.uniform(availability[0], availability[1], size=units)
    return tuple(
        GeneratorUnit(f"unit_{i:03d}", float(c), mttf_h, mttf_h * (1 - a) / a)
        for i, (c, a) in enumerate(zip(sizes, avail))
    )


def winter_demand(
    seed: int,
    grid: TimeGrid,
    peak_mw: float,
    trough_fraction: float = 0.6,
    noise_fraction: float = 0.03,
    year: int = 0,
) -> DemandTrace:
    """
    Hourly demand net of wind: an evening peak on each day, a mid-season
    maximum across days and autocorrelated weather noise.
    """
    rng = substream(seed, FIXTURE_STREAM, year, 2)
    P = grid.periods_per_day
    hour = (np.arange(P) + 0.5) * 24.0 / P
    daily = np.exp(-0.5 * ((hour - 17.5) / 2.5) ** 2) + 0.35 * np.exp(-0.5 * ((hour - 9.0) / 3.0) ** 2)
    daily = trough_fraction + (1 - trough_fraction) * daily / daily.max()
    day = np.arange(grid.num_days)
    season = 0.9 + 0.1 * np.sin(np.pi * (day + 0.5) / grid.num_days)
    weather = np.zeros(grid.num_days)
    shocks = rng.normal(0.0, noise_fraction, size=grid.num_days)
    for d in range(grid.num_days):
        weather[d] = (0.7 * weather[d - 1] if d else 0.0) + shocks[d]
    hourly_noise = rng.normal(0.0, noise_fraction / 3, size=grid.n)
    mw = peak_mw * (np.outer(season * (1 + weather), daily).ravel() + hourly_noise)
    return DemandTrace(mw * grid.period_length, label=f"winter_{year}")


def gb_store_bids() -> List[Store]:
    stores = []
    for power, mix in GB_STORE_MIX:
        for energy, count in mix:
            for copy in range(count):
                stores.append(Store(f"store_{power:g}mw_{energy:g}mwh_{copy:02d}", power, energy))
    return stores


def gb_firm_blocks() -> List[FirmBlock]:
    return [
        FirmBlock(f"firm_{size:g}mw_{copy}", size)
        for size in GB_FIRM_SIZES_MW
        for copy in range(GB_FIRM_COPIES)
    ]


def interleaved(stores: Sequence[Store]) -> List[Store]:
    """Stores reordered so that every prefix holds each shape in proportion to its count."""
    groups: Dict[Tuple[float, float], List[Store]] = {}
    for s in stores:
        groups.setdefault((s.power, s.energy), []).append(s)
    keyed = [
        ((i + 0.5) / len(group), shape, s.id, s)
        for shape, group in groups.items()
        for i, s in enumerate(group)
    ]
    return [entry[3] for entry in sorted(keyed, key=lambda e: e[:3])]


def approximate_final_set(
    stores: Sequence[Store],
    background: ShortfallEnsemble,
    standard: Standard,
    firm_mw: float,
    threads: Optional[int] = None,
) -> ResourceSet:
    """
    Guess at the set an auction of these offers ends with: `firm_mw` of firm
    capacity plus the shortest proportional prefix of the stores that meets
    the standard (all of them if none does).
    """
    order = interleaved(stores)

    def with_prefix(m: int) -> ResourceSet:
        return ResourceSet(firm=firm_mw, stores=tuple(sorted(order[:m], key=lambda s: s.id)))

    def meets(m: int) -> bool:
        return rho(with_prefix(m), background, standard.metric, threads) <= standard.k

    lo, hi = 0, len(order)
    if not meets(hi):
        return with_prefix(hi)
    while lo < hi:
        mid = (lo + hi) // 2
        if meets(mid):
            hi = mid
        else:
            lo = mid + 1
    return with_prefix(lo)


@lru_cache(maxsize=8)
def gb_shaped_scenario(
    seed: int = DEFAULT_SEED,
    num_traces: int = DEFAULT_NUM_TRACES,
    num_days: int = 151,
    target_firm_mw: float = GB_TARGET_FIRM_MW,
    standard_lole_h: float = GB_STANDARD_LOLE_H,
    price_noise: float = 0.2,
    unit_price: float = GB_UNIT_PRICE,
    reference_firm_share: float = GB_REFERENCE_FIRM_SHARE,
    threads: Optional[int] = None,
) -> Scenario:
    """
    Storage-heavy synthetic system with the structure of the GB winter study.

    The background is shifted so that `target_firm_mw` of firm capacity is
    exactly what the LOLE standard needs; the standard itself is stated in
    EEU at that point. Bid prices are proportional to each offer's EFC with
    multiplicative noise: firm blocks at their capacity, stores at their
    marginal EFC against an approximation of the mixed set the auction
    should end with (`reference_firm_share` of the requirement as firm plus
    just enough stores). Offers are then competitive with each other only
    when store EFCs are measured against that kind of set.
    """
    grid = TimeGrid(periods_per_day=24, num_days=num_days)
    fleet = synthetic_fleet(seed)
    peak = 0.92 * sum(u.capacity * u.availability for u in fleet)
    demand = (winter_demand(seed, grid, peak),)
    # calibrate under a large offset load so the firm requirement is positive
    offset_mw = 0.25 * GB_FLEET_MW
    offset = _background(fleet, demand, num_traces, seed, grid, offset_mw, threads)
    y_offset = calibrate_firm(offset, "lole", standard_lole_h, threads=threads)
    shift = target_firm_mw - (y_offset - offset_mw)
    background = _background(fleet, demand, num_traces, seed, grid, shift, threads)
    y0 = calibrate_firm(background, "lole", standard_lole_h, threads=threads)
    k = rho(ResourceSet(firm=y0), background, "eeu", threads)

    stores = gb_store_bids()
    firm = gb_firm_blocks()
    provisional = tuple(Bid(s, 0.0) for s in stores) + tuple(Bid(f, 0.0) for f in firm)
    standard = Standard("eeu", k)
    reference = approximate_final_set(stores, background, standard, reference_firm_share * y0, threads)
    logger.info("gb_shaped pricing set: %.1f MW firm and %d stores", reference.firm, len(reference.stores))
    try:
        approx = efcs_against(provisional, frozenset(), background, threads, reference=reference)
    except ZeroDerivativeError:
        logger.warning("pricing set has no EEU slope; pricing stores against firm capacity only")
        approx = efcs_against(provisional, frozenset(), background, threads, reference=ResourceSet(firm=y0))

    rng = substream(seed, FIXTURE_STREAM, 0, 3)
    noise = rng.uniform(-price_noise, price_noise, size=len(provisional))
    bids = tuple(
        Bid(b.resource, unit_price * max(approx[b.id], 0.01 * b.nominal_mw) * (1 + eps))
        for b, eps in zip(provisional, noise)
    )
    logger.info(
        "gb_shaped scenario: shift %.1f MW, firm for %.1f h LOLE = %.1f MW, EEU standard %.4g MWh",
        shift, standard_lole_h, y0, k,
    )
    return Scenario(
        name="gb_shaped",
        grid=grid,
        fleet=fleet,
        demand=demand,
        num_traces=num_traces,
        seed=seed,
        load_shift_mw=shift,
        resources=ResourceSet(firm=y0),
        bids=bids,
        standard=standard,
        econ=EconParams(voll=GB_VOLL_PER_MWH, cone=GB_CONE_PER_MW_YEAR),
        price_grid=tuple(float(p) for p in np.linspace(2.0 * unit_price, 0.0, 81)),
        firm_levels=tuple(float(y) for y in np.linspace(0.0, 2.0 * target_firm_mw, 9)),
        storage_scan_ks=tuple(float(k * f) for f in (0.5, 1.0, 2.0)),
    )


@lru_cache(maxsize=8)
def economic_scenario(
    seed: int = DEFAULT_SEED,
    num_traces: int = 400,
    num_days: int = 90,
    units: int = 40,
    unit_mw: float = 100.0,
    availability: float = 0.9,
    voll: float = GB_VOLL_PER_MWH,
    cone: float = GB_CONE_PER_MW_YEAR,
    threads: Optional[int] = None,
) -> Scenario:
    """Storage-free system with enough traces to resolve LOLE to a few hundredths of an hour."""
    grid = TimeGrid(periods_per_day=24, num_days=num_days)
    mttf = GB_MTTF_H
    fleet = tuple(
        GeneratorUnit(f"unit_{i:02d}", unit_mw, mttf, mttf * (1 - availability) / availability)
        for i in range(units)
    )
    peak = 0.95 * units * unit_mw * availability
    demand = (winter_demand(seed, grid, peak),)
    econ = EconParams(voll=voll, cone=cone)
    return Scenario(
        name="economic",
        grid=grid,
        fleet=fleet,
        demand=demand,
        num_traces=num_traces,
        seed=seed,
        standard=Standard("lole", cone / voll),
        econ=econ,
        firm_levels=tuple(float(y) for y in np.linspace(0.0, 0.3 * units * unit_mw, 7)),
    )


__all__ = [
    "Scenario",
    "read_fleet",
    "read_demand",
    "read_bids",
    "read_demand_curve",
    "bid_from_record",
    "scenario_from_dict",
    "load_scenario",
    "synthetic_fleet",
    "winter_demand",
    "gb_store_bids",
    "gb_firm_blocks",
    "interleaved",
    "approximate_final_set",
    "gb_shaped_scenario",
    "economic_scenario",
]
