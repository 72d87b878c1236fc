"""Domain types shared by every engine module.

Units are fixed: power in MW, energy in MWh, time in hours. Depth and residual
demand arrays are MW per period; multiply by `period_length` for MWh.
"""

from dataclasses import dataclass, replace
from typing import Any, Iterable, List, Literal, Protocol, Tuple, Union, cast

import numpy as np
import numpy.typing as npt

from errors import ConfigurationError

# Keep this module free of engine imports to avoid circular imports.

FloatArray = npt.NDArray[np.float64]
Metric = Literal["lole", "eeu"]
METRICS: Tuple[Metric, ...] = ("lole", "eeu")
# what to do with a per-period leave probability above 1
Overflow = Literal["cap", "scale"]
OVERFLOW_RULES: Tuple[Overflow, ...] = ("cap", "scale")


class ReplyEnv(Protocol):
    """Minimal protocol for whatever receives tool replies.

    Satisfied by the NEAR AI `Environment`, the CLI's console env and a mock
    in tests.
    """

    def add_reply(self, message: str) -> Any:
        ...


def parse_metric(value: str) -> Metric:
    metric = value.strip().lower()
    if metric not in METRICS:
        raise ConfigurationError(f"Unknown risk metric '{value}' (expected lole or eeu)")
    return cast(Metric, metric)



def parse_overflow(value: str) -> Overflow:
    rule = value.strip().lower()
    if rule not in OVERFLOW_RULES:
        raise ConfigurationError(f"Unknown transition overflow rule '{value}' (expected cap or scale)")
    return cast(Overflow, rule)


@dataclass(frozen=True)
class TimeGrid:
    periods_per_day: int
    num_days: int
    period_length: float = 1.0

    def __post_init__(self) -> None:
        if self.periods_per_day < 1 or self.num_days < 1:
            raise ConfigurationError(
                f"Time grid needs at least one period (got {self.periods_per_day} x {self.num_days})"
            )
        if not self.period_length > 0:
            raise ConfigurationError(f"period_length must be positive (got {self.period_length})")

    @property
    def n(self) -> int:
        return self.periods_per_day * self.num_days

    @property
    def season_hours(self) -> float:
        return self.n * self.period_length


@dataclass(frozen=True)
class GeneratorUnit:
    id: str
    capacity: float
    mttf: float
    mttr: float

    def __post_init__(self) -> None:
        if not self.capacity > 0:
            raise ConfigurationError(f"Generator `{self.id}` needs capacity > 0")
        if not (self.mttf > 0 and self.mttr > 0):
            raise ConfigurationError(f"Generator `{self.id}` needs mttf > 0 and mttr > 0")

    @property
    def availability(self) -> float:
        """Equilibrium probability of being available."""
        return self.mttf / (self.mttf + self.mttr)


@dataclass(frozen=True)
class FirmBlock:
    """Firm capacity offered as a single resource."""

    id: str
    capacity: float

    def __post_init__(self) -> None:
        if not self.capacity > 0:
            raise ConfigurationError(f"Firm block `{self.id}` needs capacity > 0")


@dataclass(frozen=True)
class Store:
    id: str
    power: float
    energy: float

    def __post_init__(self) -> None:
        if not (self.power > 0 and self.energy > 0):
            raise ConfigurationError(f"Store `{self.id}` needs power > 0 and energy > 0")

    @property
    def lifetime(self) -> float:
        """Residual lifetime at full charge, in hours."""
        return self.energy / self.power


@dataclass(frozen=True, eq=False)
class VariableGenerator:
    """Wind or solar output, one value per period (or one row per trace)."""

    id: str
    output: FloatArray

    def __post_init__(self) -> None:
        values = np.asarray(self.output, dtype=float)
        if values.ndim not in (1, 2) or not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ConfigurationError(f"Variable generator `{self.id}` needs finite, non-negative output")
        object.__setattr__(self, "output", values)

    @property
    def capacity(self) -> float:
        return float(self.output.max()) if self.output.size else 0.0


Resource = Union[FirmBlock, GeneratorUnit, Store, VariableGenerator]


def nominal_capacity(resource: Union[Resource, Iterable[Resource]]) -> float:
    """Nameplate MW of a resource or bundle; an upper bound on its EFC."""
    if isinstance(resource, (FirmBlock, GeneratorUnit, VariableGenerator)):
        return float(resource.capacity)
    if isinstance(resource, Store):
        return float(resource.power)
    return float(sum(nominal_capacity(r) for r in resource))


def bundle_of(resource: Union[Resource, Iterable[Resource]]) -> List[Resource]:
    if isinstance(resource, (FirmBlock, GeneratorUnit, Store, VariableGenerator)):
        return [resource]
    return list(resource)


@dataclass(frozen=True, eq=False)
class DemandTrace:
    values: FloatArray
    label: str = "demand"

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0 or not np.all(np.isfinite(values)):
            raise ConfigurationError(f"Demand trace `{self.label}` must be a finite 1-D sequence")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class ResourceSet:
    """The portfolio R; `plus_firm(y)` is the R + y of the risk notation."""

    firm: float = 0.0
    generators: Tuple[GeneratorUnit, ...] = ()
    stores: Tuple[Store, ...] = ()
    variable: Tuple[VariableGenerator, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "stores", tuple(self.stores))
        object.__setattr__(self, "variable", tuple(self.variable))
        if self.firm < 0:
            # float noise from subtracting blocks
            if self.firm > -1e-9:
                object.__setattr__(self, "firm", 0.0)
            else:
                raise ConfigurationError(f"Firm capacity must be >= 0 (got {self.firm})")
        ids = self.ids
        if len(ids) != len(set(ids)):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ConfigurationError(f"Duplicate resource ids: {', '.join(dupes)}")

    @property
    def ids(self) -> Tuple[str, ...]:
        return tuple(r.id for r in (*self.generators, *self.stores, *self.variable))

    @property
    def is_storage_free(self) -> bool:
        return not self.stores

    def plus_firm(self, y: float) -> "ResourceSet":
        return replace(self, firm=self.firm + float(y))

    def with_resource(self, resource: Union[Resource, Iterable[Resource]]) -> "ResourceSet":
        out = self
        for r in bundle_of(resource):
            if isinstance(r, FirmBlock):
                out = out.plus_firm(r.capacity)
            elif isinstance(r, GeneratorUnit):
                out = replace(out, generators=(*out.generators, r))
            elif isinstance(r, Store):
                out = replace(out, stores=(*out.stores, r))
            else:
                out = replace(out, variable=(*out.variable, r))
        return out

    def without(self, resource: Union[Resource, Iterable[Resource]]) -> "ResourceSet":
        out = self
        for r in bundle_of(resource):
            if isinstance(r, FirmBlock):
                out = out.plus_firm(-r.capacity)
            else:
                out = replace(
                    out,
                    generators=tuple(g for g in out.generators if g.id != r.id),
                    stores=tuple(s for s in out.stores if s.id != r.id),
                    variable=tuple(v for v in out.variable if v.id != r.id),
                )
        return out

    def without_stores(self) -> "ResourceSet":
        return replace(self, stores=())


@dataclass(frozen=True, eq=False)
class ShortfallEnsemble:
    """Simulated residual demand (MW), one row per trace; positive = shortfall."""

    residual: FloatArray
    grid: TimeGrid
    seed: int = 0
    overflow: Overflow = "cap"

    def __post_init__(self) -> None:
        parse_overflow(self.overflow)
        residual = np.array(self.residual, dtype=float, copy=True)
        if residual.ndim == 1:
            residual = residual[None, :]
        if residual.ndim != 2 or residual.shape[0] < 1:
            raise ConfigurationError("Background needs at least one trace")
        if residual.shape[1] != self.grid.n:
            raise ConfigurationError(
                f"Background traces have {residual.shape[1]} periods, grid expects {self.grid.n}"
            )
        residual.setflags(write=False)
        object.__setattr__(self, "residual", residual)

    @property
    def num_traces(self) -> int:
        return int(self.residual.shape[0])

    @property
    def traces(self) -> List[FloatArray]:
        return [row for row in self.residual]

    def with_load(self, load_mw: float) -> "ShortfallEnsemble":
        """Same ensemble with constant extra load (MW) in every period."""
        return ShortfallEnsemble(self.residual + float(load_mw), self.grid, self.seed, self.overflow)


@dataclass(frozen=True)
class Standard:
    """Reliability condition rho(R) <= k."""

    metric: Metric
    k: float

    def __post_init__(self) -> None:
        parse_metric(self.metric)
        if self.k < 0:
            raise ConfigurationError(f"Standard level k must be >= 0 (got {self.k})")

    def describe(self) -> str:
        unit = "h" if self.metric == "lole" else "MWh"
        return f"{self.metric.upper()} <= {self.k:.6g} {unit}"


__all__ = [
    "FloatArray",
    "Metric",
    "METRICS",
    "Overflow",
    "OVERFLOW_RULES",
    "ReplyEnv",
    "parse_metric",
    "parse_overflow",
    "TimeGrid",
    "GeneratorUnit",
    "FirmBlock",
    "Store",
    "VariableGenerator",
    "Resource",
    "nominal_capacity",
    "bundle_of",
    "DemandTrace",
    "ResourceSet",
    "ShortfallEnsemble",
    "Standard",
]
