"""
Scenario definition: network, assets, exogenous series, limit schedule and events.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple
import logging
import math

import numpy as np
import pandas as pd

from assets.base import AssetModel
from assets.oltc import OLTCModel
from core.errors import ConfigError
from estimation.measurements import MeasurementPlacement
from network.base import Network
from optimization.problem import DEFAULT_VOLTAGE_BAND

logger = logging.getLogger(__name__)

LINEAR = "linear"
PREVIOUS = "previous"


@dataclass(frozen=True)
class Series:
    """
    Time series sampled at ``times`` (s).

    ``linear`` interpolates between samples, ``previous`` holds the last sample
    at or before the query time.
    """
    name: str
    times: Tuple[float, ...]
    values: Tuple[float, ...]
    interpolation: str = LINEAR

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.times or len(self.times) != len(self.values):
            raise ConfigError("series needs matching, non-empty time and value columns", field=self.name)
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ConfigError("time_s must be strictly increasing", field=self.name)
        if not all(math.isfinite(v) for v in self.values):
            raise ConfigError("non-finite value", field=self.name)
        if self.interpolation not in (LINEAR, PREVIOUS):
            raise ConfigError(f"unknown interpolation {self.interpolation!r}", field=self.name)

    @classmethod
    def constant(cls, name: str, value: float) -> "Series":
        return cls(name, (0.0,), (value,), PREVIOUS)

    @classmethod
    def from_csv(cls, path: str, name: Optional[str] = None, interpolation: str = LINEAR) -> "Series":
        """
        Read a ``time_s,value`` CSV file.

        Raises:
            ConfigError: Naming the file and the offending line
        """
        name = name or str(path)
        try:
            frame = pd.read_csv(path)
        except FileNotFoundError:
            raise ConfigError("series file not found", source=str(path))
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise ConfigError(f"unreadable CSV: {e}", source=str(path))
        missing = {"time_s", "value"} - set(frame.columns)
        if missing:
            raise ConfigError(f"missing columns {sorted(missing)}", source=str(path), field="header")
        for column in ("time_s", "value"):
            numeric = pd.to_numeric(frame[column], errors="coerce")
            bad = numeric.isna()
            if bad.any():
                # header is line 1
                line = int(bad.to_numpy().nonzero()[0][0]) + 2
                raise ConfigError(f"non-numeric {column}", source=str(path), field=f"line {line}")
            frame[column] = numeric
        try:
            return cls(name, tuple(frame["time_s"]), tuple(frame["value"]), interpolation)
        except ConfigError as e:
            raise ConfigError(e.message, source=str(path), field=e.field)

    @property
    def start(self) -> float:
        return self.times[0]

    @property
    def end(self) -> float:
        return self.times[-1]

    def covers(self, t0: float, t_end: float) -> bool:
        return self.start <= t0 and self.end >= t_end

    def value_at(self, t: float) -> float:
        if self.interpolation == PREVIOUS:
            index = int(np.searchsorted(self.times, t, side="right")) - 1
            return self.values[max(index, 0)]
        return float(np.interp(t, self.times, self.values))


@dataclass(frozen=True)
class LimitInterval:
    """S_max (kVA) valid on [start, end)."""
    start: float
    end: float
    s_max: float

    def __post_init__(self):
        if not self.s_max > 0:
            raise ConfigError(f"S_max must be > 0, got {self.s_max}", field="schedule")
        if not self.end > self.start:
            raise ConfigError(f"empty interval [{self.start}, {self.end})", field="schedule")

    def contains(self, t: float) -> bool:
        return self.start <= t < self.end


@dataclass(frozen=True)
class LimitSchedule:
    """Time-varying branch limits and per-bus voltage bands."""
    branch_limits: Mapping[str, Tuple[LimitInterval, ...]] = field(default_factory=dict)
    voltage_band: Tuple[float, float] = DEFAULT_VOLTAGE_BAND
    bus_bands: Mapping[str, Tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        ordered = {}
        for branch_id, intervals in self.branch_limits.items():
            ordered[branch_id] = tuple(sorted(intervals, key=lambda iv: iv.start))
        object.__setattr__(self, "branch_limits", ordered)
        object.__setattr__(self, "voltage_band", tuple(self.voltage_band))
        object.__setattr__(self, "bus_bands", {k: tuple(v) for k, v in self.bus_bands.items()})
        for name, (low, high) in [("voltage_band", self.voltage_band), *self.bus_bands.items()]:
            if not 0 < low < high:
                raise ConfigError(f"invalid band ({low}, {high})", field=name)

    @property
    def branches(self) -> List[str]:
        return list(self.branch_limits)

    def limits_at(self, t: float) -> Dict[str, float]:
        """Branch id -> S_max of the interval containing ``t``; branches in a gap are omitted."""
        limits = {}
        for branch_id, intervals in self.branch_limits.items():
            for interval in intervals:
                if interval.contains(t):
                    limits[branch_id] = interval.s_max
                    break
        return limits

    def band(self, bus_id: str) -> Tuple[float, float]:
        return self.bus_bands.get(bus_id, self.voltage_band)

    def issues(self, t0: float, t_end: float) -> List[str]:
        """Overlaps and coverage gaps of every branch schedule over [t0, t_end]."""
        problems = []
        for branch_id, intervals in self.branch_limits.items():
            cursor = t0
            for interval in intervals:
                if interval.start > cursor:
                    problems.append(f"schedule gap on {branch_id}: [{cursor:g}, {interval.start:g}) s")
                elif interval.start < cursor and interval is not intervals[0]:
                    problems.append(f"schedule overlap on {branch_id} at {interval.start:g} s")
                cursor = max(cursor, interval.end)
            if cursor <= t_end:
                problems.append(f"schedule gap on {branch_id}: [{cursor:g}, {t_end:g}] s")
        return problems

    def to_dict(self) -> Dict[str, Any]:
        return {
            "branches": {b: [[iv.start, None if math.isinf(iv.end) else iv.end, iv.s_max] for iv in ivs]
                         for b, ivs in self.branch_limits.items()},
            "voltage_band": list(self.voltage_band),
            "bus_bands": {k: list(v) for k, v in self.bus_bands.items()},
        }


@dataclass(frozen=True)
class Event:
    """Asset attribute change taking effect for every step strictly after ``time``."""
    time: float
    asset_id: str
    attribute: str
    value: Any

    def active(self, t: float) -> bool:
        return t > self.time


@dataclass(frozen=True)
class MeterSpec:
    """A measurement device at a bus (voltage, injection) or on a branch (flow)."""
    meter_id: str
    bus: Optional[str] = None
    branch: Optional[str] = None
    measures: Tuple[str, ...] = ("voltage", "injection")

    def __post_init__(self):
        object.__setattr__(self, "measures", tuple(self.measures))
        if (self.bus is None) == (self.branch is None):
            raise ConfigError("meter needs exactly one of bus or branch", field=self.meter_id)
        allowed = ("flow",) if self.branch is not None else ("voltage", "injection")
        unknown = set(self.measures) - set(allowed)
        if unknown or not self.measures:
            raise ConfigError(f"meter measures {sorted(self.measures)} not in {list(allowed)}",
                              field=self.meter_id)

    @property
    def location(self) -> str:
        return self.bus if self.bus is not None else self.branch


@dataclass(frozen=True)
class Scenario:
    """
    One test run definition.

    ``assets`` holds the initial asset models keyed by id; ``loads`` maps a
    resistive-load asset id to its power series (kW); ``endpoints`` maps asset
    and meter ids to (host, port, unit) for the register bus.
    """
    name: str
    network: Network
    assets: Mapping[str, AssetModel]
    meters: Tuple[MeterSpec, ...]
    irradiance: Series
    temperature: Series
    loads: Mapping[str, Series]
    schedule: LimitSchedule
    events: Tuple[Event, ...] = ()
    period: float = 15.0
    t0: float = 0.0
    t_end: float = 660.0
    rts_id: str = "RTS"
    endpoints: Mapping[str, Tuple[str, int, int]] = field(default_factory=dict)
    source: str = "<memory>"

    def __post_init__(self):
        object.__setattr__(self, "meters", tuple(self.meters))
        object.__setattr__(self, "events", tuple(sorted(self.events, key=lambda e: e.time)))
        if not self.period > 0:
            raise ConfigError("period must be > 0", source=self.source, field="period")
        if not self.t_end > self.t0:
            raise ConfigError("t_end must be after t0", source=self.source, field="t_end")

    @property
    def steps(self) -> List[float]:
        """Cycle times t0 + k * period inside [t0, t_end)."""
        count = int(math.floor((self.t_end - self.t0) / self.period + 1e-9))
        return [self.t0 + k * self.period for k in range(count)]

    @property
    def placement(self) -> MeasurementPlacement:
        spec: Dict[str, List[str]] = {"voltage": [], "injection": [], "flow": []}
        for meter in self.meters:
            for quantity in meter.measures:
                spec[quantity].append(meter.location)
        return MeasurementPlacement.from_spec(spec)

    @property
    def oltc(self) -> Optional[OLTCModel]:
        for asset in self.assets.values():
            if isinstance(asset, OLTCModel):
                return asset
        return None

    def assets_of(self, kind: str) -> List[AssetModel]:
        return [a for a in self.assets.values() if a.kind == kind]

    def issues(self) -> List[str]:
        """Coverage, schedule, placement and observability problems; empty when valid."""
        problems = []
        last = self.steps[-1] if self.steps else self.t_end
        for series in (self.irradiance, self.temperature, *self.loads.values()):
            if not series.covers(self.t0, last):
                problems.append(f"series {series.name} covers [{series.start:g}, {series.end:g}] s, "
                                f"needs [{self.t0:g}, {last:g}] s")
        problems += self.schedule.issues(self.t0, last)
        for branch_id in self.schedule.branches:
            if not self.network.has_branch(branch_id):
                problems.append(f"schedule names unknown branch {branch_id!r}")
        for bus_id in self.schedule.bus_bands:
            if not self.network.has_bus(bus_id):
                problems.append(f"voltage band for unknown bus {bus_id!r}")
        for asset in self.assets.values():
            if not self.network.has_bus(asset.bus):
                problems.append(f"asset {asset.asset_id} at unknown bus {asset.bus!r}")
        for event in self.events:
            if event.asset_id not in self.assets:
                problems.append(f"event at {event.time:g} s targets unknown asset {event.asset_id!r}")
        for meter in self.meters:
            known = self.network.has_branch(meter.branch) if meter.branch else self.network.has_bus(meter.bus)
            if not known:
                problems.append(f"meter {meter.meter_id} at unknown location {meter.location!r}")
        needed = 2 * self.network.n_bus - 1
        if len(self.placement) < needed:
            problems.append(f"observability: m = {len(self.placement)} < 2n-1 = {needed}")
        if not any("voltage" in m.measures for m in self.meters):
            problems.append("observability: no voltage-magnitude measurement")
        return problems
