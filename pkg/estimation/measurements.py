"""
Measurement types and synthetic measurement generation.

Injections and flows are per unit in the consumer counting system: a bus
injection measurement is the power consumed at that bus, a flow measurement
is the power entering the branch at its ``from`` end.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple
import logging

import numpy as np

from core.errors import ConfigError, InputError
from core.utils import PathLike, load_json_file, save_json_file
from network.base import Network

logger = logging.getLogger(__name__)


class MeasurementKind(str, Enum):
    VOLTAGE = "voltage-magnitude"
    P_INJECTION = "active-injection"
    Q_INJECTION = "reactive-injection"
    P_FLOW = "active-flow"
    Q_FLOW = "reactive-flow"

    @property
    def on_branch(self) -> bool:
        return self in (MeasurementKind.P_FLOW, MeasurementKind.Q_FLOW)


@dataclass(frozen=True)
class Measurement:
    """One sensor reading in p.u. with its variance in p.u.^2."""
    kind: MeasurementKind
    location: str
    value: float
    variance: float

    def __post_init__(self):
        object.__setattr__(self, "kind", MeasurementKind(self.kind))
        if not self.variance > 0:
            raise InputError(f"Measurement {self.kind.value}@{self.location}: variance must be > 0")

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "location": self.location,
                "value": self.value, "variance": self.variance}


@dataclass(frozen=True)
class MeasurementSet:
    """Measurements taken at one scenario time."""
    measurements: Tuple[Measurement, ...]
    timestamp: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "measurements", tuple(self.measurements))

    def __len__(self) -> int:
        return len(self.measurements)

    def __iter__(self):
        return iter(self.measurements)

    def values(self) -> np.ndarray:
        return np.array([m.value for m in self.measurements], dtype=float)

    def weights(self) -> np.ndarray:
        return np.array([1.0 / m.variance for m in self.measurements], dtype=float)

    def check(self, net: Network) -> List[str]:
        """
        Consistency and observability issues of this set on ``net``.

        Returns:
            List of human-readable problems; empty when the set is usable
        """
        issues = []
        for m in self.measurements:
            known = net.has_branch(m.location) if m.kind.on_branch else net.has_bus(m.location)
            if not known:
                issues.append(f"{m.kind.value} measurement at unknown location {m.location!r}")
        needed = 2 * net.n_bus - 1
        if len(self.measurements) < needed:
            issues.append(f"observability: m = {len(self.measurements)} < 2n-1 = {needed}")
        if not any(m.kind == MeasurementKind.VOLTAGE for m in self.measurements):
            issues.append("observability: no voltage-magnitude measurement")
        return issues

    def to_dict(self) -> Dict[str, Any]:
        return {"timestamp": self.timestamp,
                "measurements": [m.to_dict() for m in self.measurements]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MeasurementSet":
        try:
            items = [Measurement(kind=MeasurementKind(d["kind"]), location=str(d["location"]),
                                 value=float(d["value"]), variance=float(d["variance"]))
                     for d in data["measurements"]]
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"invalid measurement set: {e}", field="measurements")
        return cls(measurements=tuple(items), timestamp=float(data.get("timestamp", 0.0)))

    def to_json(self, path: PathLike) -> None:
        save_json_file(self.to_dict(), path)

    @classmethod
    def from_json(cls, path: PathLike) -> "MeasurementSet":
        return cls.from_dict(load_json_file(path))


@dataclass(frozen=True)
class MeasurementPlacement:
    """Where sensors sit: (kind, location) pairs."""
    points: Tuple[Tuple[MeasurementKind, str], ...] = field(default_factory=tuple)

    @classmethod
    def full(cls, net: Network) -> "MeasurementPlacement":
        """V at every bus, P/Q injections at non-slack buses, P/Q flows on every branch."""
        slack_id = net.buses[net.slack_index].id
        points: List[Tuple[MeasurementKind, str]] = [(MeasurementKind.VOLTAGE, b) for b in net.bus_ids]
        for bus_id in net.bus_ids:
            if bus_id != slack_id:
                points += [(MeasurementKind.P_INJECTION, bus_id), (MeasurementKind.Q_INJECTION, bus_id)]
        for branch_id in net.branch_ids:
            points += [(MeasurementKind.P_FLOW, branch_id), (MeasurementKind.Q_FLOW, branch_id)]
        return cls(points=tuple(points))

    @classmethod
    def from_spec(cls, spec: Dict[str, Iterable[str]]) -> "MeasurementPlacement":
        """
        Build from a scenario block ``{"voltage": [...], "injection": [...], "flow": [...]}``.

        ``injection`` and ``flow`` entries expand into their P and Q measurements.
        """
        points: List[Tuple[MeasurementKind, str]] = []
        for bus_id in spec.get("voltage", []):
            points.append((MeasurementKind.VOLTAGE, bus_id))
        for bus_id in spec.get("injection", []):
            points += [(MeasurementKind.P_INJECTION, bus_id), (MeasurementKind.Q_INJECTION, bus_id)]
        for branch_id in spec.get("flow", []):
            points += [(MeasurementKind.P_FLOW, branch_id), (MeasurementKind.Q_FLOW, branch_id)]
        return cls(points=tuple(points))

    def __len__(self) -> int:
        return len(self.points)


def _variance_for(kind: MeasurementKind, variances: Any) -> float:
    if kind == MeasurementKind.VOLTAGE:
        return float(variances.voltage)
    if kind.on_branch:
        return float(variances.flow)
    return float(variances.injection)


def synthesize_measurements(true_state, noise_seed: int, variances,
                            placement: Optional[MeasurementPlacement] = None,
                            noise_scale: float = 1.0,
                            timestamp: float = 0.0) -> MeasurementSet:
    """
    Sample noisy sensor readings from a power-flow solution.

    Args:
        true_state: PFSolution of the simulated grid
        noise_seed: Seed for numpy's default_rng
        variances: Object with ``voltage``, ``injection`` and ``flow`` variances (p.u.^2)
        placement: Sensor placement (every bus and branch if None)
        noise_scale: Multiplier on the noise standard deviation; 0 gives exact values
        timestamp: Scenario time stamped onto the set

    Returns:
        MeasurementSet, deterministic for a fixed seed

    Raises:
        InputError: If a variance is not positive
    """
    for name in ("voltage", "injection", "flow"):
        if not getattr(variances, name) > 0:
            raise InputError(f"{name} variance must be > 0")
    net = true_state.net
    placement = placement or MeasurementPlacement.full(net)
    consumption = true_state.consumption() / net.s_base
    flows = true_state.S_from / net.s_base

    exact: List[float] = []
    for kind, location in placement.points:
        if kind == MeasurementKind.VOLTAGE:
            exact.append(true_state.voltage(location))
        elif kind == MeasurementKind.P_INJECTION:
            exact.append(float(consumption[net.bus_index(location)].real))
        elif kind == MeasurementKind.Q_INJECTION:
            exact.append(float(consumption[net.bus_index(location)].imag))
        elif kind == MeasurementKind.P_FLOW:
            exact.append(float(flows[net.branch_index(location)].real))
        else:
            exact.append(float(flows[net.branch_index(location)].imag))

    sigma = np.sqrt([_variance_for(kind, variances) for kind, _ in placement.points])
    rng = np.random.default_rng(noise_seed)
    noise = rng.standard_normal(len(exact)) * sigma * noise_scale
    values = np.asarray(exact) + noise

    measurements = tuple(
        Measurement(kind=kind, location=location, value=float(v), variance=float(s ** 2))
        for (kind, location), v, s in zip(placement.points, values, sigma))
    return MeasurementSet(measurements=measurements, timestamp=timestamp)
