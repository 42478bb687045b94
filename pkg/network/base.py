"""
Grid topology value types.

All types are frozen; operations that change a network (``apply_tap``) return
a new instance.
"""
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import networkx as nx

from core.errors import TapLimitError, TopologyError

SLACK = "slack"
LOAD = "load"
FLEXIBILITY = "flexibility-connection"
BUS_KINDS = (SLACK, LOAD, FLEXIBILITY)

CABLE = "cable"
TRANSFORMER = "transformer"
BRANCH_KINDS = (CABLE, TRANSFORMER)


@dataclass(frozen=True)
class Bus:
    """Busbar of the grid."""
    id: str
    base_voltage: float  # kV, line-to-line
    kind: str = LOAD

    def __post_init__(self):
        if self.base_voltage <= 0:
            raise TopologyError(f"Bus {self.id}: base_voltage must be > 0, got {self.base_voltage}")
        if self.kind not in BUS_KINDS:
            raise TopologyError(f"Bus {self.id}: unknown kind {self.kind!r}")


@dataclass(frozen=True)
class Branch:
    """
    Cable or two-winding transformer between two buses.

    Series impedance is in ohms referred to the ``to`` bus voltage base. For a
    transformer the ``from`` bus is the MV side and the turns ratio scales the
    ``to`` side voltage.
    """
    id: str
    from_bus: str
    to_bus: str
    series_resistance: float  # ohm
    series_reactance: float  # ohm
    rating: float  # kVA
    shunt_susceptance: float = 0.0  # S, total, split half per end
    kind: str = CABLE
    tap_position: int = 0
    tap_neutral: int = 0
    tap_step_voltage: float = 0.0  # p.u. per step
    tap_limits: Tuple[int, int] = (0, 0)

    def __post_init__(self):
        if self.series_resistance < 0:
            raise TopologyError(f"Branch {self.id}: resistance must be >= 0")
        if self.rating <= 0:
            raise TopologyError(f"Branch {self.id}: rating must be > 0")
        if self.kind not in BRANCH_KINDS:
            raise TopologyError(f"Branch {self.id}: unknown kind {self.kind!r}")
        if self.kind == TRANSFORMER:
            low, high = self.tap_limits
            if not low <= self.tap_position <= high:
                raise TapLimitError(
                    f"Branch {self.id}: tap {self.tap_position} outside limits [{low}, {high}]")

    @property
    def is_transformer(self) -> bool:
        return self.kind == TRANSFORMER

    @property
    def ratio(self) -> float:
        """Turns ratio t = 1 + (tau - tau_neutral) * step; 1.0 for cables."""
        if not self.is_transformer:
            return 1.0
        return 1.0 + (self.tap_position - self.tap_neutral) * self.tap_step_voltage

    def with_tap(self, position: int) -> "Branch":
        if not self.is_transformer:
            raise TopologyError(f"Branch {self.id} is not a transformer")
        low, high = self.tap_limits
        if not low <= position <= high:
            raise TapLimitError(f"Branch {self.id}: tap {position} outside limits [{low}, {high}]")
        return replace(self, tap_position=int(position))


@dataclass(frozen=True)
class Network:
    """Buses, branches and the apparent-power base."""
    buses: Tuple[Bus, ...]
    branches: Tuple[Branch, ...]
    s_base: float = 100.0  # kVA
    name: str = "network"
    _bus_index: Dict[str, int] = field(default=None, init=False, repr=False, compare=False)
    _branch_index: Dict[str, int] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "branches", tuple(self.branches))
        if self.s_base <= 0:
            raise TopologyError("s_base must be > 0")

        bus_index: Dict[str, int] = {}
        for i, bus in enumerate(self.buses):
            if bus.id in bus_index:
                raise TopologyError(f"Duplicate bus id {bus.id!r}")
            bus_index[bus.id] = i
        branch_index: Dict[str, int] = {}
        for k, branch in enumerate(self.branches):
            if branch.id in branch_index:
                raise TopologyError(f"Duplicate branch id {branch.id!r}")
            for end in (branch.from_bus, branch.to_bus):
                if end not in bus_index:
                    raise TopologyError(f"Branch {branch.id}: unknown bus {end!r}")
            if branch.from_bus == branch.to_bus:
                raise TopologyError(f"Branch {branch.id}: both ends at {branch.from_bus!r}")
            branch_index[branch.id] = k

        slacks = [b.id for b in self.buses if b.kind == SLACK]
        if len(slacks) != 1:
            raise TopologyError(f"Network needs exactly one slack bus, found {len(slacks)}")

        object.__setattr__(self, "_bus_index", bus_index)
        object.__setattr__(self, "_branch_index", branch_index)

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def n_branch(self) -> int:
        return len(self.branches)

    @property
    def slack_index(self) -> int:
        return next(i for i, b in enumerate(self.buses) if b.kind == SLACK)

    @property
    def bus_ids(self) -> List[str]:
        return [b.id for b in self.buses]

    @property
    def branch_ids(self) -> List[str]:
        return [br.id for br in self.branches]

    def bus_index(self, bus_id: str) -> int:
        try:
            return self._bus_index[bus_id]
        except KeyError:
            raise TopologyError(f"Unknown bus {bus_id!r}")

    def branch_index(self, branch_id: str) -> int:
        try:
            return self._branch_index[branch_id]
        except KeyError:
            raise TopologyError(f"Unknown branch {branch_id!r}")

    def branch(self, branch_id: str) -> Branch:
        return self.branches[self.branch_index(branch_id)]

    def has_bus(self, bus_id: str) -> bool:
        return bus_id in self._bus_index

    def has_branch(self, branch_id: str) -> bool:
        return branch_id in self._branch_index

    def transformers(self) -> List[Branch]:
        return [br for br in self.branches if br.is_transformer]

    def graph(self) -> nx.MultiGraph:
        g = nx.MultiGraph()
        g.add_nodes_from(self.bus_ids)
        for br in self.branches:
            g.add_edge(br.from_bus, br.to_bus, key=br.id)
        return g

    def is_connected(self) -> bool:
        return nx.is_connected(self.graph())

    def replace_branch(self, branch: Branch) -> "Network":
        k = self.branch_index(branch.id)
        branches = list(self.branches)
        branches[k] = branch
        return Network(buses=self.buses, branches=tuple(branches), s_base=self.s_base, name=self.name)
