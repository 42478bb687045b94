"""
Scenario runner: replays one scenario in one mode.
"""
from contextlib import contextmanager
from typing import Dict, Iterator, List, Optional, Tuple
import logging
import os

from tqdm import tqdm

from config import Settings
from control.controller import Controller
from core.simulator import GridSimulator
from core.trace import CONTROLLED, RunTrace
from core.errors import InputError
from core.utils import PathLike, format_clock
from scenarios.base import Scenario
from transport.ports import AssetPort, BusPort, InProcessPort
from transport.registers import RegisterBank
from transport.server import AssetServer

logger = logging.getLogger(__name__)

INPROC = "inproc"
BUS = "bus"
TRANSPORTS = (INPROC, BUS)

DIVERGED = "diverged"


def group_banks(banks: Dict[str, RegisterBank],
                endpoints: Dict[str, Tuple[str, int, int]],
                default_host: str = "127.0.0.1") -> Dict[Tuple[str, object], List[RegisterBank]]:
    """
    Group register banks the way the scenario shares endpoints.

    Assets that share a ``host:port`` end up on one server; assets without an
    endpoint get a server of their own on ``default_host``.
    """
    groups: Dict[Tuple[str, object], List[RegisterBank]] = {}
    for asset_id, bank in sorted(banks.items()):
        if asset_id in endpoints:
            host, port, _ = endpoints[asset_id]
            key = (host, port)
        else:
            key = (default_host, asset_id)
        groups.setdefault(key, []).append(bank)
    return groups


class ScenarioRunner:
    """Runner for one scenario in controlled or reference mode."""

    def __init__(self,
                 scenario: Scenario,
                 mode: str = CONTROLLED,
                 settings: Optional[Settings] = None,
                 seed: Optional[int] = None,
                 transport: str = INPROC,
                 log_path: Optional[PathLike] = None,
                 verbose: bool = False):
        """
        Initialize the scenario runner.

        Args:
            scenario: Scenario to replay
            mode: ``controlled`` runs the controller every cycle; ``reference`` applies no control
            settings: Tolerances and policies
            seed: Measurement-noise seed, shared by both modes of one experiment
            transport: ``inproc`` (direct register access) or ``bus`` (TCP servers on free ports;
                assets without a scenario endpoint bind to ``transport.host``)
            log_path: JSON-lines file for the controller's cycle records
            verbose: Show a per-cycle progress bar
        """
        if transport not in TRANSPORTS:
            raise InputError(f"Unknown transport: {transport}. Available transports: {list(TRANSPORTS)}")
        self.scenario = scenario
        self.trace = RunTrace(mode)
        self.mode = mode
        self.settings = settings or Settings()
        self.seed = self.settings.seed if seed is None else seed
        self.transport = transport
        self.log_path = log_path
        self.verbose = verbose
        self.controller: Optional[Controller] = None

    @contextmanager
    def _port(self, simulator: GridSimulator) -> Iterator[AssetPort]:
        if self.transport == INPROC:
            port = InProcessPort(simulator.banks.values())
            try:
                yield port
            finally:
                port.close()
            return

        servers: List[AssetServer] = []
        endpoints: Dict[str, Tuple[str, int, int]] = {}
        try:
            for (host, _), banks in group_banks(simulator.banks, self.scenario.endpoints,
                                             self.settings.transport.host).items():
                server = AssetServer(banks, (host, 0)).start()
                servers.append(server)
                bound_host, bound_port = server.endpoint
                for bank in banks:
                    endpoints[bank.asset_id] = (bound_host, bound_port, bank.unit)
            port = BusPort(endpoints, {asset_id: bank.map for asset_id, bank in simulator.banks.items()},
                           timeout=self.settings.transport.timeout_s)
            try:
                yield port
            finally:
                port.close()
        finally:
            for server in servers:
                server.stop()

    def run(self) -> RunTrace:
        """
        Run every cycle of the scenario.

        A cycle whose power flow diverges repeats the last converged state, is
        recorded with decision ``diverged`` and gets no control action.

        Returns:
            RunTrace with one row per cycle

        Raises:
            DivergenceError: If the power flow diverges before any cycle converged
            BusTimeoutError: If the controller never sees the sync bit
        """
        if self.log_path is not None:
            directory = os.path.dirname(os.fspath(self.log_path))
            if directory:
                os.makedirs(directory, exist_ok=True)
            if os.path.exists(self.log_path):
                os.remove(self.log_path)
        simulator = GridSimulator(self.scenario, self.settings, seed=self.seed)
        steps = self.scenario.steps
        logger.info("Running %s (%s, %s transport, %d cycles)", self.scenario.name, self.mode,
                    self.transport, len(steps))

        with self._port(simulator) as port:
            if self.mode == CONTROLLED:
                self.controller = Controller.from_scenario(self.scenario, port, self.settings,
                                                           log_path=self.log_path)
            simulator.release_sync()
            if self.controller is not None:
                self.controller.wait_for_sync()

            for t in tqdm(steps, desc=f"{self.scenario.name} {self.mode}", disable=not self.verbose):
                row = simulator.advance(t)
                row["decision"] = None
                if simulator.diverged:
                    # no fresh measurements; setpoints stay as they are
                    row["decision"] = DIVERGED
                elif self.controller is not None:
                    cycle = self.controller.control_cycle(t)
                    row["decision"] = "degraded" if cycle.action is None else cycle.action.name
                    if cycle.degraded:
                        logger.debug("t=%s degraded cycle", format_clock(t))
                self.trace.append(row)
        return self.trace
