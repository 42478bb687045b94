"""
Asset access for the controller, in process or over the register bus.

Both ports go through the same word encoding, so a run produces identical
control decisions whichever port it uses.
"""
from abc import ABC, abstractmethod
from typing import Dict, Iterable, Mapping, Sequence, Tuple
import logging
import time

from core.errors import BusError, BusTimeoutError, InputError
from .client import BusClient
from .registers import RegisterBank, RegisterMap

logger = logging.getLogger(__name__)


class AssetPort(ABC):
    """Register-level view of all assets, addressed by asset id and register name."""

    @abstractmethod
    def register_map(self, asset_id: str) -> RegisterMap:
        """Map of one asset."""
        pass

    @abstractmethod
    def _read_words(self, asset_id: str, address: int, count: int) -> Sequence[int]:
        pass

    @abstractmethod
    def _write_words(self, asset_id: str, address: int, words: Sequence[int]) -> None:
        pass

    def read(self, asset_id: str, names: Iterable[str] = None) -> Dict[str, float]:
        """
        Read registers of one asset with a single block request.

        Args:
            asset_id: Asset to read
            names: Register names; all registers when omitted

        Returns:
            Decoded values by register name
        """
        reg_map = self.register_map(asset_id)
        names = list(names) if names is not None else [r.name for r in reg_map]
        address, count = reg_map.span(names)
        words = self._read_words(asset_id, address, count)
        return {name: reg_map.by_name(name).decode(words[reg_map.by_name(name).address - address])
                for name in names}

    def write(self, asset_id: str, name: str, value: float) -> None:
        """
        Write one register.

        Raises:
            InputError: If the value does not fit the register
            AccessDeniedError: If the register is read-only
        """
        reg = self.register_map(asset_id).by_name(name)
        self._write_words(asset_id, reg.address, [reg.encode(value)])

    def wait_sync(self, rts_id: str, timeout: float = 5.0, poll: float = 0.01) -> bool:
        """
        Block until the real-time simulator signals the scenario start.

        Returns:
            True once SYNC is set, False on timeout
        """
        deadline = time.monotonic() + timeout
        while True:
            try:
                if self.read(rts_id, ["SYNC"])["SYNC"] >= 1:
                    return True
            except BusTimeoutError:
                pass
            if time.monotonic() >= deadline:
                logger.warning("No sync from %s within %.1f s", rts_id, timeout)
                return False
            time.sleep(poll)

    def close(self) -> None:
        pass


class InProcessPort(AssetPort):
    """Port over register banks living in the same process."""

    def __init__(self, banks: Iterable[RegisterBank], writer: str = "controller"):
        self.banks: Dict[str, RegisterBank] = {b.asset_id: b for b in banks}
        self.writer = writer

    def _bank(self, asset_id: str) -> RegisterBank:
        try:
            return self.banks[asset_id]
        except KeyError:
            raise InputError(f"unknown asset {asset_id!r}")

    def register_map(self, asset_id: str) -> RegisterMap:
        return self._bank(asset_id).map

    def _read_words(self, asset_id, address, count):
        return self._bank(asset_id).read_block(address, count)

    def _write_words(self, asset_id, address, words):
        self._bank(asset_id).write_block(address, list(words), writer=self.writer)


class BusPort(AssetPort):
    """
    Port over TCP register servers.

    Args:
        endpoints: asset id -> (host, port, unit)
        maps: asset id -> register map
        timeout: Per-request timeout in seconds
    """

    def __init__(self, endpoints: Mapping[str, Tuple[str, int, int]], maps: Mapping[str, RegisterMap],
                 timeout: float = 0.5):
        missing = set(endpoints) ^ set(maps)
        if missing:
            raise InputError(f"endpoints and maps disagree on assets {sorted(missing)}")
        self.endpoints = dict(endpoints)
        self.maps = dict(maps)
        self.timeout = timeout
        self._clients: Dict[Tuple[str, int], BusClient] = {}

    def _client(self, asset_id: str) -> Tuple[BusClient, int]:
        try:
            host, port, unit = self.endpoints[asset_id]
        except KeyError:
            raise InputError(f"unknown asset {asset_id!r}")
        key = (host, int(port))
        if key not in self._clients:
            self._clients[key] = BusClient(host, port, timeout=self.timeout)
        return self._clients[key], unit

    def register_map(self, asset_id: str) -> RegisterMap:
        try:
            return self.maps[asset_id]
        except KeyError:
            raise InputError(f"unknown asset {asset_id!r}")

    def _read_words(self, asset_id, address, count):
        client, unit = self._client(asset_id)
        return client.read(unit, address, count)

    def _write_words(self, asset_id, address, words):
        client, unit = self._client(asset_id)
        client.write(unit, address, words)

    def close(self) -> None:
        for client in self._clients.values():
            try:
                client.close()
            except BusError:
                pass
        self._clients.clear()
