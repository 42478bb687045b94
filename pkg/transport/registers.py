"""
Register maps of the simulated assets and the lock-protected register bank.

Every register is one 16-bit word holding round(value / scale), signed unless
stated otherwise. Addresses are unique per map.
"""
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Tuple
import logging
import threading

from core.errors import AccessDeniedError, InputError, ProtocolError

logger = logging.getLogger(__name__)

R = "R"
RW = "R/W"


@dataclass(frozen=True)
class Register:
    name: str
    address: int
    unit: str
    scale: float
    access: str = R
    signed: bool = True
    description: str = ""

    @property
    def writable(self) -> bool:
        return self.access == RW

    @property
    def value_range(self) -> Tuple[float, float]:
        low, high = (-32768, 32767) if self.signed else (0, 65535)
        return (low * self.scale, high * self.scale)

    def encode(self, value: float) -> int:
        """
        Engineering value -> unsigned 16-bit word.

        Raises:
            InputError: If the scaled value does not fit the register
        """
        raw = int(round(float(value) / self.scale))
        low, high = (-32768, 32767) if self.signed else (0, 65535)
        if not low <= raw <= high:
            raise InputError(f"{self.name}: {value} {self.unit} outside register range {self.value_range}")
        return raw & 0xFFFF

    def decode(self, word: int) -> float:
        word &= 0xFFFF
        if self.signed and word >= 0x8000:
            word -= 0x10000
        return word * self.scale


@dataclass(frozen=True)
class RegisterMap:
    kind: str
    registers: Tuple[Register, ...]

    def __post_init__(self):
        object.__setattr__(self, "registers", tuple(self.registers))
        addresses = [r.address for r in self.registers]
        names = [r.name for r in self.registers]
        if len(set(addresses)) != len(addresses):
            raise ValueError(f"{self.kind}: duplicate register addresses")
        if len(set(names)) != len(names):
            raise ValueError(f"{self.kind}: duplicate register names")

    def __iter__(self):
        return iter(self.registers)

    def by_name(self, name: str) -> Register:
        for reg in self.registers:
            if reg.name == name:
                return reg
        raise ProtocolError(f"{self.kind}: unknown register {name!r}")

    def by_address(self, address: int) -> Register:
        for reg in self.registers:
            if reg.address == address:
                return reg
        raise ProtocolError(f"{self.kind}: unknown register address {address}")

    def block(self, address: int, count: int) -> List[Register]:
        """Registers at address .. address + count - 1; every address must exist."""
        return [self.by_address(a) for a in range(address, address + count)]

    def span(self, names: Iterable[str]) -> Tuple[int, int]:
        """(first address, count) of the smallest block covering ``names``."""
        addresses = [self.by_name(n).address for n in names]
        return min(addresses), max(addresses) - min(addresses) + 1


def _reg(name, address, unit, scale, access=R, signed=True, description=""):
    return Register(name, address, unit, scale, access, signed, description)


OLTC_MAP = RegisterMap("oltc", (
    _reg("TAP", 0, "-", 1, RW, description="tap position"),
    _reg("V", 1, "V", 0.1, description="LV phase-to-ground voltage"),
    _reg("TAP_MIN", 2, "-", 1, description="lowest tap position"),
    _reg("TAP_MAX", 3, "-", 1, description="highest tap position"),
    _reg("STEP_VOLTAGE", 4, "p.u.", 1e-4, description="voltage change per step"),
))

PV_MAP = RegisterMap("pv", (
    _reg("V", 0, "V", 0.1, description="phase-to-ground voltage"),
    _reg("P", 1, "kW", 0.01, description="three-phase active power (consumer counting)"),
    _reg("Q", 2, "kVar", 0.01, description="three-phase reactive power"),
    _reg("P_SET", 3, "kW", 0.01, RW, description="active power setpoint (feed-in cap, negative)"),
    _reg("Q_SET", 4, "kVar", 0.01, RW, description="reactive power setpoint"),
    _reg("P_MAX", 5, "kW", 0.01, description="nominal three-phase power"),
    _reg("P_LIMIT_ENABLE", 6, "-", 1, RW, signed=False, description="1 while P_SET caps the feed-in"),
))

CS_MAP = RegisterMap("ev", (
    _reg("I_SET", 0, "A", 1, RW, signed=False, description="charging current setpoint"),
    _reg("I", 1, "A", 0.01, description="charging current"),
    _reg("P", 2, "kW", 0.01, description="charging power"),
    _reg("I_MIN", 3, "A", 1, signed=False, description="minimum charging current"),
    _reg("I_MAX", 4, "A", 1, signed=False, description="maximum charging current"),
    _reg("CONNECTED", 5, "-", 1, signed=False, description="vehicle connected and ready"),
))

BSS_MAP = RegisterMap("bss", (
    _reg("SOC", 0, "kWh", 0.01, description="stored energy E_t0"),
    _reg("SOC_MIN", 1, "kWh", 0.01, description="lower energy limit"),
    _reg("SOC_MAX", 2, "kWh", 0.01, description="upper energy limit"),
    _reg("V", 3, "V", 0.1, description="phase-to-ground voltage"),
    _reg("I", 4, "A", 0.01, description="phase current"),
    _reg("P", 5, "kW", 0.01, description="active power (charging positive)"),
    _reg("Q", 6, "kVar", 0.01, description="reactive power"),
    _reg("S", 7, "kVA", 0.01, description="apparent power"),
    _reg("P_SET", 8, "kW", 0.01, RW, description="three-phase active power setpoint"),
    _reg("Q_SET", 9, "kVar", 0.01, RW, description="three-phase reactive power setpoint"),
    _reg("S_MAX", 10, "kVA", 0.01, description="nominal apparent power"),
    _reg("E_TOTAL", 11, "kWh", 0.01, description="capacity"),
))

METER_MAP = RegisterMap("meter", (
    _reg("V", 0, "p.u.", 1e-4, description="voltage magnitude"),
    _reg("I", 1, "A", 0.01, description="current"),
    _reg("P", 2, "kW", 0.01, description="active power (bus consumption or branch from-end flow)"),
    _reg("Q", 3, "kVar", 0.01, description="reactive power"),
    _reg("S", 4, "kVA", 0.01, description="apparent power"),
    _reg("PF", 5, "-", 1e-4, description="power factor"),
))

RTS_MAP = RegisterMap("rts", (
    _reg("TEMPERATURE", 0, "degC", 0.01, description="module temperature"),
    _reg("IRRADIANCE", 1, "W/m2", 0.1, description="irradiance"),
    _reg("SYNC", 2, "-", 1, signed=False, description="1 once the scenario has started"),
))

LOAD_MAP = RegisterMap("load", (
    _reg("P", 0, "kW", 0.01, description="consumed active power"),
))

REGISTER_MAPS: Dict[str, RegisterMap] = {m.kind: m for m in
                                         (OLTC_MAP, PV_MAP, CS_MAP, BSS_MAP, METER_MAP, RTS_MAP, LOAD_MAP)}


class RegisterBank:
    """
    Word storage of one asset, shared by the simulated device and the bus server.

    Device-side ``set``/``get`` ignore access modes; bus-side ``read_block``/
    ``write_block`` enforce them. All access holds one lock, so a block read
    never sees half of a block write.
    """

    def __init__(self, asset_id: str, register_map: RegisterMap, unit: int = 1,
                 on_write: Optional[Callable[[str, float], None]] = None):
        self.asset_id = asset_id
        self.map = register_map
        self.unit = unit
        self.on_write = on_write
        self._words: Dict[int, int] = {reg.address: 0 for reg in register_map}
        self._last_writer: Dict[int, str] = {}
        self._lock = threading.RLock()

    def set(self, name: str, value: float) -> None:
        reg = self.map.by_name(name)
        word = reg.encode(value)
        with self._lock:
            self._words[reg.address] = word

    def get(self, name: str) -> float:
        reg = self.map.by_name(name)
        with self._lock:
            return reg.decode(self._words[reg.address])

    def snapshot(self) -> Dict[str, float]:
        with self._lock:
            return {reg.name: reg.decode(self._words[reg.address]) for reg in self.map}

    def read_block(self, address: int, count: int) -> List[int]:
        """
        Raises:
            ProtocolError: If any address in the block is unknown
        """
        regs = self.map.block(address, count)
        with self._lock:
            return [self._words[r.address] for r in regs]

    def write_block(self, address: int, words: List[int], writer: str = "") -> None:
        """
        Raises:
            ProtocolError: If any address in the block is unknown
            AccessDeniedError: If any register in the block is read-only
        """
        regs = self.map.block(address, len(words))
        for reg in regs:
            if not reg.writable:
                raise AccessDeniedError(f"{self.asset_id}: register {reg.name} is read-only")
        with self._lock:
            for reg, word in zip(regs, words):
                previous = self._last_writer.get(reg.address)
                if writer and previous and previous != writer:
                    logger.warning("%s.%s written by %s, overriding %s (last writer wins)",
                                   self.asset_id, reg.name, writer, previous)
                self._words[reg.address] = word & 0xFFFF
                if writer:
                    self._last_writer[reg.address] = writer
        if self.on_write is not None:
            for reg, word in zip(regs, words):
                self.on_write(reg.name, reg.decode(word))
