"""
Binary request/response frames of the register bus.

Layout (big-endian)::

    length   uint16   bytes following this field
    tid      uint16   transaction id, echoed in the response
    unit     uint8    asset unit id on the endpoint
    op       uint8    READ, WRITE, or op | ERROR_FLAG in error responses
    address  uint16   first register
    count    uint16   number of registers
    payload  count x uint16 (write requests, read responses, 1 word error code)
"""
from dataclasses import dataclass
from typing import Tuple
import socket
import struct

from core.errors import BusTimeoutError, ProtocolError

READ = 0x03
WRITE = 0x10
ERROR_FLAG = 0x80

ERR_UNKNOWN_REGISTER = 1
ERR_ACCESS_DENIED = 2
ERR_MALFORMED = 3
ERR_UNKNOWN_ASSET = 4

HEADER = struct.Struct(">HHBBHH")
LENGTH = struct.Struct(">H")
MAX_COUNT = 125


@dataclass(frozen=True)
class BusFrame:
    tid: int
    unit: int
    op: int
    address: int
    count: int
    payload: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "payload", tuple(int(w) for w in self.payload))
        if not 0 <= self.tid <= 0xFFFF or not 0 <= self.unit <= 0xFF:
            raise ProtocolError("tid or unit out of range")
        if not 0 <= self.address <= 0xFFFF:
            raise ProtocolError("address out of range")
        if not 1 <= self.count <= MAX_COUNT:
            raise ProtocolError(f"count must be in [1, {MAX_COUNT}], got {self.count}")
        if self.base_op not in (READ, WRITE):
            raise ProtocolError(f"unknown op 0x{self.op:02x}")
        if any(not 0 <= w <= 0xFFFF for w in self.payload):
            raise ProtocolError("payload words must be uint16")
        if self.op == WRITE and len(self.payload) != self.count:
            raise ProtocolError(f"write payload has {len(self.payload)} words, count is {self.count}")

    @property
    def base_op(self) -> int:
        return self.op & ~ERROR_FLAG

    @property
    def is_error(self) -> bool:
        return bool(self.op & ERROR_FLAG)

    @property
    def error_code(self) -> int:
        return self.payload[0] if self.is_error and self.payload else 0

    def encode(self) -> bytes:
        body = HEADER.pack(0, self.tid, self.unit, self.op, self.address, self.count)[2:]
        body += struct.pack(f">{len(self.payload)}H", *self.payload)
        return LENGTH.pack(len(body)) + body

    @classmethod
    def decode(cls, data: bytes) -> "BusFrame":
        """
        Parse one complete frame including its length prefix.

        Raises:
            ProtocolError: On truncated, oversized or inconsistent frames
        """
        if len(data) < HEADER.size:
            raise ProtocolError(f"frame too short ({len(data)} bytes)")
        length, tid, unit, op, address, count = HEADER.unpack_from(data)
        if length != len(data) - LENGTH.size:
            raise ProtocolError(f"length field {length} does not match {len(data) - LENGTH.size} bytes")
        rest = data[HEADER.size:]
        if len(rest) % 2:
            raise ProtocolError("odd payload length")
        payload = struct.unpack(f">{len(rest) // 2}H", rest)
        return cls(tid=tid, unit=unit, op=op, address=address, count=count, payload=payload)

    def reply(self, payload: Tuple[int, ...] = ()) -> "BusFrame":
        return BusFrame(self.tid, self.unit, self.op, self.address, self.count, payload)

    def error(self, code: int) -> "BusFrame":
        return BusFrame(self.tid, self.unit, self.base_op | ERROR_FLAG, self.address, self.count, (code,))


def recv_exact(sock: socket.socket, size: int) -> bytes:
    """
    Read exactly ``size`` bytes.

    Raises:
        BusTimeoutError: On socket timeout
        ConnectionError: If the peer closes the connection
    """
    chunks = []
    remaining = size
    while remaining:
        try:
            chunk = sock.recv(remaining)
        except socket.timeout:
            raise BusTimeoutError(f"timed out waiting for {remaining} bytes")
        if not chunk:
            raise ConnectionError("connection closed by peer")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_raw_frame(sock: socket.socket) -> bytes:
    """Read one length-prefixed frame and return it with its prefix."""
    prefix = recv_exact(sock, LENGTH.size)
    (length,) = LENGTH.unpack(prefix)
    return prefix + recv_exact(sock, length)
