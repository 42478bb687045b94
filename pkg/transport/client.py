"""
Blocking client for the register bus.
"""
from typing import List, Optional, Sequence
import itertools
import logging
import socket
import threading

from core.errors import AccessDeniedError, BusError, BusTimeoutError, ProtocolError
from .frames import (ERR_ACCESS_DENIED, ERR_MALFORMED, ERR_UNKNOWN_ASSET, ERR_UNKNOWN_REGISTER,
                     READ, WRITE, BusFrame, read_raw_frame)

logger = logging.getLogger(__name__)

_ERROR_NAMES = {
    ERR_UNKNOWN_REGISTER: "unknown register",
    ERR_ACCESS_DENIED: "access denied",
    ERR_MALFORMED: "malformed request",
    ERR_UNKNOWN_ASSET: "unknown asset",
}


class BusClient:
    """
    One persistent connection to an asset endpoint.

    Requests are serialized by a lock; every response must echo the request's
    transaction id.
    """

    def __init__(self, host: str, port: int, timeout: float = 0.5):
        self.host = host
        self.port = int(port)
        self.timeout = timeout
        self._sock: Optional[socket.socket] = None
        self._lock = threading.Lock()
        self._tids = itertools.cycle(range(1, 0x10000))

    def connect(self) -> None:
        if self._sock is not None:
            return
        try:
            self._sock = socket.create_connection((self.host, self.port), timeout=self.timeout)
        except socket.timeout:
            raise BusTimeoutError(f"connect to {self.host}:{self.port} timed out")
        except OSError as e:
            raise BusError(f"cannot connect to {self.host}:{self.port}: {e}")
        self._sock.settimeout(self.timeout)

    def close(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            finally:
                self._sock = None

    def __enter__(self):
        self.connect()
        return self

    def __exit__(self, *exc):
        self.close()

    def request(self, frame: BusFrame) -> BusFrame:
        """
        Send one frame and wait for the matching response.

        Raises:
            BusTimeoutError: If no response arrives within the timeout
            ProtocolError: On malformed or mismatched responses, or error codes 1, 3, 4
            AccessDeniedError: On error code 2
        """
        with self._lock:
            self.connect()
            try:
                self._sock.sendall(frame.encode())
                response = BusFrame.decode(read_raw_frame(self._sock))
            except BusTimeoutError:
                # a late response would desynchronize the stream
                self.close()
                raise
            except (ConnectionError, OSError) as e:
                self.close()
                raise BusError(f"{self.host}:{self.port}: {e}")
        if response.tid != frame.tid or response.unit != frame.unit:
            raise ProtocolError(f"response tid/unit {response.tid}/{response.unit} "
                                f"does not match request {frame.tid}/{frame.unit}")
        if response.is_error:
            code = response.error_code
            message = f"unit {frame.unit} @ {frame.address}: {_ERROR_NAMES.get(code, f'error {code}')}"
            if code == ERR_ACCESS_DENIED:
                raise AccessDeniedError(message)
            raise ProtocolError(message)
        return response

    def read(self, unit: int, address: int, count: int) -> List[int]:
        """Read ``count`` consecutive register words."""
        response = self.request(BusFrame(next(self._tids), unit, READ, address, count))
        if len(response.payload) != count:
            raise ProtocolError(f"expected {count} words, got {len(response.payload)}")
        return list(response.payload)

    def write(self, unit: int, address: int, words: Sequence[int]) -> None:
        """Write consecutive register words."""
        self.request(BusFrame(next(self._tids), unit, WRITE, address, len(words), tuple(words)))
