"""
Threaded TCP server exposing register banks on one endpoint.
"""
from typing import Dict, Iterable, Optional, Set, Tuple, Union
import logging
import socket
import socketserver
import threading

from core.errors import AccessDeniedError, BusError, BusTimeoutError, ProtocolError
from .frames import (ERR_ACCESS_DENIED, ERR_MALFORMED, ERR_UNKNOWN_ASSET, ERR_UNKNOWN_REGISTER,
                     HEADER, READ, WRITE, BusFrame, read_raw_frame)
from .registers import RegisterBank

logger = logging.getLogger(__name__)

Endpoint = Tuple[str, int]


def parse_endpoint(value: Union[str, Endpoint]) -> Endpoint:
    """Accept ``"host:port"`` or a (host, port) pair."""
    if isinstance(value, (tuple, list)):
        return str(value[0]), int(value[1])
    host, _, port = str(value).rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"endpoint must be host:port, got {value!r}")
    return host, int(port)


def _close(connection: socket.socket) -> None:
    """Shut a connection down in both directions so the peer sees EOF."""
    try:
        connection.shutdown(socket.SHUT_RDWR)
    except OSError:
        pass
    connection.close()


class _FrameHandler(socketserver.BaseRequestHandler):
    """Serve frames on one connection until the client disconnects or the server stops."""

    def setup(self):
        self.server.owner.track(self.request)

    def handle(self):
        server: "AssetServer" = self.server.owner
        peer = "%s:%d" % self.client_address[:2]
        self.request.settimeout(None)
        while not server.stopping.is_set():
            try:
                raw = read_raw_frame(self.request)
            except (ConnectionError, OSError, BusTimeoutError):
                break
            response = server.handle_raw(raw, peer)
            try:
                self.request.sendall(response.encode())
            except OSError:
                break

    def finish(self):
        self.server.owner.untrack(self.request)


class _ThreadingServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class AssetServer:
    """
    Register server for one endpoint.

    Several assets may share an endpoint; frames pick one by unit id.
    """

    def __init__(self, banks: Iterable[RegisterBank], endpoint: Endpoint = ("127.0.0.1", 0)):
        self.banks: Dict[int, RegisterBank] = {}
        for bank in banks:
            if bank.unit in self.banks:
                raise ValueError(f"unit {bank.unit} used twice on one endpoint")
            self.banks[bank.unit] = bank
        self.requested = endpoint
        self.stopping = threading.Event()
        self._connections: Set[socket.socket] = set()
        self._connections_lock = threading.Lock()
        self._server: Optional[_ThreadingServer] = None
        self._thread: Optional[threading.Thread] = None

    @property
    def endpoint(self) -> Endpoint:
        if self._server is None:
            return self.requested
        return self._server.server_address[:2]

    def start(self) -> "AssetServer":
        """
        Bind and serve in a background thread.

        Raises:
            BusError: If the endpoint cannot be bound
        """
        try:
            self._server = _ThreadingServer(self.requested, _FrameHandler)
        except OSError as e:
            raise BusError(f"cannot bind {self.requested[0]}:{self.requested[1]}: {e}")
        self._server.owner = self
        self._thread = threading.Thread(target=self._server.serve_forever, name=f"bus-{self.endpoint[1]}",
                                        daemon=True)
        self._thread.start()
        logger.debug("Serving units %s on %s:%d", sorted(self.banks), *self.endpoint)
        return self

    def track(self, connection: socket.socket) -> None:
        """Register an accepted connection; one accepted while stopping is closed at once."""
        with self._connections_lock:
            if not self.stopping.is_set():
                self._connections.add(connection)
                return
        _close(connection)

    def untrack(self, connection: socket.socket) -> None:
        with self._connections_lock:
            self._connections.discard(connection)

    def stop(self) -> None:
        """Stop accepting requests, close the listening socket and every open connection."""
        with self._connections_lock:
            self.stopping.set()
            connections = list(self._connections)
            self._connections.clear()
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None
        for connection in connections:
            _close(connection)
        if connections:
            logger.debug("Closed %d connection(s) on stop", len(connections))
        if self._thread is not None:
            self._thread.join(timeout=2.0)
            self._thread = None

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()

    def handle_raw(self, raw: bytes, peer: str = "") -> BusFrame:
        """Answer one raw request frame; never raises."""
        try:
            request = BusFrame.decode(raw)
        except ProtocolError as e:
            logger.debug("Malformed frame from %s: %s", peer, e)
            tid, unit, op, address = 0, 0, READ, 0
            if len(raw) >= HEADER.size:
                _, tid, unit, op, address, _ = HEADER.unpack_from(raw)
            base = op & 0x7F if op & 0x7F in (READ, WRITE) else READ
            return BusFrame(tid, unit, base | 0x80, address, 1, (ERR_MALFORMED,))
        return self.handle(request, peer)

    def handle(self, request: BusFrame, peer: str = "") -> BusFrame:
        bank = self.banks.get(request.unit)
        if bank is None:
            return request.error(ERR_UNKNOWN_ASSET)
        try:
            if request.op == READ:
                return request.reply(tuple(bank.read_block(request.address, request.count)))
            if request.op == WRITE:
                bank.write_block(request.address, list(request.payload), writer=peer)
                return request.reply(request.payload)
            return request.error(ERR_MALFORMED)
        except AccessDeniedError:
            return request.error(ERR_ACCESS_DENIED)
        except ProtocolError:
            return request.error(ERR_UNKNOWN_REGISTER)


def serve(banks: Union[RegisterBank, Iterable[RegisterBank]],
          endpoint: Union[str, Endpoint] = ("127.0.0.1", 0)) -> AssetServer:
    """
    Start a register server.

    Args:
        banks: One bank or several banks with distinct unit ids
        endpoint: ``host:port``; port 0 picks a free port

    Returns:
        Running AssetServer; its ``endpoint`` holds the bound address
    """
    if isinstance(banks, RegisterBank):
        banks = [banks]
    return AssetServer(banks, parse_endpoint(endpoint)).start()
