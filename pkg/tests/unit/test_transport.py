#!/usr/bin/env python3
"""
Unit tests for the register maps, bus frames and the TCP register server.
"""
import socket
import unittest
import sys
from pathlib import Path

import numpy as np

# Add parent directory to path for importing
sys.path.insert(0, str(Path(__file__).resolve().parent.parent.parent))

from core.errors import AccessDeniedError, InputError, ProtocolError
from transport import (BSS_MAP, CS_MAP, ERROR_FLAG, OLTC_MAP, PV_MAP, READ, REGISTER_MAPS, RTS_MAP, WRITE,
                       AssetServer, BusClient, BusFrame, BusPort, InProcessPort, RegisterBank,
                       get_register_map, parse_endpoint, serve)
from transport.frames import (ERR_ACCESS_DENIED, ERR_MALFORMED, ERR_UNKNOWN_ASSET, ERR_UNKNOWN_REGISTER, MAX_COUNT,
                              read_raw_frame)


class TestRegisters(unittest.TestCase):
    """Test word encoding and register banks."""

    def test_signed_encoding(self):
        reg = PV_MAP.by_name("P_SET")
        word = reg.encode(-27.9)
        self.assertGreaterEqual(word, 0x8000)
        self.assertAlmostEqual(reg.decode(word), -27.9)

    def test_out_of_range(self):
        with self.assertRaises(InputError):
            CS_MAP.by_name("I_SET").encode(-1)
        with self.assertRaises(InputError):
            PV_MAP.by_name("P").encode(400.0)

    def test_unknown_register(self):
        with self.assertRaises(ProtocolError):
            BSS_MAP.by_name("VOLTAGE")
        with self.assertRaises(ProtocolError):
            BSS_MAP.by_address(99)

    def test_span(self):
        self.assertEqual(BSS_MAP.span(["P_SET", "Q_SET"]), (8, 2))
        self.assertEqual(BSS_MAP.span(["SOC", "S_MAX"]), (0, 11))

    def test_maps_cover_every_kind(self):
        self.assertEqual(set(REGISTER_MAPS), {"oltc", "pv", "ev", "bss", "meter", "rts", "load"})
        self.assertIs(get_register_map("rts"), RTS_MAP)
        with self.assertRaises(ValueError):
            get_register_map("windmill")

    def test_bank_access_modes(self):
        bank = RegisterBank("oltc1", OLTC_MAP)
        bank.set("V", 231.4)  # device side ignores access modes
        self.assertAlmostEqual(bank.get("V"), 231.4)
        with self.assertRaises(AccessDeniedError):
            bank.write_block(OLTC_MAP.by_name("V").address, [0])
        bank.write_block(OLTC_MAP.by_name("TAP").address, [6])
        self.assertEqual(bank.get("TAP"), 6)

    def test_bank_on_write_callback(self):
        seen = []
        bank = RegisterBank("cs1", CS_MAP, on_write=lambda name, value: seen.append((name, value)))
        bank.write_block(0, [12])
        self.assertEqual(seen, [("I_SET", 12)])

    def test_last_writer_wins(self):
        bank = RegisterBank("bss1", BSS_MAP)
        address = BSS_MAP.by_name("P_SET").address
        bank.write_block(address, [BSS_MAP.by_name("P_SET").encode(5.0)], writer="a")
        with self.assertLogs("transport.registers", level="WARNING"):
            bank.write_block(address, [BSS_MAP.by_name("P_SET").encode(-3.0)], writer="b")
        self.assertAlmostEqual(bank.get("P_SET"), -3.0)


class TestFrames(unittest.TestCase):
    """Test frame encoding and validation."""

    def test_round_trip(self):
        frame = BusFrame(tid=7, unit=3, op=WRITE, address=8, count=2, payload=(1, 0xFFFF))
        self.assertEqual(BusFrame.decode(frame.encode()), frame)

    def test_random_round_trip(self):
        rng = np.random.default_rng(2024)
        for _ in range(10_000):
            op = int(rng.choice([READ, WRITE, READ | ERROR_FLAG, WRITE | ERROR_FLAG]))
            count = int(rng.integers(1, MAX_COUNT + 1))
            if op & ERROR_FLAG:
                n_words = 1
            elif op == WRITE:
                n_words = count
            else:
                n_words = int(rng.choice([0, count]))
            frame = BusFrame(tid=int(rng.integers(0, 0x10000)), unit=int(rng.integers(0, 0x100)), op=op,
                             address=int(rng.integers(0, 0x10000)), count=count,
                             payload=tuple(int(w) for w in rng.integers(0, 0x10000, size=n_words)))
            raw = frame.encode()
            decoded = BusFrame.decode(raw)
            self.assertEqual(decoded, frame)
            self.assertEqual(decoded.encode(), raw)

    def test_error_frame(self):
        frame = BusFrame(tid=1, unit=1, op=READ, address=0, count=1).error(ERR_ACCESS_DENIED)
        self.assertTrue(frame.is_error)
        self.assertEqual(frame.op, READ | ERROR_FLAG)
        self.assertEqual(frame.error_code, ERR_ACCESS_DENIED)

    def test_invalid_frames(self):
        with self.assertRaises(ProtocolError):
            BusFrame(tid=1, unit=1, op=0x42, address=0, count=1)
        with self.assertRaises(ProtocolError):
            BusFrame(tid=1, unit=1, op=READ, address=0, count=0)
        with self.assertRaises(ProtocolError):
            BusFrame(tid=1, unit=1, op=WRITE, address=0, count=2, payload=(1,))

    def test_truncated_frame(self):
        raw = BusFrame(tid=1, unit=1, op=READ, address=0, count=1).encode()
        with self.assertRaises(ProtocolError):
            BusFrame.decode(raw[:-1])
        with self.assertRaises(ProtocolError):
            BusFrame.decode(raw[:4])

    def test_parse_endpoint(self):
        self.assertEqual(parse_endpoint("127.0.0.1:5020"), ("127.0.0.1", 5020))
        self.assertEqual(parse_endpoint(("localhost", "502")), ("localhost", 502))
        with self.assertRaises(ValueError):
            parse_endpoint("no-port")


class TestServerHandling(unittest.TestCase):
    """Request handling without sockets."""

    def setUp(self):
        self.bss = RegisterBank("bss1", BSS_MAP, unit=2)
        self.server = AssetServer([self.bss])

    def test_read(self):
        self.bss.set("SOC", 42.5)
        response = self.server.handle(BusFrame(1, 2, READ, 0, 1))
        self.assertEqual(BSS_MAP.by_name("SOC").decode(response.payload[0]), 42.5)

    def test_error_codes(self):
        cases = [
            (BusFrame(1, 9, READ, 0, 1), ERR_UNKNOWN_ASSET),
            (BusFrame(1, 2, READ, 40, 1), ERR_UNKNOWN_REGISTER),
            (BusFrame(1, 2, WRITE, 0, 1, (5,)), ERR_ACCESS_DENIED),
        ]
        for request, code in cases:
            with self.subTest(code=code):
                response = self.server.handle(request)
                self.assertTrue(response.is_error)
                self.assertEqual(response.error_code, code)

    def test_malformed_raw(self):
        response = self.server.handle_raw(b"\x00\x01\x02")
        self.assertEqual(response.error_code, ERR_MALFORMED)

    def test_duplicate_units(self):
        with self.assertRaises(ValueError):
            AssetServer([RegisterBank("a", BSS_MAP, unit=1), RegisterBank("b", PV_MAP, unit=1)])


class TestOverTCP(unittest.TestCase):
    """Client, server and port over a loopback socket."""

    def setUp(self):
        self.pv = RegisterBank("pv1", PV_MAP, unit=1)
        self.cs = RegisterBank("cs1", CS_MAP, unit=2)
        self.server = AssetServer([self.pv, self.cs], ("127.0.0.1", 0)).start()
        host, port = self.server.endpoint
        self.port = BusPort({"pv1": (host, port, 1), "cs1": (host, port, 2)},
                            {"pv1": PV_MAP, "cs1": CS_MAP}, timeout=2.0)

    def tearDown(self):
        self.port.close()
        self.server.stop()

    def test_read_and_write(self):
        self.pv.set("V", 229.8)
        self.port.write("pv1", "P_SET", -12.34)
        self.port.write("cs1", "I_SET", 10)
        self.assertAlmostEqual(self.pv.get("P_SET"), -12.34)
        self.assertEqual(self.cs.get("I_SET"), 10)
        values = self.port.read("pv1", ["V", "P_SET"])
        self.assertAlmostEqual(values["V"], 229.8)
        self.assertAlmostEqual(values["P_SET"], -12.34)

    def test_access_denied(self):
        with self.assertRaises(AccessDeniedError):
            self.port.write("pv1", "P", 1.0)

    def test_matches_in_process_port(self):
        self.pv.set("P", -20.5)
        self.pv.set("Q", 3.1)
        local = InProcessPort([self.pv, self.cs])
        self.assertEqual(local.read("pv1"), self.port.read("pv1"))

    def test_client_unknown_unit(self):
        host, port = self.server.endpoint
        with BusClient(host, port, timeout=2.0) as client:
            with self.assertRaises(ProtocolError):
                client.read(7, 0, 1)

    def test_wait_sync(self):
        rts = RegisterBank("rts", RTS_MAP, unit=3)
        with AssetServer([rts]) as server:
            host, port = server.endpoint
            bus = BusPort({"rts": (host, port, 3)}, {"rts": RTS_MAP}, timeout=2.0)
            try:
                self.assertFalse(bus.wait_sync("rts", timeout=0.05))
                rts.set("SYNC", 1)
                self.assertTrue(bus.wait_sync("rts", timeout=1.0))
            finally:
                bus.close()

    def test_serve_single_bank(self):
        bank = RegisterBank("pv2", PV_MAP, unit=4)
        bank.set("P", -31.5)
        server = serve(bank, "127.0.0.1:0")
        try:
            host, port = server.endpoint
            self.assertNotEqual(port, 0)
            bus = BusPort({"pv2": (host, port, 4)}, {"pv2": PV_MAP}, timeout=2.0)
            try:
                self.assertAlmostEqual(bus.read("pv2", ["P"])["P"], -31.5)
            finally:
                bus.close()
        finally:
            server.stop()

    def test_stop_closes_open_connections(self):
        server = AssetServer([RegisterBank("pv3", PV_MAP, unit=1)]).start()
        host, port = server.endpoint
        with socket.create_connection((host, port), timeout=2.0) as conn:
            conn.sendall(BusFrame(tid=1, unit=1, op=READ, address=0, count=1).encode())
            reply = BusFrame.decode(read_raw_frame(conn))
            self.assertFalse(reply.is_error)
            server.stop()
            try:
                data = conn.recv(1)
            except ConnectionResetError:
                data = b""
            self.assertEqual(data, b"")

    def test_port_rejects_mismatched_assets(self):
        with self.assertRaises(InputError):
            BusPort({"pv1": ("127.0.0.1", 1, 1)}, {"cs1": CS_MAP})


if __name__ == '__main__':
    unittest.main()
