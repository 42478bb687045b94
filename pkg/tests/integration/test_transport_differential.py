#!/usr/bin/env python3
"""
The controller behaves identically over TCP and with direct register access.
"""
import json
import os
import shutil
import tempfile
import unittest
import sys
from dataclasses import replace
from pathlib import Path
from unittest import mock

# Add parent directory to path for importing
sys.path.insert(0, str(Path(__file__).resolve().parent.parent.parent))

import core.runner
from config import Settings
from core.runner import BUS, INPROC, ScenarioRunner
from core.trace import CONTROLLED
from scenarios import get_scenario


def read_cycles(path):
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f]


class TestTransportDifferential(unittest.TestCase):
    """Run the transformer-limit window with both transports."""

    def setUp(self):
        self.tmp = tempfile.mkdtemp()
        # limit drop at 00:03:45 lies inside this window
        self.scenario = replace(get_scenario("sgtl"), t0=180.0, t_end=330.0)

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def run_with(self, transport):
        log_path = os.path.join(self.tmp, f"cycles_{transport}.jsonl")
        trace = ScenarioRunner(self.scenario, mode=CONTROLLED, transport=transport, log_path=log_path).run()
        return trace, read_cycles(log_path)

    def test_identical_cycle_logs(self):
        local_trace, local_log = self.run_with(INPROC)
        bus_trace, bus_log = self.run_with(BUS)
        self.assertEqual(len(local_log), len(self.scenario.steps))
        self.assertEqual(local_log, bus_log)
        self.assertEqual(local_trace.rows, bus_trace.rows)
        self.assertTrue(any(record["decision"] and record["decision"]["action"] == "run-opf"
                            for record in local_log))

    def test_servers_bind_configured_host(self):
        settings = replace(Settings(), transport=replace(Settings().transport, host="localhost"))
        # assets without a scenario endpoint are served on transport.host
        scenario = replace(self.scenario, t_end=195.0, endpoints={})
        with mock.patch.object(core.runner, "AssetServer", wraps=core.runner.AssetServer) as server_cls:
            trace = ScenarioRunner(scenario, mode=CONTROLLED, settings=settings, transport=BUS).run()
        self.assertEqual(len(trace.rows), len(scenario.steps))
        hosts = {call.args[1][0] for call in server_cls.call_args_list}
        self.assertEqual(hosts, {"localhost"})


if __name__ == '__main__':
    unittest.main()
