#!/usr/bin/env python3
"""
Command-line interface for gridcon.

Exit codes: 0 success, 2 configuration or input error, 3 solver error
(power flow divergence, unobservable estimation), 4 bus error, 1 anything else.
"""

import argparse
import logging
import signal
import sys
import threading

from config import load_settings
from core.errors import (BusError, ConfigError, DivergenceError, GridconError, InputError,
                         UnobservableError)
from core.log import setup_logging
from scenarios import get_scenario, list_available_scenarios

logger = logging.getLogger("gridcon")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_BUS = 4


def _settings(args):
    overrides = {
        "seed": getattr(args, "seed", None),
        "powerflow.tol": getattr(args, "tol_pf", None),
        "estimation.tol": getattr(args, "tol_se", None),
        "optimization.tol_eq": getattr(args, "tol_eq", None),
        "optimization.tol_ineq": getattr(args, "tol_ineq", None),
        "control.idle_policy": getattr(args, "idle_policy", None),
    }
    return load_settings(args.config, overrides)


def run_experiment(args):
    """Run the scenario in the requested modes and write the artifacts"""
    from core.pipeline import ExperimentPipeline
    from core.trace import CONTROLLED, MODES, REFERENCE

    settings = _settings(args)
    scenario = get_scenario(args.scenario)
    issues = scenario.issues()
    if issues:
        for issue in issues:
            print(f"{scenario.source}: {issue}", file=sys.stderr)
        raise ConfigError(f"scenario has {len(issues)} issue(s); run 'gridcon validate' for details",
                          source=scenario.source)

    if args.controlled:
        modes = [CONTROLLED]
    elif args.reference:
        modes = [REFERENCE]
    else:
        modes = list(MODES)

    pipeline = ExperimentPipeline(
        scenario=scenario,
        modes=modes,
        settings=settings,
        transport=args.transport,
        output_dir=args.output,
        parallel=not args.sequential,
        plots=args.plots,
        verbose=args.verbose
    )
    print(f"Running {scenario.name} ({', '.join(modes)}, {args.transport} transport, seed {settings.seed})...",
          file=sys.stderr)
    results = pipeline.run()

    print(f"Results saved to {args.output}", file=sys.stderr)
    print("\nSummary of Results:")
    metrics = results["metrics"]
    for mode in metrics.modes:
        totals = metrics.totals(mode)
        print(f"  {mode}: N_v={totals.get('N_v', 0)} N_s={totals.get('N_s', 0)} "
              f"A_v_excess={totals.get('A_v_excess', 0.0):.4f} A_s_excess={totals.get('A_s_excess', 0.0):.2f}")
    return EXIT_OK


def validate_scenario(args):
    """Report schedule gaps, series coverage and observability of a scenario"""
    scenario = get_scenario(args.scenario)
    issues = scenario.issues()
    print(f"{scenario.source}: {scenario.network.n_bus} buses, {len(scenario.assets)} assets, "
          f"{len(scenario.placement.points)} measurements, {len(scenario.steps)} cycles")
    if not issues:
        print("  OK")
        return EXIT_OK
    for issue in issues:
        print(f"  - {issue}")
    return EXIT_CONFIG if args.strict else EXIT_OK


def serve_assets(args):
    """Serve the simulated assets on their scenario endpoints until interrupted"""
    from core.runner import group_banks
    from core.simulator import GridSimulator
    from core.utils import parse_clock
    from transport.server import AssetServer

    settings = _settings(args)
    scenario = get_scenario(args.scenario)
    if not scenario.endpoints:
        raise ConfigError("scenario declares no endpoints", source=scenario.source, field="endpoints")
    simulator = GridSimulator(scenario, settings)
    simulator.solve(parse_clock(args.time) if args.time is not None else scenario.t0)
    for bank in simulator.banks.values():
        bank.on_write = simulator.refresh

    stop = threading.Event()
    servers = []
    try:
        groups = group_banks(simulator.banks, scenario.endpoints, settings.transport.host)
        for (host, port), banks in groups.items():
            endpoint = (args.host or host, port if isinstance(port, int) else 0)
            server = AssetServer(banks, endpoint).start()
            servers.append(server)
            print(f"  {server.endpoint[0]}:{server.endpoint[1]} -> "
                  + ", ".join(f"{b.asset_id}/{b.unit}" for b in banks), file=sys.stderr)
        simulator.release_sync()

        def _shutdown(signum, _frame):
            logger.info("Received signal %d, shutting down", signum)
            stop.set()

        signal.signal(signal.SIGINT, _shutdown)
        signal.signal(signal.SIGTERM, _shutdown)
        print(f"Serving {len(simulator.banks)} register banks of {scenario.name}; Ctrl-C to stop",
              file=sys.stderr)
        while not stop.wait(0.2):
            pass
    finally:
        for server in servers:
            server.stop()
    return EXIT_OK


def recompute_metrics(args):
    """Recompute the metrics report from stored trace CSVs"""
    from core.trace import CONTROLLED, REFERENCE, RunTrace
    from core.utils import save_json_file
    from evaluators.metrics import compute_metrics

    if not args.controlled and not args.reference:
        raise InputError("metrics needs --controlled and/or --reference traces")
    scenario = get_scenario(args.scenario)
    controlled = RunTrace.from_csv(args.controlled, CONTROLLED) if args.controlled else None
    reference = RunTrace.from_csv(args.reference, REFERENCE) if args.reference else None
    net = scenario.network
    slack = net.bus_ids[net.slack_index]
    report = compute_metrics(controlled, reference, scenario.schedule,
                             monitored_buses=[b for b in net.bus_ids if b != slack])
    if args.output:
        save_json_file({"scenario": scenario.name, **report.to_dict()}, args.output)
        print(f"Metrics saved to {args.output}", file=sys.stderr)
    for mode in report.modes:
        totals = report.totals(mode)
        print(f"  {mode}: " + " ".join(f"{k}={v:.4g}" for k, v in sorted(totals.items())))
    return EXIT_OK


def write_register_map(args):
    """Write the register map of every asset kind as markdown"""
    from visualization.report import render_register_map

    scenario = get_scenario(args.scenario) if args.scenario else None
    content = render_register_map(scenario, args.output)
    if args.output:
        print(f"Register map saved to {args.output}", file=sys.stderr)
    else:
        print(content)
    return EXIT_OK


def list_scenarios(args):
    """List available scenarios"""
    scenarios = list_available_scenarios()

    print("Available scenarios:")
    for scenario_id, scenario_info in scenarios.items():
        if "error" in scenario_info:
            print(f"  - {scenario_id}: unreadable ({scenario_info['error']})")
            continue
        print(f"  - {scenario_id}: {scenario_info['buses']} buses, {scenario_info['cycles']} cycles")
        if args.verbose:
            print(f"      {scenario_info['file']}")
            print(f"      assets: {', '.join(scenario_info['assets'])}")

    return EXIT_OK


def _add_settings_arguments(parser):
    parser.add_argument("-c", "--config", default=None,
                        help="Settings YAML (defaults to config/simulation.yaml)")
    parser.add_argument("--seed", type=int, help="Measurement-noise seed")
    parser.add_argument("--tol-pf", type=float, help="Power-flow mismatch tolerance (p.u.)")
    parser.add_argument("--tol-se", type=float, help="State-estimation gradient-norm tolerance")
    parser.add_argument("--tol-eq", type=float, help="OPF equality tolerance (p.u.)")
    parser.add_argument("--tol-ineq", type=float, help="OPF inequality tolerance")


def build_parser():
    parser = argparse.ArgumentParser(description="gridcon: curative congestion management test system")
    parser.add_argument("--log-level", default=None,
                        help="Log level (defaults to $GRIDCON_LOG_LEVEL, then INFO)")
    subparsers = parser.add_subparsers(dest="command", help="Command to execute")

    # Run command
    run_parser = subparsers.add_parser("run", help="Run a scenario")
    run_parser.add_argument("-s", "--scenario", default="sgtl",
                            help="Registered scenario name or scenario file")
    modes = run_parser.add_mutually_exclusive_group()
    modes.add_argument("--both", action="store_true", help="Controlled and reference runs (default)")
    modes.add_argument("--controlled", action="store_true", help="Controlled run only")
    modes.add_argument("--reference", action="store_true", help="Reference run only")
    run_parser.add_argument("-o", "--output", default="output",
                            help="Output directory for traces, cycle logs and metrics")
    run_parser.add_argument("-t", "--transport", choices=["inproc", "bus"], default="inproc",
                            help="Register access: in-process or TCP servers on loopback")
    run_parser.add_argument("--idle-policy", choices=["dispatch_targets", "hold"],
                            help="What the controller does in cycles without violations")
    run_parser.add_argument("--plots", action="store_true", help="Write comparison charts")
    run_parser.add_argument("--sequential", action="store_true", help="Run the modes one after another")
    run_parser.add_argument("-v", "--verbose", action="store_true", help="Show progress bars")
    _add_settings_arguments(run_parser)

    # Validate command
    validate_parser = subparsers.add_parser("validate", help="Check a scenario for consistency")
    validate_parser.add_argument("scenario", help="Registered scenario name or scenario file")
    validate_parser.add_argument("--strict", action="store_true", help="Exit with code 2 when issues are found")

    # Serve assets command
    serve_parser = subparsers.add_parser("serve-assets", help="Serve simulated assets over TCP")
    serve_parser.add_argument("-s", "--scenario", default="sgtl",
                              help="Registered scenario name or scenario file")
    serve_parser.add_argument("--host", default=None, help="Bind address overriding the scenario endpoints")
    serve_parser.add_argument("--time", default=None, help="Scenario time to simulate (HH:MM:SS)")
    _add_settings_arguments(serve_parser)

    # Metrics command
    metrics_parser = subparsers.add_parser("metrics", help="Recompute metrics from stored traces")
    metrics_parser.add_argument("-s", "--scenario", default="sgtl",
                                help="Scenario whose limit schedule applies")
    metrics_parser.add_argument("--controlled", help="Controlled-run trace CSV")
    metrics_parser.add_argument("--reference", help="Reference-run trace CSV")
    metrics_parser.add_argument("-o", "--output", help="Metrics JSON file to write")

    # Register map command
    map_parser = subparsers.add_parser("register-map", help="Write the register map as markdown")
    map_parser.add_argument("-s", "--scenario", default=None, help="Include this scenario's endpoints")
    map_parser.add_argument("-o", "--output", help="Markdown file to write (stdout if omitted)")

    # List scenarios command
    list_scenarios_parser = subparsers.add_parser("list-scenarios", help="List available scenarios")
    list_scenarios_parser.add_argument("-v", "--verbose", action="store_true",
                                       help="Show scenario files and assets")
    return parser


COMMANDS = {
    "run": run_experiment,
    "validate": validate_scenario,
    "serve-assets": serve_assets,
    "metrics": recompute_metrics,
    "register-map": write_register_map,
    "list-scenarios": list_scenarios,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)

    handler = COMMANDS.get(args.command)
    if handler is None:
        parser.print_help()
        return EXIT_OK
    try:
        return handler(args)
    except (ConfigError, InputError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, UnobservableError) as e:
        print(f"solver error: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except BusError as e:
        print(f"bus error: {e}", file=sys.stderr)
        return EXIT_BUS
    except GridconError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
