"""
Experiment pipeline: paired controlled/reference runs and their artifacts.
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Sequence
import logging
import os

import pandas as pd
from tqdm import tqdm

from config import Settings
from core.errors import InputError
from core.runner import INPROC, ScenarioRunner
from core.trace import CONTROLLED, MODES, REFERENCE, RunTrace
from core.utils import save_json_file
from evaluators.metrics import MetricsReport, compute_metrics
from scenarios.base import Scenario

logger = logging.getLogger(__name__)


def comparison_frame(traces: Dict[str, RunTrace]) -> pd.DataFrame:
    """
    Side-by-side table of the runs, one row per cycle.

    Voltage and loading columns of every run are suffixed with the mode; the
    branch limits appear once.
    """
    frames = []
    base = None
    for mode, trace in traces.items():
        frame = trace.to_frame().set_index("time_s")
        if base is None:
            limit_columns = [c for c in frame.columns if c.startswith("S_max.")]
            base = frame[["clock"] + limit_columns]
        keep = [c for c in frame.columns if c.startswith(("V.", "S.")) or c in ("tap", "decision")]
        frames.append(frame[keep].add_suffix(f".{mode}"))
    return pd.concat([base] + frames, axis=1).reset_index()


class ExperimentPipeline:
    """Pipeline running one scenario in several modes and scoring the result."""

    def __init__(self,
                 scenario: Scenario,
                 modes: Sequence[str] = MODES,
                 settings: Optional[Settings] = None,
                 seed: Optional[int] = None,
                 transport: str = INPROC,
                 output_dir: Optional[str] = None,
                 parallel: bool = True,
                 plots: bool = False,
                 verbose: bool = False):
        """
        Initialize the experiment pipeline.

        Args:
            scenario: Scenario to replay
            modes: Runs to execute (``controlled`` and/or ``reference``)
            settings: Tolerances and policies shared by every run
            seed: Noise seed shared by every run
            transport: ``inproc`` or ``bus``
            output_dir: Directory for traces, cycle logs, metrics and charts (nothing written if None)
            parallel: Run the modes concurrently
            plots: Write comparison charts
            verbose: Show progress bars
        """
        unknown = [m for m in modes if m not in MODES]
        if not modes or unknown:
            raise InputError(f"Unknown run modes: {unknown or list(modes)}. Available modes: {list(MODES)}")
        self.scenario = scenario
        self.modes = list(dict.fromkeys(modes))
        self.settings = settings or Settings()
        self.seed = self.settings.seed if seed is None else seed
        self.transport = transport
        self.output_dir = output_dir
        self.parallel = parallel
        self.plots = plots
        self.verbose = verbose
        self.traces: Dict[str, RunTrace] = {}
        self.metrics: Optional[MetricsReport] = None

    def _path(self, name: str) -> Optional[str]:
        return os.path.join(self.output_dir, name) if self.output_dir else None

    def _run_mode(self, mode: str) -> RunTrace:
        runner = ScenarioRunner(
            scenario=self.scenario,
            mode=mode,
            settings=self.settings,
            seed=self.seed,
            transport=self.transport,
            log_path=self._path(f"cycles_{mode}.jsonl") if mode == CONTROLLED else None,
            verbose=self.verbose and not self.parallel,
        )
        return runner.run()

    def monitored_buses(self) -> List[str]:
        net = self.scenario.network
        slack = net.bus_ids[net.slack_index]
        return [b for b in net.bus_ids if b != slack]

    def run(self) -> Dict[str, Any]:
        """
        Run the experiment.

        Returns:
            Dictionary with the traces, the metrics report and the written files
        """
        if self.parallel and len(self.modes) > 1:
            with ThreadPoolExecutor(max_workers=len(self.modes)) as executor:
                traces = list(tqdm(
                    executor.map(self._run_mode, self.modes),
                    total=len(self.modes),
                    desc="Running modes",
                    disable=not self.verbose
                ))
        else:
            traces = [self._run_mode(mode) for mode in self.modes]
        self.traces = dict(zip(self.modes, traces))

        self.metrics = compute_metrics(self.traces.get(CONTROLLED), self.traces.get(REFERENCE),
                                       self.scenario.schedule, monitored_buses=self.monitored_buses())
        files = self.save() if self.output_dir else []
        return {"traces": self.traces, "metrics": self.metrics, "files": files}

    def save(self) -> List[str]:
        """Write traces, metrics and the comparison table; charts when enabled."""
        files = []
        for mode, trace in self.traces.items():
            path = self._path(f"trace_{mode}.csv")
            trace.to_csv(path)
            files.append(path)
            if mode == CONTROLLED:
                files.append(self._path(f"cycles_{mode}.jsonl"))

        path = self._path("metrics.json")
        save_json_file({"scenario": self.scenario.name, "seed": self.seed, "transport": self.transport,
                        **self.metrics.to_dict()}, path)
        files.append(path)

        path = self._path("comparison.csv")
        comparison_frame(self.traces).to_csv(path, index=False)
        files.append(path)

        from visualization.report import render_metrics
        path = self._path("metrics.md")
        render_metrics(self.metrics, self.scenario.name, path)
        files.append(path)

        if self.plots:
            from visualization.charts import write_comparison_charts
            files += write_comparison_charts(self.traces, self.scenario.schedule, self._path("plots"),
                                             buses=self.monitored_buses())
        logger.info("Wrote %d files to %s", len(files), self.output_dir)
        return files
