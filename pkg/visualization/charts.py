"""
Comparison charts for controlled and reference runs.
"""
from typing import Dict, List, Optional
import logging
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib.figure import Figure
import numpy as np
import seaborn as sns

from core.trace import CONTROLLED, REFERENCE, RunTrace
from scenarios.base import LimitSchedule

logger = logging.getLogger(__name__)

RUN_COLORS = {CONTROLLED: "tab:blue", REFERENCE: "tab:orange"}


def set_plotting_style():
    """Set consistent styling for all plots."""
    sns.set_theme(style="whitegrid", context="notebook")
    plt.rcParams.update({
        'axes.labelsize': 12,
        'axes.titlesize': 14,
        'legend.fontsize': 10,
        'figure.titlesize': 16
    })


def _minutes(trace: RunTrace) -> np.ndarray:
    return trace.times / 60.0


def _save(fig: Figure, save_path: Optional[str]) -> None:
    if save_path:
        directory = os.path.dirname(save_path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        fig.savefig(save_path, bbox_inches='tight', dpi=150)
        logger.debug("Saved chart %s", save_path)


def voltage_comparison(traces: Dict[str, RunTrace], schedule: LimitSchedule, bus_id: str,
                       save_path: Optional[str] = None) -> Figure:
    """
    Voltage at one bus for every run, with the voltage band.

    Args:
        traces: Mode -> trace
        schedule: Provides the band of ``bus_id``
        bus_id: Bus to plot
        save_path: Optional path to save the chart image

    Returns:
        Matplotlib figure
    """
    set_plotting_style()
    fig, ax = plt.subplots(figsize=(10, 4))
    for mode, trace in traces.items():
        ax.step(_minutes(trace), trace.voltage(bus_id), where="post", label=mode,
                color=RUN_COLORS.get(mode))
    low, high = schedule.band(bus_id)
    ax.axhline(low, color="black", linestyle="--", linewidth=1, label="band")
    ax.axhline(high, color="black", linestyle="--", linewidth=1)
    ax.set_xlabel("time (min)")
    ax.set_ylabel("voltage (p.u.)")
    ax.set_title(f"Voltage at {bus_id}")
    ax.legend(loc="best")
    fig.tight_layout()
    _save(fig, save_path)
    return fig


def flow_comparison(traces: Dict[str, RunTrace], schedule: LimitSchedule, branch_id: str,
                    save_path: Optional[str] = None) -> Figure:
    """
    Loading of one branch for every run, with the time-varying limit.

    Returns:
        Matplotlib figure
    """
    set_plotting_style()
    fig, ax = plt.subplots(figsize=(10, 4))
    times = None
    for mode, trace in traces.items():
        times = trace.times
        ax.step(_minutes(trace), trace.loading(branch_id), where="post", label=mode,
                color=RUN_COLORS.get(mode))
    if times is not None:
        limits = [schedule.limits_at(t).get(branch_id, np.nan) for t in times]
        ax.step(times / 60.0, limits, where="post", color="black", linestyle="--", linewidth=1, label="limit")
    ax.set_xlabel("time (min)")
    ax.set_ylabel("apparent power (kVA)")
    ax.set_title(f"Loading of {branch_id}")
    ax.legend(loc="best")
    fig.tight_layout()
    _save(fig, save_path)
    return fig


def setpoint_chart(trace: RunTrace, save_path: Optional[str] = None) -> Figure:
    """
    Realized active power of every asset in one run.

    Returns:
        Matplotlib figure
    """
    set_plotting_style()
    fig, ax = plt.subplots(figsize=(10, 4))
    columns = [c for c in (trace.rows[0] if trace.rows else {}) if c.startswith("P.")]
    palette = sns.color_palette("viridis", len(columns) or 1)
    for color, column in zip(palette, columns):
        ax.step(_minutes(trace), trace.series(column), where="post", label=column[2:], color=color)
    ax.axhline(0.0, color="grey", linewidth=0.8)
    ax.set_xlabel("time (min)")
    ax.set_ylabel("active power (kW, consumption positive)")
    ax.set_title(f"Asset active power ({trace.mode})")
    ax.legend(loc="best", ncol=2)
    fig.tight_layout()
    _save(fig, save_path)
    return fig


def write_comparison_charts(traces: Dict[str, RunTrace], schedule: LimitSchedule, output_dir: str,
                            buses: Optional[List[str]] = None) -> List[str]:
    """
    Write voltage, flow and setpoint charts of an experiment.

    Args:
        traces: Mode -> trace
        schedule: Limits and bands
        output_dir: Directory for the PNG files
        buses: Buses to plot (every bus in the traces when omitted)

    Returns:
        Paths of the written files
    """
    paths = []
    first = next(iter(traces.values()))
    for bus_id in (buses if buses is not None else first.buses):
        path = os.path.join(output_dir, f"voltage_{bus_id}.png")
        plt.close(voltage_comparison(traces, schedule, bus_id, path))
        paths.append(path)
    for branch_id in schedule.branches:
        if branch_id not in first.branches:
            continue
        path = os.path.join(output_dir, f"flow_{branch_id}.png")
        plt.close(flow_comparison(traces, schedule, branch_id, path))
        paths.append(path)
    for mode, trace in traces.items():
        path = os.path.join(output_dir, f"setpoints_{mode}.png")
        plt.close(setpoint_chart(trace, path))
        paths.append(path)
    return paths
