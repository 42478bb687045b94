"""
Markdown documents rendered with Jinja2: the register map and the metrics summary.
"""
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple
import logging
import os

import jinja2

from core.utils import PathLike
from evaluators.metrics import MetricsReport
from scenarios.base import Scenario
from transport.frames import ERR_ACCESS_DENIED
from transport.registers import REGISTER_MAPS

logger = logging.getLogger(__name__)

TEMPLATE_DIR = Path(os.path.dirname(os.path.abspath(__file__))) / 'templates'


def _environment() -> jinja2.Environment:
    return jinja2.Environment(
        loader=jinja2.FileSystemLoader(str(TEMPLATE_DIR)),
        autoescape=False,
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True,
    )


def _write(content: str, output_path: Optional[PathLike]) -> str:
    if output_path is not None:
        directory = os.path.dirname(os.fspath(output_path))
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(output_path, 'w', encoding='utf-8') as f:
            f.write(content)
    return content


def render_register_map(scenario: Optional[Scenario] = None, output_path: Optional[PathLike] = None) -> str:
    """
    Render the register map of every asset kind as markdown.

    Args:
        scenario: Adds the scenario's endpoints per kind when given
        output_path: Optional file to write

    Returns:
        Markdown text
    """
    endpoints: Dict[str, List[Tuple[str, Tuple[str, int, int]]]] = {}
    if scenario is not None:
        kinds = {asset_id: asset.kind for asset_id, asset in scenario.assets.items()}
        kinds.update({meter.meter_id: "meter" for meter in scenario.meters})
        kinds[scenario.rts_id] = "rts"
        for asset_id, endpoint in sorted(scenario.endpoints.items()):
            if asset_id in kinds:
                endpoints.setdefault(kinds[asset_id], []).append((asset_id, endpoint))
    template = _environment().get_template('register_map.md.j2')
    content = template.render(maps=list(REGISTER_MAPS.values()), endpoints=endpoints,
                              scenario=scenario.name if scenario is not None else "",
                              access_denied=ERR_ACCESS_DENIED)
    return _write(content, output_path)


def render_metrics(report: MetricsReport, scenario_name: str, output_path: Optional[PathLike] = None) -> str:
    """
    Render a metrics report as a markdown table.

    Returns:
        Markdown text
    """
    rows: List[Dict[str, Any]] = []
    if report.modes:
        frame = report.to_frame()
        rows = frame.astype(object).where(frame.notna(), None).to_dict(orient="records")
    template = _environment().get_template('metrics.md.j2')
    content = template.render(scenario=scenario_name, cycles=report.cycles, modes=report.modes,
                              paired=report.paired, rows=rows)
    return _write(content, output_path)
