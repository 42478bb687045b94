"""
gridcon visualization package: comparison charts and markdown documents.
"""
from .charts import (
    flow_comparison,
    setpoint_chart,
    voltage_comparison,
    write_comparison_charts
)
from .report import (
    render_metrics,
    render_register_map
)

__all__ = [
    # Chart functions
    'voltage_comparison',
    'flow_comparison',
    'setpoint_chart',
    'write_comparison_charts',

    # Markdown documents
    'render_register_map',
    'render_metrics'
]
