"""
gridcon evaluators package.
"""
from typing import Dict, List, Type

from .base import BaseEvaluator, check_aligned, persistent
from .flow import FlowEvaluator
from .metrics import MetricsReport, compute_metrics, violation_series
from .voltage import VoltageEvaluator

# Register all evaluator classes
EVALUATOR_REGISTRY: Dict[str, Type[BaseEvaluator]] = {
    "flow": FlowEvaluator,
    "voltage": VoltageEvaluator,
}


def get_evaluator(evaluator_name: str, **kwargs) -> BaseEvaluator:
    """
    Get an evaluator instance by name.

    Args:
        evaluator_name: Name of the evaluator to get
        **kwargs: Arguments to pass to the evaluator constructor

    Raises:
        ValueError: If the evaluator name is not registered
    """
    if evaluator_name not in EVALUATOR_REGISTRY:
        raise ValueError(f"Unknown evaluator: {evaluator_name}. Available evaluators: {list(EVALUATOR_REGISTRY.keys())}")
    return EVALUATOR_REGISTRY[evaluator_name](**kwargs)


def get_all_evaluators() -> List[BaseEvaluator]:
    """Instances of all registered evaluators with default settings."""
    return [cls() for cls in EVALUATOR_REGISTRY.values()]


__all__ = [
    'BaseEvaluator', 'VoltageEvaluator', 'FlowEvaluator', 'MetricsReport',
    'compute_metrics', 'violation_series', 'persistent', 'check_aligned',
    'EVALUATOR_REGISTRY', 'get_evaluator', 'get_all_evaluators',
]
