"""
Weighted-least-squares state estimation.
"""
from .measurements import (Measurement, MeasurementKind, MeasurementPlacement, MeasurementSet,
                           synthesize_measurements)
from .wls import EstimationReport, MeasurementModel, SystemState, estimate
