"""Capacitated covering of points by capacitated balls: LP relaxation and bi-criteria rounding."""

from .instance import (
    Ball,
    CoverageError,
    MetricInstance,
    ValidationReport,
    contains,
    distance,
    euclidean_instance,
    metric_instance,
    validate_instance,
)

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "CoverageError",
    "MetricInstance",
    "ValidationReport",
    "contains",
    "distance",
    "euclidean_instance",
    "metric_instance",
    "validate_instance",
]
