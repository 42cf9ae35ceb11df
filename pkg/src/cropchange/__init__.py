"""Design-based area and change estimation for classified land-cover maps."""
from __future__ import annotations

__version__ = "0.1.0"

from ._accel import backend_name
from .crops import ChangeClass, ChangeMap, FilterConfig, apply_ndvi_filter, compose_change, threshold_sweep
from .estimate import (
    AccuracyReport,
    AreaEstimate,
    ConfusionMatrix,
    EstimationInfeasible,
    accuracy_report,
    binary_accuracy,
    estimate_area,
)
from .geo import BufferSet, GeoPoint, MultiPolygon, Polygon, haversine_m
from .grid import ClassGrid, GridHeader, PixelArea, RealGrid, read_grid, write_grid
from .sampling import SampleRecord, allocate, draw_sample, merge_labels

__all__ = [
    "__version__", "backend_name",
    "ChangeClass", "ChangeMap", "FilterConfig", "apply_ndvi_filter", "compose_change", "threshold_sweep",
    "AccuracyReport", "AreaEstimate", "ConfusionMatrix", "EstimationInfeasible",
    "accuracy_report", "binary_accuracy", "estimate_area",
    "BufferSet", "GeoPoint", "MultiPolygon", "Polygon", "haversine_m",
    "ClassGrid", "GridHeader", "PixelArea", "RealGrid", "read_grid", "write_grid",
    "SampleRecord", "allocate", "draw_sample", "merge_labels",
]
