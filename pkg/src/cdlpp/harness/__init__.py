"""Experiment orchestration: cross-validation, sweeps, exports and the CLI."""

from .experiment import (
    ExperimentError,
    ExperimentReport,
    ExperimentSpec,
    MethodResult,
    export_bases,
    export_class_scatter,
    run_beta_sweep,
    run_cv,
    run_dim_sweep,
    timing_report,
)
from .synthetic import class_grid, gaussian_classes

__all__ = [
    "ExperimentError",
    "ExperimentReport",
    "ExperimentSpec",
    "MethodResult",
    "export_bases",
    "export_class_scatter",
    "class_grid",
    "gaussian_classes",
    "run_beta_sweep",
    "run_cv",
    "run_dim_sweep",
    "timing_report",
]
