"""Sweep configuration, execution, comparison reports and plot output."""
from .config import ExperimentConfig, load_config
from .experiment import ResultRow, estimate_regularizer, read_rows, run_experiment, write_rows
from .report import compare_report, emit_plotdata

__all__ = [
    "ExperimentConfig",
    "ResultRow",
    "compare_report",
    "emit_plotdata",
    "estimate_regularizer",
    "load_config",
    "read_rows",
    "run_experiment",
    "write_rows",
]
