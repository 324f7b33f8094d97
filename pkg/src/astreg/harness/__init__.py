from .metrics import Metrics, MetricsReport, aggregate_reports, compute_metrics
from .protocols import (
    ExperimentConfig,
    run_size_sweep,
    run_standard,
    run_transfer,
    sweep_plan,
    train_model,
    transfer_plan,
)
from .reporting import corpus_hash, emit_results, fit_line, scatter_svg
from .splits import split_dataset

__all__ = [
    "ExperimentConfig",
    "Metrics",
    "MetricsReport",
    "aggregate_reports",
    "compute_metrics",
    "corpus_hash",
    "emit_results",
    "fit_line",
    "run_size_sweep",
    "run_standard",
    "run_transfer",
    "scatter_svg",
    "split_dataset",
    "sweep_plan",
    "train_model",
    "transfer_plan",
]
