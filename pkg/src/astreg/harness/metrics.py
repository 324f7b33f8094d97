"""Evaluation metrics and their across-seed aggregation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Metrics:
    mse: float
    mae: float
    pearson: float
    degenerate: bool = False  # pearson forced to 0 by zero variance


def compute_metrics(true, predicted) -> Metrics:
    """MSE, MAE and Pearson correlation (population denominators).

    Zero variance on either side yields pearson 0 with the degeneracy flag
    set, keeping downstream CSVs numeric.
    """
    t = np.asarray(true, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if t.shape != p.shape or t.ndim != 1:
        raise ValueError(f"length mismatch: true {t.shape} vs predicted {p.shape}")
    if t.size < 1:
        raise ValueError("metrics need at least one pair")
    err = t - p
    mse = float(np.mean(err * err))
    mae = float(np.mean(np.abs(err)))
    if t.size < 2:
        return Metrics(mse, mae, 0.0, degenerate=True)
    st, sp = t.std(), p.std()
    if st == 0.0 or sp == 0.0:
        return Metrics(mse, mae, 0.0, degenerate=True)
    cov = float(np.mean((t - t.mean()) * (p - p.mean())))
    return Metrics(mse, mae, float(cov / (st * sp)))


@dataclass
class MetricsReport:
    """Across-seed mean/std for one (model, dataset, protocol, fraction) cell."""

    model: str
    dataset: str
    protocol: str
    fraction: float
    mse_mean: float
    mse_std: float
    mae_mean: float
    mae_std: float
    pearson_mean: float
    pearson_std: float
    per_seed: list[dict] = field(default_factory=list)
    pairs: list[tuple[float, float]] = field(default_factory=list)  # (true, pred), last seed
    single_seed: bool = False  # std forced to 0 by a one-element seed list

    def __post_init__(self) -> None:
        if not -1.0 - 1e-9 <= self.pearson_mean <= 1.0 + 1e-9:
            raise ValueError(f"pearson out of range: {self.pearson_mean}")
        if self.mse_mean < 0 or self.mae_mean < 0:
            raise ValueError("error metrics must be nonnegative")


def _std(values: list[float]) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1))


def aggregate_reports(
    model: str,
    dataset: str,
    protocol: str,
    fraction: float,
    seeds: list[int],
    per_seed_metrics: list[Metrics],
    pairs: list[tuple[float, float]],
) -> MetricsReport:
    mses = [m.mse for m in per_seed_metrics]
    maes = [m.mae for m in per_seed_metrics]
    cors = [m.pearson for m in per_seed_metrics]
    return MetricsReport(
        model=model,
        dataset=dataset,
        protocol=protocol,
        fraction=fraction,
        mse_mean=float(np.mean(mses)),
        mse_std=_std(mses),
        mae_mean=float(np.mean(maes)),
        mae_std=_std(maes),
        pearson_mean=float(np.mean(cors)),
        pearson_std=_std(cors),
        per_seed=[
            {
                "seed": s,
                "mse": m.mse,
                "mae": m.mae,
                "pearson": m.pearson,
                "degenerate": m.degenerate,
            }
            for s, m in zip(seeds, per_seed_metrics)
        ],
        pairs=list(pairs),
        single_seed=len(seeds) == 1,
    )
