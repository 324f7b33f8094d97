"""The three experiment protocols: standard split, size sweep, transferability.

Every protocol works on per-seed fresh record copies so that target
normalization (fitted on the training side only) never leaks across seeds
or splits.  Seeds may run in parallel; aggregation is seed-order stable.
"""

from __future__ import annotations

import copy
import os

import numpy as np
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from ..corpus import SampleRecord
from ..models import MODEL_KINDS, build_estimator
from ..scaling import SCHEMES, fit_and_apply_scaler
from .metrics import Metrics, MetricsReport, aggregate_reports, compute_metrics
from .splits import assert_disjoint, split_dataset


@dataclass
class ExperimentConfig:
    model: str = "dual"
    preset: str = "tiny"
    epochs: int = 100
    lr: float = 1e-4
    batch_size: int = 4
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    train_frac: float = 0.8
    sweep_fractions: tuple[float, ...] = (0.2, 0.4, 0.6)
    transfer_portions: tuple[float, ...] = (0.1, 0.2, 0.3)
    fine_tune_epochs: int | None = None  # defaults to epochs // 4
    scheme: str = "log_min_max"
    memorize: bool = False  # degenerate sanity mode: evaluate on the training set
    jobs: int = 1
    model_overrides: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.model not in MODEL_KINDS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if len(set(self.seeds)) != len(self.seeds) or not self.seeds:
            raise ValueError("seeds must be non-empty and distinct")
        for frac in (self.train_frac, *self.sweep_fractions):
            if not 0.0 < frac < 1.0:
                raise ValueError(f"fraction {frac} outside (0, 1)")
        for portion in self.transfer_portions:
            if not 0.0 <= portion < 1.0:
                raise ValueError(f"transfer portion {portion} outside [0, 1)")

    @property
    def effective_fine_tune_epochs(self) -> int:
        if self.fine_tune_epochs is not None:
            return self.fine_tune_epochs
        return max(1, self.epochs // 4)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "preset": self.preset,
            "epochs": self.epochs,
            "lr": self.lr,
            "batch_size": self.batch_size,
            "seeds": list(self.seeds),
            "train_frac": self.train_frac,
            "sweep_fractions": list(self.sweep_fractions),
            "transfer_portions": list(self.transfer_portions),
            "fine_tune_epochs": self.effective_fine_tune_epochs,
            "scheme": self.scheme,
            "memorize": self.memorize,
            "jobs": self.jobs,
            "model_overrides": dict(self.model_overrides),
        }


def _fresh(records: list[SampleRecord]) -> list[SampleRecord]:
    return [replace(r, target=None) for r in records]


def _job_count(config: ExperimentConfig) -> int:
    cap = os.environ.get("ASTREG_THREADS")
    jobs = max(1, config.jobs)
    if cap:
        jobs = min(jobs, max(1, int(cap)))
    return min(jobs, len(config.seeds))


def _map_seeds(config: ExperimentConfig, worker):
    jobs = _job_count(config)
    if jobs == 1:
        return [worker(seed) for seed in config.seeds]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, config.seeds))


def _make_estimator(config: ExperimentConfig, seed: int):
    return build_estimator(
        config.model,
        preset=config.preset,
        epochs=config.epochs,
        lr=config.lr,
        batch_size=config.batch_size,
        seed=seed,
        **config.model_overrides,
    )


def train_model(config: ExperimentConfig, records: list[SampleRecord], seed: int):
    """Fit one estimator; returns (estimator, per-epoch loss history)."""
    estimator = _make_estimator(config, seed)
    estimator.fit(records)
    return estimator, estimator.loss_history_


def _evaluate(estimator, test: list[SampleRecord]) -> tuple[Metrics, list[tuple[float, float]]]:
    predictions = estimator.predict(test)
    truth = [r.target for r in test]
    return compute_metrics(truth, predictions), list(zip(truth, predictions.tolist()))


def run_standard(
    records: list[SampleRecord], config: ExperimentConfig, dataset: str = "corpus"
) -> MetricsReport:
    """80/20 split per seed, mean and std across seeds."""
    if len(records) < 10 and not config.memorize:
        raise ValueError("standard protocol needs at least 10 records")

    def worker(seed: int):
        if config.memorize:
            train, test = _fresh(records), _fresh(records)
        else:
            train_raw, test_raw = split_dataset(records, config.train_frac, seed)
            train, test = _fresh(train_raw), _fresh(test_raw)
            assert_disjoint(train, test, "standard protocol")
        fit_and_apply_scaler(train, [train, test], config.scheme)
        estimator, _ = train_model(config, train, seed)
        return _evaluate(estimator, test)

    outcomes = _map_seeds(config, worker)
    return aggregate_reports(
        config.model, dataset, "standard", config.train_frac,
        list(config.seeds), [m for m, _ in outcomes], outcomes[-1][1],
    )


def sweep_plan(n: int, fractions: tuple[float, ...], seed: int) -> tuple[list, list]:
    """Nested training pools plus the fixed test slice for one seed.

    Returns (train index arrays, one per ascending fraction, test indices).
    The test slice is 20% of the corpus drawn from outside the largest pool,
    so it is identical across fractions; smaller pools are prefixes of
    larger ones.
    """
    fractions = sorted(fractions)
    test_size = int(n * 0.2)
    largest = int(n * fractions[-1])
    if largest + test_size > n:
        raise ValueError("sweep fractions leave no room for a fixed 20% test slice")
    order = np.random.default_rng(seed).permutation(n)
    trains = [order[: int(n * frac)].tolist() for frac in fractions]
    return trains, order[largest : largest + test_size].tolist()


def run_size_sweep(
    records: list[SampleRecord], config: ExperimentConfig, dataset: str = "corpus"
) -> list[MetricsReport]:
    """Train on nested 20/40/60% pools; test on one fixed 20% slice per seed.

    The test slice is drawn once per seed from records outside the largest
    training pool, so it is identical across fractions.
    """
    fractions = sorted(config.sweep_fractions)
    n = len(records)
    if int(n * fractions[0]) < 2:
        raise ValueError("corpus too small: smallest sweep fraction yields < 2 records")

    def worker(seed: int):
        trains, test_idx = sweep_plan(n, fractions, seed)
        outcomes = []
        for frac, train_idx in zip(fractions, trains):
            train = _fresh([records[i] for i in train_idx])
            test = _fresh([records[i] for i in test_idx])
            assert_disjoint(train, test, f"size sweep fraction {frac}")
            fit_and_apply_scaler(train, [train, test], config.scheme)
            estimator, _ = train_model(config, train, seed)
            outcomes.append(_evaluate(estimator, test))
        return outcomes

    per_seed = _map_seeds(config, worker)
    reports = []
    for i, frac in enumerate(fractions):
        reports.append(
            aggregate_reports(
                config.model, dataset, "size_sweep", frac,
                list(config.seeds), [seed_out[i][0] for seed_out in per_seed],
                per_seed[-1][i][1],
            )
        )
    return reports


def transfer_plan(n: int, portions: tuple[float, ...], seed: int) -> tuple[list, list]:
    """Nested fine-tuning pools plus the fixed target test slice for one seed.

    The test slice is the first 20% of the shuffled target; portions are
    prefixes of the remainder, so they never overlap the test slice.
    """
    portions = sorted(portions)
    test_size = max(1, int(n * 0.2))
    order = np.random.default_rng(seed).permutation(n)
    pool = order[test_size:]
    tunes = [pool[: int(n * portion)].tolist() for portion in portions]
    return tunes, order[:test_size].tolist()


def run_transfer(
    source: list[SampleRecord],
    target: list[SampleRecord],
    config: ExperimentConfig,
    source_name: str = "source",
    target_name: str = "target",
) -> list[MetricsReport]:
    """Train on source, fine-tune on target portions, evaluate on a fixed slice.

    The target test slice (20%) is fixed per seed and disjoint from every
    fine-tuning portion.  Vocabularies come from the source; the target
    scaler is refitted on each fine-tuning portion (portion 0 evaluates the
    source model zero-shot under the source scaler).
    """
    if not source or not target:
        raise ValueError("both corpora must be non-empty")
    portions = sorted(config.transfer_portions)
    n_t = len(target)
    if portions and int(n_t * portions[-1]) + max(1, int(n_t * 0.2)) > n_t:
        raise ValueError("transfer portions leave no room for the fixed 20% test slice")

    def worker(seed: int):
        train_source = _fresh(source)
        source_scaler = fit_and_apply_scaler(train_source, [train_source], config.scheme)
        base_estimator, _ = train_model(config, train_source, seed)
        tunes, test_idx = transfer_plan(n_t, portions, seed)
        outcomes = []
        for portion, tune_idx in zip(portions, tunes):
            estimator = copy.deepcopy(base_estimator)
            tune = _fresh([target[i] for i in tune_idx])
            test = _fresh([target[i] for i in test_idx])
            assert_disjoint(tune, test, f"transfer portion {portion}")
            if tune:
                scaler = fit_and_apply_scaler(tune, [tune, test], config.scheme)
                estimator.fine_tune(tune, epochs=config.effective_fine_tune_epochs)
            else:
                for r in test:
                    r.target = float(source_scaler.transform([r.raw_target()])[0])
            outcomes.append(_evaluate(estimator, test))
        return outcomes

    per_seed = _map_seeds(config, worker)
    reports = []
    for i, portion in enumerate(portions):
        reports.append(
            aggregate_reports(
                config.model, f"{source_name}->{target_name}", "transfer", portion,
                list(config.seeds), [seed_out[i][0] for seed_out in per_seed],
                per_seed[-1][i][1],
            )
        )
    return reports
