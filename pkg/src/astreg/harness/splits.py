"""Deterministic dataset splitting."""

from __future__ import annotations

import numpy as np

from ..corpus import SampleRecord


def split_dataset(
    records: list[SampleRecord], train_frac: float, seed: int
) -> tuple[list[SampleRecord], list[SampleRecord]]:
    """Seeded uniform shuffle, first floor(n * train_frac) records train."""
    if not 0.0 < train_frac < 1.0:
        raise ValueError(f"train_frac must lie in (0, 1), got {train_frac}")
    n = len(records)
    if n < 2:
        raise ValueError("need at least 2 records to split")
    order = np.random.default_rng(seed).permutation(n)
    cut = int(n * train_frac)
    train = [records[i] for i in order[:cut]]
    test = [records[i] for i in order[cut:]]
    if not train or not test:
        raise ValueError(f"split left an empty side: {len(train)} train / {len(test)} test")
    return train, test


def assert_disjoint(train: list[SampleRecord], test: list[SampleRecord], context: str) -> None:
    overlap = {r.id for r in train} & {r.id for r in test}
    if overlap:
        raise AssertionError(f"{context}: train/test overlap on ids {sorted(overlap)[:5]}")
