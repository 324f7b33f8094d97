"""Regression-target normalization, fitted on training data only."""

from __future__ import annotations

import logging
import math

import numpy as np

from .corpus import SampleRecord

logger = logging.getLogger(__name__)

SCHEMES = ("log_min_max", "min_max", "identity")


class TargetScaler:
    """Maps raw millisecond medians to a normalized regression scale.

    log_min_max: x -> (ln x - ln min) / (ln max - ln min), min/max from fit().
    min_max:     x -> (x - min) / (max - min).
    identity:    x -> x.

    A degenerate fit (min == max) maps everything to 0.5 and logs a warning.
    """

    def __init__(self, scheme: str = "log_min_max"):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
        self.scheme = scheme
        self.fitted_min: float | None = None
        self.fitted_max: float | None = None
        self.degenerate = False

    def fit(self, raw_values) -> "TargetScaler":
        values = [float(v) for v in raw_values]
        if not values:
            raise ValueError("cannot fit scaler on empty values")
        self._check_positive(values)
        self.fitted_min = min(values)
        self.fitted_max = max(values)
        self.degenerate = self.fitted_min == self.fitted_max
        if self.degenerate:
            logger.warning(
                "degenerate target range (min == max == %s); all targets map to 0.5",
                self.fitted_min,
            )
        return self

    def _check_positive(self, values) -> None:
        if self.scheme == "log_min_max":
            for v in values:
                if v <= 0:
                    raise ValueError(f"log_min_max requires positive values, got {v}")

    def _is_fitted(self) -> None:
        if self.fitted_min is None:
            raise RuntimeError("scaler is not fitted")

    def transform(self, values) -> np.ndarray:
        self._is_fitted()
        arr = np.asarray(values, dtype=np.float64)
        if self.degenerate:
            return np.full_like(arr, 0.5)
        if self.scheme == "identity":
            return arr.copy()
        if self.scheme == "min_max":
            return (arr - self.fitted_min) / (self.fitted_max - self.fitted_min)
        self._check_positive(arr.ravel().tolist())
        lo, hi = math.log(self.fitted_min), math.log(self.fitted_max)
        return (np.log(arr) - lo) / (hi - lo)

    def inverse_transform(self, values) -> np.ndarray:
        self._is_fitted()
        arr = np.asarray(values, dtype=np.float64)
        if self.degenerate:
            return np.full_like(arr, self.fitted_min)
        if self.scheme == "identity":
            return arr.copy()
        if self.scheme == "min_max":
            return arr * (self.fitted_max - self.fitted_min) + self.fitted_min
        lo, hi = math.log(self.fitted_min), math.log(self.fitted_max)
        return np.exp(arr * (hi - lo) + lo)


def fit_and_apply_scaler(
    train_records: list[SampleRecord],
    apply_to: list[list[SampleRecord]],
    scheme: str = "log_min_max",
) -> TargetScaler:
    """Fit on the train records' raw medians, then set ``target`` on every group.

    Only the train group contributes fit statistics; test-side groups may land
    outside [0, 1].
    """
    scaler = TargetScaler(scheme)
    scaler.fit([r.raw_target() for r in train_records])
    for group in apply_to:
        for record in group:
            record.target = float(scaler.transform([record.raw_target()])[0])
    return scaler
