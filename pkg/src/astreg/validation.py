"""Input validation helpers shared by the estimators."""

from __future__ import annotations

from .corpus import SampleRecord


def check_records(records, require_target: bool = False) -> list[SampleRecord]:
    """Validate and materialize a record sequence for fit/predict."""
    records = list(records)
    if not records:
        raise ValueError("records must be non-empty")
    for r in records:
        if not isinstance(r, SampleRecord):
            raise TypeError(f"expected SampleRecord, got {type(r).__name__}")
        if require_target and r.target is None:
            raise ValueError(
                f"record {r.id!r} has no normalized target; apply a TargetScaler before fit"
            )
    return records


def check_positive(name: str, value) -> None:
    if value <= 0:
        raise ValueError(f"{name} must be positive, got {value}")
