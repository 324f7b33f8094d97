"""Result emission: results.csv, per-model scatter SVGs, run manifest.

All output is byte-deterministic for identical inputs: fixed float
formatting, sorted rows, no timestamps.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from ..corpus import SampleRecord, record_to_json
from .metrics import MetricsReport

MANIFEST_SCHEMA = "1.0.0"

CSV_COLUMNS = (
    "model", "dataset", "protocol", "fraction",
    "mse_mean", "mse_std", "mae_mean", "mae_std", "pearson_mean", "pearson_std",
)


def corpus_hash(records: list[SampleRecord]) -> str:
    """Content hash over the canonical record JSON, order-independent."""
    digest = hashlib.sha256()
    for record in sorted(records, key=lambda r: r.id):
        digest.update(
            json.dumps(record_to_json(record), sort_keys=True, separators=(",", ":")).encode()
        )
    return digest.hexdigest()


def fit_line(xs, ys) -> tuple[float, float]:
    """Least-squares slope and intercept via the normal equations."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    var = np.mean(x * x) - np.mean(x) ** 2
    if var == 0.0:
        return 0.0, float(np.mean(y))
    slope = (np.mean(x * y) - np.mean(x) * np.mean(y)) / var
    return float(slope), float(np.mean(y) - slope * np.mean(x))


def _fmt(v: float) -> str:
    return f"{v:.10g}"


def write_results_csv(reports: list[MetricsReport], path: Path) -> None:
    rows = sorted(reports, key=lambda r: (r.model, r.dataset, r.protocol, r.fraction))
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.model, r.dataset, r.protocol, _fmt(r.fraction),
                    _fmt(r.mse_mean), _fmt(r.mse_std), _fmt(r.mae_mean), _fmt(r.mae_std),
                    _fmt(r.pearson_mean), _fmt(r.pearson_std),
                ]
            )


def scatter_svg(pairs: list[tuple[float, float]], title: str) -> str:
    """Predicted on x, real on y, data circles plus a dashed fitted line."""
    size, margin = 800, 60
    span = size - 2 * margin
    ys = [t for t, _ in pairs]
    xs = [p for _, p in pairs]
    lo = min(min(xs), min(ys))
    hi = max(max(xs), max(ys))
    if hi == lo:
        hi = lo + 1.0

    def sx(v: float) -> float:
        return margin + (v - lo) / (hi - lo) * span

    def sy(v: float) -> float:
        return size - margin - (v - lo) / (hi - lo) * span

    slope, intercept = fit_line(xs, ys)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<text x="{size / 2:.1f}" y="30" text-anchor="middle" font-size="20">{title}</text>',
        f'<line x1="{margin}" y1="{size - margin}" x2="{size - margin}" y2="{size - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{size - margin}" stroke="black"/>',
        f'<text x="{size / 2:.1f}" y="{size - 15}" text-anchor="middle" font-size="16">predicted</text>',
        f'<text x="20" y="{size / 2:.1f}" text-anchor="middle" font-size="16" '
        f'transform="rotate(-90 20 {size / 2:.1f})">real</text>',
    ]
    for truth, predicted in pairs:
        parts.append(
            f'<circle cx="{sx(predicted):.4f}" cy="{sy(truth):.4f}" r="4" '
            f'fill="steelblue" fill-opacity="0.6"/>'
        )
    y0, y1 = slope * lo + intercept, slope * hi + intercept
    parts.append(
        f'<line x1="{sx(lo):.4f}" y1="{sy(y0):.4f}" x2="{sx(hi):.4f}" y2="{sy(y1):.4f}" '
        f'stroke="crimson" stroke-dasharray="8 6" stroke-width="2"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_results(
    reports: list[MetricsReport],
    out_dir: str | Path,
    config: dict | None = None,
    corpus_digest: str | None = None,
) -> list[Path]:
    """Write results.csv, one scatter SVG per model, and run_manifest.json."""
    if not reports:
        raise ValueError("no reports to emit")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    csv_path = out / "results.csv"
    write_results_csv(reports, csv_path)
    written.append(csv_path)

    seen: set[str] = set()
    for report in sorted(reports, key=lambda r: (r.model, r.dataset, r.protocol, r.fraction)):
        if report.model in seen or not report.pairs:
            continue
        seen.add(report.model)
        svg_path = out / f"scatter_{report.model}.svg"
        svg_path.write_text(
            scatter_svg(report.pairs, f"{report.model} on {report.dataset}"), encoding="utf-8"
        )
        written.append(svg_path)

    manifest = {
        "schema": MANIFEST_SCHEMA,
        "config": config or {},
        "corpus_hash": corpus_digest,
        "reports": [
            {
                "model": r.model,
                "dataset": r.dataset,
                "protocol": r.protocol,
                "fraction": r.fraction,
                "seeds": [entry["seed"] for entry in r.per_seed],
                "per_seed": r.per_seed,
                "single_seed": r.single_seed,
            }
            for r in sorted(reports, key=lambda r: (r.model, r.dataset, r.protocol, r.fraction))
        ],
    }
    manifest_path = out / "run_manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(manifest_path)
    return written
