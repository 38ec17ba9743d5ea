"""Results CSV, SVG scatter plots and running-time tables."""
from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

import numpy as np

from .engine import BackgroundSetting, SweepReport, TrialRecord
from .training import (
    CATEGORICAL_HYPERPARAMETERS,
    HYPERPARAMETERS,
    INTEGER_HYPERPARAMETERS,
    CvResult,
)

RESULT_COLUMNS = (
    "iteration",
    "target_name",
    "target_value",
    "mean_train_auc",
    "mean_test_auc",
    "test_auc",
    "runtime_seconds",
    "status",
)
TIMING_COLUMNS = ("table", "dataset", "target", "settings", "mean_seconds", "total_hours")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.6g}"
    return str(value)


def background_columns(target: str) -> List[str]:
    return [h for h in HYPERPARAMETERS if h != target]


def write_results_csv(report: SweepReport, path) -> Path:
    if not report.records:
        raise ValueError("report has no trials")
    path = Path(path)
    bg_cols = background_columns(report.target)
    records = sorted(report.records, key=lambda r: (r.iteration_id, r.target_value))
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(RESULT_COLUMNS) + bg_cols)
        for rec in records:
            res = rec.result
            bg = rec.background.as_dict()
            writer.writerow(
                [
                    rec.iteration_id,
                    report.target,
                    fmt(rec.target_value),
                    fmt(res.mean_train_auc),
                    fmt(res.mean_test_auc),
                    fmt(res.test_auc),
                    fmt(res.runtime_seconds),
                    res.status,
                ]
                + [fmt(bg[c]) for c in bg_cols]
            )
    return path


def metadata_path(results_path) -> Path:
    return Path(results_path).with_suffix(".json")


def write_metadata(report: SweepReport, results_path) -> Path:
    meta = {
        "dataset": report.dataset_name,
        "target": report.target,
        "iterations": report.iterations,
        "master_seed": report.master_seed,
        "n_values": len(report.values),
        "total_runtime_seconds": report.total_runtime,
    }
    out = metadata_path(results_path)
    out.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return out


def _parse_value(name: str, text: str):
    if text == "":
        return None
    if name in CATEGORICAL_HYPERPARAMETERS:
        return text
    if name in INTEGER_HYPERPARAMETERS:
        return int(float(text))
    return float(text)


def read_results_csv(path, dataset_name: Optional[str] = None) -> SweepReport:
    """Rebuild a report from a results CSV (per-fold AUCs are not stored)."""
    path = Path(path)
    meta = {}
    if metadata_path(path).is_file():
        meta = json.loads(metadata_path(path).read_text(encoding="utf-8"))
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if tuple(header[: len(RESULT_COLUMNS)]) != RESULT_COLUMNS:
            raise ValueError(f"{path}: not a results file")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no trials")
    target = rows[0]["target_name"]
    bg_cols = header[len(RESULT_COLUMNS):]
    backgrounds: Dict[int, BackgroundSetting] = {}
    records = []
    for row in rows:
        it = int(row["iteration"])
        if it not in backgrounds:
            items = tuple((c, _parse_value(c, row[c])) for c in bg_cols)
            backgrounds[it] = BackgroundSetting(target, items)
        result = CvResult(
            mean_train_auc=float(row["mean_train_auc"]),
            mean_test_auc=float(row["mean_test_auc"]),
            test_auc=float(row["test_auc"]),
            runtime_seconds=float(row["runtime_seconds"]),
            status=row["status"],
        )
        records.append(TrialRecord(it, backgrounds[it], _parse_value(target, row["target_value"]), result))
    values = sorted({r.target_value for r in records})
    return SweepReport(
        dataset_name=dataset_name or meta.get("dataset") or path.stem,
        target=target,
        values=values,
        iterations=len(backgrounds),
        master_seed=int(meta.get("master_seed", 0)),
        records=records,
        total_runtime=float(meta.get("total_runtime_seconds", 0.0)),
    )


# ---------------------------------------------------------------- SVG plots

PANEL_W, PANEL_H = 360, 260
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 56, 16, 28, 44
POINT_RADIUS = 3
GRID_COLUMNS = 5

Y_FIELDS = {"test_auc": "test_auc", "runtime": "running time (s)"}


def _nice_ticks(lo: float, hi: float, n: int = 5) -> List[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


@dataclass
class PlotSpec:
    x_label: str
    y_label: str
    points: List[Tuple[float, float]]
    title: str
    x_range: Tuple[float, float]
    y_range: Tuple[float, float]
    y_ticks: List[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.y_ticks:
            self.y_ticks = _nice_ticks(*self.y_range)


def _y_value(rec: TrialRecord, y_field: str) -> float:
    if y_field == "test_auc":
        return rec.result.test_auc
    if y_field == "runtime":
        return rec.result.runtime_seconds
    raise ValueError(f"unknown y field {y_field!r}")


def plot_specs(report: SweepReport, y_field: str = "test_auc") -> List[PlotSpec]:
    if not report.records:
        raise ValueError("report has no trials")
    if y_field not in Y_FIELDS:
        raise ValueError(f"unknown y field {y_field!r}")
    xs = [float(v) for v in report.values] or [float(r.target_value) for r in report.records]
    x_range = (min(xs), max(xs))
    if y_field == "test_auc":
        y_range = (0.0, 1.0)
        y_ticks = [round(0.1 * i, 1) for i in range(11)]
    else:
        top = max(_y_value(r, y_field) for r in report.records)
        y_range = (0.0, top * 1.1 if top > 0 else 1.0)
        y_ticks = []
    specs = []
    for it in report.iteration_ids:
        pts = [(float(r.target_value), _y_value(r, y_field)) for r in report.for_iteration(it)]
        specs.append(
            PlotSpec(
                x_label=report.target,
                y_label=Y_FIELDS[y_field],
                points=pts,
                title=f"{report.dataset_name} {report.target}: experiment {it}",
                x_range=x_range,
                y_range=y_range,
                y_ticks=y_ticks,
            )
        )
    return specs


def _panel(spec: PlotSpec) -> List[str]:
    x0, x1 = spec.x_range
    y0, y1 = spec.y_range
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    plot_w = PANEL_W - MARGIN_L - MARGIN_R
    plot_h = PANEL_H - MARGIN_T - MARGIN_B

    def sx(x):
        return MARGIN_L + (x - x0) / (x1 - x0) * plot_w

    def sy(y):
        return MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * plot_h

    out = [
        f'<rect x="0" y="0" width="{PANEL_W}" height="{PANEL_H}" fill="#ffffff"/>',
        f'<text x="{PANEL_W / 2:.2f}" y="16" font-size="12" text-anchor="middle">{escape(spec.title)}</text>',
    ]
    for t in spec.y_ticks:
        y = sy(t)
        out.append(
            f'<line class="grid" data-value="{fmt(t)}" x1="{MARGIN_L:.3f}" y1="{y:.3f}" '
            f'x2="{MARGIN_L + plot_w:.3f}" y2="{y:.3f}" stroke="#dddddd" stroke-width="0.5"/>'
        )
        out.append(
            f'<text x="{MARGIN_L - 4:.2f}" y="{y + 3:.2f}" font-size="9" text-anchor="end">{fmt(t)}</text>'
        )
    for t in _nice_ticks(x0, x1):
        x = sx(t)
        bottom = MARGIN_T + plot_h
        out.append(f'<line class="tick" x1="{x:.3f}" y1="{bottom:.3f}" x2="{x:.3f}" y2="{bottom + 4:.3f}" stroke="#000000"/>')
        out.append(f'<text x="{x:.2f}" y="{bottom + 14:.2f}" font-size="9" text-anchor="middle">{fmt(t)}</text>')
    out.append(
        f'<rect class="axes" x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#000000"/>'
    )
    out.append(
        f'<text x="{MARGIN_L + plot_w / 2:.2f}" y="{PANEL_H - 8}" font-size="11" text-anchor="middle">'
        f"{escape(spec.x_label)}</text>"
    )
    out.append(
        f'<text x="14" y="{MARGIN_T + plot_h / 2:.2f}" font-size="11" text-anchor="middle" '
        f'transform="rotate(-90 14 {MARGIN_T + plot_h / 2:.2f})">{escape(spec.y_label)}</text>'
    )
    for x, y in spec.points:
        out.append(
            f'<circle cx="{sx(x):.3f}" cy="{sy(y):.3f}" r="{POINT_RADIUS}" fill="#1f77b4" fill-opacity="0.7"/>'
        )
    return out


def _svg_document(width: float, height: float, body: Iterable[str]) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


def render_scatter(report: SweepReport, y_field: str = "test_auc", out_dir=".", prefix: Optional[str] = None) -> List[Path]:
    """Write one SVG per iteration plus a grid of all iterations.

    Returns the written paths, grid last.
    """
    specs = plot_specs(report, y_field)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = prefix or f"{report.dataset_name}_{report.target}_{y_field}".strip("_")
    paths = []
    for it, spec in zip(report.iteration_ids, specs):
        p = out_dir / f"{stem}_exp{it:02d}.svg"
        p.write_text(_svg_document(PANEL_W, PANEL_H, _panel(spec)), encoding="utf-8")
        paths.append(p)
    cols = min(GRID_COLUMNS, len(specs))
    rows = math.ceil(len(specs) / cols)
    body = []
    for k, spec in enumerate(specs):
        gx, gy = (k % cols) * PANEL_W, (k // cols) * PANEL_H
        body.append(f'<g transform="translate({gx},{gy})">')
        body.extend(_panel(spec))
        body.append("</g>")
    grid = out_dir / f"{stem}_grid.svg"
    grid.write_text(_svg_document(cols * PANEL_W, rows * PANEL_H, body), encoding="utf-8")
    paths.append(grid)
    return paths


# ------------------------------------------------------------ timing tables


@dataclass
class TimingSummary:
    # (dataset, settings, mean seconds per setting, total hours)
    datasets: List[Tuple[str, int, float, float]]
    # (target, dataset or "all", settings, total hours)
    targets: List[Tuple[str, str, int, float]]


def timing_summary(reports: Sequence[SweepReport]) -> TimingSummary:
    per_dataset: Dict[str, List[float]] = defaultdict(list)
    per_target: Dict[Tuple[str, str], List[float]] = defaultdict(list)
    for rep in reports:
        seconds = [r.result.runtime_seconds for r in rep.records]
        per_dataset[rep.dataset_name].extend(seconds)
        per_target[(rep.target, rep.dataset_name)].extend(seconds)
    datasets = [
        (name, len(s), math.fsum(s) / len(s) if s else 0.0, math.fsum(s) / 3600.0)
        for name, s in sorted(per_dataset.items())
    ]
    targets = []
    for target in sorted({t for t, _ in per_target}):
        names = sorted(d for t, d in per_target if t == target)
        everything = [x for d in names for x in per_target[(target, d)]]
        targets.append((target, "all", len(everything), math.fsum(everything) / 3600.0))
        for d in names:
            s = per_target[(target, d)]
            targets.append((target, d, len(s), math.fsum(s) / 3600.0))
    return TimingSummary(datasets, targets)


def write_timing_csv(summary: TimingSummary, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TIMING_COLUMNS)
        for name, n, mean_s, hours in summary.datasets:
            writer.writerow(["dataset", name, "", n, fmt(mean_s), fmt(hours)])
        for target, name, n, hours in summary.targets:
            writer.writerow(["target", name, target, n, "", fmt(hours)])
    return path
