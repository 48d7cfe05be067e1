"""Voxel overlap metrics: IoU for evaluation, BCE as the training loss.

Real-valued predictions are binarized at a threshold (default 0.4) before
IoU; the threshold is carried into every report so numbers are reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ShapeMismatch
from .voxel import VoxelGrid
from .voxfile import read_voxfile

DEFAULT_THRESHOLD = 0.4
_EPS = 1e-7
_SPLIT_ORDER = ("train", "val", "test")


def _values(grid) -> np.ndarray:
    if isinstance(grid, VoxelGrid):
        return grid.values
    return np.asarray(grid)


def iou_counts(pred, truth, threshold: float = DEFAULT_THRESHOLD) -> tuple[int, int]:
    """(intersection, union) voxel counts after binarizing pred at threshold."""
    p = _values(pred)
    t = _values(truth)
    if p.shape != t.shape:
        raise ShapeMismatch(f"pred {p.shape} vs truth {t.shape}")
    pb = p >= threshold
    tb = t != 0
    intersection = int(np.count_nonzero(pb & tb))
    union = int(np.count_nonzero(pb | tb))
    return intersection, union


def iou(pred, truth, threshold: float = DEFAULT_THRESHOLD) -> float:
    """|pred AND truth| / |pred OR truth|; two empty grids score 1.0."""
    intersection, union = iou_counts(pred, truth, threshold)
    if union == 0:
        return 1.0
    return intersection / union


def bce(pred, truth) -> float:
    """Mean binary cross-entropy with predictions clamped to [1e-7, 1-1e-7]."""
    p = np.asarray(_values(pred), dtype=np.float64)
    t = np.asarray(_values(truth), dtype=np.float64)
    if p.shape != t.shape:
        raise ShapeMismatch(f"pred {p.shape} vs truth {t.shape}")
    p = np.clip(p, _EPS, 1.0 - _EPS)
    return float(-np.mean(t * np.log(p) + (1.0 - t) * np.log(1.0 - p)))


@dataclass(frozen=True)
class SampleScore:
    """Per-manifest-entry evaluation result."""

    protein_id: str
    repetition: int
    split: str
    n_views: int
    iou: float
    intersection: int
    union: int


@dataclass
class EvalReport:
    """Batch evaluation outcome: per-sample scores, means, missing files."""

    threshold: float
    samples: list[SampleScore] = field(default_factory=list)
    missing: list[str] = field(default_factory=list)

    @property
    def mean_iou(self) -> float | None:
        if not self.samples:
            return None
        return float(np.mean([s.iou for s in self.samples]))

    def split_mean(self, split: str) -> float | None:
        scores = [s.iou for s in self.samples if s.split == split]
        if not scores:
            return None
        return float(np.mean(scores))


def prediction_filename(protein_id: str, repetition: int) -> str:
    """File name convention connecting predictions to manifest entries."""
    return f"{protein_id}_rep{repetition}.afmv"


def batch_eval(
    entries,
    predictions_dir: str | Path,
    threshold: float = DEFAULT_THRESHOLD,
    dataset_root: str | Path = ".",
) -> EvalReport:
    """Score every manifest entry against its prediction VoxFile.

    Ground truth paths in the entries are resolved against dataset_root;
    predictions are looked up as <predictions_dir>/<protein>_rep<k>.afmv.
    Entries without a prediction are listed in the report and excluded from
    the means; callers turn a non-empty missing list into a failing exit.
    """
    predictions_dir = Path(predictions_dir)
    dataset_root = Path(dataset_root)
    report = EvalReport(threshold=threshold)
    truth_cache: dict[str, VoxelGrid] = {}
    for entry in sorted(entries, key=lambda e: (e.protein_id, e.repetition)):
        pred_path = predictions_dir / prediction_filename(
            entry.protein_id, entry.repetition
        )
        if not pred_path.exists():
            report.missing.append(str(pred_path))
            continue
        if entry.voxel_path not in truth_cache:
            truth_cache[entry.voxel_path] = read_voxfile(dataset_root / entry.voxel_path)
        truth = truth_cache[entry.voxel_path]
        pred = read_voxfile(pred_path)
        intersection, union = iou_counts(pred, truth, threshold)
        score = 1.0 if union == 0 else intersection / union
        report.samples.append(
            SampleScore(
                protein_id=entry.protein_id,
                repetition=entry.repetition,
                split=entry.split,
                n_views=len(entry.view_indices),
                iou=score,
                intersection=intersection,
                union=union,
            )
        )
    return report


def report_to_json(report: EvalReport) -> str:
    """Serialize an EvalReport with stable key order."""
    payload = {
        "threshold": report.threshold,
        "mean_iou": report.mean_iou,
        "split_means": {
            split: report.split_mean(split)
            for split in _SPLIT_ORDER
            if report.split_mean(split) is not None
        },
        "samples": [
            {
                "protein_id": s.protein_id,
                "repetition": s.repetition,
                "split": s.split,
                "n_views": s.n_views,
                "iou": s.iou,
                "intersection": s.intersection,
                "union": s.union,
            }
            for s in report.samples
        ],
        "missing": list(report.missing),
    }
    return json.dumps(payload, indent=2)


def format_table(report: EvalReport) -> str:
    """Fixed-width per-view-count table of split means.

    One row per number of views present in the evaluated entries, columns
    for train, validation, and test means; a dash marks splits with no
    evaluated samples.
    """
    by_views: dict[int, list[SampleScore]] = {}
    for s in report.samples:
        by_views.setdefault(s.n_views, []).append(s)

    header = f"{'#views':>7}  {'Train IoU':>10}  {'Validation IoU':>15}  {'Test IoU':>9}"
    lines = [header]
    for n_views in sorted(by_views):
        row = [f"{n_views:>7}"]
        for split, width in (("train", 10), ("val", 15), ("test", 9)):
            scores = [s.iou for s in by_views[n_views] if s.split == split]
            cell = f"{np.mean(scores):.4f}" if scores else "-"
            row.append(f"{cell:>{width}}")
        lines.append("  ".join(row))
    if not by_views:
        lines.append(f"{'-':>7}  {'-':>10}  {'-':>15}  {'-':>9}")
    return "\n".join(lines)
