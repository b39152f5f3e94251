"""Dice similarity scoring and dataset statistics."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .compose import load_manifest
from .errors import DataIOError
from .imgcore import ensure_mask, ensure_same_size, load_png


def dsc(pred: np.ndarray, gt: np.ndarray) -> float:
    """Dice similarity coefficient 2|A∩B| / (|A| + |B|).

    Two empty masks score 1.0 (perfect agreement on absence), which keeps
    dsc(a, a) == 1 universally.
    """
    ensure_mask(pred)
    ensure_mask(gt)
    ensure_same_size(pred, gt)
    total = int(pred.sum()) + int(gt.sum())
    if total == 0:
        return 1.0
    intersection = int(np.logical_and(pred, gt).sum())
    return 2.0 * intersection / total


@dataclass
class EvalReport:
    names: list[str]
    scores: list[float]

    @property
    def count(self) -> int:
        return len(self.scores)

    @property
    def mean(self) -> float:
        return float(np.mean(self.scores))

    @property
    def std(self) -> float:
        # Population standard deviation: the scores are the whole test set,
        # not a sample from a larger one.
        return float(np.std(self.scores))

    def to_json(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "std": self.std,
            "per_sample": [
                {"name": n, "dsc": s} for n, s in zip(self.names, self.scores)
            ],
        }

    def to_text(self) -> str:
        width = max((len(n) for n in self.names), default=4)
        lines = [f"{'name'.ljust(width)}  dsc"]
        lines += [f"{n.ljust(width)}  {s:.6f}" for n, s in zip(self.names, self.scores)]
        lines.append(f"{'mean'.ljust(width)}  {self.mean:.6f}")
        lines.append(f"{'std'.ljust(width)}  {self.std:.6f}")
        return "\n".join(lines)


def evaluate_dir(pred_dir, gt_dir) -> EvalReport:
    """Per-file DSC over two directories matched by filename (lexicographic
    order); unpaired files on either side are an error."""
    pred_dir = Path(pred_dir)
    gt_dir = Path(gt_dir)
    pred_names = {p.name for p in pred_dir.glob("*.png")}
    gt_names = {p.name for p in gt_dir.glob("*.png")}
    unpaired = sorted(pred_names ^ gt_names)
    if unpaired:
        raise DataIOError(f"unpaired mask files between {pred_dir} and {gt_dir}: {unpaired}")
    if not pred_names:
        raise DataIOError(f"no mask pairs found in {pred_dir} and {gt_dir}")
    names = sorted(pred_names)
    scores = [
        dsc(load_png(pred_dir / name, "mask"), load_png(gt_dir / name, "mask"))
        for name in names
    ]
    return EvalReport(names=names, scores=scores)


def dataset_stats(manifest_path) -> dict:
    """Composition statistics for a manifest: instruments-per-image histogram,
    per-class sprite usage, blend tally, and mean foreground coverage."""
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    base = manifest_path.parent
    samples = manifest["samples"]

    coverages = []
    for sample in samples:
        mask = load_png(base / sample["mask"], "mask")
        coverages.append(float(mask.mean()))
    report: dict = {
        "samples": len(samples),
        "mean_foreground_coverage": float(np.mean(coverages)) if coverages else 0.0,
    }

    if manifest.get("kind") == "mix":
        report["origins"] = dict(Counter(s["origin"] for s in samples))
        return report
    if manifest.get("kind") != "synthetic":
        return report

    histogram = Counter(len(s["sprites"]) for s in samples)
    class_usage = Counter(sp["class"] for s in samples for sp in s["sprites"])
    blend_modes = Counter(s["blend"] for s in samples)
    report["instruments_per_image"] = {str(k): v for k, v in sorted(histogram.items())}
    report["class_usage"] = dict(sorted(class_usage.items()))
    report["blend_modes"] = dict(sorted(blend_modes.items()))
    return report
