"""Confusion-matrix segmentation metrics (per-class IoU, mIoU, fwIoU).

Rows of the confusion matrix are ground truth, columns are predictions.
Classes whose union is empty are undefined and left out of the mean, so a
class absent from both prediction and ground truth does not drag mIoU to 0.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import IGNORE, LabelMask, ValidationError

__all__ = ["ConfusionMatrix", "MetricsReport", "accumulate", "report", "evaluate"]


class ConfusionMatrix:
    """Pooled K x K pixel counts, entry ``(g, p)`` = truth g predicted p."""

    def __init__(self, num_classes, counts=None):
        self.num_classes = int(num_classes)
        if counts is None:
            counts = np.zeros((self.num_classes, self.num_classes), dtype=np.int64)
        counts = np.array(counts, dtype=np.int64)
        if counts.shape != (self.num_classes, self.num_classes):
            raise ValidationError(f"counts must be {self.num_classes}x{self.num_classes}", "counts")
        if (counts < 0).any():
            raise ValidationError("negative count", "counts", tuple(np.argwhere(counts < 0)[0]))
        self.counts = counts

    @property
    def total(self):
        return int(self.counts.sum())

    def merge(self, other):
        if other.num_classes != self.num_classes:
            raise ValidationError("cannot merge matrices of different sizes", "num_classes")
        return ConfusionMatrix(self.num_classes, self.counts + other.counts)

    __add__ = merge

    def __eq__(self, other):
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return self.num_classes == other.num_classes and np.array_equal(self.counts, other.counts)

    def __repr__(self):
        return f"ConfusionMatrix(num_classes={self.num_classes}, total={self.total})"


def accumulate(cm: ConfusionMatrix, pred: LabelMask, gt: LabelMask) -> ConfusionMatrix:
    """Return ``cm`` plus the counts of one prediction/ground-truth pair."""
    if pred.shape != gt.shape:
        raise ValidationError(f"prediction {pred.shape} and ground truth {gt.shape} differ", "labels")
    if not pred.num_classes == gt.num_classes == cm.num_classes:
        raise ValidationError(
            f"class counts differ: pred {pred.num_classes}, gt {gt.num_classes}, matrix {cm.num_classes}",
            "num_classes",
        )
    K = cm.num_classes
    g = gt.labels.ravel().astype(np.int64)
    p = pred.labels.ravel().astype(np.int64)
    keep = (g != IGNORE) & (p != IGNORE)
    counts = np.bincount(g[keep] * K + p[keep], minlength=K * K).reshape(K, K)
    return ConfusionMatrix(K, cm.counts + counts)


@dataclass(frozen=True)
class MetricsReport:
    per_class_iou: tuple  # float per class, or None when undefined
    miou: float
    fwiou: float
    gt_pixels: tuple
    pred_pixels: tuple

    def to_dict(self):
        return {
            "per_class_iou": list(self.per_class_iou),
            "miou": self.miou,
            "fwiou": self.fwiou,
            "gt_pixels": list(self.gt_pixels),
            "pred_pixels": list(self.pred_pixels),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_text(self):
        lines = []
        for c, v in enumerate(self.per_class_iou):
            lines.append(f"iou.{c}={'undefined' if v is None else f'{v:.6f}'}")
        lines.append(f"miou={self.miou:.6f}")
        lines.append(f"fwiou={self.fwiou:.6f}")
        for c, n in enumerate(self.gt_pixels):
            lines.append(f"pixels.{c}={n}")
        return "\n".join(lines) + "\n"


def report(cm: ConfusionMatrix) -> MetricsReport:
    """Summarise a confusion matrix.

    Raises
    ------
    ValidationError
        If no class has a non-empty union.
    """
    counts = cm.counts
    inter = np.diag(counts)
    rows = counts.sum(axis=1)
    cols = counts.sum(axis=0)
    union = rows + cols - inter
    defined = union > 0
    if not defined.any():
        raise ValidationError("every class is undefined (no evaluated pixels)", "counts")
    iou = np.zeros(cm.num_classes)
    iou[defined] = inter[defined] / union[defined]
    freq = rows / rows.sum()
    per_class = tuple(float(v) if d else None for v, d in zip(iou, defined))
    return MetricsReport(
        per_class_iou=per_class,
        miou=float(iou[defined].mean()),
        fwiou=float((freq[defined] * iou[defined]).sum()),
        gt_pixels=tuple(int(v) for v in rows),
        pred_pixels=tuple(int(v) for v in cols),
    )


def evaluate(pred: LabelMask, gt: LabelMask) -> MetricsReport:
    """Report for a single prediction/ground-truth pair."""
    return report(accumulate(ConfusionMatrix(gt.num_classes), pred, gt))
