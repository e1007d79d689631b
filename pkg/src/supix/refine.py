"""Superpixel floodfill refinement of label masks.

Each superpixel votes over the labels of its pixels. When the most frequent
label holds a share strictly greater than ``tau``, the whole superpixel is
rewritten to that label; otherwise it is left untouched. IGNORE pixels never
vote and are never rewritten.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import IGNORE, LabelMask, SuperpixelPartition, ValidationError

__all__ = ["RefineParams", "SuperpixelStats", "compute_stats", "floodfill_refine"]


@dataclass(frozen=True)
class RefineParams:
    """Refinement settings.

    ``tau`` is the dominance threshold in (0, 1]. With ``count_ignored`` the
    IGNORE pixels of a superpixel enlarge the vote denominator (they still
    never vote and are never rewritten).
    """

    tau: float = 0.5
    count_ignored: bool = False

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise ValidationError(f"tau must be in (0, 1], got {self.tau}", "tau")


@dataclass(frozen=True, eq=False)
class SuperpixelStats:
    counts: np.ndarray  # (N, K) pixels of class j inside superpixel i
    dominant: np.ndarray  # (N,) label, IGNORE when nothing was counted
    ratio: np.ndarray  # (N,) share of the dominant label
    sizes: np.ndarray  # (N,) denominator used for ``ratio``


def _check_shapes(mask, partition):
    if mask.shape != partition.shape:
        raise ValidationError(
            f"mask shape {mask.shape} differs from partition shape {partition.shape}", "labels"
        )


def compute_stats(mask: LabelMask, partition: SuperpixelPartition, count_ignored=False) -> SuperpixelStats:
    """Tally labels per superpixel and find each one's dominant label."""
    _check_shapes(mask, partition)
    N, K = partition.num_superpixels, mask.num_classes
    ids = partition.assignments.ravel().astype(np.int64)
    labels = mask.labels.ravel().astype(np.int64)
    keep = labels != IGNORE
    counts = np.bincount(ids[keep] * K + labels[keep], minlength=N * K).reshape(N, K)
    if count_ignored:
        sizes = np.bincount(ids, minlength=N)
    else:
        sizes = counts.sum(axis=1)
    dominant = counts.argmax(axis=1)
    top = counts[np.arange(N), dominant]
    ratio = np.zeros(N, dtype=np.float64)
    nz = sizes > 0
    ratio[nz] = top[nz] / sizes[nz]
    dominant = np.where(top > 0, dominant, IGNORE).astype(np.int64)
    return SuperpixelStats(counts, dominant, ratio, sizes)


def floodfill_refine(
    mask: LabelMask, partition: SuperpixelPartition, params: RefineParams | None = None
) -> LabelMask:
    """Rewrite every superpixel whose dominance ratio exceeds ``tau``."""
    params = params or RefineParams()
    stats = compute_stats(mask, partition, params.count_ignored)
    rewrite = stats.ratio > params.tau
    ids = partition.assignments
    labels = mask.labels
    hit = rewrite[ids] & (labels != IGNORE)
    out = np.where(hit, stats.dominant[ids], labels).astype(np.uint8)
    return LabelMask(out, mask.num_classes)
