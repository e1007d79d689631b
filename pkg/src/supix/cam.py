"""Class activation maps: logits, pseudo-masks and the multi-depth loss."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    IGNORE,
    ClassifierWeights,
    FeatureMapStack,
    LabelMask,
    ProbabilityMap,
    ScoreMap,
    ValidationError,
)

__all__ = [
    "LayerWeights",
    "compute_logits",
    "compute_score_map",
    "score_map_to_mask",
    "bilinear_resize",
    "cross_entropy",
    "multi_layer_loss",
]

PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class LayerWeights:
    """Non-negative weights of the three per-depth loss terms."""

    lambdas: tuple = (1 / 3, 1 / 3, 1 / 3)

    def __post_init__(self):
        lam = tuple(float(v) for v in self.lambdas)
        object.__setattr__(self, "lambdas", lam)
        if len(lam) != 3:
            raise ValidationError(f"expected 3 lambdas, got {len(lam)}", "lambdas")
        for i, v in enumerate(lam):
            if not np.isfinite(v) or v < 0:
                raise ValidationError("lambda must be finite and >= 0", "lambdas", (i,))
        if not any(v > 0 for v in lam):
            raise ValidationError("at least one lambda must be > 0", "lambdas")


def _check_pair(features, weights):
    if weights.num_maps != features.num_maps:
        raise ValidationError(
            f"weights expect {weights.num_maps} feature maps, stack has {features.num_maps}",
            "weights",
        )


def compute_logits(features: FeatureMapStack, weights: ClassifierWeights) -> np.ndarray:
    """Per-class logits from globally average-pooled feature maps.

    ``z[c] = sum_k w[c, k] * mean(m_k)``.
    """
    _check_pair(features, weights)
    gap = features.values.mean(axis=(1, 2))
    return weights.weights @ gap


def bilinear_resize(arr, out_height, out_width):
    """Resize the trailing two axes with half-pixel-centre bilinear sampling.

    Source coordinates are ``(dst + 0.5) * in / out - 0.5`` clamped at zero,
    i.e. ``align_corners=False`` semantics.
    """
    arr = np.asarray(arr, dtype=np.float64)
    h, w = arr.shape[-2:]
    if (h, w) == (out_height, out_width):
        return arr.copy()

    def axis(n_in, n_out):
        src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        src = np.maximum(src, 0.0)
        i0 = np.minimum(np.floor(src).astype(np.int64), n_in - 1)
        i1 = np.minimum(i0 + 1, n_in - 1)
        return i0, i1, src - i0

    y0, y1, fy = axis(h, out_height)
    x0, x1, fx = axis(w, out_width)
    top = arr[..., y0, :]
    bot = arr[..., y1, :]
    rows = top + (bot - top) * fy[:, None]
    left = rows[..., x0]
    right = rows[..., x1]
    return left + (right - left) * fx


def compute_score_map(
    features: FeatureMapStack, weights: ClassifierWeights, out_height=None, out_width=None
) -> ScoreMap:
    """Class activation scores ``sum_k w[c, k] * m_k(i, j)`` at output size.

    Scores are formed at feature resolution and then bilinearly upsampled;
    omitting the output size keeps the feature resolution.
    """
    _check_pair(features, weights)
    h, w = features.map_shape
    out_height = h if out_height is None else int(out_height)
    out_width = w if out_width is None else int(out_width)
    if out_height < h or out_width < w:
        raise ValidationError(
            f"output size {out_height}x{out_width} smaller than feature maps {h}x{w}", "out_dims"
        )
    scores = np.tensordot(weights.weights, features.values, axes=(1, 0))
    scores = bilinear_resize(scores, out_height, out_width)
    if not np.isfinite(scores).all():
        raise ValidationError("non-finite class score", "scores")
    return ScoreMap(scores)


def score_map_to_mask(scores: ScoreMap) -> LabelMask:
    """Per-pixel argmax over classes; ties resolve to the lowest class."""
    return LabelMask(np.argmax(scores.scores, axis=0).astype(np.uint8), scores.num_classes)


def _check_loss_inputs(s, p):
    if p.shape != s.shape:
        raise ValidationError(f"mask shape {p.shape} differs from prediction {s.shape}", "labels")
    if p.num_classes != s.num_classes:
        raise ValidationError(
            f"mask has {p.num_classes} classes, prediction has {s.num_classes}", "num_classes"
        )


def cross_entropy(s: ProbabilityMap, p: LabelMask) -> float:
    """Mean ``-log s[p(i, j)](i, j)`` over pixels not marked IGNORE."""
    _check_loss_inputs(s, p)
    labels = p.labels
    keep = labels != IGNORE
    if not keep.any():
        raise ValidationError("every pixel of the mask is IGNORE", "labels")
    rows, cols = np.nonzero(keep)
    picked = s.probs[labels[keep].astype(np.int64), rows, cols]
    return float(np.mean(-np.log(np.maximum(picked, PROB_CLAMP))))


def multi_layer_loss(s, p1, p2, p3, lw: LayerWeights | None = None) -> float:
    """Weighted sum of the cross-entropies against three pseudo-masks.

    Parameters
    ----------
    s : ProbabilityMap
        Segmentation output.
    p1, p2, p3 : LabelMask
        Pseudo-masks from three network depths.
    lw : LayerWeights, optional
        Term weights; equal thirds by default.
    """
    lw = lw or LayerWeights()
    masks = (p1, p2, p3)
    for p in masks:
        _check_loss_inputs(s, p)
    return float(sum(lam * cross_entropy(s, p) for lam, p in zip(lw.lambdas, masks)))
