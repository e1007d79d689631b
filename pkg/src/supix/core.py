"""Shared domain types for images, masks, partitions and CAM tensors.

Every type is an immutable container around a read-only numpy array and
checks its invariants on construction. Layout is row-major with the first
two spatial axes indexed ``(row, column)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

IGNORE = 255
PROB_SUM_TOL = 1e-6

__all__ = [
    "IGNORE",
    "ValidationError",
    "ImageRGB",
    "ImageLab",
    "LabelMask",
    "SuperpixelPartition",
    "FeatureMapStack",
    "ClassifierWeights",
    "ScoreMap",
    "ProbabilityMap",
    "validate",
]


class ValidationError(ValueError):
    """An invariant of a domain value does not hold.

    Attributes
    ----------
    field : str
        Name of the offending field.
    index : tuple or None
        Array index of the first offending element, when there is one.
    """

    def __init__(self, message, field=None, index=None):
        self.field = field
        self.index = index
        where = ""
        if field is not None:
            where = f" [{field}" + (f" at {index}" if index is not None else "") + "]"
        super().__init__(message + where)


def _frozen(arr, dtype):
    out = np.array(arr, dtype=dtype, copy=True, order="C")
    out.setflags(write=False)
    return out


def _first_index(bad):
    idx = np.argwhere(bad)[0]
    return tuple(int(i) for i in idx)


def _check_finite(arr, name):
    bad = ~np.isfinite(arr)
    if bad.any():
        raise ValidationError("non-finite value", name, _first_index(bad))


def _check_ndim(arr, ndim, name):
    if arr.ndim != ndim:
        raise ValidationError(f"expected {ndim}-d array, got shape {arr.shape}", name)


class _ArrayValue:
    # Subclasses name the field holding their payload.
    _payload = ""

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        for name in self.__dataclass_fields__:
            a, b = getattr(self, name), getattr(other, name)
            if isinstance(a, np.ndarray):
                if a.dtype != b.dtype or not np.array_equal(a, b):
                    return False
            elif a != b:
                return False
        return True

    __hash__ = None

    def validate(self):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class ImageRGB(_ArrayValue):
    """8-bit RGB image, ``pixels`` shaped ``(height, width, 3)``."""

    pixels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pixels", _frozen(self.pixels, np.uint8))
        self.validate()

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    def validate(self):
        p = self.pixels
        if p.ndim != 3 or p.shape[2] != 3:
            raise ValidationError(f"expected (H, W, 3) buffer, got {p.shape}", "pixels")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ValidationError("width and height must be >= 1", "pixels")


@dataclass(frozen=True, eq=False)
class ImageLab(_ArrayValue):
    """CIELAB image, ``pixels`` shaped ``(height, width, 3)`` as (L, a, b)."""

    pixels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pixels", _frozen(self.pixels, np.float64))
        self.validate()

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    def validate(self):
        p = self.pixels
        if p.ndim != 3 or p.shape[2] != 3 or p.shape[0] < 1 or p.shape[1] < 1:
            raise ValidationError(f"expected (H, W, 3) buffer, got {p.shape}", "pixels")
        _check_finite(p, "pixels")
        L = p[..., 0]
        bad = (L < 0.0) | (L > 100.0)
        if bad.any():
            raise ValidationError("L outside [0, 100]", "pixels", _first_index(bad))
        ab = p[..., 1:]
        bad = (ab < -128.0) | (ab > 128.0)
        if bad.any():
            raise ValidationError("a/b outside [-128, 128]", "pixels", _first_index(bad))


@dataclass(frozen=True, eq=False)
class LabelMask(_ArrayValue):
    """Per-pixel class indices in ``[0, num_classes)`` or :data:`IGNORE`."""

    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.dtype.kind not in "iub":
            raise ValidationError(f"labels must be integers, got {labels.dtype}", "labels")
        if labels.size and (labels.min() < 0 or labels.max() > IGNORE):
            bad = (labels < 0) | (labels > IGNORE)
            raise ValidationError("label out of range", "labels", _first_index(bad))
        object.__setattr__(self, "labels", _frozen(labels, np.uint8))
        object.__setattr__(self, "num_classes", int(self.num_classes))
        self.validate()

    @property
    def height(self):
        return self.labels.shape[0]

    @property
    def width(self):
        return self.labels.shape[1]

    @property
    def shape(self):
        return self.labels.shape

    def validate(self):
        _check_ndim(self.labels, 2, "labels")
        K = self.num_classes
        if not 1 <= K <= 255:
            raise ValidationError(f"num_classes must be in [1, 255], got {K}", "num_classes")
        bad = (self.labels >= K) & (self.labels != IGNORE)
        if bad.any():
            raise ValidationError("label out of range", "labels", _first_index(bad))


@dataclass(frozen=True, eq=False)
class SuperpixelPartition(_ArrayValue):
    """Per-pixel superpixel ids in ``[0, num_superpixels)``."""

    assignments: np.ndarray
    num_superpixels: int = field(default=-1)

    def __post_init__(self):
        a = np.asarray(self.assignments)
        if a.dtype.kind not in "iu":
            raise ValidationError(f"assignments must be integers, got {a.dtype}", "assignments")
        object.__setattr__(self, "assignments", _frozen(a, np.int32))
        n = int(self.num_superpixels)
        if n < 0 and a.size:
            n = int(a.max()) + 1
        object.__setattr__(self, "num_superpixels", n)
        self.validate()

    @property
    def height(self):
        return self.assignments.shape[0]

    @property
    def width(self):
        return self.assignments.shape[1]

    @property
    def shape(self):
        return self.assignments.shape

    def validate(self):
        a = self.assignments
        _check_ndim(a, 2, "assignments")
        N = self.num_superpixels
        bad = (a < 0) | (a >= N)
        if bad.any():
            raise ValidationError("superpixel id out of range", "assignments", _first_index(bad))
        sizes = np.bincount(a.ravel(), minlength=N)
        empty = np.flatnonzero(sizes == 0)
        if empty.size:
            raise ValidationError("superpixel id owns no pixel", "num_superpixels", (int(empty[0]),))

    def sizes(self):
        return np.bincount(self.assignments.ravel(), minlength=self.num_superpixels)


@dataclass(frozen=True, eq=False)
class FeatureMapStack(_ArrayValue):
    """Feature maps from one network depth, ``values`` shaped ``(K_f, h, w)``."""

    values: np.ndarray
    depth_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, np.float64))
        self.validate()

    @property
    def num_maps(self):
        return self.values.shape[0]

    @property
    def map_shape(self):
        return self.values.shape[1:]

    def validate(self):
        _check_ndim(self.values, 3, "values")
        if min(self.values.shape) < 1:
            raise ValidationError(f"empty feature stack {self.values.shape}", "values")
        _check_finite(self.values, "values")


@dataclass(frozen=True, eq=False)
class ClassifierWeights(_ArrayValue):
    """Linear-layer weights ``w[c, k]`` of class ``c`` for feature map ``k``."""

    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(self.weights, np.float64))
        self.validate()

    @property
    def num_classes(self):
        return self.weights.shape[0]

    @property
    def num_maps(self):
        return self.weights.shape[1]

    def validate(self):
        _check_ndim(self.weights, 2, "weights")
        if min(self.weights.shape) < 1:
            raise ValidationError(f"empty weight matrix {self.weights.shape}", "weights")
        _check_finite(self.weights, "weights")


@dataclass(frozen=True, eq=False)
class ScoreMap(_ArrayValue):
    """Per-class CAM scores, ``scores`` shaped ``(C, H, W)``."""

    scores: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "scores", _frozen(self.scores, np.float64))
        self.validate()

    @property
    def num_classes(self):
        return self.scores.shape[0]

    @property
    def shape(self):
        return self.scores.shape[1:]

    def validate(self):
        _check_ndim(self.scores, 3, "scores")
        if min(self.scores.shape) < 1:
            raise ValidationError(f"empty score map {self.scores.shape}", "scores")
        _check_finite(self.scores, "scores")


@dataclass(frozen=True, eq=False)
class ProbabilityMap(_ArrayValue):
    """Per-pixel class distributions, ``probs`` shaped ``(C, H, W)``."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _frozen(self.probs, np.float64))
        self.validate()

    @property
    def num_classes(self):
        return self.probs.shape[0]

    @property
    def shape(self):
        return self.probs.shape[1:]

    def validate(self):
        p = self.probs
        _check_ndim(p, 3, "probs")
        if min(p.shape) < 1:
            raise ValidationError(f"empty probability map {p.shape}", "probs")
        _check_finite(p, "probs")
        bad = (p < 0.0) | (p > 1.0)
        if bad.any():
            raise ValidationError("probability outside [0, 1]", "probs", _first_index(bad))
        bad = np.abs(p.sum(axis=0) - 1.0) > PROB_SUM_TOL
        if bad.any():
            raise ValidationError("pixel distribution not normalized", "probs", _first_index(bad))


def validate(value):
    """Check every invariant of a domain value.

    Returns ``None`` when the value is valid and the :class:`ValidationError`
    describing the first violation otherwise. Never raises for domain values.
    """
    if not isinstance(value, _ArrayValue):
        return ValidationError(f"not a domain value: {type(value).__name__}")
    try:
        value.validate()
    except ValidationError as exc:
        return exc
    return None
