"""Array coercion helpers in the spirit of ``sklearn.utils.check_array``."""
import numpy as np

from .core import (
    IGNORE,
    ClassifierWeights,
    FeatureMapStack,
    ImageLab,
    ImageRGB,
    LabelMask,
    SuperpixelPartition,
    ValidationError,
)


def check_image(X):
    """Accept an ``ImageRGB``/``ImageLab`` or an ``(H, W, 3)`` array.

    Integer arrays are read as 8-bit RGB, float arrays as CIELAB.
    """
    if isinstance(X, (ImageRGB, ImageLab)):
        return X
    X = np.asarray(X)
    if X.ndim != 3 or X.shape[2] != 3:
        raise ValidationError(f"expected an (H, W, 3) image, got shape {X.shape}", "X")
    if X.dtype.kind in "ub" or X.dtype.kind == "i":
        if X.size and (X.min() < 0 or X.max() > 255):
            raise ValidationError("integer image values must lie in [0, 255]", "X")
        return ImageRGB(X)
    return ImageLab(X)


def check_label_mask(X, num_classes=None):
    if isinstance(X, LabelMask):
        if num_classes is not None and X.num_classes != num_classes:
            return LabelMask(X.labels, num_classes)
        return X
    X = np.asarray(X)
    if X.dtype.kind not in "iub":
        raise ValidationError(f"mask must hold integers, got {X.dtype}", "X")
    if num_classes is None:
        valid = X[X != IGNORE]
        num_classes = int(valid.max()) + 1 if valid.size else 1
    return LabelMask(X, num_classes)


def check_partition(X):
    if isinstance(X, SuperpixelPartition):
        return X
    return SuperpixelPartition(np.asarray(X))


def check_features(X, depth_id=0):
    if isinstance(X, FeatureMapStack):
        return X
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        X = X[None]
    return FeatureMapStack(X, depth_id)


def check_weights(W):
    if isinstance(W, ClassifierWeights):
        return W
    W = np.asarray(W, dtype=np.float64)
    if W.ndim == 1:
        W = W[:, None]
    return ClassifierWeights(W)
