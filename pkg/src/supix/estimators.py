"""scikit-learn compatible wrappers around the functional kernels.

Images, masks and feature stacks are plain numpy arrays here, so the
estimators drop into pipelines, ``clone`` and grid searches::

    >>> seg = SLICSegmenter(cluster_size=8)
    >>> labels = seg.fit_predict(rgb)            # (H, W) superpixel ids
    >>> refiner = SuperpixelRefiner(tau=0.5).fit(rgb)
    >>> refined = refiner.transform(noisy_mask)  # (H, W) class labels
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .cam import compute_logits, compute_score_map, score_map_to_mask
from .refine import RefineParams, floodfill_refine
from .slic import SlicParams, segment
from .validation import check_features, check_image, check_label_mask, check_weights

__all__ = ["SLICSegmenter", "CAMPseudoLabeler", "SuperpixelRefiner"]


class SLICSegmenter(ClusterMixin, BaseEstimator):
    """SLIC superpixels as a clusterer over the pixels of one image.

    Parameters
    ----------
    cluster_size : int, default=16
        Grid cell side ``S``.
    compactness : float, default=10.0
        Colour normaliser ``m``; larger values give more regular cells.
    max_iter : int, default=10
    min_region_fraction : float, default=0.25

    Attributes
    ----------
    labels_ : ndarray of shape (H, W)
        Superpixel id of every pixel.
    n_segments_ : int
    """

    def __init__(self, cluster_size=16, compactness=10.0, max_iter=10, min_region_fraction=0.25):
        self.cluster_size = cluster_size
        self.compactness = compactness
        self.max_iter = max_iter
        self.min_region_fraction = min_region_fraction

    def _params(self):
        return SlicParams(self.cluster_size, self.compactness, self.max_iter, self.min_region_fraction)

    def fit(self, X, y=None):
        partition = segment(check_image(X), self._params())
        self.partition_ = partition
        self.labels_ = np.asarray(partition.assignments)
        self.n_segments_ = partition.num_superpixels
        return self


class CAMPseudoLabeler(BaseEstimator):
    """Pseudo-masks from feature maps with fixed classifier weights.

    ``fit`` only validates ``weights`` (shape ``(n_classes, n_maps)``); the
    feature stacks passed to ``predict`` are ``(n_maps, h, w)`` arrays.
    """

    def __init__(self, weights=None, output_shape=None):
        self.weights = weights
        self.output_shape = output_shape

    def fit(self, X=None, y=None):
        if self.weights is None:
            raise ValueError("CAMPseudoLabeler needs classifier weights")
        self.weights_ = check_weights(self.weights)
        self.n_classes_ = self.weights_.num_classes
        return self

    def _scores(self, X):
        check_is_fitted(self, "weights_")
        features = check_features(X)
        shape = self.output_shape or features.map_shape
        return compute_score_map(features, self.weights_, *shape)

    def decision_function(self, X):
        """Class score maps of shape ``(n_classes, H, W)``."""
        return np.asarray(self._scores(X).scores)

    def predict(self, X):
        return np.asarray(score_map_to_mask(self._scores(X)).labels)

    def logits(self, X):
        check_is_fitted(self, "weights_")
        return compute_logits(check_features(X), self.weights_)


class SuperpixelRefiner(TransformerMixin, BaseEstimator):
    """Floodfill refinement of masks over the superpixels of a fitted image.

    ``fit`` segments the image; ``transform`` refines label masks of the
    same size, leaving pixels equal to 255 (IGNORE) untouched.
    """

    def __init__(
        self,
        tau=0.5,
        cluster_size=16,
        compactness=10.0,
        max_iter=10,
        min_region_fraction=0.25,
        num_classes=None,
        count_ignored=False,
    ):
        self.tau = tau
        self.cluster_size = cluster_size
        self.compactness = compactness
        self.max_iter = max_iter
        self.min_region_fraction = min_region_fraction
        self.num_classes = num_classes
        self.count_ignored = count_ignored

    def fit(self, X, y=None):
        params = SlicParams(self.cluster_size, self.compactness, self.max_iter, self.min_region_fraction)
        self.refine_params_ = RefineParams(self.tau, self.count_ignored)
        self.partition_ = segment(check_image(X), params)
        self.n_segments_ = self.partition_.num_superpixels
        return self

    def transform(self, X):
        check_is_fitted(self, "partition_")
        mask = check_label_mask(X, self.num_classes)
        return np.asarray(floodfill_refine(mask, self.partition_, self.refine_params_).labels)

    def fit_transform(self, X, y=None, **fit_params):
        """Segment image ``X`` and refine the mask ``y`` in one step."""
        if y is None:
            raise ValueError("fit_transform needs the mask to refine as y")
        return self.fit(X).transform(y)
