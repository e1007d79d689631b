"""SLIC superpixels over joint (row, column, L, a, b) space.

Pixels are clustered with the distance

    D = sqrt((dx / S)**2 + (dy / S)**2 + (dI / m)**2)

where ``S`` is the grid cell size, ``m`` the compactness and ``dI`` the
Euclidean CIELAB distance. Larger ``m`` weakens the colour term and gives
smoother, more grid-like superpixels.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import ImageLab, ImageRGB, SuperpixelPartition, ValidationError

__all__ = ["SlicParams", "rgb_to_lab", "segment", "enforce_connectivity", "boundary_mask"]

# sRGB primaries to CIE XYZ, D65 white.
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_D65 = np.array([0.95047, 1.0, 1.08883])
_DELTA = 6.0 / 29.0


@dataclass(frozen=True)
class SlicParams:
    """Clustering parameters.

    Attributes
    ----------
    cluster_size : int
        Side length ``S`` of the initial grid cell, in pixels.
    compactness : float
        Colour normaliser ``m``, in Lab distance units.
    max_iterations : int
        Number of assign/update rounds.
    min_region_fraction : float
        Connected fragments smaller than this fraction of ``S**2`` are merged
        into a neighbour.
    """

    cluster_size: int = 16
    compactness: float = 10.0
    max_iterations: int = 10
    min_region_fraction: float = 0.25

    def __post_init__(self):
        if int(self.cluster_size) != self.cluster_size or self.cluster_size < 2:
            raise ValidationError("cluster_size must be an integer >= 2", "cluster_size")
        if not self.compactness > 0 or not np.isfinite(self.compactness):
            raise ValidationError("compactness must be > 0", "compactness")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValidationError("max_iterations must be an integer >= 1", "max_iterations")
        if not 0.0 < self.min_region_fraction < 1.0:
            raise ValidationError("min_region_fraction must be in (0, 1)", "min_region_fraction")

    @property
    def min_region_size(self):
        return self.min_region_fraction * self.cluster_size**2


def _srgb_to_linear(c):
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _lab_f(t):
    return np.where(t > _DELTA**3, np.cbrt(t), t / (3 * _DELTA**2) + 4.0 / 29.0)


def rgb_to_lab(image: ImageRGB) -> ImageLab:
    """Convert 8-bit sRGB to CIELAB (D65 white, sRGB gamma decoding)."""
    rgb = _srgb_to_linear(image.pixels.astype(np.float64) / 255.0)
    xyz = rgb @ _RGB_TO_XYZ.T / _D65
    f = _lab_f(xyz)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    # Rounding can push black a hair below zero.
    lab[..., 0] = np.clip(lab[..., 0], 0.0, 100.0)
    return ImageLab(lab)


def _grid_axis(n, S):
    cells = max(1, n // S)
    step = n / cells
    return (np.arange(cells) + 0.5) * step - 0.5


def _gradient(lab):
    # Squared Lab difference to the right and lower neighbour; zero past the edge.
    g = np.zeros(lab.shape[:2])
    g[:, :-1] += ((lab[:, 1:] - lab[:, :-1]) ** 2).sum(axis=-1)
    g[:-1, :] += ((lab[1:, :] - lab[:-1, :]) ** 2).sum(axis=-1)
    return g


def _initial_centers(lab, S):
    H, W = lab.shape[:2]
    grad = _gradient(lab)
    centers = []
    for cy in _grid_axis(H, S):
        for cx in _grid_axis(W, S):
            pi, pj = int(cy), int(cx)
            best, bi, bj = grad[pi, pj], None, None
            for i in range(max(pi - 1, 0), min(pi + 2, H)):
                for j in range(max(pj - 1, 0), min(pj + 2, W)):
                    if grad[i, j] < best:
                        best, bi, bj = grad[i, j], i, j
            if bi is None:
                # Seed stays on the exact cell centre; colour from its pixel.
                centers.append((cy, cx, *lab[pi, pj]))
            else:
                centers.append((float(bi), float(bj), *lab[bi, bj]))
    return np.array(centers, dtype=np.float64)


def _initial_labels(H, W, S):
    ry, rx = max(1, H // S), max(1, W // S)
    iy = np.minimum((np.arange(H) * ry) // H, ry - 1)
    ix = np.minimum((np.arange(W) * rx) // W, rx - 1)
    return (iy[:, None] * rx + ix[None, :]).astype(np.int32)


def _bin_centers(centers, S, nby, nbx):
    by = np.minimum((centers[:, 0] // S).astype(np.int64), nby - 1)
    bx = np.minimum((centers[:, 1] // S).astype(np.int64), nbx - 1)
    key = by * nbx + bx
    order = np.argsort(key, kind="stable")
    start = np.zeros(nby * nbx + 1, dtype=np.int64)
    np.add.at(start, key + 1, 1)
    return np.cumsum(start), order.astype(np.int64)


def segment(image, params: SlicParams | None = None) -> SuperpixelPartition:
    """Partition an image into superpixels.

    Parameters
    ----------
    image : ImageLab or ImageRGB
        RGB input is converted to Lab first.
    params : SlicParams, optional
        Defaults to ``SlicParams()``.

    Returns
    -------
    SuperpixelPartition
        Total partition whose ids are 4-connected and numbered densely in
        raster order of first occurrence.
    """
    params = params or SlicParams()
    if isinstance(image, ImageRGB):
        image = rgb_to_lab(image)
    lab = np.ascontiguousarray(image.pixels, dtype=np.float64)
    H, W = lab.shape[:2]
    S = int(params.cluster_size)
    _kernels.configure_threads()

    centers = _initial_centers(lab, S)
    labels = _initial_labels(H, W, S)
    nby, nbx = (H - 1) // S + 1, (W - 1) // S + 1
    inv_S2 = 1.0 / S**2
    inv_m2 = 1.0 / float(params.compactness) ** 2
    for _ in range(int(params.max_iterations)):
        start, items = _bin_centers(centers, S, nby, nbx)
        _kernels.assign_pixels(lab, centers, labels, start, items, nbx, nby, S, inv_S2, inv_m2)
        _kernels.update_centers(lab, labels, centers)

    return _connect(labels, params)


def enforce_connectivity(partition, params: SlicParams | None = None) -> SuperpixelPartition:
    """Merge small fragments and relabel so every id is 4-connected.

    ``partition`` may be a :class:`SuperpixelPartition` or a raw integer id
    grid whose ids need not be contiguous or connected.

    Connected components are visited in raster order of their first pixel.
    A component smaller than ``params.min_region_size`` is absorbed by its
    largest 4-adjacent neighbour (ties go to the earlier component), and the
    union is re-checked until it is large enough or has no neighbour left.
    """
    assignments = getattr(partition, "assignments", partition)
    return _connect(np.asarray(assignments), params or SlicParams())


def _connect(assignments, params):
    comp, n = _kernels.label_components(np.ascontiguousarray(assignments, dtype=np.int32))
    roots = _kernels.merge_small_components(comp, n, float(params.min_region_size))
    dense, count = _kernels.dense_relabel(roots[comp])
    return SuperpixelPartition(dense, count)


def boundary_mask(partition: SuperpixelPartition) -> np.ndarray:
    """Boolean map of pixels whose right or lower neighbour has another id."""
    a = partition.assignments
    edge = np.zeros(a.shape, dtype=bool)
    edge[:, :-1] |= a[:, :-1] != a[:, 1:]
    edge[:-1, :] |= a[:-1, :] != a[1:, :]
    return edge
