"""Seeded synthetic fixtures: Voronoi tissue maps and noisy pseudo-masks.

Randomness
----------
All draws come from xorshift64* (Vigna 2016), seeded through splitmix64 so
that any 64-bit seed, including 0, gives a usable non-zero state::

    splitmix64(x):
        z = x + 0x9E3779B97F4A7C15
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB
        return z ^ (z >> 31)

    xorshift64*(state):
        state ^= state >> 12
        state ^= state << 25
        state ^= state >> 27
        return state, state * 0x2545F4914F6CDD1D

All arithmetic is modulo 2**64. A 64-bit output ``u`` becomes a float in
[0, 1) as ``(u >> 11) * 2**-53``.

Scene-level draws (site positions, classes, colours) use one sequential
generator with ``state = splitmix64(seed)``. Per-pixel draws are counter
based: pixel ``i`` (raster index) of stream ``k`` uses a single xorshift64*
step from ``state = splitmix64((seed ^ splitmix64(k)) + i)``. Streams:
1-3 colour jitter for R, G, B; 16 flip decision and 17 replacement class in
:func:`corrupt`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import IGNORE, ImageRGB, LabelMask, ProbabilityMap, ValidationError

__all__ = [
    "SynthParams",
    "XorShift64Star",
    "splitmix64",
    "pixel_uniforms",
    "generate",
    "nearest_site_labels",
    "corrupt",
    "soft_probabilities",
]

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_STAR = 0x2545F4914F6CDD1D

STREAM_JITTER = 1
STREAM_FLIP = 16
STREAM_REPLACE = 17


def splitmix64(x):
    """splitmix64 finaliser on a Python int or a uint64 array."""
    if isinstance(x, np.ndarray):
        z = x.astype(np.uint64) + np.uint64(_GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))
    z = (int(x) + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


class XorShift64Star:
    """Sequential xorshift64* generator."""

    def __init__(self, seed):
        self.state = splitmix64(int(seed) & MASK64) or 1

    def next_u64(self):
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * _STAR) & MASK64

    def random(self):
        return (self.next_u64() >> 11) * 2.0**-53

    def integers(self, n):
        """Uniform integer in ``[0, n)``."""
        return min(int(self.random() * n), n - 1)


def pixel_uniforms(seed, stream, count):
    """Counter-based uniforms in [0, 1) for raster indices ``0..count-1``."""
    base = (int(seed) ^ splitmix64(stream)) & MASK64
    with np.errstate(over="ignore"):
        idx = np.arange(count, dtype=np.uint64) + np.uint64(base)
        x = splitmix64(idx)
        x = np.where(x == 0, np.uint64(1), x)
        x ^= x >> np.uint64(12)
        x ^= x << np.uint64(25)
        x ^= x >> np.uint64(27)
        x = x * np.uint64(_STAR)
    return (x >> np.uint64(11)).astype(np.float64) * 2.0**-53


@dataclass(frozen=True)
class SynthParams:
    width: int = 128
    height: int = 128
    num_classes: int = 4
    num_sites: int = 12
    noise_rate: float = 0.15
    color_jitter: int = 12
    seed: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValidationError("width and height must be >= 1", "width")
        if not 2 <= self.num_classes <= 254:
            raise ValidationError("num_classes must be in [2, 254]", "num_classes")
        if self.num_sites < 1:
            raise ValidationError("num_sites must be >= 1", "num_sites")
        if not 0.0 <= self.noise_rate < 0.5:
            raise ValidationError("noise_rate must be in [0, 0.5)", "noise_rate")
        if not 0 <= self.color_jitter <= 127:
            raise ValidationError("color_jitter must be in [0, 127]", "color_jitter")
        if not 0 <= int(self.seed) <= MASK64:
            raise ValidationError("seed must fit in 64 bits", "seed")


def nearest_site_labels(sites, height, width):
    """Index of the nearest site for every pixel centre; ties pick the lowest index."""
    sites = np.asarray(sites, dtype=np.float64)
    ys = np.arange(height) + 0.5
    xs = np.arange(width) + 0.5
    d2 = (ys[:, None, None] - sites[None, None, :, 0]) ** 2 + (xs[None, :, None] - sites[None, None, :, 1]) ** 2
    return d2.argmin(axis=-1)


def _distinct_colors(rng, n):
    colors = []
    for _ in range(n):
        for _attempt in range(64):
            c = tuple(32 + rng.integers(192) for _ in range(3))
            if all(sum(abs(a - b) for a, b in zip(c, o)) >= 48 for o in colors):
                break
        colors.append(c)
    return np.array(colors, dtype=np.int64)


def generate(params: SynthParams):
    """Draw a Voronoi scene.

    Returns
    -------
    image : ImageRGB
        Cell base colours plus per-pixel jitter.
    truth : LabelMask
        Class of the Voronoi cell each pixel centre falls in.
    """
    K, n = params.num_classes, params.num_sites
    if n < K:
        raise ValidationError(f"num_sites ({n}) must be >= num_classes ({K})", "num_sites")
    rng = XorShift64Star(params.seed)
    sites = [(rng.random() * params.height, rng.random() * params.width) for _ in range(n)]
    # The first K sites cover every class once.
    classes = np.array([i if i < K else rng.integers(K) for i in range(n)], dtype=np.int64)
    colors = _distinct_colors(rng, n)

    H, W = params.height, params.width
    cell = nearest_site_labels(sites, H, W)
    rgb = colors[cell]
    a = int(params.color_jitter)
    if a:
        for ch in range(3):
            u = pixel_uniforms(params.seed, STREAM_JITTER + ch, H * W).reshape(H, W)
            rgb[..., ch] += np.floor(u * (2 * a + 1)).astype(np.int64) - a
    image = ImageRGB(np.clip(rgb, 0, 255).astype(np.uint8))
    return image, LabelMask(classes[cell].astype(np.uint8), K)


def corrupt(gt: LabelMask, noise_rate, seed) -> LabelMask:
    """Flip each labelled pixel to a uniformly chosen other class with probability ``noise_rate``."""
    if not 0.0 <= noise_rate <= 1.0:
        raise ValidationError("noise_rate must be in [0, 1]", "noise_rate")
    K = gt.num_classes
    labels = gt.labels.astype(np.int64)
    if K < 2 or noise_rate == 0:
        return LabelMask(gt.labels, K)
    count = labels.size
    flip = pixel_uniforms(seed, STREAM_FLIP, count).reshape(labels.shape) < noise_rate
    offset = np.floor(pixel_uniforms(seed, STREAM_REPLACE, count) * (K - 1)).astype(np.int64)
    other = (labels + 1 + offset.reshape(labels.shape)) % K
    flip &= labels != IGNORE
    return LabelMask(np.where(flip, other, labels).astype(np.uint8), K)


def soft_probabilities(mask: LabelMask, confidence=0.7) -> ProbabilityMap:
    """Probability map putting ``confidence`` on the mask label, the rest spread evenly.

    IGNORE pixels get the uniform distribution.
    """
    K = mask.num_classes
    rest = (1.0 - confidence) / (K - 1)
    probs = np.full((K,) + mask.shape, rest)
    labels = mask.labels
    for c in range(K):
        probs[c][labels == c] = confidence
    probs[:, labels == IGNORE] = 1.0 / K
    return ProbabilityMap(probs)
