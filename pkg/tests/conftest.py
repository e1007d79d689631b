import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from supix.core import LabelMask, SuperpixelPartition  # noqa: E402


def random_instance(rng, max_side=8, max_classes=4, max_superpixels=5, ignore_rate=0.0):
    """Random small mask plus a valid (ids contiguous, all non-empty) partition."""
    H = int(rng.integers(1, max_side + 1))
    W = int(rng.integers(1, max_side + 1))
    K = int(rng.integers(1, max_classes + 1))
    N = int(rng.integers(1, min(max_superpixels, H * W) + 1))
    labels = rng.integers(0, K, size=(H, W))
    if ignore_rate:
        labels[rng.random((H, W)) < ignore_rate] = 255
    ids = rng.integers(0, N, size=(H, W))
    # Every id must own a pixel.
    cells = rng.permutation(H * W)[:N]
    ids.ravel()[cells] = np.arange(N)
    return LabelMask(labels.astype(np.uint8), K), SuperpixelPartition(ids.astype(np.int32), N)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
