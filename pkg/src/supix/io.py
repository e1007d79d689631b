"""On-disk formats.

Label masks
    8-bit greyscale PNG, pixel value = class index, 255 = IGNORE. The class
    count is stored in a ``tEXt`` chunk with key ``num_classes``; without it
    readers fall back to ``max(label) + 1``.

Partitions
    16-bit greyscale PNG of superpixel ids plus a sidecar text file at
    ``<png path>.meta`` holding ``key = value`` lines (``num_superpixels``,
    ``width``, ``height`` and the SLIC parameters when known).

SPXT tensors (feature maps, classifier weights, score and probability maps)
    ======  =========================================================
    offset  content
    ======  =========================================================
    0       magic ``b"SPXT"``
    4       version, one unsigned byte (currently 1)
    5       ndim, uint32 little-endian
    9       ndim dims, each uint32 little-endian, outermost first
    ...     prod(dims) float32 little-endian values, row-major
    ======  =========================================================
"""
from __future__ import annotations

import hashlib
import io
import struct
from pathlib import Path

import numpy as np
from PIL import Image
from PIL.PngImagePlugin import PngInfo

from .core import IGNORE, ImageRGB, LabelMask, SuperpixelPartition, ValidationError

SPXT_MAGIC = b"SPXT"
SPXT_VERSION = 1
MAX_SUPERPIXELS = 65535


class FormatError(ValidationError):
    """A file does not follow its declared format."""


def _read_bytes(path):
    return Path(path).read_bytes()


def _png_bytes(img, pnginfo=None):
    buf = io.BytesIO()
    img.save(buf, format="PNG", pnginfo=pnginfo, optimize=False, compress_level=6)
    return buf.getvalue()


def write_bytes(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    return path


# -- images -----------------------------------------------------------------

def read_image(path) -> ImageRGB:
    with Image.open(path) as img:
        return ImageRGB(np.array(img.convert("RGB")))


def write_image(path, image: ImageRGB):
    return write_bytes(path, _png_bytes(Image.fromarray(np.asarray(image.pixels))))


# -- label masks --------------------------------------------------------------

def encode_mask(mask: LabelMask) -> bytes:
    info = PngInfo()
    info.add_text("num_classes", str(mask.num_classes))
    return _png_bytes(Image.fromarray(np.asarray(mask.labels)), info)


def decode_mask(data: bytes, num_classes=None) -> LabelMask:
    with Image.open(io.BytesIO(data)) as img:
        if img.mode not in ("L", "P"):
            raise FormatError(f"label mask must be 8-bit single channel, got mode {img.mode}", "labels")
        labels = np.array(img)
        stored = img.text.get("num_classes") if hasattr(img, "text") else None
    if num_classes is None:
        if stored is not None:
            num_classes = int(stored)
        else:
            valid = labels[labels != IGNORE]
            num_classes = int(valid.max()) + 1 if valid.size else 1
    return LabelMask(labels, num_classes)


def read_mask(path, num_classes=None) -> LabelMask:
    return decode_mask(_read_bytes(path), num_classes)


def write_mask(path, mask: LabelMask):
    return write_bytes(path, encode_mask(mask))


# -- partitions ---------------------------------------------------------------

def sidecar_path(path):
    path = Path(path)
    return path.with_name(path.name + ".meta")


def encode_partition(partition: SuperpixelPartition, params=None):
    if partition.num_superpixels > MAX_SUPERPIXELS:
        raise FormatError(f"{partition.num_superpixels} superpixels exceed the 16-bit limit", "num_superpixels")
    png = _png_bytes(Image.fromarray(partition.assignments.astype(np.uint16)))
    meta = {
        "num_superpixels": partition.num_superpixels,
        "width": partition.width,
        "height": partition.height,
    }
    if params is not None:
        meta.update(
            cluster_size=params.cluster_size,
            compactness=params.compactness,
            max_iterations=params.max_iterations,
            min_region_fraction=params.min_region_fraction,
        )
    text = "".join(f"{k} = {v}\n" for k, v in meta.items())
    return png, text.encode()


def write_partition(path, partition: SuperpixelPartition, params=None):
    png, meta = encode_partition(partition, params)
    write_bytes(sidecar_path(path), meta)
    return write_bytes(path, png)


def read_sidecar(path):
    meta = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"malformed sidecar line {line!r}", str(path))
        meta[key.strip()] = value.strip()
    return meta


def read_partition(path) -> SuperpixelPartition:
    with Image.open(path) as img:
        if img.mode not in ("I;16", "I", "L"):
            raise FormatError(f"partition must be single channel, got mode {img.mode}", "assignments")
        ids = np.array(img).astype(np.int32)
    side = sidecar_path(path)
    n = -1
    if side.exists():
        meta = read_sidecar(side)
        n = int(meta["num_superpixels"])
        if (int(meta.get("height", ids.shape[0])), int(meta.get("width", ids.shape[1]))) != ids.shape:
            raise FormatError("sidecar dimensions disagree with the image", "assignments")
    return SuperpixelPartition(ids, n)


# -- SPXT tensors -------------------------------------------------------------

def encode_tensor(arr) -> bytes:
    arr = np.asarray(arr)
    if not np.isfinite(arr).all():
        raise FormatError("non-finite value in tensor", "values")
    header = SPXT_MAGIC + struct.pack("<BI", SPXT_VERSION, arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
    return header + np.ascontiguousarray(arr, dtype="<f4").tobytes()


def decode_tensor(data: bytes) -> np.ndarray:
    if data[:4] != SPXT_MAGIC:
        raise FormatError("missing SPXT magic", "header")
    if len(data) < 9:
        raise FormatError("truncated SPXT header", "header")
    version, ndim = struct.unpack_from("<BI", data, 4)
    if version != SPXT_VERSION:
        raise FormatError(f"unsupported SPXT version {version}", "header")
    off = 9 + 4 * ndim
    if len(data) < off:
        raise FormatError("truncated SPXT dims", "header")
    dims = struct.unpack_from(f"<{ndim}I", data, 9)
    count = int(np.prod(dims, dtype=np.int64))
    if len(data) != off + 4 * count:
        raise FormatError(f"SPXT payload has {len(data) - off} bytes, expected {4 * count}", "values")
    return np.frombuffer(data, dtype="<f4", offset=off).reshape(dims).astype(np.float32)


def read_tensor(path) -> np.ndarray:
    return decode_tensor(_read_bytes(path))


def write_tensor(path, arr):
    return write_bytes(path, encode_tensor(arr))


def sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
