"""End-to-end superpixel correction: SLIC, CAM or probability input, refinement, evaluation.

Refinement is applied to the segmentation-stage prediction. Pseudo-masks
feed the multi-depth loss but are not themselves refined.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import io as spio
from .cam import compute_score_map, multi_layer_loss, score_map_to_mask
from .core import ClassifierWeights, FeatureMapStack, ImageRGB, LabelMask, ProbabilityMap, ValidationError
from .metrics import evaluate
from .refine import floodfill_refine
from .slic import boundary_mask, segment


class InputError(ValidationError):
    """An input file exists but cannot be decoded."""


def load(reader, path, *args):
    try:
        return reader(path, *args)
    except FileNotFoundError:
        raise InputError(f"input file not found: {path}", str(path)) from None
    except ValidationError:
        raise
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read {path}: {exc}", str(path)) from None


def overlay(image, partition, color=(255, 255, 0)):
    px = np.array(image.pixels)
    px[boundary_mask(partition)] = color
    return px


def pseudo_masks_from_cam(feature_paths, weight_paths, height, width):
    masks = []
    for i, fpath in enumerate(feature_paths):
        wpath = weight_paths[i] if len(weight_paths) > 1 else weight_paths[0]
        stack = FeatureMapStack(load(spio.read_tensor, fpath), depth_id=i + 1)
        weights = ClassifierWeights(load(spio.read_tensor, wpath))
        masks.append(score_map_to_mask(compute_score_map(stack, weights, height, width)))
    return masks


def run(cfg):
    """Execute a :class:`~supix.config.PipelineConfig` and write its artifacts.

    Returns the report dictionary (also written as ``report.json``).
    """
    image = load(spio.read_image, cfg.image)
    H, W = image.height, image.width
    if cfg.features:
        pseudo = pseudo_masks_from_cam(cfg.features, cfg.weights, H, W)
    else:
        pseudo = [load(spio.read_mask, p, cfg.num_classes) for p in cfg.pseudo_masks]

    probs = None
    if cfg.probability is not None:
        arr = load(spio.read_tensor, cfg.probability)
        probs = ProbabilityMap(arr)
        if probs.shape != (H, W):
            raise ValidationError(f"probability map {probs.shape} does not match image {(H, W)}", "probs")
        prediction = LabelMask(np.argmax(probs.probs, axis=0).astype(np.uint8), probs.num_classes)
    else:
        # Without a segmentation output the deepest pseudo-mask stands in for it.
        prediction = pseudo[-1]
    for p in pseudo:
        if p.shape != (H, W):
            raise ValidationError(f"pseudo-mask {p.shape} does not match image {(H, W)}", "labels")

    gt = load(spio.read_mask, cfg.ground_truth, prediction.num_classes) if cfg.ground_truth else None

    partition = segment(image, cfg.slic)
    refined = floodfill_refine(prediction, partition, cfg.refine)

    result = {
        "image": {"height": H, "width": W},
        "num_superpixels": partition.num_superpixels,
        "slic": {
            "cluster_size": cfg.slic.cluster_size,
            "compactness": cfg.slic.compactness,
            "max_iterations": cfg.slic.max_iterations,
            "min_region_fraction": cfg.slic.min_region_fraction,
        },
        "refine": {"tau": cfg.refine.tau, "count_ignored": cfg.refine.count_ignored},
        "pixels_changed": int((refined.labels != prediction.labels).sum()),
    }
    if probs is not None and len(pseudo) == 3:
        result["loss"] = multi_layer_loss(probs, *pseudo, cfg.layer_weights)
        result["lambdas"] = list(cfg.layer_weights.lambdas)
    if gt is not None:
        result["metrics"] = {
            "unrefined": evaluate(prediction, gt).to_dict(),
            "refined": evaluate(refined, gt).to_dict(),
        }

    out = Path(cfg.output_dir)
    emitted = [spio.write_mask(out / "refined.png", refined)]
    if cfg.emit_intermediates:
        emitted.append(spio.write_partition(out / "partition.png", partition, cfg.slic))
        emitted.append(spio.sidecar_path(out / "partition.png"))
        emitted.append(spio.write_mask(out / "prediction.png", prediction))
        for i, p in enumerate(pseudo, 1):
            emitted.append(spio.write_mask(out / f"pseudo_mask_{i}.png", p))
        emitted.append(spio.write_image(out / "overlay.png", ImageRGB(overlay(image, partition))))
    report_path = spio.write_bytes(out / "report.json", (json.dumps(result, sort_keys=True, indent=2) + "\n").encode())
    emitted.append(report_path)
    write_manifest(out / "manifest.json", emitted, out)
    return result


def write_manifest(path, files, root):
    entries = [
        {"path": Path(f).relative_to(root).as_posix(), "sha256": spio.sha256_file(f), "bytes": Path(f).stat().st_size}
        for f in files
    ]
    return spio.write_bytes(path, (json.dumps({"files": entries}, sort_keys=True, indent=2) + "\n").encode())
