"""Command-line front end.

Exit codes: 0 success, 2 usage or validation error (including unreadable
inputs), 3 I/O error while writing outputs, 4 internal invariant violation.
"""
from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import io as spio
from .cam import compute_score_map, score_map_to_mask
from .config import load_config
from .core import ClassifierWeights, FeatureMapStack, ImageRGB, ValidationError
from .metrics import evaluate
from .pipeline import load, overlay, run
from .refine import RefineParams, floodfill_refine
from .slic import SlicParams, segment
from .synth import SynthParams, corrupt, generate, soft_probabilities

log = logging.getLogger("supix")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INTERNAL = 0, 2, 3, 4


def cmd_slic(args):
    params = SlicParams(args.cluster_size, args.compactness, args.iters, args.min_region_fraction)
    image = load(spio.read_image, args.image)
    partition = segment(image, params)
    spio.write_partition(args.out, partition, params)
    if args.overlay:
        spio.write_image(args.overlay, ImageRGB(overlay(image, partition)))
    print(f"num_superpixels={partition.num_superpixels}")


def _numbered(path, i):
    path = Path(path)
    return path.with_name(f"{path.stem}-{i}{path.suffix}")


def cmd_cam(args):
    if len(args.weights) not in (1, len(args.features)):
        raise ValidationError("give one --weights file, or one per --features file", "weights")
    many = len(args.features) > 1
    for i, fpath in enumerate(args.features, 1):
        wpath = args.weights[i - 1] if len(args.weights) > 1 else args.weights[0]
        stack = FeatureMapStack(load(spio.read_tensor, fpath), depth_id=i)
        weights = ClassifierWeights(load(spio.read_tensor, wpath))
        scores = compute_score_map(stack, weights, args.height, args.width)
        mask = score_map_to_mask(scores)
        spio.write_mask(_numbered(args.out, i) if many else args.out, mask)
        if args.scores:
            spio.write_tensor(_numbered(args.scores, i) if many else args.scores, scores.scores)


def cmd_refine(args):
    mask = load(spio.read_mask, args.mask)
    partition = load(spio.read_partition, args.partition)
    refined = floodfill_refine(mask, partition, RefineParams(args.tau, args.count_ignored))
    spio.write_mask(args.out, refined)
    print(f"pixels_changed={int((refined.labels != mask.labels).sum())}")


def cmd_eval(args):
    gt = load(spio.read_mask, args.gt, args.classes)
    pred = load(spio.read_mask, args.pred, gt.num_classes)
    rep = evaluate(pred, gt)
    sys.stdout.write(rep.to_text())
    if args.json:
        spio.write_bytes(args.json, rep.to_json().encode())


def _run_config(path):
    cfg = load_config(path)
    result = run(cfg)
    return str(cfg.output_dir), result


def cmd_pipeline(args):
    # Validate every config before any work starts.
    for path in args.config:
        load_config(path)
    if args.jobs > 1 and len(args.config) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_config, args.config))
    else:
        results = [_run_config(p) for p in args.config]
    for out_dir, result in results:
        line = f"output={out_dir}"
        if "metrics" in result:
            m = result["metrics"]
            line += f" miou_unrefined={m['unrefined']['miou']:.6f} miou_refined={m['refined']['miou']:.6f}"
        if "loss" in result:
            line += f" loss={result['loss']:.6f}"
        print(line)


SYNTH_CONFIG = """\
input.image = image.png
input.probability = probability.spxt
input.pseudo_masks = pseudo_mask_1.png, pseudo_mask_2.png, pseudo_mask_3.png
input.ground_truth = gt.png
slic.cluster_size = {cluster_size}
slic.compactness = 10
slic.max_iterations = 10
refine.tau = 0.5
loss.lambda1 = 1
loss.lambda2 = 1
loss.lambda3 = 1
output.dir = out
output.emit_intermediates = false
"""


def cmd_synth(args):
    params = SynthParams(args.width, args.height, args.classes, args.sites, args.noise, args.jitter, args.seed)
    image, gt = generate(params)
    noisy = corrupt(gt, params.noise_rate, params.seed + 1000)
    out = Path(args.out_dir)
    spio.write_image(out / "image.png", image)
    spio.write_mask(out / "gt.png", gt)
    spio.write_mask(out / "noisy.png", noisy)
    for i in (1, 2, 3):
        spio.write_mask(out / f"pseudo_mask_{i}.png", corrupt(gt, params.noise_rate, params.seed + 1000 + i))
    spio.write_tensor(out / "probability.spxt", soft_probabilities(noisy).probs)
    cs = max(2, min(8, params.width, params.height))
    spio.write_bytes(out / "pipeline.cfg", SYNTH_CONFIG.format(cluster_size=cs).encode())
    print(f"wrote {out}")


def build_parser():
    parser = argparse.ArgumentParser(prog="supix", description="Superpixel correction of segmentation masks.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("slic", help="superpixel partition of an RGB image")
    p.add_argument("--image", required=True)
    p.add_argument("--cluster-size", type=int, default=16)
    p.add_argument("--compactness", type=float, default=10.0)
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--min-region-fraction", type=float, default=0.25)
    p.add_argument("--out", required=True, help="16-bit partition PNG; a .meta sidecar is written beside it")
    p.add_argument("--overlay", help="optional PNG with superpixel boundaries drawn on the image")
    p.set_defaults(func=cmd_slic)

    p = sub.add_parser("cam", help="pseudo-masks from feature maps and classifier weights")
    p.add_argument("--features", nargs="+", required=True)
    p.add_argument("--weights", nargs="+", required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scores", help="optional SPXT file for the upsampled score map")
    p.set_defaults(func=cmd_cam)

    p = sub.add_parser("refine", help="superpixel floodfill refinement of a mask")
    p.add_argument("--mask", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--count-ignored", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("eval", help="IoU metrics of a prediction against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--classes", type=int)
    p.add_argument("--json", help="also write the report as JSON")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="run one or more pipeline config files")
    p.add_argument("--config", nargs="+", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("synth", help="write a seeded synthetic fixture")
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--height", type=int, default=128)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--sites", type=int, default=12)
    p.add_argument("--noise", type=float, default=0.15)
    p.add_argument("--jitter", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"supix {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"supix {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # noqa: BLE001
        log.debug("internal failure", exc_info=True)
        print(f"supix {args.command}: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
