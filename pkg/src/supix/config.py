"""Pipeline configuration files.

The format is deliberately tiny: one ``section.key = value`` pair per line,
``#`` starts a comment, blank lines are skipped, list values are comma
separated. Relative paths resolve against the config file's directory.

Example::

    input.image = image.png
    input.probability = probability.spxt
    input.pseudo_masks = pseudo_1.png, pseudo_2.png, pseudo_3.png
    input.ground_truth = gt.png
    slic.cluster_size = 8
    slic.compactness = 10
    refine.tau = 0.5
    loss.lambda1 = 0.333
    loss.lambda2 = 0.333
    loss.lambda3 = 0.334
    output.dir = out
    output.emit_intermediates = false
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .cam import LayerWeights
from .core import ValidationError
from .refine import RefineParams
from .slic import SlicParams


class ConfigError(ValidationError):
    pass


_PATH_KEYS = {"input.image", "input.probability", "input.ground_truth"}
_LIST_KEYS = {"input.features", "input.weights", "input.pseudo_masks"}
_KNOWN = _PATH_KEYS | _LIST_KEYS | {
    "input.num_classes",
    "slic.cluster_size",
    "slic.compactness",
    "slic.max_iterations",
    "slic.min_region_fraction",
    "refine.tau",
    "refine.count_ignored",
    "loss.lambda1",
    "loss.lambda2",
    "loss.lambda3",
    "output.dir",
    "output.emit_intermediates",
}


@dataclass(frozen=True)
class PipelineConfig:
    image: Path
    output_dir: Path
    layer_weights: LayerWeights
    slic: SlicParams = field(default_factory=SlicParams)
    refine: RefineParams = field(default_factory=RefineParams)
    probability: Path | None = None
    features: tuple = ()
    weights: tuple = ()
    pseudo_masks: tuple = ()
    ground_truth: Path | None = None
    num_classes: int | None = None
    emit_intermediates: bool = False


def parse_pairs(text):
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value'", key or "line", (lineno,))
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key", key, (lineno,))
        pairs[key] = value.strip()
    return pairs


def _bool(key, value):
    v = value.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}", key)


def _num(pairs, key, kind, default=None):
    if key not in pairs:
        if default is None:
            raise ConfigError("missing required key", key)
        return default
    try:
        return kind(pairs[key])
    except ValueError:
        raise ConfigError(f"not a valid {kind.__name__}: {pairs[key]!r}", key) from None


def _existing(base, key, value):
    path = (base / value).resolve() if not Path(value).is_absolute() else Path(value)
    if not path.is_file():
        raise ConfigError(f"input file not found: {path}", key)
    return path


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}", "config")
    return parse_config(path.read_text(), path.parent)


def parse_config(text, base_dir=".") -> PipelineConfig:
    """Parse and fully validate a config, including that input files exist."""
    base = Path(base_dir)
    pairs = parse_pairs(text)
    unknown = sorted(set(pairs) - _KNOWN)
    if unknown:
        raise ConfigError("unknown key", unknown[0])
    for key in ("input.image", "output.dir"):
        if not pairs.get(key):
            raise ConfigError("missing required key", key)

    lw = LayerWeights(tuple(_num(pairs, f"loss.lambda{i}", float) for i in (1, 2, 3)))
    slic = SlicParams(
        cluster_size=_num(pairs, "slic.cluster_size", int, 16),
        compactness=_num(pairs, "slic.compactness", float, 10.0),
        max_iterations=_num(pairs, "slic.max_iterations", int, 10),
        min_region_fraction=_num(pairs, "slic.min_region_fraction", float, 0.25),
    )
    refine = RefineParams(
        tau=_num(pairs, "refine.tau", float, 0.5),
        count_ignored=_bool("refine.count_ignored", pairs.get("refine.count_ignored", "false")),
    )
    lists = {
        k: tuple(_existing(base, k, v.strip()) for v in pairs[k].split(",") if v.strip())
        for k in _LIST_KEYS
        if k in pairs
    }
    features = lists.get("input.features", ())
    weights = lists.get("input.weights", ())
    if features and len(weights) not in (1, len(features)):
        raise ConfigError("give one weights file, or one per feature stack", "input.weights")
    if weights and not features:
        raise ConfigError("weights given without feature stacks", "input.features")
    pseudo = lists.get("input.pseudo_masks", ())
    if features and pseudo:
        raise ConfigError("give feature stacks or pseudo-masks, not both", "input.pseudo_masks")
    probability = _existing(base, "input.probability", pairs["input.probability"]) if "input.probability" in pairs else None
    if probability is None and not (features or pseudo):
        raise ConfigError("need a probability map, feature stacks or pseudo-masks", "input.probability")
    num_classes = _num(pairs, "input.num_classes", int, 0) or None

    out = Path(pairs["output.dir"])
    return PipelineConfig(
        image=_existing(base, "input.image", pairs["input.image"]),
        output_dir=out if out.is_absolute() else (base / out).resolve(),
        layer_weights=lw,
        slic=slic,
        refine=refine,
        probability=probability,
        features=features,
        weights=weights,
        pseudo_masks=pseudo,
        ground_truth=_existing(base, "input.ground_truth", pairs["input.ground_truth"]) if "input.ground_truth" in pairs else None,
        num_classes=num_classes,
        emit_intermediates=_bool("output.emit_intermediates", pairs.get("output.emit_intermediates", "false")),
    )
