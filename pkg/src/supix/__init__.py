"""Superpixel correction for weakly supervised segmentation masks."""
from .cam import LayerWeights, compute_logits, compute_score_map, multi_layer_loss, score_map_to_mask
from .core import (
    IGNORE,
    ClassifierWeights,
    FeatureMapStack,
    ImageLab,
    ImageRGB,
    LabelMask,
    ProbabilityMap,
    ScoreMap,
    SuperpixelPartition,
    ValidationError,
    validate,
)
from .estimators import CAMPseudoLabeler, SLICSegmenter, SuperpixelRefiner
from .metrics import ConfusionMatrix, MetricsReport, accumulate, evaluate, report
from .refine import RefineParams, compute_stats, floodfill_refine
from .slic import SlicParams, enforce_connectivity, rgb_to_lab, segment

__version__ = "0.1.0"
