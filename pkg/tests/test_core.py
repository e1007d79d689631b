import numpy as np
import pytest

from supix import io as spio
from supix.core import (
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


def test_label_mask_valid():
    mask = LabelMask(np.array([[0, 1], [1, 0]]), 2)
    assert validate(mask) is None
    assert (mask.height, mask.width) == (2, 2)


def test_label_out_of_range_names_field_and_index():
    with pytest.raises(ValidationError) as info:
        LabelMask(np.array([[3]]), 2)
    assert info.value.field == "labels"
    assert info.value.index == (0, 0)


def test_ignore_label_is_allowed():
    mask = LabelMask(np.array([[0, IGNORE]]), 1)
    assert validate(mask) is None


def test_label_mask_class_count_bounds():
    with pytest.raises(ValidationError):
        LabelMask(np.zeros((1, 1), int), 256)
    with pytest.raises(ValidationError):
        LabelMask(np.zeros((1, 1), int), 0)


def test_probability_not_normalized():
    probs = np.array([0.6, 0.6]).reshape(2, 1, 1)
    with pytest.raises(ValidationError) as info:
        ProbabilityMap(probs)
    assert "normalized" in str(info.value)
    assert info.value.index == (0, 0)


def test_probability_entries_in_unit_interval():
    with pytest.raises(ValidationError):
        ProbabilityMap(np.array([1.5, -0.5]).reshape(2, 1, 1))


@pytest.mark.parametrize(
    "factory",
    [
        lambda: FeatureMapStack(np.array([[[np.nan]]])),
        lambda: ClassifierWeights(np.array([[np.inf]])),
        lambda: ScoreMap(np.array([[[1.0, np.nan]]])),
    ],
)
def test_non_finite_rejected(factory):
    with pytest.raises(ValidationError) as info:
        factory()
    assert "non-finite" in str(info.value)


def test_partition_requires_every_id_nonempty():
    with pytest.raises(ValidationError) as info:
        SuperpixelPartition(np.array([[0, 2]]), 3)
    assert info.value.field == "num_superpixels"
    assert info.value.index == (1,)


def test_partition_infers_count():
    p = SuperpixelPartition(np.array([[0, 1], [2, 2]]))
    assert p.num_superpixels == 3
    assert p.sizes().tolist() == [1, 1, 2]


def test_image_shapes():
    with pytest.raises(ValidationError):
        ImageRGB(np.zeros((2, 2), np.uint8))
    with pytest.raises(ValidationError):
        ImageLab(np.full((1, 1, 3), 120.0))


def test_values_are_immutable():
    mask = LabelMask(np.zeros((2, 2), int), 1)
    with pytest.raises(ValueError):
        mask.labels[0, 0] = 1
    with pytest.raises(AttributeError):
        mask.num_classes = 3


def test_validate_is_total():
    assert isinstance(validate(object()), ValidationError)
    mask = LabelMask(np.zeros((1, 1), int), 1)
    assert validate(mask) is None


def test_round_trip_identity(rng):
    mask = LabelMask(rng.integers(0, 5, (7, 9)), 5)
    assert spio.decode_mask(spio.encode_mask(mask)) == mask
    tensor = rng.normal(size=(3, 4, 5)).astype(np.float32)
    assert FeatureMapStack(spio.decode_tensor(spio.encode_tensor(tensor))) == FeatureMapStack(tensor)
