import pytest
import torch

from xz3r0_utils.image_layout import features_to_image, image_to_features


def test_image_batch_to_features_and_back():
    images = torch.rand((2, 4, 8, 3), dtype=torch.float32)
    features = image_to_features(images)
    assert len(features) == 2
    assert features[0].shape == (3, 4, 8)
    assert features[0].dtype == torch.float64

    restored = features_to_image(features, images)
    assert restored.dtype == torch.float32
    assert torch.equal(restored, images)


def test_mask_gets_single_channel():
    masks = torch.rand((1, 4, 8))
    features = image_to_features(masks)
    assert features[0].shape == (1, 4, 8)


def test_features_are_clamped():
    like = torch.zeros((1, 1, 2, 1))
    feature = torch.tensor([[[-0.5, 1.5]]], dtype=torch.float64)
    image = features_to_image([feature], like)
    assert image.flatten().tolist() == [0.0, 1.0]


def test_rejects_wrong_rank():
    with pytest.raises(ValueError):
        image_to_features(torch.zeros((4, 8)))
