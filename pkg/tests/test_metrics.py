import logging
import math

import numpy as np
import pytest
import torch

from xpano.metrics import (
    DepthEvalResult,
    DepthMap,
    EmptyEvaluationError,
    berhu_loss,
    compute_metrics,
    evaluation_mask,
    relative_improvement,
)
from xpano.resampler import yaw_roll


def _depth(values: np.ndarray) -> DepthMap:
    return DepthMap.from_array(np.asarray(values, dtype=np.float64))


def _random_gt(height: int = 16, width: int = 32, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(0.5, 5.0, size=(height, width))


def test_identical_prediction_is_perfect():
    gt = _random_gt()
    result = compute_metrics(_depth(gt), _depth(gt))
    assert result.mae == 0.0
    assert result.abs_rel == 0.0
    assert result.rmse == 0.0
    assert result.rmse_log10 == 0.0
    assert (result.d1, result.d2, result.d3) == (1.0, 1.0, 1.0)
    assert result.valid_pixel_count == gt.size


def test_scaled_prediction():
    gt = _random_gt()
    result = compute_metrics(_depth(1.3 * gt), _depth(gt))
    assert result.abs_rel == pytest.approx(0.3, abs=1e-9)
    assert result.d1 == 0.0
    assert result.d2 == 1.0
    assert result.d3 == 1.0
    assert result.rmse_log10 == pytest.approx(0.113943, abs=1e-6)
    assert result.rmse_log("e") == pytest.approx(math.log(1.3), abs=1e-9)
    with pytest.raises(ValueError):
        result.rmse_log("2")


def test_delta_accuracy_is_symmetric_and_monotone():
    rng = np.random.default_rng(3)
    gt = _random_gt(seed=1)
    pred = np.clip(gt * rng.uniform(0.5, 2.0, size=gt.shape), 0.2, 9.0)
    forward = compute_metrics(_depth(pred), _depth(gt))
    backward = compute_metrics(_depth(gt), _depth(pred))
    assert (forward.d1, forward.d2, forward.d3) == (
        backward.d1,
        backward.d2,
        backward.d3,
    )
    assert 0.0 <= forward.d1 <= forward.d2 <= forward.d3 <= 1.0


def test_crop_removes_rows():
    gt = np.ones((512, 8))
    result = compute_metrics(_depth(gt), _depth(gt), crop=68)
    assert result.valid_pixel_count == 376 * 8


def test_range_and_invalid_pixels_are_masked():
    gt = np.full((4, 4), 2.0)
    gt[0, 0] = 0.0
    gt[0, 1] = 0.05
    gt[0, 2] = 12.0
    mask = evaluation_mask(_depth(gt))
    assert int(mask.sum()) == 13
    assert not mask[0, :3].any()


@pytest.mark.parametrize(
    ("min_depth", "max_depth", "crop"),
    [(1.0, 1.0, 0), (5.0, 1.0, 0), (0.1, 10.0, 2), (0.1, 10.0, -1)],
)
def test_bad_evaluation_parameters(min_depth, max_depth, crop):
    gt = _depth(np.ones((4, 4)))
    with pytest.raises(ValueError):
        compute_metrics(gt, gt, min_depth, max_depth, crop)


def test_shape_mismatch_raises():
    with pytest.raises(ValueError):
        compute_metrics(_depth(np.ones((4, 4))), _depth(np.ones((4, 5))))


def test_no_valid_pixels_raises():
    gt = _depth(np.zeros((4, 4)))
    with pytest.raises(EmptyEvaluationError):
        compute_metrics(_depth(np.ones((4, 4))), gt)


def test_nonpositive_predictions_are_counted(caplog):
    gt = np.full((8, 8), 2.0)
    pred = gt.copy()
    pred[0, 0] = 0.0
    with caplog.at_level(logging.WARNING, logger="xpano.metrics"):
        result = compute_metrics(_depth(pred), _depth(gt))
    assert result.nonpositive_pred_count == 1
    assert result.valid_pixel_count == 64
    assert result.d1 == pytest.approx(63 / 64)
    assert result.rmse_log10 == 0.0
    assert result.mae == pytest.approx(2.0 / 64)
    assert "nonpositive" in caplog.text


def test_all_nonpositive_predictions_still_report(caplog):
    gt = _depth(np.full((4, 4), 2.0))
    with caplog.at_level(logging.WARNING, logger="xpano.metrics"):
        result = compute_metrics(_depth(np.zeros((4, 4))), gt)
    assert result.valid_pixel_count == 16
    assert result.nonpositive_pred_count == 16
    assert result.log_pixel_count == 0
    assert result.mae == pytest.approx(2.0)
    assert result.abs_rel == pytest.approx(1.0)
    assert result.rmse == pytest.approx(2.0)
    assert result.rmse_log10 == 0.0
    assert result.rmse_log_e == 0.0
    assert (result.d1, result.d2, result.d3) == (0.0, 0.0, 0.0)
    assert all(math.isfinite(value) for value in result.as_dict().values())
    assert "No positive predictions" in caplog.text


def test_yaw_roll_invariance():
    gt = _random_gt(seed=4)
    pred = gt * np.random.default_rng(5).uniform(0.8, 1.2, size=gt.shape)

    def rolled(values: np.ndarray) -> np.ndarray:
        return yaw_roll(torch.from_numpy(values)[None], 7)[0].numpy()

    base = compute_metrics(_depth(pred), _depth(gt), crop=2)
    shifted = compute_metrics(_depth(rolled(pred)), _depth(rolled(gt)), crop=2)
    assert base == shifted


def test_depth_map_scale_and_validity():
    depth = DepthMap.from_array(np.array([[0, 4000], [8000, np.nan]]), 1 / 4000)
    np.testing.assert_allclose(depth.values, [[0.0, 1.0], [2.0, 0.0]])
    np.testing.assert_array_equal(depth.valid, [[False, True], [True, False]])
    assert (depth.height, depth.width) == (2, 2)


def test_depth_map_rejects_nonpositive_valid_pixels():
    with pytest.raises(ValueError):
        DepthMap(values=np.zeros((2, 2)), valid=np.ones((2, 2), dtype=bool))


# ------------ BerHu ------------


def test_berhu_zero_for_perfect_prediction():
    gt = _depth(np.full((3, 3), 2.0))
    assert berhu_loss(gt, gt) == 0.0


def test_berhu_single_large_residual():
    assert berhu_loss(_depth([[3.0]]), _depth([[2.0]])) == pytest.approx(2.6)


def test_berhu_two_residuals():
    loss = berhu_loss(_depth([[1.05, 1.5]]), _depth([[1.0, 1.0]]))
    assert loss == pytest.approx(0.675)


def test_berhu_is_continuous_at_threshold():
    eps = 1e-9
    below = berhu_loss(_depth([[3.0, 2.0 + 0.2 - eps]]), _depth([[2.0, 2.0]]))
    above = berhu_loss(_depth([[3.0, 2.0 + 0.2 + eps]]), _depth([[2.0, 2.0]]))
    assert abs(above - below) < 1e-6
    assert below >= 0.0


def test_berhu_needs_valid_pixels():
    with pytest.raises(EmptyEvaluationError):
        berhu_loss(_depth([[1.0]]), _depth([[0.0]]))


# ------------ 相对改进 ------------


def _result(abs_rel: float, d1: float) -> DepthEvalResult:
    return DepthEvalResult(
        mae=0.4,
        abs_rel=abs_rel,
        rmse=0.0,
        rmse_log10=0.1,
        rmse_log_e=0.2,
        d1=d1,
        d2=0.9,
        d3=0.95,
        valid_pixel_count=10,
    )


def test_relative_improvement():
    gain = relative_improvement(_result(0.2, 0.8), _result(0.1, 0.85))
    assert gain["abs_rel"] == pytest.approx(50.0)
    assert gain["d1"] == pytest.approx(5.0)
    assert gain["mae"] == 0.0
    assert gain["rmse"] == 0.0
    assert gain["d2"] == 0.0


def test_as_dict_lists_all_metrics():
    keys = set(_result(0.1, 0.5).as_dict())
    assert keys == {
        "mae",
        "abs_rel",
        "rmse",
        "rmse_log10",
        "rmse_log_e",
        "d1",
        "d2",
        "d3",
    }
