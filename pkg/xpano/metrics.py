"""
深度评估指标模块
================

    - compute_metrics: MAE / AbsRel / RMSE / RMSElog / δ 精度
    - berhu_loss: 反向 Huber 损失
    - relative_improvement: 两组结果之间的相对改进

所有求和都使用 math.fsum（精确舍入、与顺序无关），
因此对两张图做同样的像素置换（如偏航平移）时结果逐位不变。
"""

import math
from dataclasses import dataclass

import numpy as np

try:
    from ..xz3r0_utils import get_logger
except ImportError:
    from xz3r0_utils import get_logger

LOGGER = get_logger(__name__)

DEFAULT_MIN_DEPTH = 0.1
DEFAULT_MAX_DEPTH = 10.0
DEFAULT_CROP = 0
DELTA_BASE = 1.25
BERHU_THRESHOLD_RATIO = 0.2

LOG_BASE_10 = "10"
LOG_BASE_E = "e"
LOG_BASES = (LOG_BASE_10, LOG_BASE_E)

ERROR_METRICS = ("mae", "abs_rel", "rmse", "rmse_log10", "rmse_log_e")
ACCURACY_METRICS = ("d1", "d2", "d3")


class EmptyEvaluationError(ValueError):
    """评估区域内没有有效像素。"""


@dataclass(frozen=True, eq=False)
class DepthMap:
    """
    深度图（米）。valid 为 False 的像素不参与评估，
    values 在这些位置固定为 0。
    """

    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self) -> None:
        if self.values.ndim != 2 or self.values.shape != self.valid.shape:
            raise ValueError("DepthMap values and validity must be HxW")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("DepthMap values must be finite")
        if np.any(self.values[self.valid] <= 0):
            raise ValueError("Valid depth pixels must be positive")

    @classmethod
    def from_array(cls, values: np.ndarray, scale: float = 1.0) -> "DepthMap":
        """按 scale 换算为米；有限且大于 0 的像素有效。"""
        raw = np.asarray(values, dtype=np.float64)
        if raw.ndim == 3 and raw.shape[0] == 1:
            raw = raw[0]
        depth = raw * float(scale)
        valid = np.isfinite(depth) & (depth > 0)
        depth = np.where(np.isfinite(depth), depth, 0.0)
        return cls(values=depth, valid=valid)

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def width(self) -> int:
        return int(self.values.shape[1])


@dataclass(frozen=True)
class DepthEvalResult:
    mae: float
    abs_rel: float
    rmse: float
    rmse_log10: float
    rmse_log_e: float
    d1: float
    d2: float
    d3: float
    valid_pixel_count: int
    nonpositive_pred_count: int = 0

    @property
    def log_pixel_count(self) -> int:
        """参与 RMSElog 的像素数；为 0 时两个 RMSElog 字段记为 0。"""
        return self.valid_pixel_count - self.nonpositive_pred_count

    def rmse_log(self, log_base: str = LOG_BASE_10) -> float:
        """按底数取 RMSElog。"""
        if log_base == LOG_BASE_10:
            return self.rmse_log10
        if log_base == LOG_BASE_E:
            return self.rmse_log_e
        raise ValueError(f"Unknown log base: {log_base}")

    def as_dict(self) -> dict[str, float]:
        return {
            name: getattr(self, name)
            for name in ERROR_METRICS + ACCURACY_METRICS
        }


def _mean(values: np.ndarray) -> float:
    return math.fsum(values.tolist()) / values.size


def evaluation_mask(
    gt: DepthMap,
    min_depth: float = DEFAULT_MIN_DEPTH,
    max_depth: float = DEFAULT_MAX_DEPTH,
    crop: int = DEFAULT_CROP,
) -> np.ndarray:
    """
    参与评估的像素：真值有效、落在 [min_depth, max_depth] 内、
    且不在上下各 crop 行之内。
    """
    if not min_depth < max_depth:
        raise ValueError("min_depth must be smaller than max_depth")
    if crop < 0 or 2 * crop >= gt.height:
        raise ValueError(
            f"Crop {crop} must satisfy 0 <= 2*crop < height {gt.height}"
        )
    mask = gt.valid & (gt.values >= min_depth) & (gt.values <= max_depth)
    if crop:
        mask[:crop] = False
        mask[gt.height - crop :] = False
    return mask


def compute_metrics(
    pred: DepthMap,
    gt: DepthMap,
    min_depth: float = DEFAULT_MIN_DEPTH,
    max_depth: float = DEFAULT_MAX_DEPTH,
    crop: int = DEFAULT_CROP,
) -> DepthEvalResult:
    """
    计算深度误差与 δ 精度。

    非正的预测值不参与 RMSElog，计数后以 WARNING 报告；
    它们在 δ 精度中按失败计。全部预测值非正时其余指标照常计算，
    RMSElog 记为 0，由 log_pixel_count == 0 标识。

    Raises:
        ValueError: 尺寸不一致、深度范围或裁剪参数非法
        EmptyEvaluationError: 没有有效像素
    """
    if pred.values.shape != gt.values.shape:
        raise ValueError(
            f"Prediction shape {pred.values.shape} does not match "
            f"ground truth {gt.values.shape}"
        )
    mask = evaluation_mask(gt, min_depth, max_depth, crop)
    count = int(mask.sum())
    if count == 0:
        raise EmptyEvaluationError("No valid pixels to evaluate")

    p = pred.values[mask]
    g = gt.values[mask]
    diff = p - g

    positive = p > 0
    positive_count = int(positive.sum())
    nonpositive = count - positive_count
    if nonpositive:
        LOGGER.warning(
            "Excluded %s nonpositive predictions from the log metrics",
            nonpositive,
        )

    log_p = p[positive]
    log_g = g[positive]
    if positive_count:
        rmse_log10 = math.sqrt(_mean((np.log10(log_p) - np.log10(log_g)) ** 2))
        rmse_log_e = math.sqrt(_mean((np.log(log_p) - np.log(log_g)) ** 2))
    else:
        LOGGER.warning("No positive predictions; RMSElog reported as 0")
        rmse_log10 = rmse_log_e = 0.0

    ratio = np.full(count, np.inf)
    ratio[positive] = np.maximum(log_p / log_g, log_g / log_p)
    accuracies = [
        int((ratio < DELTA_BASE**power).sum()) / count for power in (1, 2, 3)
    ]

    return DepthEvalResult(
        mae=_mean(np.abs(diff)),
        abs_rel=_mean(np.abs(diff) / g),
        rmse=math.sqrt(_mean(diff**2)),
        rmse_log10=rmse_log10,
        rmse_log_e=rmse_log_e,
        d1=accuracies[0],
        d2=accuracies[1],
        d3=accuracies[2],
        valid_pixel_count=count,
        nonpositive_pred_count=nonpositive,
    )


def berhu_loss(pred: DepthMap, gt: DepthMap) -> float:
    """
    反向 Huber 损失，在真值有效像素上取平均。

    阈值 c = 0.2 · max|x|：|x| ≤ c 时取 |x|，否则 (x² + c²) / (2c)。
    所有残差为 0 时 c = 0，退化为 L1。

    Raises:
        ValueError: 尺寸不一致或没有有效像素
    """
    if pred.values.shape != gt.values.shape:
        raise ValueError("Prediction and ground truth shapes differ")
    if not gt.valid.any():
        raise EmptyEvaluationError("BerHu loss needs at least one valid pixel")

    residual = np.abs(pred.values[gt.valid] - gt.values[gt.valid])
    threshold = BERHU_THRESHOLD_RATIO * float(residual.max())
    if threshold == 0.0:
        return _mean(residual)
    loss = np.where(
        residual <= threshold,
        residual,
        (residual * residual + threshold * threshold) / (2.0 * threshold),
    )
    return _mean(loss)


def relative_improvement(
    baseline: DepthEvalResult, candidate: DepthEvalResult
) -> dict[str, float]:
    """
    候选结果相对基线的改进：误差指标为相对下降百分比，
    δ 精度为绝对百分点变化。正值表示更好。
    """
    improvement: dict[str, float] = {}
    for name in ERROR_METRICS:
        base = getattr(baseline, name)
        cand = getattr(candidate, name)
        if base == 0.0:
            improvement[name] = 0.0 if cand == 0.0 else -math.inf
        else:
            improvement[name] = (base - cand) / base * 100.0
    for name in ACCURACY_METRICS:
        improvement[name] = (getattr(candidate, name) - getattr(baseline, name)) * 100.0
    return improvement
