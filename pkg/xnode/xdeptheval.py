"""
深度评估节点模块
================

在工作流里对预测深度与真值深度计算 AbsRel / RMSE / δ 等指标。
"""

import torch
from comfy_api.latest import io

try:
    from ..xpano.metrics import (
        DEFAULT_MAX_DEPTH,
        DEFAULT_MIN_DEPTH,
        DepthEvalResult,
        DepthMap,
        compute_metrics,
    )
    from ..xz3r0_utils import get_logger
    from ..xz3r0_utils.image_layout import image_to_features
except ImportError:
    from xpano.metrics import (
        DEFAULT_MAX_DEPTH,
        DEFAULT_MIN_DEPTH,
        DepthEvalResult,
        DepthMap,
        compute_metrics,
    )
    from xz3r0_utils import get_logger
    from xz3r0_utils.image_layout import image_to_features

LOGGER = get_logger(__name__)

# 图像值 1.0 对应的默认米数
DEFAULT_DEPTH_RANGE = 10.0


class XDepthEval(io.ComfyNode):
    """
    XDepthEval 深度评估节点

    IMAGE 取第一个通道，MASK 直接使用；像素值乘以 depth_scale 得到米。
    批次逐对评估，输出各指标的批次平均值。

    输出：
        report: 多行文本报告 (STRING)
        abs_rel: 平均 AbsRel (FLOAT)
        d1: 平均 δ<1.25 (FLOAT)
    """

    @classmethod
    def define_schema(cls) -> io.Schema:
        """定义节点输入输出模式。"""
        depth_template = io.MatchType.Template(
            "depth_input",
            allowed_types=[io.Image, io.Mask],
        )
        return io.Schema(
            node_id="XDepthEval",
            display_name="XDepthEval",
            description=(
                "Evaluate predicted depth against ground truth "
                "(MAE, AbsRel, RMSE, RMSElog, delta accuracies)"
            ),
            category="♾️ Xz3r0/Panorama",
            inputs=[
                io.MatchType.Input(
                    "pred",
                    template=depth_template,
                    tooltip="Predicted depth image or mask",
                ),
                io.MatchType.Input(
                    "gt",
                    template=depth_template,
                    tooltip="Ground-truth depth image or mask (0 = invalid)",
                ),
                io.Float.Input(
                    "depth_scale",
                    default=DEFAULT_DEPTH_RANGE,
                    min=0.001,
                    max=1000.0,
                    step=0.001,
                    display_mode=io.NumberDisplay.number,
                    tooltip="Meters represented by pixel value 1.0",
                ),
                io.Float.Input(
                    "min_depth",
                    default=DEFAULT_MIN_DEPTH,
                    min=0.0,
                    max=1000.0,
                    step=0.01,
                    display_mode=io.NumberDisplay.number,
                    tooltip="Ground-truth pixels below this depth are ignored",
                ),
                io.Float.Input(
                    "max_depth",
                    default=DEFAULT_MAX_DEPTH,
                    min=0.01,
                    max=1000.0,
                    step=0.01,
                    display_mode=io.NumberDisplay.number,
                    tooltip="Ground-truth pixels above this depth are ignored",
                ),
                io.Int.Input(
                    "crop",
                    default=0,
                    min=0,
                    max=4096,
                    step=1,
                    display_mode=io.NumberDisplay.number,
                    tooltip="Rows excluded at the top and at the bottom",
                ),
            ],
            outputs=[
                io.String.Output("report", tooltip="Metric report"),
                io.Float.Output("abs_rel", tooltip="Batch mean AbsRel"),
                io.Float.Output("d1", tooltip="Batch mean delta < 1.25"),
            ],
        )

    @classmethod
    def validate_inputs(
        cls,
        min_depth: float = DEFAULT_MIN_DEPTH,
        max_depth: float = DEFAULT_MAX_DEPTH,
        **kwargs,
    ) -> bool | str:
        if min_depth >= max_depth:
            return "min_depth must be smaller than max_depth"
        return True

    @classmethod
    def execute(
        cls,
        pred: torch.Tensor,
        gt: torch.Tensor,
        depth_scale: float = DEFAULT_DEPTH_RANGE,
        min_depth: float = DEFAULT_MIN_DEPTH,
        max_depth: float = DEFAULT_MAX_DEPTH,
        crop: int = 0,
    ) -> io.NodeOutput:
        pred_maps = [
            cls._to_depth(item, depth_scale) for item in image_to_features(pred)
        ]
        gt_maps = [
            cls._to_depth(item, depth_scale) for item in image_to_features(gt)
        ]
        if len(pred_maps) != len(gt_maps):
            raise ValueError("pred and gt batch sizes differ")

        results = [
            compute_metrics(p, g, min_depth, max_depth, crop)
            for p, g in zip(pred_maps, gt_maps)
        ]
        report = cls._format_report(results)
        abs_rel = sum(r.abs_rel for r in results) / len(results)
        d1 = sum(r.d1 for r in results) / len(results)
        LOGGER.debug("XDepthEval evaluated %s pairs", len(results))
        return io.NodeOutput(report, abs_rel, d1)

    @staticmethod
    def _to_depth(feature: torch.Tensor, depth_scale: float) -> DepthMap:
        return DepthMap.from_array(feature[0].numpy(), depth_scale)

    @staticmethod
    def _format_report(results: list[DepthEvalResult]) -> str:
        lines = []
        for index, result in enumerate(results):
            lines.append(
                f"[{index}] pixels={result.valid_pixel_count} "
                f"mae={result.mae:.4f} abs_rel={result.abs_rel:.4f} "
                f"rmse={result.rmse:.4f} rmse_log10={result.rmse_log10:.4f} "
                f"d1={result.d1:.4f} d2={result.d2:.4f} d3={result.d3:.4f}"
            )
        return "\n".join(lines)
