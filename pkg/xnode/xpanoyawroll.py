"""
全景偏航旋转节点模块
====================

ERP 图像的水平循环平移（偏航）与可选左右翻转。
"""

import torch
from comfy_api.latest import io

try:
    from ..xpano.resampler import (
        horizontal_flip,
        yaw_degrees_to_columns,
        yaw_roll,
    )
    from ..xz3r0_utils import get_logger
    from ..xz3r0_utils.image_layout import features_to_image, image_to_features
except ImportError:
    from xpano.resampler import (
        horizontal_flip,
        yaw_degrees_to_columns,
        yaw_roll,
    )
    from xz3r0_utils import get_logger
    from xz3r0_utils.image_layout import features_to_image, image_to_features

LOGGER = get_logger(__name__)


class XPanoYawRoll(io.ComfyNode):
    """
    XPanoYawRoll 偏航旋转节点

    偏航角换算为最接近的整列平移，像素只做置换，不做插值。
    翻转在平移之后执行。
    """

    @classmethod
    def define_schema(cls) -> io.Schema:
        """定义节点输入输出模式。"""
        return io.Schema(
            node_id="XPanoYawRoll",
            display_name="XPanoYawRoll",
            description=(
                "Rotate equirectangular panoramas around the vertical axis "
                "by whole columns, with optional left-right flip"
            ),
            category="♾️ Xz3r0/Panorama",
            inputs=[
                io.Image.Input(
                    "image",
                    tooltip="Equirectangular image batch",
                ),
                io.Float.Input(
                    "yaw_degrees",
                    default=0.0,
                    min=-360.0,
                    max=360.0,
                    step=0.1,
                    display_mode=io.NumberDisplay.number,
                    tooltip="Yaw angle, rounded to the nearest column",
                ),
                io.Boolean.Input(
                    "flip",
                    default=False,
                    label_on="Enabled",
                    label_off="Disabled",
                    tooltip="Mirror left-right around the front meridian",
                ),
            ],
            outputs=[
                io.Image.Output("image", tooltip="Rotated panorama batch"),
                io.Int.Output("shift", tooltip="Applied column shift"),
            ],
        )

    @classmethod
    def execute(
        cls,
        image: torch.Tensor,
        yaw_degrees: float = 0.0,
        flip: bool = False,
    ) -> io.NodeOutput:
        width = image.shape[2]
        shift = yaw_degrees_to_columns(yaw_degrees, width)
        rotated = []
        for erp in image_to_features(image):
            erp = yaw_roll(erp, shift)
            if flip:
                erp = horizontal_flip(erp)
            rotated.append(erp)
        LOGGER.debug("XPanoYawRoll shift=%s flip=%s", shift, flip)
        return io.NodeOutput(features_to_image(rotated, image), shift)
