"""
全景 E2C 节点模块
=================

把等距柱状投影（ERP）图像拆成六个立方体面。
"""

import torch
from comfy_api.latest import io

try:
    from ..xpano.resampler import apply_e2c, build_e2c_grid, validate_erp_dims
    from ..xz3r0_utils import get_logger
    from ..xz3r0_utils.image_layout import features_to_image, image_to_features
except ImportError:
    from xpano.resampler import apply_e2c, build_e2c_grid, validate_erp_dims
    from xz3r0_utils import get_logger
    from xz3r0_utils.image_layout import features_to_image, image_to_features

LOGGER = get_logger(__name__)


class XPanoE2C(io.ComfyNode):
    """
    XPanoE2C ERP → 立方体面节点

    输入批次中每张 ERP 输出 6 个面，按 B, D, F, L, R, U 顺序
    依次排列在输出批次里（批次大小 6·B）。

    输入：
        image: ERP 图像批次，宽必须为高的 2 倍 (IMAGE)
        face_size: 面边长，0 表示取 H/2 (INT)

    输出：
        faces: 立方体面批次 (IMAGE)
        face_size: 实际使用的面边长 (INT)
    """

    @classmethod
    def define_schema(cls) -> io.Schema:
        """定义节点输入输出模式。"""
        return io.Schema(
            node_id="XPanoE2C",
            display_name="XPanoE2C",
            description=(
                "Split equirectangular panoramas into six cube faces "
                "ordered B, D, F, L, R, U"
            ),
            category="♾️ Xz3r0/Panorama",
            inputs=[
                io.Image.Input(
                    "image",
                    tooltip="Equirectangular image batch (width = 2 x height)",
                ),
                io.Int.Input(
                    "face_size",
                    default=0,
                    min=0,
                    max=8192,
                    step=1,
                    display_mode=io.NumberDisplay.number,
                    tooltip="Cube face side in pixels (0 = height / 2)",
                ),
            ],
            outputs=[
                io.Image.Output(
                    "faces",
                    tooltip="Six faces per input image, ordered B, D, F, L, R, U",
                ),
                io.Int.Output(
                    "face_size",
                    tooltip="Face side actually used",
                ),
            ],
        )

    @classmethod
    def validate_inputs(cls, face_size: int = 0, **kwargs) -> bool | str:
        if face_size == 1:
            return "face_size must be 0 (auto) or >= 2"
        return True

    @classmethod
    def execute(cls, image: torch.Tensor, face_size: int = 0) -> io.NodeOutput:
        """逐张执行 E2C。"""
        _, height, width, _ = image.shape
        validate_erp_dims(height, width)
        size = face_size or height // 2
        grid = build_e2c_grid(size, height, width)

        faces: list[torch.Tensor] = []
        for erp in image_to_features(image):
            faces.extend(apply_e2c(erp, grid).unbind(0))

        LOGGER.debug(
            "XPanoE2C split %s panoramas into faces of %s",
            image.shape[0],
            size,
        )
        return io.NodeOutput(features_to_image(faces, image), size)
