"""
全景 C2E 节点模块
=================

把六个立方体面重新拼回等距柱状投影（ERP）图像。
"""

import torch
from comfy_api.latest import io

try:
    from ..xpano.resampler import (
        BOUNDARY_CLAMP_FACE,
        BOUNDARY_PADDED_FACE,
        NUM_FACES,
        apply_c2e,
        build_c2e_grid,
    )
    from ..xz3r0_utils import get_logger
    from ..xz3r0_utils.image_layout import features_to_image, image_to_features
except ImportError:
    from xpano.resampler import (
        BOUNDARY_CLAMP_FACE,
        BOUNDARY_PADDED_FACE,
        NUM_FACES,
        apply_c2e,
        build_c2e_grid,
    )
    from xz3r0_utils import get_logger
    from xz3r0_utils.image_layout import features_to_image, image_to_features

LOGGER = get_logger(__name__)

BOUNDARY_OPTIONS = {
    "Padded": BOUNDARY_PADDED_FACE,
    "Clamp": BOUNDARY_CLAMP_FACE,
}


class XPanoC2E(io.ComfyNode):
    """
    XPanoC2E 立方体面 → ERP 节点

    输入批次按每 6 张一组（B, D, F, L, R, U）拼成一张 ERP。

    输入：
        faces: 立方体面批次，批次大小为 6 的倍数 (IMAGE)
        height: 输出 ERP 高度，0 表示取 2r (INT)
        boundary: 面接缝处理方式 (STRING)

    输出：
        image: ERP 图像批次 (IMAGE)
    """

    @classmethod
    def define_schema(cls) -> io.Schema:
        """定义节点输入输出模式。"""
        return io.Schema(
            node_id="XPanoC2E",
            display_name="XPanoC2E",
            description=(
                "Merge cube faces (groups of six, ordered B, D, F, L, R, U) "
                "into equirectangular panoramas"
            ),
            category="♾️ Xz3r0/Panorama",
            inputs=[
                io.Image.Input(
                    "faces",
                    tooltip="Cube face batch, a multiple of six images",
                ),
                io.Int.Input(
                    "height",
                    default=0,
                    min=0,
                    max=8192,
                    step=2,
                    display_mode=io.NumberDisplay.number,
                    tooltip="Output panorama height (0 = 2 x face size)",
                ),
                io.Combo.Input(
                    "boundary",
                    options=list(BOUNDARY_OPTIONS),
                    default="Padded",
                    tooltip=(
                        "Padded=sample across face seams, "
                        "Clamp=keep samples inside each face (shows seams)"
                    ),
                ),
            ],
            outputs=[
                io.Image.Output(
                    "image",
                    tooltip="Equirectangular panorama batch",
                ),
            ],
        )

    @classmethod
    def validate_inputs(cls, boundary: str = "Padded", **kwargs) -> bool | str:
        if boundary not in BOUNDARY_OPTIONS:
            return "Invalid boundary value"
        return True

    @classmethod
    def execute(
        cls,
        faces: torch.Tensor,
        height: int = 0,
        boundary: str = "Padded",
    ) -> io.NodeOutput:
        """每 6 张面执行一次 C2E。"""
        batch, face_h, face_w, _ = faces.shape
        if batch == 0 or batch % NUM_FACES != 0:
            raise ValueError("Face batch size must be a multiple of 6")
        if face_h != face_w:
            raise ValueError("Cube faces must be square")

        out_height = height or 2 * face_w
        grid = build_c2e_grid(out_height, 2 * out_height, face_w)
        features = image_to_features(faces)

        panoramas: list[torch.Tensor] = []
        for start in range(0, batch, NUM_FACES):
            cube = torch.stack(features[start : start + NUM_FACES])
            panoramas.append(apply_c2e(cube, grid, BOUNDARY_OPTIONS[boundary]))

        LOGGER.debug(
            "XPanoC2E merged %s panoramas at %sx%s",
            len(panoramas),
            out_height,
            2 * out_height,
        )
        return io.NodeOutput(features_to_image(panoramas, faces))
