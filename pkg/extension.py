"""
ComfyUI-Xz3r0-Pano V3 扩展定义。

此文件仅负责固定注册节点，由根目录 __init__.py 的
comfy_entrypoint 在 ComfyUI 加载扩展时导入。
"""

# ================================
# 注册策略约束（全文件级，必须遵守）
# ================================
# 1) 本项目约定使用固定注册列表，不做条件注册/动态隐藏节点。
# 2) 依赖缺失不在注册层兜底，错误由导入阶段或节点执行阶段抛出。
# 3) requirements.txt 内的 Python 依赖交由 ComfyUI/Python 处理。
# 4) `from .xnode...` 导入顺序与 `REGISTERED_NODE_CLASSES` 注册顺序
#    必须一致：分类内部按节点类名字母序排列（A->Z）。

from comfy_api.latest import ComfyExtension, io  # noqa: I001

# ============================================
# Panorama

from .xnode.xdeptheval import XDepthEval
from .xnode.xpanoc2e import XPanoC2E
from .xnode.xpanoe2c import XPanoE2C
from .xnode.xpanoyawroll import XPanoYawRoll

# =============================================

from .xz3r0_utils import configure_logging, get_logger

LOGGER = get_logger(__name__)

REGISTERED_NODE_CLASSES: tuple[type[io.ComfyNode], ...] = (
    # ============================================
    # Panorama
    XDepthEval,
    XPanoC2E,
    XPanoE2C,
    XPanoYawRoll,
    # =============================================
)


class Xz3r0PanoExtension(ComfyExtension):
    """
    Xz3r0-Pano 扩展类（V3）。
    """

    async def get_node_list(self) -> list[type[io.ComfyNode]]:
        """
        返回固定注册节点列表。
        """
        return list(REGISTERED_NODE_CLASSES)

    async def on_load(self):
        """扩展加载时初始化日志配置。"""
        configure_logging()
        LOGGER.debug(
            "[Xz3r0-Pano] registered %s nodes", len(REGISTERED_NODE_CLASSES)
        )
