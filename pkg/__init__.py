"""
ComfyUI-Xz3r0-Pano V3 扩展入口。

节点注册见 extension.py。入口内再导入，包本身在没有
ComfyUI（comfy_api）的环境里也能被导入，例如测试收集阶段。
"""


async def comfy_entrypoint():
    """
    ComfyUI V3 入口点，返回 Xz3r0PanoExtension。
    """
    from .extension import Xz3r0PanoExtension

    return Xz3r0PanoExtension()
