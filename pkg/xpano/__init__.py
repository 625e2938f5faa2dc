"""
xpano：球面全景几何、重采样、填充、融合与深度评估工具包。

不依赖 ComfyUI，节点层（xnode）与命令行（xpano.cli）都建立在它之上。
"""

from .sphere_core import FaceId

__all__ = ["FaceId"]
