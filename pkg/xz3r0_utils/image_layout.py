"""
ComfyUI 图像布局转换
====================

ComfyUI 的 IMAGE 为 B×H×W×C（float32，[0, 1]），MASK 为 B×H×W；
全景工具包使用单张 C×H×W（float64）。
"""

import torch


def image_to_features(images: torch.Tensor) -> list[torch.Tensor]:
    """IMAGE/MASK 批次 → 每张一个 C×H×W float64 张量。"""
    if images.dim() == 3:
        images = images.unsqueeze(-1)
    if images.dim() != 4:
        raise ValueError("Expected an IMAGE (BxHxWxC) or MASK (BxHxW) tensor")
    return [
        item.permute(2, 0, 1).to(dtype=torch.float64, device="cpu")
        for item in images
    ]


def features_to_image(
    features: list[torch.Tensor], like: torch.Tensor
) -> torch.Tensor:
    """C×H×W 列表 → IMAGE 批次，dtype 与 device 跟随 like，值截断到 [0, 1]。"""
    batch = torch.stack([feature.permute(1, 2, 0) for feature in features])
    return batch.clamp(0.0, 1.0).to(dtype=like.dtype, device=like.device)
