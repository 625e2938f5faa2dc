"""
ERP / 立方体特征融合模块
========================

三种融合模块的前向计算（只做推理，不含训练）：
    - Concat: 通道拼接后 1×1 卷积降维 2C → C（无偏置）
    - BiProj: 两路 3×3 卷积，立方体分支经 Sigmoid 掩码后加回 ERP 分支
    - CEE: 残差调制立方体特征，拼接后经 SE 通道注意力，再 1×1 卷积降维

参数量（权重）：
    Concat 2C²，BiProj 18C² + 2C（偏置 2C + 1），CEE 13.5C²
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import torch
import torch.nn.functional as F

from .resampler import (
    C2EGrid,
    CubeFeatureMap,
    DEFAULT_BOUNDARY,
    FeatureMap,
    apply_c2e,
)

try:
    from ..xz3r0_utils import get_logger
except ImportError:
    from xz3r0_utils import get_logger

LOGGER = get_logger(__name__)

SE_REDUCTION = 16
VALID_KERNELS = (1, 3)
CEE_CHANNEL_MULTIPLE = 8


class FusionVariant(str, Enum):
    CONCAT = "concat"
    BIPROJ = "biproj"
    CEE = "cee"


@dataclass(frozen=True, eq=False)
class ConvLayer:
    """
    卷积层参数：weight 形状 out×in×k×k，bias 可选（长度 out）。

    padding 缺省为 (k - 1) / 2，即保持空间尺寸。
    """

    weight: torch.Tensor
    bias: torch.Tensor | None = None
    padding: int | None = None

    def __post_init__(self) -> None:
        if self.weight.dim() != 4:
            raise ValueError("Conv weight must be out x in x k x k")
        kernel_h, kernel_w = self.weight.shape[2:]
        if kernel_h != kernel_w or kernel_h not in VALID_KERNELS:
            raise ValueError(f"Conv kernel must be one of {VALID_KERNELS}")
        if self.bias is not None and self.bias.shape != (self.out_channels,):
            raise ValueError("Conv bias length must equal output channels")
        if self.padding is None:
            object.__setattr__(self, "padding", (kernel_h - 1) // 2)
        elif self.padding < 0:
            raise ValueError("Conv padding must be non-negative")

    @property
    def in_channels(self) -> int:
        return int(self.weight.shape[1])

    @property
    def out_channels(self) -> int:
        return int(self.weight.shape[0])

    @property
    def kernel(self) -> int:
        return int(self.weight.shape[2])


@dataclass(frozen=True, eq=False)
class SEBlock:
    """
    SE 通道注意力：全局平均池化 → 全连接 → ReLU → 全连接 → Sigmoid。

    fc1_weight: hidden×channels，fc2_weight: channels×hidden，
    hidden = channels / reduction。
    """

    fc1_weight: torch.Tensor
    fc1_bias: torch.Tensor
    fc2_weight: torch.Tensor
    fc2_bias: torch.Tensor
    reduction: int = SE_REDUCTION

    def __post_init__(self) -> None:
        channels = self.channels
        if channels % self.reduction != 0:
            raise ValueError(
                f"SE reduction {self.reduction} must divide {channels} channels"
            )
        hidden = channels // self.reduction
        if self.fc1_weight.shape != (hidden, channels):
            raise ValueError("SE fc1 weight must be hidden x channels")
        if self.fc2_weight.shape != (channels, hidden):
            raise ValueError("SE fc2 weight must be channels x hidden")
        if self.fc1_bias.shape != (hidden,) or self.fc2_bias.shape != (channels,):
            raise ValueError("SE bias shapes do not match the dense layers")

    @property
    def channels(self) -> int:
        return int(self.fc1_weight.shape[1])

    @property
    def hidden(self) -> int:
        return int(self.fc1_weight.shape[0])


# 每种变体的层名 → (输入通道倍数, 输出通道, 卷积核, 是否带偏置)
# 输出通道中 None 表示 C，1 表示单通道掩码
_LAYER_LAYOUT: dict[FusionVariant, dict[str, tuple[int, int | None, int, bool]]] = {
    FusionVariant.CONCAT: {
        "reduce": (2, None, 1, False),
    },
    FusionVariant.BIPROJ: {
        "equi_conv": (1, None, 3, True),
        "c2e_conv": (1, None, 3, True),
        "mask_conv": (2, 1, 1, True),
    },
    FusionVariant.CEE: {
        "res_squeeze": (2, None, 1, True),
        "res_conv": (1, None, 3, True),
        "fuse_conv": (2, None, 1, True),
    },
}


@dataclass(frozen=True, eq=False)
class FusionParams:
    """某一融合变体的全部层参数。"""

    variant: FusionVariant
    channels: int
    layers: dict[str, ConvLayer] = field(default_factory=dict)
    se: SEBlock | None = None

    def __post_init__(self) -> None:
        variant = FusionVariant(self.variant)
        object.__setattr__(self, "variant", variant)
        if self.channels < 1:
            raise ValueError("Fusion channel count must be positive")
        layout = _LAYER_LAYOUT[variant]
        if set(self.layers) != set(layout):
            raise ValueError(
                f"{variant.value} expects layers {sorted(layout)}, "
                f"got {sorted(self.layers)}"
            )
        for name, (in_mult, out, kernel, has_bias) in layout.items():
            layer = self.layers[name]
            expected_out = self.channels if out is None else out
            if (
                layer.in_channels != in_mult * self.channels
                or layer.out_channels != expected_out
                or layer.kernel != kernel
            ):
                raise ValueError(f"Layer {name} has the wrong shape")
            if has_bias != (layer.bias is not None):
                raise ValueError(f"Layer {name} bias presence is wrong")
        if self.se is not None:
            if variant != FusionVariant.CEE:
                raise ValueError("Only CEE carries an SE block")
            if self.se.channels != 2 * self.channels:
                raise ValueError("CEE SE block must cover 2C channels")


# ------------ 基础算子 ------------


def conv2d(x: FeatureMap, layer: ConvLayer) -> FeatureMap:
    """
    步长 1 的互相关卷积，零填充 layer.padding 像素。

    Raises:
        ValueError: 通道数不符或空间尺寸小于卷积核
    """
    if x.dim() != 3:
        raise ValueError("conv2d input must be CxHxW")
    if x.shape[0] != layer.in_channels:
        raise ValueError(
            f"conv2d expects {layer.in_channels} channels, got {x.shape[0]}"
        )
    if min(x.shape[1:]) < layer.kernel:
        raise ValueError("conv2d spatial size must be at least the kernel")
    weight = layer.weight.to(x.dtype)
    bias = None if layer.bias is None else layer.bias.to(x.dtype)
    return F.conv2d(x[None], weight, bias, padding=layer.padding)[0]


def se_gate(x: FeatureMap, se: SEBlock) -> torch.Tensor:
    """返回每个通道的门控系数 (C,)，取值在 (0, 1)。"""
    if x.dim() != 3 or x.shape[0] != se.channels:
        raise ValueError(f"SE block expects {se.channels} channels")
    pooled = x.mean(dim=(1, 2))
    hidden = torch.relu(se.fc1_weight.to(x.dtype) @ pooled + se.fc1_bias.to(x.dtype))
    return torch.sigmoid(
        se.fc2_weight.to(x.dtype) @ hidden + se.fc2_bias.to(x.dtype)
    )


def se_forward(x: FeatureMap, se: SEBlock) -> FeatureMap:
    """按通道门控缩放输入。"""
    return x * se_gate(x, se)[:, None, None]


def _check_pair(f_equi: FeatureMap, f_c2e: FeatureMap, params: FusionParams) -> None:
    if f_equi.dim() != 3 or f_equi.shape != f_c2e.shape:
        raise ValueError(
            f"Fusion inputs must share CxHxW, got {tuple(f_equi.shape)} "
            f"and {tuple(f_c2e.shape)}"
        )
    if f_equi.shape[0] != params.channels:
        raise ValueError(
            f"Fusion params expect {params.channels} channels, "
            f"got {f_equi.shape[0]}"
        )


def _check_variant(params: FusionParams, variant: FusionVariant) -> None:
    if params.variant != variant:
        raise ValueError(
            f"Expected {variant.value} params, got {params.variant.value}"
        )


# ------------ 融合模块 ------------


def concat_fuse(
    f_equi: FeatureMap, f_c2e: FeatureMap, params: FusionParams
) -> FeatureMap:
    """拼接 → 1×1 卷积（2C → C，无偏置）。"""
    _check_variant(params, FusionVariant.CONCAT)
    _check_pair(f_equi, f_c2e, params)
    return conv2d(torch.cat((f_equi, f_c2e), dim=0), params.layers["reduce"])


def biproj_fuse(
    f_equi: FeatureMap, f_c2e: FeatureMap, params: FusionParams
) -> FeatureMap:
    """
    单向双投影融合：
        F'_equi = ReLU(conv3×3(f_equi))，F'_c2e = ReLU(conv3×3(f_c2e))
        Mask = Sigmoid(conv1×1([F'_equi, F'_c2e]))，单通道
        输出 = f_equi + Mask ⊙ F'_c2e
    """
    _check_variant(params, FusionVariant.BIPROJ)
    _check_pair(f_equi, f_c2e, params)
    equi = torch.relu(conv2d(f_equi, params.layers["equi_conv"]))
    c2e = torch.relu(conv2d(f_c2e, params.layers["c2e_conv"]))
    mask = torch.sigmoid(
        conv2d(torch.cat((equi, c2e), dim=0), params.layers["mask_conv"])
    )
    return f_equi + mask * c2e


def cee_fuse_with_gate(
    f_equi: FeatureMap, f_c2e: FeatureMap, params: FusionParams
) -> tuple[FeatureMap, torch.Tensor | None]:
    """
    CEE 融合，同时返回 SE 门控向量（无 SE 时为 None）。

    Raises:
        ValueError: C 不是 8 的倍数
    """
    _check_variant(params, FusionVariant.CEE)
    _check_pair(f_equi, f_c2e, params)
    if params.channels % CEE_CHANNEL_MULTIPLE != 0:
        raise ValueError(
            f"CEE requires C divisible by {CEE_CHANNEL_MULTIPLE}, "
            f"got {params.channels}"
        )

    cat = torch.cat((f_equi, f_c2e), dim=0)
    squeezed = torch.relu(conv2d(cat, params.layers["res_squeeze"]))
    residual = conv2d(squeezed, params.layers["res_conv"])
    modulated = torch.cat((f_equi, f_c2e + residual), dim=0)

    gate = None
    if params.se is not None:
        gate = se_gate(modulated, params.se)
        modulated = modulated * gate[:, None, None]
    return conv2d(modulated, params.layers["fuse_conv"]), gate


def cee_fuse(
    f_equi: FeatureMap, f_c2e: FeatureMap, params: FusionParams
) -> FeatureMap:
    """CEE 融合：残差调制 + SE 门控拼接 + 1×1 降维。"""
    fused, _ = cee_fuse_with_gate(f_equi, f_c2e, params)
    return fused


_FUSERS = {
    FusionVariant.CONCAT: concat_fuse,
    FusionVariant.BIPROJ: biproj_fuse,
    FusionVariant.CEE: cee_fuse,
}


def fuse(f_equi: FeatureMap, f_c2e: FeatureMap, params: FusionParams) -> FeatureMap:
    """按 params.variant 分派。"""
    return _FUSERS[params.variant](f_equi, f_c2e, params)


# ------------ 参数 ------------


def param_count(params: FusionParams) -> tuple[int, int]:
    """返回 (权重数, 偏置数)，SE 全连接层计入其中。"""
    weights = 0
    biases = 0
    for layer in params.layers.values():
        weights += layer.weight.numel()
        if layer.bias is not None:
            biases += layer.bias.numel()
    if params.se is not None:
        weights += params.se.fc1_weight.numel() + params.se.fc2_weight.numel()
        biases += params.se.fc1_bias.numel() + params.se.fc2_bias.numel()
    return weights, biases


def _uniform(
    shape: tuple[int, ...], fan_in: int, generator: torch.Generator
) -> torch.Tensor:
    bound = 1.0 / math.sqrt(fan_in)
    values = torch.rand(shape, generator=generator, dtype=torch.float64)
    return (values * 2.0 - 1.0) * bound


def init_fusion_params(
    variant: FusionVariant | str,
    channels: int,
    seed: int,
    use_se: bool = True,
) -> FusionParams:
    """
    以固定种子生成参数：权重与偏置均匀分布在 ±1/√fan_in。

    use_se 只对 CEE 生效（False 即去掉 SE 的消融变体）。
    """
    variant = FusionVariant(variant)
    if channels < 1:
        raise ValueError("Fusion channel count must be positive")
    if variant == FusionVariant.CEE and channels % CEE_CHANNEL_MULTIPLE != 0:
        raise ValueError(
            f"CEE requires C divisible by {CEE_CHANNEL_MULTIPLE}, got {channels}"
        )
    generator = torch.Generator().manual_seed(int(seed))

    layers: dict[str, ConvLayer] = {}
    for name, (in_mult, out, kernel, has_bias) in _LAYER_LAYOUT[variant].items():
        in_channels = in_mult * channels
        out_channels = channels if out is None else out
        fan_in = in_channels * kernel * kernel
        weight = _uniform(
            (out_channels, in_channels, kernel, kernel), fan_in, generator
        )
        bias = _uniform((out_channels,), fan_in, generator) if has_bias else None
        layers[name] = ConvLayer(weight=weight, bias=bias)

    se = None
    if variant == FusionVariant.CEE and use_se:
        se_channels = 2 * channels
        hidden = se_channels // SE_REDUCTION
        se = SEBlock(
            fc1_weight=_uniform((hidden, se_channels), se_channels, generator),
            fc1_bias=_uniform((hidden,), se_channels, generator),
            fc2_weight=_uniform((se_channels, hidden), hidden, generator),
            fc2_bias=_uniform((se_channels,), hidden, generator),
        )

    params = FusionParams(
        variant=variant, channels=channels, layers=layers, se=se
    )
    LOGGER.debug(
        "Initialized %s params C=%s seed=%s", variant.value, channels, seed
    )
    return params


def make_fusion_demo_inputs(
    channels: int, height: int, seed: int
) -> tuple[FeatureMap, CubeFeatureMap]:
    """
    生成随机演示输入：ERP 特征 C×H×2H 与立方体特征 6×C×(H/2)×(H/2)。
    """
    if channels < 1:
        raise ValueError("Channel count must be positive")
    if height < 4 or height % 2 != 0:
        raise ValueError("Demo height must be even and >= 4")
    generator = torch.Generator().manual_seed(int(seed))
    face_size = height // 2
    erp = torch.randn(
        (channels, height, 2 * height), generator=generator, dtype=torch.float64
    )
    cube = torch.randn(
        (6, channels, face_size, face_size),
        generator=generator,
        dtype=torch.float64,
    )
    return erp, cube


def unifuse_skip_demo_with_gate(
    erp_feat: FeatureMap,
    cube_feat: CubeFeatureMap,
    grid: C2EGrid,
    variant: FusionVariant | str,
    params: FusionParams,
    boundary: str = DEFAULT_BOUNDARY,
) -> tuple[FeatureMap, torch.Tensor | None]:
    """
    单级跳连融合：立方体特征经 C2E 对齐到 ERP 后与 ERP 特征融合。

    同时返回 CEE 的 SE 门控向量，其他变体或无 SE 时为 None。
    """
    variant = FusionVariant(variant)
    _check_variant(params, variant)
    if erp_feat.dim() != 3 or tuple(erp_feat.shape[1:]) != (
        grid.height,
        grid.width,
    ):
        raise ValueError("ERP feature size does not match the C2E grid")
    if cube_feat.dim() != 4 or cube_feat.shape[1] != erp_feat.shape[0]:
        raise ValueError("Cube and ERP features must have equal channels")
    f_c2e = apply_c2e(cube_feat, grid, boundary)
    if variant == FusionVariant.CEE:
        return cee_fuse_with_gate(erp_feat, f_c2e, params)
    return fuse(erp_feat, f_c2e, params), None


def unifuse_skip_demo(
    erp_feat: FeatureMap,
    cube_feat: CubeFeatureMap,
    grid: C2EGrid,
    variant: FusionVariant | str,
    params: FusionParams,
    boundary: str = DEFAULT_BOUNDARY,
) -> FeatureMap:
    """单级跳连融合，只返回融合结果。"""
    fused, _ = unifuse_skip_demo_with_gate(
        erp_feat, cube_feat, grid, variant, params, boundary
    )
    return fused
