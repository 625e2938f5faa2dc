"""
球面合成信号：低阶实球谐组合及其直接渲染。

用作 C2E / E2C / 填充误差的解析参照。
"""

from collections.abc import Callable

import numpy as np
import torch

from .padding import extended_face_rays
from .resampler import NUM_FACES, erp_pixel_angles, face_pixel_coords
from .sphere_core import angular_to_unit_array, face_to_sphere_array

SphereFunction = Callable[[np.ndarray], np.ndarray]

# 实球谐多项式常数（l ≤ 2）
SH_C0 = 0.282095
SH_C1 = 0.488603
SH_C2_XY = 1.092548
SH_C2_ZZ = 0.315392
SH_C2_XX_YY = 0.546274

# 固定系数，顺序与 sh_basis 的列一致
SH_TEST_COEFFS = np.array(
    [1.0, 0.6, -0.4, 0.5, 0.3, -0.25, 0.45, 0.2, -0.35],
    dtype=np.float64,
)


def sh_basis(vectors: np.ndarray) -> np.ndarray:
    """单位向量 (..., 3) → 9 个实球谐基函数值 (..., 9)。"""
    x = vectors[..., 0]
    y = vectors[..., 1]
    z = vectors[..., 2]
    return np.stack(
        (
            np.full_like(x, SH_C0),
            -SH_C1 * y,
            SH_C1 * z,
            -SH_C1 * x,
            SH_C2_XY * x * y,
            -SH_C2_XY * y * z,
            SH_C2_ZZ * (2.0 * z * z - x * x - y * y),
            -SH_C2_XY * x * z,
            SH_C2_XX_YY * (x * x - y * y),
        ),
        axis=-1,
    )


def sh_test_function(vectors: np.ndarray) -> np.ndarray:
    """带限测试函数：SH_TEST_COEFFS 加权的 l ≤ 2 实球谐和。"""
    vectors = np.asarray(vectors, dtype=np.float64)
    return sh_basis(vectors) @ SH_TEST_COEFFS


def render_erp(fn: SphereFunction, height: int, width: int) -> torch.Tensor:
    """在 ERP 像素中心直接求值，返回 1×H×W。"""
    phi, theta = erp_pixel_angles(height, width)
    rays = angular_to_unit_array(phi[None, :], theta[:, None])
    return torch.from_numpy(np.ascontiguousarray(fn(rays)))[None]


def render_padded_cube(fn: SphereFunction, size: int, pad: int) -> torch.Tensor:
    """
    沿各面透视投影延伸 pad 像素后求值，返回 6×1×(r+2p)×(r+2p)。
    pad = 0 即普通立方体渲染。
    """
    rays = extended_face_rays(size, pad)
    return torch.from_numpy(np.ascontiguousarray(fn(rays)))[:, None]


def render_cube(fn: SphereFunction, size: int) -> torch.Tensor:
    """在立方体面像素中心直接求值，返回 6×1×r×r。"""
    u, v = face_pixel_coords(size)
    shape = (NUM_FACES, size, size)
    faces = np.broadcast_to(
        np.arange(NUM_FACES, dtype=np.int64)[:, None, None], shape
    )
    rays = face_to_sphere_array(
        faces, np.broadcast_to(u, shape), np.broadcast_to(v, shape), size
    )
    return torch.from_numpy(np.ascontiguousarray(fn(rays)))[:, None]


def border_mask(size: int, pad: int) -> np.ndarray:
    """填充面上的边框像素为 True，形状 (r+2p, r+2p)。"""
    side = size + 2 * pad
    mask = np.ones((side, side), dtype=bool)
    mask[pad : pad + size, pad : pad + size] = False
    return mask
