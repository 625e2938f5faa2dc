"""
全景特征填充模块
================

三种填充方式：
    - circular: ERP 水平循环填充，垂直方向复制最近行
    - cube: 立方体面边界用相邻面的最近像素填充（无插值）
    - spherical: 把面的透视投影延伸到 90° 视场之外，
      在真正所属的相邻面上双线性采样

立方体填充与球面填充共用同一套射线映射：
填充面像素 → 延伸射线 → face_of 判定所属面 → 该面上的 (u, v)。
角点像素同样按 face_of 的优先级规则落到唯一的面上。
映射表按 (r, p) 缓存。
"""

from functools import lru_cache

import numpy as np
import torch

from .resampler import (
    CubeFeatureMap,
    FeatureMap,
    NUM_FACES,
    sample_faces,
    validate_cube,
    validate_feature_map,
)
from .sphere_core import face_to_sphere_array, sphere_to_face_array

try:
    from ..xz3r0_utils import get_logger
except ImportError:
    from xz3r0_utils import get_logger

LOGGER = get_logger(__name__)

MODE_CIRCULAR = "circular"
MODE_CUBE = "cube"
MODE_SPHERICAL = "spherical"
PAD_MODES = (MODE_CIRCULAR, MODE_CUBE, MODE_SPHERICAL)
CUBE_PAD_MODES = (MODE_CUBE, MODE_SPHERICAL)

PAD_MAP_CACHE_SIZE = 8


def circular_pad(
    erp: FeatureMap,
    pad: int,
    period: int | None = None,
) -> FeatureMap:
    """
    ERP 循环填充，输出 C×(H+2p)×(W+2p)。

    Args:
        erp: C×H×W 特征
        pad: 填充像素数
        period: 水平周期，默认等于输入宽度。
            对已填充过的特征再次填充时传入原始宽度，
            这样 pad(pad(x, 1), 1, period=W) 与 pad(x, 2) 完全一致。

    Raises:
        ValueError: pad < 0、pad > period 或 period 大于输入宽度
    """
    validate_feature_map(erp, "erp")
    _, height, width = erp.shape
    if period is None:
        period = width
    if period < 1 or period > width:
        raise ValueError("Circular period must be within [1, width]")
    if pad < 0:
        raise ValueError("Padding must be non-negative")
    if pad > period:
        raise ValueError(f"Circular padding {pad} exceeds period {period}")
    if pad == 0:
        return erp.clone()

    cols = torch.arange(-pad, width + pad)
    cols = torch.where(cols < 0, cols + period, cols)
    cols = torch.where(cols >= width, cols - period, cols)
    rows = torch.arange(-pad, height + pad).clamp(0, height - 1)

    return erp.index_select(1, rows).index_select(2, cols)


def _validate_cube_pad(pad: int, size: int) -> None:
    if pad < 1:
        raise ValueError("Cube padding must be >= 1")
    if pad >= size:
        raise ValueError(
            f"Cube padding {pad} must be smaller than face size {size}"
        )


def extended_face_rays(size: int, pad: int) -> np.ndarray:
    """
    每个填充面像素中心沿本面透视投影延伸出的射线，形状 (6, s, s, 3)，
    s = r + 2p。
    """
    side = size + 2 * pad
    centers = np.arange(side, dtype=np.float64) - pad + 0.5
    shape = (NUM_FACES, side, side)
    u = np.broadcast_to(centers[None, None, :], shape)
    v = np.broadcast_to(size - centers[None, :, None], shape)
    faces = np.broadcast_to(
        np.arange(NUM_FACES, dtype=np.int64)[:, None, None], shape
    )
    return face_to_sphere_array(faces, u, v, size)


def _interior_mask(size: int, pad: int) -> np.ndarray:
    side = size + 2 * pad
    mask = np.zeros((side, side), dtype=bool)
    mask[pad : pad + size, pad : pad + size] = True
    return mask


@lru_cache(maxsize=PAD_MAP_CACHE_SIZE)
def cube_pad_map(size: int, pad: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    立方体填充的源像素表 (face, row, col)，每个形状 (6, s, s)。

    内部区域指向自身像素，保证逐位复制。
    """
    _validate_cube_pad(pad, size)
    faces, u, v = sphere_to_face_array(extended_face_rays(size, pad), size)
    cols = np.clip(np.floor(u), 0, size - 1).astype(np.int64)
    rows = np.clip(np.floor(size - v), 0, size - 1).astype(np.int64)

    interior = _interior_mask(size, pad)
    own = np.arange(size, dtype=np.int64)
    for face in range(NUM_FACES):
        faces[face][interior] = face
        rows[face][interior] = np.repeat(own, size)
        cols[face][interior] = np.tile(own, size)

    for array in (faces, rows, cols):
        array.setflags(write=False)
    LOGGER.debug("Built cube pad map r=%s p=%s", size, pad)
    return faces, rows, cols


@lru_cache(maxsize=PAD_MAP_CACHE_SIZE)
def spherical_pad_map(
    size: int, pad: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    球面填充的采样表 (face, col, row)，col/row 为所属面上的连续采样坐标。
    """
    _validate_cube_pad(pad, size)
    faces, u, v = sphere_to_face_array(extended_face_rays(size, pad), size)
    cols = u - 0.5
    rows = (size - v) - 0.5
    for array in (faces, cols, rows):
        array.setflags(write=False)
    LOGGER.debug("Built spherical pad map r=%s p=%s", size, pad)
    return faces, cols, rows


def cube_pad(cube: CubeFeatureMap, pad: int) -> CubeFeatureMap:
    """
    立方体填充：最近邻复制相邻面像素，输出 6×C×(r+2p)×(r+2p)。

    Raises:
        ValueError: p < 1 或 p >= r
    """
    size = validate_cube(cube)
    faces, rows, cols = cube_pad_map(size, pad)
    channels = cube.shape[1]
    side = size + 2 * pad

    index = torch.from_numpy((faces * size + rows) * size + cols)
    flat = cube.permute(1, 0, 2, 3).reshape(channels, -1)
    padded = flat[:, index.reshape(-1)].reshape(channels, NUM_FACES, side, side)
    return padded.permute(1, 0, 2, 3).contiguous()


def spherical_pad(cube: CubeFeatureMap, pad: int) -> CubeFeatureMap:
    """
    球面填充：延伸射线后在所属面上双线性采样，输出 6×C×(r+2p)×(r+2p)。

    Raises:
        ValueError: p < 1 或 p >= r
    """
    size = validate_cube(cube)
    faces, cols, rows = spherical_pad_map(size, pad)
    samples = sample_faces(
        cube,
        torch.tensor(faces),
        torch.tensor(cols),
        torch.tensor(rows),
        0,
    )
    padded = samples.permute(1, 0, 2, 3).contiguous()
    padded[:, :, pad : pad + size, pad : pad + size] = cube
    return padded


def pad_cube(cube: CubeFeatureMap, pad: int, mode: str) -> CubeFeatureMap:
    """按模式分派立方体填充。"""
    if mode == MODE_CUBE:
        return cube_pad(cube, pad)
    if mode == MODE_SPHERICAL:
        return spherical_pad(cube, pad)
    raise ValueError(f"Unknown cube padding mode: {mode}")


def pad_any(tensor: torch.Tensor, pad: int, mode: str) -> torch.Tensor:
    """
    按张量维度与模式分派：circular 需要 C×H×W，
    cube / spherical 需要 6×C×r×r。
    """
    if mode not in PAD_MODES:
        raise ValueError(f"Unknown padding mode: {mode}")
    if mode == MODE_CIRCULAR:
        if tensor.dim() != 3:
            raise ValueError("Circular padding expects a CxHxW tensor")
        return circular_pad(tensor, pad)
    if tensor.dim() != 4:
        raise ValueError(f"{mode} padding expects a 6xCxRxR tensor")
    return pad_cube(tensor, pad, mode)
