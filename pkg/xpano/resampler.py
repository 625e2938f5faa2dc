"""
全景重采样模块
==============

预计算并应用双线性采样网格：
    - C2E：立方体面 → 等距柱状投影（ERP）
    - E2C：ERP → 立方体面
    - 切平面网格：畸变感知卷积的 k×k 采样位置

像素中心约定：
    ERP 像素 (i, j) 对应经度 2π(j+0.5)/W - π、纬度 π/2 - π(i+0.5)/H，
    正前方（+z）位于图像水平中心，经度接缝落在 B 面内部。
    面像素第 k 行第 l 列对应 u = l + 0.5、v = r - (k + 0.5)，
    即面数组按图像习惯自上而下存储。

所有网格都在构建时量化到 float32（与 TensorContainer 载荷一致），
按分辨率缓存并以只读数组返回。
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import torch

from .sphere_core import (
    TWO_PI,
    angular_to_unit_array,
    face_to_sphere_array,
    sphere_to_face_array,
    unit_to_angular_array,
)

try:
    from ..xz3r0_utils import get_logger
except ImportError:
    from xz3r0_utils import get_logger

LOGGER = get_logger(__name__)

FeatureMap = torch.Tensor
CubeFeatureMap = torch.Tensor

NUM_FACES = 6
MIN_FACE_SIZE = 2
MIN_TANGENT_KERNEL = 3

WRAP_CLAMP = "clamp"
WRAP_X = "wrap_x"
VALID_WRAPS = {WRAP_CLAMP, WRAP_X}

BOUNDARY_CLAMP_FACE = "clamp_face"
BOUNDARY_PADDED_FACE = "padded_face"
VALID_BOUNDARIES = {BOUNDARY_CLAMP_FACE, BOUNDARY_PADDED_FACE}
DEFAULT_BOUNDARY = BOUNDARY_PADDED_FACE

GRID_CACHE_SIZE = 8


@dataclass(frozen=True, eq=False)
class C2EGrid:
    """每个 ERP 像素对应的 (face, u, v)。"""

    height: int
    width: int
    face_size: int
    face: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def sample_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """返回面数组中的 (列, 行) 采样坐标（float64）。"""
        cols = self.u.astype(np.float64) - 0.5
        rows = (self.face_size - self.v.astype(np.float64)) - 0.5
        return cols, rows


@dataclass(frozen=True, eq=False)
class E2CGrid:
    """每个立方体面像素对应的 ERP 列 x 与行 y，形状 (6, r, r)。"""

    face_size: int
    height: int
    width: int
    x: np.ndarray
    y: np.ndarray


@dataclass(frozen=True, eq=False)
class TangentGrid:
    """
    切平面采样偏移，按行存储：dx/dy 形状 (H, k, k)，
    第二维为核的行偏移，第三维为核的列偏移。
    同一行内各列的偏移相同（经度平移不变）。
    """

    height: int
    width: int
    kernel: int
    dx: np.ndarray
    dy: np.ndarray

    def locations(self, row: int, col: int) -> tuple[np.ndarray, np.ndarray]:
        """像素 (row, col) 的 k×k 绝对采样坐标 (x, y)。"""
        x = col + self.dx[row].astype(np.float64)
        y = row + self.dy[row].astype(np.float64)
        return x, y


# ------------ 校验 ------------


def validate_erp_dims(height: int, width: int) -> None:
    """ERP 宽高必须满足 W = 2H。"""
    if height < 1 or width != 2 * height:
        raise ValueError(
            f"Equirectangular size must satisfy W = 2H, got {height}x{width}"
        )


def validate_feature_map(feature: FeatureMap, name: str = "feature") -> None:
    """C×H×W 且全部有限。"""
    if not torch.is_tensor(feature) or feature.dim() != 3:
        raise ValueError(f"{name} must be a CxHxW tensor")
    if feature.numel() == 0:
        raise ValueError(f"{name} cannot be empty")
    if not bool(torch.isfinite(feature).all()):
        raise ValueError(f"{name} contains non-finite values")


def validate_cube(cube: CubeFeatureMap, name: str = "cube") -> int:
    """6×C×r×r 且全部有限，返回面边长 r。"""
    if not torch.is_tensor(cube) or cube.dim() != 4:
        raise ValueError(f"{name} must be a 6xCxRxR tensor")
    faces, _, side_h, side_w = cube.shape
    if faces != NUM_FACES:
        raise ValueError(f"{name} must have 6 faces, got {faces}")
    if side_h != side_w or side_h == 0:
        raise ValueError(f"{name} faces must be square and nonempty")
    if not bool(torch.isfinite(cube).all()):
        raise ValueError(f"{name} contains non-finite values")
    return int(side_h)


def _validate_face_size(face_size: int) -> None:
    if face_size < MIN_FACE_SIZE:
        raise ValueError(f"Face size must be >= {MIN_FACE_SIZE}")


# ------------ 像素中心约定 ------------


def erp_pixel_angles(height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    """
    返回 ERP 列经度 (W,) 与行纬度 (H,)。

    经度取 [-π, π) 区间的带符号值，正前方在水平中心。
    """
    cols = np.arange(width, dtype=np.float64) + 0.5
    rows = np.arange(height, dtype=np.float64) + 0.5
    phi = TWO_PI * cols / width - math.pi
    theta = 0.5 * math.pi - math.pi * rows / height
    return phi, theta


def erp_coords_from_angles(
    phi: np.ndarray,
    theta: np.ndarray,
    height: int,
    width: int,
) -> tuple[np.ndarray, np.ndarray]:
    """erp_pixel_angles 的逆映射，返回连续的 (x, y)。"""
    phi = np.asarray(phi, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    x = width * np.mod(phi + math.pi, TWO_PI) / TWO_PI - 0.5
    y = height * (0.5 * math.pi - theta) / math.pi - 0.5
    return x, y


def face_pixel_coords(face_size: int) -> tuple[np.ndarray, np.ndarray]:
    """面数组每个像素中心的 (u, v)，形状 (r, r)，行自上而下。"""
    centers = np.arange(face_size, dtype=np.float64) + 0.5
    u = np.broadcast_to(centers[None, :], (face_size, face_size))
    v = np.broadcast_to(face_size - centers[:, None], (face_size, face_size))
    return u, v


def _readonly(*arrays: np.ndarray) -> None:
    for array in arrays:
        array.setflags(write=False)


# ------------ 网格构建 ------------


@lru_cache(maxsize=GRID_CACHE_SIZE)
def build_c2e_grid(height: int, width: int, face_size: int) -> C2EGrid:
    """
    为每个 ERP 像素中心计算所属面及面内坐标。

    Raises:
        ValueError: W != 2H 或 r < 2
    """
    validate_erp_dims(height, width)
    _validate_face_size(face_size)

    phi, theta = erp_pixel_angles(height, width)
    rays = angular_to_unit_array(phi[None, :], theta[:, None])
    faces, u, v = sphere_to_face_array(rays, face_size)

    grid = C2EGrid(
        height=height,
        width=width,
        face_size=face_size,
        face=faces.astype(np.int64),
        u=u.astype(np.float32),
        v=v.astype(np.float32),
    )
    _readonly(grid.face, grid.u, grid.v)
    LOGGER.debug(
        "Built C2E grid H=%s W=%s r=%s", height, width, face_size
    )
    return grid


@lru_cache(maxsize=GRID_CACHE_SIZE)
def build_e2c_grid(face_size: int, height: int, width: int) -> E2CGrid:
    """
    为每个立方体面像素中心计算 ERP 上的连续坐标。

    Raises:
        ValueError: W != 2H 或 r < 2
    """
    validate_erp_dims(height, width)
    _validate_face_size(face_size)

    u, v = face_pixel_coords(face_size)
    shape = (NUM_FACES, face_size, face_size)
    faces = np.broadcast_to(
        np.arange(NUM_FACES, dtype=np.int64)[:, None, None], shape
    )
    rays = face_to_sphere_array(
        faces,
        np.broadcast_to(u, shape),
        np.broadcast_to(v, shape),
        face_size,
    )
    phi, theta = unit_to_angular_array(rays)
    x, y = erp_coords_from_angles(phi, theta, height, width)

    x32 = x.astype(np.float32)
    x32[x32 < 0] += np.float32(width)
    x32[x32 >= width] -= np.float32(width)
    y32 = np.clip(y.astype(np.float32), 0, height - 1)

    grid = E2CGrid(
        face_size=face_size, height=height, width=width, x=x32, y=y32
    )
    _readonly(grid.x, grid.y)
    LOGGER.debug(
        "Built E2C grid r=%s H=%s W=%s", face_size, height, width
    )
    return grid


@lru_cache(maxsize=GRID_CACHE_SIZE)
def build_tangent_grid(height: int, width: int, kernel: int) -> TangentGrid:
    """
    在每个 ERP 像素的切平面上铺 k×k 规则网格并投影回 ERP。

    切平面网格间距为 tan(2π/W)，即赤道处恰好一个像素的角步长。

    Raises:
        ValueError: k 为偶数或小于 3，W != 2H
    """
    if kernel < MIN_TANGENT_KERNEL or kernel % 2 == 0:
        raise ValueError("Tangent kernel size must be odd and >= 3")
    validate_erp_dims(height, width)

    _, theta = erp_pixel_angles(height, width)
    half = kernel // 2
    steps = np.arange(-half, half + 1, dtype=np.float64)
    spacing = math.tan(TWO_PI / width)

    # 偏移与经度无关，以经度 0 处的切平面为基准
    centers = angular_to_unit_array(np.zeros_like(theta), theta)
    east = np.array([1.0, 0.0, 0.0])
    north = np.stack(
        (np.zeros_like(theta), np.cos(theta), -np.sin(theta)), axis=-1
    )
    # 核的行偏移向下为正，对应切平面上向南
    row_offsets = -steps[None, :, None, None] * spacing
    col_offsets = steps[None, None, :, None] * spacing
    points = (
        centers[:, None, None, :]
        + col_offsets * east[None, None, None, :]
        + row_offsets * north[:, None, None, :]
    )
    points /= np.linalg.norm(points, axis=-1, keepdims=True)
    phi, lat = unit_to_angular_array(points)

    delta_phi = np.mod(phi + math.pi, TWO_PI) - math.pi
    dx = delta_phi * width / TWO_PI
    dy = (theta[:, None, None] - lat) * height / math.pi

    grid = TangentGrid(
        height=height,
        width=width,
        kernel=kernel,
        dx=dx.astype(np.float32),
        dy=dy.astype(np.float32),
    )
    _readonly(grid.dx, grid.dy)
    LOGGER.debug(
        "Built tangent grid H=%s W=%s k=%s", height, width, kernel
    )
    return grid


# ------------ 双线性采样 ------------


def _sample_bilinear(
    image: torch.Tensor,
    x: torch.Tensor,
    y: torch.Tensor,
    wrap: str,
) -> torch.Tensor:
    """
    对 C×H×W 图像在任意形状的坐标 (x, y) 处双线性采样，
    返回 (C, *x.shape)。行方向总是截断；wrap_x 时列方向按 W 取模。
    """
    channels, height, width = image.shape
    x = x.to(torch.float64)
    y = y.to(torch.float64).clamp(0, height - 1)

    if wrap == WRAP_X:
        x_floor = torch.floor(x)
        fx = x - x_floor
        x0 = torch.remainder(x_floor.long(), width)
        x1 = torch.remainder(x0 + 1, width)
    else:
        x = x.clamp(0, width - 1)
        x_floor = torch.floor(x)
        fx = x - x_floor
        x0 = x_floor.long()
        x1 = (x0 + 1).clamp(max=width - 1)

    y_floor = torch.floor(y)
    fy = y - y_floor
    y0 = y_floor.long()
    y1 = (y0 + 1).clamp(max=height - 1)

    flat = image.reshape(channels, height * width)
    index = _tap_index(y0, y1, x0, x1, width)
    return _blend_taps(flat, index, fx, fy, x.shape)


def _tap_index(
    y0: torch.Tensor,
    y1: torch.Tensor,
    x0: torch.Tensor,
    x1: torch.Tensor,
    row_stride: int,
    base: torch.Tensor | int = 0,
) -> torch.Tensor:
    """4 个邻点在展平数组中的下标，形状 (4, N)：左上、右上、左下、右下。"""
    top = base + y0 * row_stride
    bottom = base + y1 * row_stride
    return torch.stack(
        (
            (top + x0).reshape(-1),
            (top + x1).reshape(-1),
            (bottom + x0).reshape(-1),
            (bottom + x1).reshape(-1),
        )
    )


def _blend_taps(
    flat: torch.Tensor,
    index: torch.Tensor,
    fx: torch.Tensor,
    fy: torch.Tensor,
    shape: tuple[int, ...],
) -> torch.Tensor:
    """
    一次取出 4 个邻点并按插值形式混合：top = a + fx(b - a)。

    常量输入时差值恒为 0，结果逐位不变。
    """
    fx = fx.reshape(-1).to(flat.dtype)
    fy = fy.reshape(-1).to(flat.dtype)
    taps = flat[:, index]
    top_left, top_right, bottom_left, bottom_right = taps.unbind(dim=1)

    top = top_left + fx * (top_right - top_left)
    bottom = bottom_left + fx * (bottom_right - bottom_left)
    blended = top + fy * (bottom - top)
    return blended.reshape(flat.shape[0], *shape)


def _face_taps(
    face_index: torch.Tensor,
    cols: torch.Tensor,
    rows: torch.Tensor,
    size: int,
    pad: int,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """立方体面上的邻点下标与插值权重 (index, fx, fy)。"""
    side = size + 2 * pad
    cols = cols.to(torch.float64)
    rows = rows.to(torch.float64)
    if pad == 0:
        cols = cols.clamp(0, size - 1)
        rows = rows.clamp(0, size - 1)

    col_floor = torch.floor(cols)
    fx = cols - col_floor
    x0 = col_floor.long() + pad
    x1 = (x0 + 1).clamp(max=side - 1)

    row_floor = torch.floor(rows)
    fy = rows - row_floor
    y0 = row_floor.long() + pad
    y1 = (y0 + 1).clamp(max=side - 1)

    base = face_index.long() * (side * side)
    return _tap_index(y0, y1, x0, x1, side, base), fx, fy


def _flatten_faces(faces: CubeFeatureMap) -> torch.Tensor:
    """6×C×s×s → C×(6·s·s)。"""
    channels = faces.shape[1]
    return faces.permute(1, 0, 2, 3).reshape(channels, -1)


def sample_faces(
    faces: CubeFeatureMap,
    face_index: torch.Tensor,
    cols: torch.Tensor,
    rows: torch.Tensor,
    pad: int = 0,
) -> torch.Tensor:
    """
    在立方体面数组上按 (face, 列, 行) 双线性采样，返回 (C, *cols.shape)。

    cols/rows 是未填充面上的采样坐标；pad > 0 时 faces 已向外填充
    pad 个像素，取整在未填充坐标上完成后再平移下标，
    因此内部像素的插值权重与 pad = 0 时完全一致。
    pad = 0 时坐标截断在面内。
    """
    size = faces.shape[2] - 2 * pad
    index, fx, fy = _face_taps(face_index, cols, rows, size, pad)
    return _blend_taps(_flatten_faces(faces), index, fx, fy, cols.shape)


@lru_cache(maxsize=GRID_CACHE_SIZE)
def _c2e_taps(
    grid: C2EGrid, pad: int
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """按网格缓存 C2E 的邻点下标与权重，重复调用只做一次 gather。"""
    cols, rows = grid.sample_coords()
    return _face_taps(
        torch.tensor(grid.face),
        torch.from_numpy(cols),
        torch.from_numpy(rows),
        grid.face_size,
        pad,
    )


def bilinear_sample(
    image: FeatureMap,
    x: float,
    y: float,
    wrap: str = WRAP_CLAMP,
) -> torch.Tensor:
    """
    单点双线性采样，返回每个通道一个值 (C,)。

    Raises:
        ValueError: 坐标为 NaN 或 wrap 模式非法
    """
    validate_feature_map(image, "image")
    if wrap not in VALID_WRAPS:
        raise ValueError(f"Unknown wrap mode: {wrap}")
    if math.isnan(x) or math.isnan(y):
        raise ValueError("Sampling coordinates must not be NaN")
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError("Sampling coordinates must be finite")
    xs = torch.tensor([x], dtype=torch.float64)
    ys = torch.tensor([y], dtype=torch.float64)
    return _sample_bilinear(image, xs, ys, wrap)[:, 0]


# ------------ 网格应用 ------------


def apply_c2e(
    cube: CubeFeatureMap,
    grid: C2EGrid,
    boundary: str = DEFAULT_BOUNDARY,
) -> FeatureMap:
    """
    立方体特征 → ERP 特征 (C×H×W)。

    boundary:
        clamp_face: 采样截断在单个面内，面接缝处出现裂缝
        padded_face: 先做 1 像素立方体填充，接缝处的邻点取自相邻面

    Raises:
        ValueError: 面边长与网格不一致或 boundary 非法
    """
    # padding 依赖本模块的采样工具，延迟导入
    from .padding import cube_pad

    size = validate_cube(cube)
    if size != grid.face_size:
        raise ValueError(
            f"Cube face size {size} does not match grid face size "
            f"{grid.face_size}"
        )
    if boundary not in VALID_BOUNDARIES:
        raise ValueError(f"Unknown boundary mode: {boundary}")

    if boundary == BOUNDARY_PADDED_FACE:
        pad = 1
        faces = cube_pad(cube, pad)
    else:
        pad = 0
        faces = cube
    index, fx, fy = _c2e_taps(grid, pad)
    return _blend_taps(
        _flatten_faces(faces), index, fx, fy, (grid.height, grid.width)
    )


def apply_e2c(erp: FeatureMap, grid: E2CGrid) -> CubeFeatureMap:
    """
    ERP 特征 → 立方体特征 (6×C×r×r)，水平方向环绕采样。

    Raises:
        ValueError: ERP 尺寸与网格不一致
    """
    validate_feature_map(erp, "erp")
    _, height, width = erp.shape
    if (height, width) != (grid.height, grid.width):
        raise ValueError(
            f"ERP size {height}x{width} does not match grid "
            f"{grid.height}x{grid.width}"
        )
    samples = _sample_bilinear(
        erp,
        torch.from_numpy(grid.x.astype(np.float64)),
        torch.from_numpy(grid.y.astype(np.float64)),
        WRAP_X,
    )
    return samples.permute(1, 0, 2, 3).contiguous()


def apply_tangent_grid(erp: FeatureMap, grid: TangentGrid) -> torch.Tensor:
    """
    在切平面网格位置采样，返回 (C, k², H, W)。
    """
    validate_feature_map(erp, "erp")
    _, height, width = erp.shape
    if (height, width) != (grid.height, grid.width):
        raise ValueError("ERP size does not match tangent grid")

    cols = torch.arange(width, dtype=torch.float64)
    rows = torch.arange(height, dtype=torch.float64)
    dx = torch.from_numpy(grid.dx.astype(np.float64))
    dy = torch.from_numpy(grid.dy.astype(np.float64))
    # (H, k, k, W)
    x = cols[None, None, None, :] + dx[..., None]
    y = rows[:, None, None, None] + dy[..., None]
    y = y.expand_as(x)
    samples = _sample_bilinear(erp, x, y, WRAP_X)
    kernel_area = grid.kernel * grid.kernel
    return samples.reshape(
        erp.shape[0], height, kernel_area, width
    ).permute(0, 2, 1, 3)


def distortion_aware_conv2d(
    erp: FeatureMap,
    grid: TangentGrid,
    weight: torch.Tensor,
    bias: torch.Tensor | None = None,
) -> FeatureMap:
    """
    畸变感知卷积：k×k 抽头取自切平面网格位置而非规则邻域。

    Args:
        weight: out×in×k×k，与 conv2d 相同的互相关布局
        bias: 可选，长度 out
    """
    out_channels, in_channels, kernel_h, kernel_w = weight.shape
    if (kernel_h, kernel_w) != (grid.kernel, grid.kernel):
        raise ValueError("Kernel size does not match tangent grid")
    if erp.dim() != 3 or erp.shape[0] != in_channels:
        raise ValueError(
            f"Expected {in_channels} input channels, got {tuple(erp.shape)}"
        )
    samples = apply_tangent_grid(erp, grid)
    taps = weight.to(samples.dtype).reshape(out_channels, in_channels, -1)
    output = torch.einsum("ock,ckhw->ohw", taps, samples)
    if bias is not None:
        if bias.numel() != out_channels:
            raise ValueError("Bias length must equal output channels")
        output = output + bias.to(output.dtype).reshape(-1, 1, 1)
    return output


def yaw_roll(erp: FeatureMap, shift: int) -> FeatureMap:
    """
    水平循环平移 shift 列（偏航旋转），shift 按 W 取模。
    """
    validate_feature_map(erp, "erp")
    width = erp.shape[-1]
    return torch.roll(erp, shifts=int(shift) % width, dims=-1)


def horizontal_flip(erp: FeatureMap) -> FeatureMap:
    """左右翻转，镜像轴为正前方经线。"""
    validate_feature_map(erp, "erp")
    return torch.flip(erp, dims=[-1])


def yaw_degrees_to_columns(degrees: float, width: int) -> int:
    """把偏航角（度）换算成最接近的整列平移量。"""
    return int(round(degrees / 360.0 * width)) % width


# ------------ 网格导出 ------------


def c2e_grid_to_array(grid: C2EGrid) -> np.ndarray:
    """导出为 (3, H, W) float32：面编号、u、v。"""
    return np.stack(
        (grid.face.astype(np.float32), grid.u, grid.v), axis=0
    )


def c2e_grid_from_array(array: np.ndarray, face_size: int) -> C2EGrid:
    """c2e_grid_to_array 的逆过程，面边长需由调用方给出。"""
    if array.ndim != 3 or array.shape[0] != 3:
        raise ValueError("C2E grid array must have shape (3, H, W)")
    _validate_face_size(face_size)
    _, height, width = array.shape
    validate_erp_dims(height, width)
    faces = array[0]
    if not np.all((faces == np.round(faces)) & (faces >= 0) & (faces < 6)):
        raise ValueError("C2E face plane must hold integer face ids 0..5")
    u = np.ascontiguousarray(array[1], dtype=np.float32)
    v = np.ascontiguousarray(array[2], dtype=np.float32)
    if u.min() < 0 or v.min() < 0 or u.max() > face_size or v.max() > face_size:
        raise ValueError("C2E grid coordinates exceed the face size")
    grid = C2EGrid(
        height=height,
        width=width,
        face_size=face_size,
        face=faces.astype(np.int64),
        u=u,
        v=v,
    )
    _readonly(grid.face, grid.u, grid.v)
    return grid


def e2c_grid_to_array(grid: E2CGrid) -> np.ndarray:
    """导出为 (6, 2, r, r) float32：每个面的 x、y 平面。"""
    return np.stack((grid.x, grid.y), axis=1)


def e2c_grid_from_array(array: np.ndarray, height: int, width: int) -> E2CGrid:
    """e2c_grid_to_array 的逆过程，ERP 尺寸需由调用方给出。"""
    if array.ndim != 4 or array.shape[:2] != (NUM_FACES, 2):
        raise ValueError("E2C grid array must have shape (6, 2, r, r)")
    if array.shape[2] != array.shape[3]:
        raise ValueError("E2C grid faces must be square")
    validate_erp_dims(height, width)
    x = np.ascontiguousarray(array[:, 0], dtype=np.float32)
    y = np.ascontiguousarray(array[:, 1], dtype=np.float32)
    if x.min() < 0 or x.max() >= width or y.min() < 0 or y.max() > height - 1:
        raise ValueError("E2C grid coordinates exceed the ERP size")
    grid = E2CGrid(
        face_size=int(array.shape[2]), height=height, width=width, x=x, y=y
    )
    _readonly(grid.x, grid.y)
    return grid


def tangent_grid_to_array(grid: TangentGrid) -> np.ndarray:
    """导出为 (k², 2, H, W) float32 的偏移平面。"""
    kernel_area = grid.kernel * grid.kernel
    dx = grid.dx.reshape(grid.height, kernel_area).T
    dy = grid.dy.reshape(grid.height, kernel_area).T
    planes = np.stack((dx, dy), axis=1)
    return np.ascontiguousarray(
        np.broadcast_to(
            planes[..., None], (kernel_area, 2, grid.height, grid.width)
        )
    )


def tangent_grid_from_array(array: np.ndarray) -> TangentGrid:
    """tangent_grid_to_array 的逆过程（取每行第 0 列的偏移）。"""
    if array.ndim != 4 or array.shape[1] != 2:
        raise ValueError("Tangent grid array must have shape (k*k, 2, H, W)")
    kernel_area, _, height, width = array.shape
    kernel = math.isqrt(kernel_area)
    if kernel * kernel != kernel_area:
        raise ValueError("Tangent grid first dimension must be k*k")
    validate_erp_dims(height, width)
    dx = np.ascontiguousarray(
        array[:, 0, :, 0].T.reshape(height, kernel, kernel), dtype=np.float32
    )
    dy = np.ascontiguousarray(
        array[:, 1, :, 0].T.reshape(height, kernel, kernel), dtype=np.float32
    )
    grid = TangentGrid(
        height=height, width=width, kernel=kernel, dx=dx, dy=dy
    )
    _readonly(grid.dx, grid.dy)
    return grid
