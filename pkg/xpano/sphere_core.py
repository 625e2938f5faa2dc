"""
球面坐标核心模块
================

负责角度坐标、单位球面点与立方体面像素坐标之间的精确换算。

坐标约定：
    - 经度 phi ∈ [0, 2π)，纬度 theta ∈ [-π/2, π/2]，赤道 theta=0
    - 球面点 (sin φ cos θ, sin θ, cos φ cos θ)，+z 为正前方
    - 六个面按存储顺序 B, D, F, L, R, U 编号，
      朝向 B→-z, D→-y, F→+z, L→+x, R→-x, U→+y
    - 面内坐标居中后投影：P_c' = (u - r/2, v - r/2, r/2)

所有标量接口都委托给同名的数组接口（*_array），两条路径共用同一套公式。
"""

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi
UNIT_TOLERANCE = 1e-9


class FaceId(IntEnum):
    """立方体面编号，数值即 CubeFeatureMap 中的存储下标。"""

    B = 0
    D = 1
    F = 2
    L = 3
    R = 4
    U = 5


# 存储顺序（B, D, F, L, R, U）
FACE_ORDER: tuple[FaceId, ...] = tuple(FaceId)

# 平局时的面优先级：F > B > L > R > U > D
FACE_PRIORITY: tuple[FaceId, ...] = (
    FaceId.F,
    FaceId.B,
    FaceId.L,
    FaceId.R,
    FaceId.U,
    FaceId.D,
)

LOOKING_DIRECTIONS: dict[FaceId, tuple[float, float, float]] = {
    FaceId.B: (0.0, 0.0, -1.0),
    FaceId.D: (0.0, -1.0, 0.0),
    FaceId.F: (0.0, 0.0, 1.0),
    FaceId.L: (1.0, 0.0, 0.0),
    FaceId.R: (-1.0, 0.0, 0.0),
    FaceId.U: (0.0, 1.0, 0.0),
}

# 每个面相对球面坐标系只绕单轴旋转 90° 或 180°，矩阵元素均为 0/±1。
_FACE_ROTATIONS: dict[FaceId, tuple[tuple[float, ...], ...]] = {
    # 绕 y 轴 180°
    FaceId.B: ((-1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, -1.0)),
    # 绕 x 轴 +90°
    FaceId.D: ((1.0, 0.0, 0.0), (0.0, 0.0, -1.0), (0.0, 1.0, 0.0)),
    FaceId.F: ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)),
    # 绕 y 轴 +90°
    FaceId.L: ((0.0, 0.0, 1.0), (0.0, 1.0, 0.0), (-1.0, 0.0, 0.0)),
    # 绕 y 轴 -90°
    FaceId.R: ((0.0, 0.0, -1.0), (0.0, 1.0, 0.0), (1.0, 0.0, 0.0)),
    # 绕 x 轴 -90°
    FaceId.U: ((1.0, 0.0, 0.0), (0.0, 0.0, 1.0), (0.0, -1.0, 0.0)),
}

# (6, 3, 3)，按存储顺序排列
FACE_ROTATION_STACK = np.array(
    [_FACE_ROTATIONS[face] for face in FACE_ORDER],
    dtype=np.float64,
)
FACE_ROTATION_STACK.setflags(write=False)

# 按优先级排列的朝向矩阵，argmax 取第一个最大值即实现平局规则
_PRIORITY_DIRECTIONS = np.array(
    [LOOKING_DIRECTIONS[face] for face in FACE_PRIORITY],
    dtype=np.float64,
)
_PRIORITY_TO_STORAGE = np.array(
    [int(face) for face in FACE_PRIORITY],
    dtype=np.int64,
)

Mat3 = np.ndarray


@dataclass(frozen=True)
class AngularCoord:
    """球面角度坐标，构造时把 phi 归一化到 [0, 2π)。"""

    phi: float
    theta: float

    def __post_init__(self) -> None:
        phi = float(self.phi)
        theta = float(self.theta)
        if not (math.isfinite(phi) and math.isfinite(theta)):
            raise ValueError("Angular coordinates must be finite")
        if theta < -HALF_PI or theta > HALF_PI:
            raise ValueError("theta must be within [-pi/2, pi/2]")
        object.__setattr__(self, "phi", normalize_longitude(phi))
        object.__setattr__(self, "theta", theta)


@dataclass(frozen=True)
class Vec3:
    """三维向量。"""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        for value in (self.x, self.y, self.z):
            if not math.isfinite(value):
                raise ValueError("Vec3 components must be finite")

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    @classmethod
    def from_array(cls, values: np.ndarray) -> "Vec3":
        return cls(float(values[0]), float(values[1]), float(values[2]))


@dataclass(frozen=True)
class FacePixel:
    """立方体面上的连续像素坐标，size 为面边长 r。"""

    face: FaceId
    u: float
    v: float
    size: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "face", FaceId(self.face))
        if self.size <= 0:
            raise ValueError("Face size must be positive")
        if not (0.0 <= self.u <= self.size and 0.0 <= self.v <= self.size):
            raise ValueError("Face pixel coordinates must lie within [0, r]")


def normalize_longitude(phi: float) -> float:
    """把任意经度归约到 [0, 2π)。"""
    reduced = math.fmod(phi, TWO_PI)
    if reduced < 0.0:
        reduced += TWO_PI
    # 极小负数加 2π 后可能舍入为 2π
    if reduced >= TWO_PI:
        reduced = 0.0
    return reduced


# ------------ 数组接口 ------------


def angular_to_unit_array(phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """
    把经纬度数组映射为单位向量数组，形状 (..., 3)。

    phi 与 theta 按 numpy 规则广播，例如 (1, W) 与 (H, 1) → (H, W, 3)。
    """
    phi = np.asarray(phi, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    phi, theta = np.broadcast_arrays(phi, theta)
    cos_theta = np.cos(theta)
    return np.stack(
        (
            np.sin(phi) * cos_theta,
            np.sin(theta),
            np.cos(phi) * cos_theta,
        ),
        axis=-1,
    )


def unit_to_angular_array(vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    单位向量数组 → (phi, theta)，phi ∈ [0, 2π)，极点处 phi=0。

    调用方负责保证输入已归一化。
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    x = vectors[..., 0]
    y = vectors[..., 1]
    z = vectors[..., 2]
    horizontal = np.hypot(x, z)
    theta = np.arctan2(y, horizontal)
    phi = np.mod(np.arctan2(x, z), TWO_PI)
    phi = np.where(phi >= TWO_PI, 0.0, phi)
    phi = np.where(horizontal == 0.0, 0.0, phi)
    return phi, theta


def face_of_array(vectors: np.ndarray) -> np.ndarray:
    """
    返回每个方向所属面的存储下标（int64）。

    与朝向点积最大的面胜出；点积相同按 FACE_PRIORITY 取第一个。
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    dots = vectors @ _PRIORITY_DIRECTIONS.T
    return _PRIORITY_TO_STORAGE[np.argmax(dots, axis=-1)]


def face_to_sphere_array(
    faces: np.ndarray,
    u: np.ndarray,
    v: np.ndarray,
    size: float,
    radius: float = 1.0,
) -> np.ndarray:
    """
    面像素坐标 → 半径为 radius 的球面点，u/v 可以超出 [0, r]
    （填充时用来延伸面的透视投影）。
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    half = 0.5 * size
    centered = np.stack(
        (u - half, v - half, np.full(np.broadcast(u, v).shape, half)),
        axis=-1,
    )
    rotations = FACE_ROTATION_STACK[np.asarray(faces, dtype=np.int64)]
    rays = np.einsum("...ij,...j->...i", rotations, centered)
    scale = radius / np.linalg.norm(centered, axis=-1)
    return rays * scale[..., None]


def sphere_to_face_array(
    vectors: np.ndarray,
    size: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    非零方向数组 → (face, u, v)，u/v 截断在 [0, r] 内。
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    faces = face_of_array(vectors)
    rotations = FACE_ROTATION_STACK[faces]
    # R 为正交矩阵，逆变换即转置
    local = np.einsum("...ji,...j->...i", rotations, vectors)
    half = 0.5 * size
    scale = half / local[..., 2]
    u = np.clip(local[..., 0] * scale + half, 0.0, size)
    v = np.clip(local[..., 1] * scale + half, 0.0, size)
    return faces, u, v


# ------------ 标量接口 ------------


def angular_to_unit(coord: AngularCoord) -> Vec3:
    """按球面映射公式把角度坐标转为单位向量。"""
    values = angular_to_unit_array(coord.phi, coord.theta)
    return Vec3.from_array(values)


def unit_to_angular(vector: Vec3) -> AngularCoord:
    """
    单位向量 → 角度坐标。

    Raises:
        ValueError: 输入不是单位向量（误差超过 1e-9）
    """
    if abs(vector.norm() - 1.0) > UNIT_TOLERANCE:
        raise ValueError("unit_to_angular expects a unit vector")
    phi, theta = unit_to_angular_array(vector.to_array())
    theta_value = min(max(float(theta), -HALF_PI), HALF_PI)
    return AngularCoord(float(phi), theta_value)


def face_of(vector: Vec3) -> FaceId:
    """
    返回与 vector 角距离最小的面。

    Raises:
        ValueError: 零向量
    """
    if vector.norm() == 0.0:
        raise ValueError("face_of is undefined for the zero vector")
    return FaceId(int(face_of_array(vector.to_array())))


def face_rotation(face: FaceId) -> Mat3:
    """返回面 face 的旋转矩阵 R_f（副本，可自由修改）。"""
    return FACE_ROTATION_STACK[int(FaceId(face))].copy()


def face_point_to_sphere(pixel: FacePixel, radius: float = 1.0) -> Vec3:
    """
    面像素 → 球面点：s · R_f · P_c'，s = radius / |P_c'|。
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    values = face_to_sphere_array(
        int(pixel.face), pixel.u, pixel.v, pixel.size, radius
    )
    return Vec3.from_array(values)


def sphere_to_face_point(vector: Vec3, size: float) -> FacePixel:
    """
    球面方向 → 所属面上的像素坐标（face_point_to_sphere 的逆过程）。

    Raises:
        ValueError: 零向量或非正面边长
    """
    if vector.norm() == 0.0:
        raise ValueError("sphere_to_face_point is undefined for the zero vector")
    if size <= 0:
        raise ValueError("Face size must be positive")
    face, u, v = sphere_to_face_array(vector.to_array(), size)
    return FacePixel(FaceId(int(face)), float(u), float(v), float(size))
