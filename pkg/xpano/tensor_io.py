"""
文件格式读写模块
================

    - TensorContainer（.pnf）：魔数 b"PNF1"，u32 小端维数，
      各维 u32 小端，随后为小端 float32 行优先载荷；维数不超过 5
    - DepthPng16：16 位灰度 PNG，深度 = 原始值 × scale，0 表示无效
    - 8 位 RGB PNG ↔ C×H×W 浮点张量（[0, 1]）
    - 立方体面目录：B.png … U.png 加 manifest.txt
"""

from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .metrics import DepthMap
from .sphere_core import FACE_ORDER

try:
    from ..xz3r0_utils import get_logger
except ImportError:
    from xz3r0_utils import get_logger

LOGGER = get_logger(__name__)

PNF_MAGIC = b"PNF1"
MAX_TENSOR_RANK = 5
TENSOR_DTYPE = np.dtype("<f4")
HEADER_DTYPE = np.dtype("<u4")

DEFAULT_DEPTH_SCALE = 1.0 / 4000.0
DEPTH_PNG_MAX = 65535

MANIFEST_NAME = "manifest.txt"
PIXEL_CONVENTION = "center"
FACE_FILE_NAMES = tuple(f"{face.name}.png" for face in FACE_ORDER)

READ_FAILED_MESSAGE = "Failed to read input file"
WRITE_FAILED_MESSAGE = "Failed to write output file"


class ContainerFormatError(ValueError):
    """TensorContainer 内容不合法。"""


# ------------ TensorContainer ------------


def encode_tensor(array: np.ndarray | torch.Tensor) -> bytes:
    """编码为 TensorContainer 字节串。"""
    if torch.is_tensor(array):
        array = array.detach().cpu().numpy()
    array = np.asarray(array)
    if array.ndim > MAX_TENSOR_RANK:
        raise ValueError(f"Tensor rank must be <= {MAX_TENSOR_RANK}")
    header = np.array([array.ndim, *array.shape], dtype=HEADER_DTYPE)
    payload = np.ascontiguousarray(array, dtype=TENSOR_DTYPE)
    return PNF_MAGIC + header.tobytes() + payload.tobytes()


def decode_tensor(data: bytes) -> np.ndarray:
    """
    解码 TensorContainer，返回 float32 数组。

    Raises:
        ContainerFormatError: 魔数、维数或载荷长度不符
    """
    if data[:4] != PNF_MAGIC:
        raise ContainerFormatError("Not a PNF1 tensor container")
    if len(data) < 8:
        raise ContainerFormatError("Truncated tensor container header")
    rank = int(np.frombuffer(data, dtype=HEADER_DTYPE, count=1, offset=4)[0])
    if rank > MAX_TENSOR_RANK:
        raise ContainerFormatError(f"Tensor rank {rank} exceeds {MAX_TENSOR_RANK}")
    header_end = 8 + 4 * rank
    if len(data) < header_end:
        raise ContainerFormatError("Truncated tensor container header")
    dims = tuple(
        int(d) for d in np.frombuffer(data, dtype=HEADER_DTYPE, count=rank, offset=8)
    )
    expected = int(np.prod(dims, dtype=np.int64)) * TENSOR_DTYPE.itemsize
    if len(data) - header_end != expected:
        raise ContainerFormatError(
            f"Payload holds {len(data) - header_end} bytes, expected {expected}"
        )
    payload = np.frombuffer(data, dtype=TENSOR_DTYPE, offset=header_end)
    return payload.reshape(dims).astype(np.float32)


def write_tensor(path: str | Path, array: np.ndarray | torch.Tensor) -> None:
    data = encode_tensor(array)
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise RuntimeError(WRITE_FAILED_MESSAGE) from exc


def read_tensor(path: str | Path) -> np.ndarray:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise RuntimeError(READ_FAILED_MESSAGE) from exc
    return decode_tensor(data)


# ------------ 图像 ------------


def _open_image(path: str | Path) -> Image.Image:
    try:
        with Image.open(path) as image:
            image.load()
            return image.copy()
    except OSError as exc:
        raise RuntimeError(READ_FAILED_MESSAGE) from exc


def _save_image(image: Image.Image, path: str | Path) -> None:
    try:
        image.save(path, format="PNG")
    except OSError as exc:
        raise RuntimeError(WRITE_FAILED_MESSAGE) from exc


def read_rgb_image(path: str | Path) -> torch.Tensor:
    """读取为 3×H×W float64，取值 [0, 1]。"""
    image = _open_image(path).convert("RGB")
    array = np.asarray(image, dtype=np.float64) / 255.0
    return torch.from_numpy(np.ascontiguousarray(array.transpose(2, 0, 1)))


def to_uint8_image(tensor: torch.Tensor) -> np.ndarray:
    """C×H×W（C 为 1 或 3）→ H×W×3 uint8。"""
    if tensor.dim() != 3 or tensor.shape[0] not in (1, 3):
        raise ValueError("Image tensor must be 1xHxW or 3xHxW")
    array = tensor.detach().cpu().double().clamp(0.0, 1.0).numpy()
    if array.shape[0] == 1:
        array = np.repeat(array, 3, axis=0)
    return np.round(array.transpose(1, 2, 0) * 255.0).astype(np.uint8)


def write_rgb_image(path: str | Path, tensor: torch.Tensor) -> None:
    _save_image(Image.fromarray(to_uint8_image(tensor)), path)


# ------------ 深度 ------------


def read_depth_png16(
    path: str | Path, scale: float = DEFAULT_DEPTH_SCALE
) -> DepthMap:
    """16 位（或 8 位）灰度 PNG → DepthMap，原始值 0 视为无效。"""
    image = _open_image(path)
    if image.mode not in ("I;16", "I;16B", "I", "L"):
        raise ValueError(f"Depth PNG must be single-channel, got {image.mode}")
    raw = np.asarray(image).astype(np.float64)
    return DepthMap.from_array(raw, scale)


def write_depth_png16(
    path: str | Path,
    depth: np.ndarray,
    scale: float = DEFAULT_DEPTH_SCALE,
) -> None:
    """
    深度（米）→ 16 位 PNG。无效（非有限或非正）像素写 0，
    超出量程的值截断到 65535。
    """
    depth = np.asarray(depth, dtype=np.float64)
    if depth.ndim != 2:
        raise ValueError("Depth map must be HxW")
    valid = np.isfinite(depth) & (depth > 0)
    raw = np.zeros(depth.shape, dtype=np.float64)
    raw[valid] = np.round(depth[valid] / scale)
    clipped = int((raw > DEPTH_PNG_MAX).sum())
    if clipped:
        LOGGER.warning("Clipped %s depth values to the 16-bit range", clipped)
    raw = np.clip(raw, 0, DEPTH_PNG_MAX).astype(np.uint16)
    _save_image(Image.fromarray(raw), path)


def read_depth_any(
    path: str | Path, scale: float = DEFAULT_DEPTH_SCALE
) -> DepthMap:
    """
    按后缀分派：.png 按 DepthPng16 解码并乘 scale；
    其余按 TensorContainer 读取（H×W 或 1×H×W，单位为米）。
    """
    path = Path(path)
    if path.suffix.lower() == ".png":
        return read_depth_png16(path, scale)
    array = read_tensor(path)
    if array.ndim == 3 and array.shape[0] == 1:
        array = array[0]
    if array.ndim != 2:
        raise ValueError("Depth container must be HxW or 1xHxW")
    return DepthMap.from_array(array)


# ------------ 立方体面目录 ------------


def write_manifest(path: str | Path, entries: dict[str, object]) -> None:
    text = "".join(f"{key}={value}\n" for key, value in entries.items())
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise RuntimeError(WRITE_FAILED_MESSAGE) from exc


def read_manifest(path: str | Path) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise RuntimeError(READ_FAILED_MESSAGE) from exc
    entries: dict[str, str] = {}
    for line in text.splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            entries[key.strip()] = value.strip()
    return entries


def write_faces(
    outdir: str | Path,
    cube: torch.Tensor,
    height: int,
    width: int,
) -> list[Path]:
    """写出 B.png … U.png 与 manifest.txt，返回写出的文件列表。"""
    if cube.dim() != 4 or cube.shape[0] != len(FACE_ORDER):
        raise ValueError("Cube must be 6xCxRxR")
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise RuntimeError(WRITE_FAILED_MESSAGE) from exc

    written: list[Path] = []
    for index, name in enumerate(FACE_FILE_NAMES):
        target = outdir / name
        write_rgb_image(target, cube[index])
        written.append(target)

    manifest = outdir / MANIFEST_NAME
    write_manifest(
        manifest,
        {
            "height": height,
            "width": width,
            "face_size": int(cube.shape[-1]),
            "face_order": ",".join(face.name for face in FACE_ORDER),
            "pixel_convention": PIXEL_CONVENTION,
        },
    )
    written.append(manifest)
    return written


def resolve_face_paths(inputs: list[str | Path]) -> list[Path]:
    """一个目录 → 目录下的六个面文件；否则必须正好给出六个路径。"""
    if len(inputs) == 1 and Path(inputs[0]).is_dir():
        return [Path(inputs[0]) / name for name in FACE_FILE_NAMES]
    if len(inputs) != len(FACE_ORDER):
        raise ValueError("Expected a face directory or six face images")
    return [Path(item) for item in inputs]


def read_faces(inputs: list[str | Path]) -> torch.Tensor:
    """
    读取六个面为 6×3×r×r。

    Raises:
        ValueError: 面不是正方形或尺寸不一致
    """
    faces = [read_rgb_image(path) for path in resolve_face_paths(inputs)]
    size = faces[0].shape[-1]
    for face in faces:
        if face.shape[1] != face.shape[2]:
            raise ValueError("Cube faces must be square")
        if face.shape[-1] != size:
            raise ValueError("Cube faces must share the same size")
    return torch.stack(faces, dim=0)
