import math

import numpy as np
import pytest
import torch

from xpano.resampler import (
    BOUNDARY_CLAMP_FACE,
    BOUNDARY_PADDED_FACE,
    WRAP_CLAMP,
    WRAP_X,
    apply_c2e,
    apply_e2c,
    apply_tangent_grid,
    bilinear_sample,
    build_c2e_grid,
    build_e2c_grid,
    build_tangent_grid,
    c2e_grid_from_array,
    c2e_grid_to_array,
    distortion_aware_conv2d,
    e2c_grid_from_array,
    e2c_grid_to_array,
    erp_pixel_angles,
    horizontal_flip,
    sample_faces,
    tangent_grid_from_array,
    tangent_grid_to_array,
    yaw_degrees_to_columns,
    yaw_roll,
)
from xpano.padding import cube_pad
from xpano.sphere_core import FaceId
from xpano.synthetic import render_cube, render_erp, sh_test_function


def _random_cube(size: int, channels: int = 2, seed: int = 0) -> torch.Tensor:
    generator = torch.Generator().manual_seed(seed)
    return torch.rand(
        (6, channels, size, size), generator=generator, dtype=torch.float64
    )


def _random_erp(height: int, channels: int = 2, seed: int = 0) -> torch.Tensor:
    generator = torch.Generator().manual_seed(seed)
    return torch.rand(
        (channels, height, 2 * height), generator=generator, dtype=torch.float64
    )


# ------------ C2E ------------


def test_c2e_grid_front_pixel_lands_on_face_center():
    grid = build_c2e_grid(128, 256, 64)
    assert grid.face[64, 128] == FaceId.F
    assert abs(float(grid.u[64, 128]) - 32.0) < 1.0
    assert abs(float(grid.v[64, 128]) - 32.0) < 1.0


def test_c2e_grid_top_row_is_up_face():
    grid = build_c2e_grid(64, 128, 32)
    assert np.all(grid.face[0] == FaceId.U)
    assert np.all(grid.face[-1] == FaceId.D)


def test_c2e_grid_face_counts_are_symmetric():
    grid = build_c2e_grid(64, 128, 32)
    counts = np.bincount(grid.face.ravel(), minlength=6)
    assert counts.sum() == 64 * 128
    side = {counts[FaceId.F], counts[FaceId.B], counts[FaceId.L], counts[FaceId.R]}
    assert len(side) == 1
    assert counts[FaceId.U] == counts[FaceId.D]


def test_c2e_grid_is_cached_and_read_only():
    first = build_c2e_grid(32, 64, 16)
    assert build_c2e_grid(32, 64, 16) is first
    assert not first.u.flags.writeable
    assert first.u.dtype == np.float32
    assert first.u.min() >= 0.0 and first.u.max() <= 16.0


@pytest.mark.parametrize(
    ("height", "width", "face_size"),
    [(64, 100, 32), (64, 128, 1), (0, 0, 8)],
)
def test_c2e_grid_rejects_bad_dims(height, width, face_size):
    with pytest.raises(ValueError):
        build_c2e_grid(height, width, face_size)


@pytest.mark.parametrize("height", [2, 4, 32, 64])
def test_c2e_grid_builds_for_any_panorama_size(height):
    face_size = max(2, height // 2)
    grid = build_c2e_grid(height, 2 * height, face_size)
    assert grid.face.shape == (height, 2 * height)
    assert set(np.unique(grid.face)) <= set(range(6))
    assert float(grid.u.min()) >= 0.0 and float(grid.u.max()) <= face_size
    assert float(grid.v.min()) >= 0.0 and float(grid.v.max()) <= face_size


def test_render_erp_shape():
    erp = render_erp(sh_test_function, 8, 16)
    assert erp.shape == (1, 8, 16)
    assert bool(torch.isfinite(erp).all())


@pytest.mark.parametrize(
    ("boundary", "pad"), [(BOUNDARY_PADDED_FACE, 1), (BOUNDARY_CLAMP_FACE, 0)]
)
def test_c2e_matches_direct_face_sampling(boundary, pad):
    size = 16
    grid = build_c2e_grid(32, 64, size)
    cube = _random_cube(size, channels=3, seed=4)
    cols, rows = grid.sample_coords()
    faces = cube_pad(cube, pad) if pad else cube
    direct = sample_faces(
        faces,
        torch.tensor(grid.face),
        torch.from_numpy(cols),
        torch.from_numpy(rows),
        pad,
    )
    first = apply_c2e(cube, grid, boundary)
    second = apply_c2e(cube, grid, boundary)
    assert torch.equal(first, direct)
    assert torch.equal(first, second)


def test_c2e_keeps_float32_features():
    cube = _random_cube(16).to(torch.float32)
    erp = apply_c2e(cube, build_c2e_grid(32, 64, 16))
    assert erp.dtype == torch.float32
    assert erp.shape == (2, 32, 64)


@pytest.mark.parametrize("boundary", [BOUNDARY_CLAMP_FACE, BOUNDARY_PADDED_FACE])
def test_c2e_preserves_constants(boundary):
    cube = torch.full((6, 3, 16, 16), 0.7, dtype=torch.float64)
    erp = apply_c2e(cube, build_c2e_grid(32, 64, 16), boundary)
    assert erp.shape == (3, 32, 64)
    assert torch.all(erp == 0.7)


def test_c2e_clamp_reproduces_face_partition():
    cube = torch.arange(1, 7, dtype=torch.float64).reshape(6, 1, 1, 1)
    cube = cube.expand(6, 1, 16, 16).contiguous()
    grid = build_c2e_grid(32, 64, 16)
    erp = apply_c2e(cube, grid, BOUNDARY_CLAMP_FACE)
    np.testing.assert_array_equal(erp[0].numpy(), grid.face + 1.0)


def test_c2e_boundaries_differ_only_where_footprint_crosses_seam():
    size = 16
    grid = build_c2e_grid(32, 64, size)
    cube = _random_cube(size)
    clamp = apply_c2e(cube, grid, BOUNDARY_CLAMP_FACE)
    padded = apply_c2e(cube, grid, BOUNDARY_PADDED_FACE)

    cols, rows = grid.sample_coords()
    crosses = (cols < 0) | (cols > size - 1) | (rows < 0) | (rows > size - 1)
    differ = (clamp != padded).any(dim=0).numpy()
    assert differ.any()
    assert not (differ & ~crosses).any()


def test_c2e_smooth_signal_fidelity():
    size, height = 128, 256
    cube = render_cube(sh_test_function, size)
    oracle = render_erp(sh_test_function, height, 2 * height)
    value_range = float(oracle.max() - oracle.min())
    erp = apply_c2e(cube, build_c2e_grid(height, 2 * height, size))
    assert float((erp - oracle).abs().mean()) < 0.01 * value_range


def test_c2e_clamp_seams_are_worse_than_interior():
    size, height = 64, 128
    grid = build_c2e_grid(height, 2 * height, size)
    cube = render_cube(sh_test_function, size)
    oracle = render_erp(sh_test_function, height, 2 * height)
    clamp = apply_c2e(cube, grid, BOUNDARY_CLAMP_FACE)
    padded = apply_c2e(cube, grid, BOUNDARY_PADDED_FACE)

    seam = (clamp != padded).any(dim=0)
    error = (clamp - oracle).abs()[0]
    assert float(error[seam].mean()) >= 2.0 * float(error[~seam].mean())


def test_c2e_is_linear():
    grid = build_c2e_grid(32, 64, 16)
    first = _random_cube(16, seed=1)
    second = _random_cube(16, seed=2)
    combined = apply_c2e(2.5 * first - 0.75 * second, grid)
    separate = 2.5 * apply_c2e(first, grid) - 0.75 * apply_c2e(second, grid)
    assert torch.allclose(combined, separate, atol=1e-9)


def test_c2e_rejects_mismatched_cube():
    grid = build_c2e_grid(32, 64, 16)
    with pytest.raises(ValueError):
        apply_c2e(_random_cube(8), grid)
    with pytest.raises(ValueError):
        apply_c2e(_random_cube(16), grid, "nearest")
    cube = _random_cube(16)
    cube[0, 0, 0, 0] = float("nan")
    with pytest.raises(ValueError):
        apply_c2e(cube, grid)


# ------------ E2C ------------


def test_e2c_grid_front_center():
    grid = build_e2c_grid(64, 128, 256)
    assert abs(float(grid.x[FaceId.F, 32, 32]) - 127.5) < 1.0
    assert abs(float(grid.y[FaceId.F, 32, 32]) - 63.5) < 1.0
    assert float(grid.y[FaceId.U, 32, 32]) < 2.0
    assert float(grid.y[FaceId.D, 32, 32]) > 125.0


def test_e2c_grid_coordinates_in_range():
    grid = build_e2c_grid(16, 32, 64)
    assert grid.x.min() >= 0 and grid.x.max() < 64
    assert grid.y.min() >= 0 and grid.y.max() <= 31


def test_e2c_preserves_constants():
    erp = torch.full((3, 32, 64), 0.7, dtype=torch.float64)
    cube = apply_e2c(erp, build_e2c_grid(16, 32, 64))
    assert cube.shape == (6, 3, 16, 16)
    assert torch.all(cube == 0.7)


def test_e2c_cosine_latitude_vanishes_at_up_face():
    height = 128
    _, theta = erp_pixel_angles(height, 2 * height)
    field = np.broadcast_to(np.cos(theta)[:, None], (height, 2 * height))
    erp = torch.from_numpy(np.ascontiguousarray(field))[None]
    cube = apply_e2c(erp, build_e2c_grid(64, height, 2 * height))
    assert float(cube[FaceId.U, 0, 32, 32]) < 0.05
    assert float(cube[FaceId.F, 0, 32, 32]) > 0.99


def test_e2c_smooth_signal_fidelity():
    size, height = 128, 256
    erp = render_erp(sh_test_function, height, 2 * height)
    oracle = render_cube(sh_test_function, size)
    value_range = float(oracle.max() - oracle.min())
    cube = apply_e2c(erp, build_e2c_grid(size, height, 2 * height))
    assert float((cube - oracle).abs().mean()) < 0.01 * value_range


def test_e2c_is_linear():
    grid = build_e2c_grid(16, 32, 64)
    first = _random_erp(32, seed=3)
    second = _random_erp(32, seed=4)
    combined = apply_e2c(first + 3.0 * second, grid)
    separate = apply_e2c(first, grid) + 3.0 * apply_e2c(second, grid)
    assert torch.allclose(combined, separate, atol=1e-9)


def test_e2c_rejects_mismatched_erp():
    with pytest.raises(ValueError):
        apply_e2c(_random_erp(16), build_e2c_grid(16, 32, 64))


def test_constant_round_trip_is_exact():
    erp = torch.full((2, 32, 64), -1.25, dtype=torch.float64)
    cube = apply_e2c(erp, build_e2c_grid(16, 32, 64))
    back = apply_c2e(cube, build_c2e_grid(32, 64, 16))
    assert torch.equal(back, erp)


# ------------ 双线性采样 ------------


def test_bilinear_sample_examples():
    image = torch.tensor([[[1.0, 2.0, 3.0, 4.0], [5.0, 6.0, 7.0, 8.0]]])
    assert float(bilinear_sample(image, 2.0, 1.0)[0]) == 7.0
    assert float(bilinear_sample(image, 0.5, 0.5)[0]) == pytest.approx(3.5)
    assert float(bilinear_sample(image, 3.5, 0.0, WRAP_X)[0]) == 2.5
    assert float(bilinear_sample(image, 3.5, 0.0, WRAP_CLAMP)[0]) == 4.0
    assert float(bilinear_sample(image, -3.0, -2.0)[0]) == 1.0
    assert float(bilinear_sample(image, -0.5, 0.0, WRAP_X)[0]) == 2.5


def test_bilinear_sample_rejects_bad_input():
    image = torch.ones((1, 2, 4))
    with pytest.raises(ValueError):
        bilinear_sample(image, float("nan"), 0.0)
    with pytest.raises(ValueError):
        bilinear_sample(image, 0.0, 0.0, "mirror")


# ------------ 切平面网格 ------------


def test_tangent_grid_equator_matches_regular_grid():
    grid = build_tangent_grid(256, 512, 3)
    steps = np.arange(-1.0, 2.0)
    expected_dx = np.broadcast_to(steps[None, :], (3, 3))
    expected_dy = np.broadcast_to(steps[:, None], (3, 3))
    for row in (127, 128):
        assert np.max(np.abs(grid.dx[row] - expected_dx)) < 1e-3
        assert np.max(np.abs(grid.dy[row] - expected_dy)) < 1e-3


def test_tangent_grid_widens_toward_poles():
    grid = build_tangent_grid(256, 512, 3)
    polar = float(grid.dx[2].max() - grid.dx[2].min())
    equatorial = float(grid.dx[128].max() - grid.dx[128].min())
    assert polar >= 2.0 * equatorial


def test_tangent_grid_is_longitude_invariant():
    grid = build_tangent_grid(32, 64, 5)
    x0, y0 = grid.locations(7, 3)
    x1, y1 = grid.locations(7, 3 + 20)
    np.testing.assert_allclose(x1 - x0, np.full((5, 5), 20.0), atol=1e-12)
    np.testing.assert_array_equal(y1, y0)


@pytest.mark.parametrize("kernel", [1, 2, 4])
def test_tangent_grid_rejects_bad_kernel(kernel):
    with pytest.raises(ValueError):
        build_tangent_grid(32, 64, kernel)


def test_apply_tangent_grid_shape():
    erp = _random_erp(16, channels=3)
    samples = apply_tangent_grid(erp, build_tangent_grid(16, 32, 3))
    assert samples.shape == (3, 9, 16, 32)


def test_distortion_aware_conv_center_tap_is_identity():
    erp = _random_erp(32, channels=2)
    grid = build_tangent_grid(32, 64, 3)
    weight = torch.zeros((2, 2, 3, 3), dtype=torch.float64)
    weight[0, 0, 1, 1] = 1.0
    weight[1, 1, 1, 1] = 1.0
    bias = torch.tensor([0.5, -0.5], dtype=torch.float64)
    output = distortion_aware_conv2d(erp, grid, weight, bias)
    expected = erp + bias.reshape(-1, 1, 1)
    assert torch.allclose(output, expected, atol=1e-9)


def test_distortion_aware_conv_rejects_shape_mismatch():
    grid = build_tangent_grid(16, 32, 3)
    with pytest.raises(ValueError):
        distortion_aware_conv2d(
            _random_erp(16, channels=2), grid, torch.zeros((1, 3, 3, 3))
        )
    with pytest.raises(ValueError):
        distortion_aware_conv2d(
            _random_erp(16, channels=2), grid, torch.zeros((1, 2, 5, 5))
        )


# ------------ 旋转与翻转 ------------


def test_yaw_roll_wraps_columns():
    erp = _random_erp(8)
    assert torch.equal(yaw_roll(erp, 0), erp)
    assert torch.equal(yaw_roll(erp, 16), erp)
    assert torch.equal(yaw_roll(yaw_roll(erp, 5), -5), erp)
    assert torch.equal(yaw_roll(erp, 3)[..., 3], erp[..., 0])


def test_horizontal_flip_is_involution():
    erp = _random_erp(8)
    assert torch.equal(horizontal_flip(horizontal_flip(erp)), erp)


@pytest.mark.parametrize(
    ("degrees", "expected"),
    [(0.0, 0), (90.0, 64), (-90.0, 192), (360.0, 0), (1.0, 1)],
)
def test_yaw_degrees_to_columns(degrees, expected):
    assert yaw_degrees_to_columns(degrees, 256) == expected


# ------------ 网格导出 ------------


def test_c2e_grid_export_round_trip_is_bit_exact():
    grid = build_c2e_grid(32, 64, 16)
    array = c2e_grid_to_array(grid)
    assert array.shape == (3, 32, 64)
    assert array.dtype == np.float32
    restored = c2e_grid_from_array(array, 16)
    cube = _random_cube(16)
    assert torch.equal(apply_c2e(cube, restored), apply_c2e(cube, grid))


def test_e2c_grid_export_round_trip_is_bit_exact():
    grid = build_e2c_grid(16, 32, 64)
    array = e2c_grid_to_array(grid)
    assert array.shape == (6, 2, 16, 16)
    restored = e2c_grid_from_array(array, 32, 64)
    erp = _random_erp(32)
    assert torch.equal(apply_e2c(erp, restored), apply_e2c(erp, grid))


def test_tangent_grid_export_round_trip():
    grid = build_tangent_grid(16, 32, 3)
    array = tangent_grid_to_array(grid)
    assert array.shape == (9, 2, 16, 32)
    restored = tangent_grid_from_array(array)
    np.testing.assert_array_equal(restored.dx, grid.dx)
    np.testing.assert_array_equal(restored.dy, grid.dy)


def test_grid_import_rejects_bad_arrays():
    with pytest.raises(ValueError):
        c2e_grid_from_array(np.zeros((2, 32, 64), dtype=np.float32), 16)
    bad_faces = np.zeros((3, 32, 64), dtype=np.float32)
    bad_faces[0, 0, 0] = 7.0
    with pytest.raises(ValueError):
        c2e_grid_from_array(bad_faces, 16)
    with pytest.raises(ValueError):
        e2c_grid_from_array(np.zeros((6, 2, 16, 16), dtype=np.float32), 32, 60)
    with pytest.raises(ValueError):
        tangent_grid_from_array(np.zeros((8, 2, 16, 32), dtype=np.float32))


def test_erp_pixels_are_square_in_angle():
    # 经度步长与纬度步长一致
    phi, theta = erp_pixel_angles(16, 32)
    assert phi[1] - phi[0] == pytest.approx(math.pi / 16)
    assert theta[0] - theta[1] == pytest.approx(math.pi / 16)
