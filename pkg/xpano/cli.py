"""
xpano 命令行入口
================

子命令：
    e2c        ERP 图像 → 六个立方体面 + manifest
    c2e        六个立方体面 → ERP 图像
    eval       深度评估（可选与参考预测比较）
    pad        对张量容器做 circular / cube / spherical 填充
    fuse-demo  单级跳连融合演示，报告参数量与输出校验和
    lut        导出采样网格

输出先是可读文本，随后一行 `---`，再是 key=value 行。
退出码：成功 0，运行错误 1，参数错误 2（argparse）。
"""

import argparse
import hashlib
import sys
import time

import numpy as np
import torch

from . import fusion, metrics, padding, resampler, synthetic, tensor_io

try:
    from ..xz3r0_utils import configure_logging, get_logger
except ImportError:
    from xz3r0_utils import configure_logging, get_logger

LOGGER = get_logger(__name__)

PROG = "xpano"
DEFAULT_ERP_HEIGHT = 256
DEFAULT_TANGENT_KERNEL = 3
DEFAULT_DEMO_CHANNELS = 16
DEFAULT_DEMO_HEIGHT = 64
DEFAULT_DEMO_SEED = 0
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

BOUNDARY_FLAGS = {
    "clamp": resampler.BOUNDARY_CLAMP_FACE,
    "padded": resampler.BOUNDARY_PADDED_FACE,
}
LUT_TYPES = ("c2e", "e2c", "tangent")


def _format_value(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.6f}"
    if isinstance(value, (list, tuple)):
        return ",".join(str(item) for item in value)
    return str(value)


def emit_report(lines: list[str], values: dict[str, object]) -> None:
    """打印文本报告、分隔行与 key=value 行。"""
    for line in lines:
        print(line)
    print("---")
    for key, value in values.items():
        print(f"{key}={_format_value(value)}")


def _elapsed_ms(start: float) -> float:
    return (time.perf_counter() - start) * 1000.0


# ------------ 子命令 ------------


def cmd_e2c(args: argparse.Namespace) -> int:
    erp = tensor_io.read_rgb_image(args.input)
    _, height, width = erp.shape
    resampler.validate_erp_dims(height, width)
    face_size = args.face_size or height // 2

    grid = resampler.build_e2c_grid(face_size, height, width)
    cube = resampler.apply_e2c(erp, grid)
    written = tensor_io.write_faces(args.outdir, cube, height, width)
    LOGGER.info("Wrote %s cube faces", len(written) - 1)

    emit_report(
        [
            f"E2C {height}x{width} -> 6 faces of {face_size}x{face_size}",
            *(f"  {path.name}" for path in written),
        ],
        {
            "height": height,
            "width": width,
            "face_size": face_size,
            "faces": len(written) - 1,
        },
    )
    return 0


def cmd_c2e(args: argparse.Namespace) -> int:
    cube = tensor_io.read_faces(args.inputs)
    face_size = int(cube.shape[-1])
    height = args.height or 2 * face_size
    width = 2 * height
    boundary = BOUNDARY_FLAGS[args.boundary]

    grid = resampler.build_c2e_grid(height, width, face_size)
    start = time.perf_counter()
    erp = resampler.apply_c2e(cube, grid, boundary)
    elapsed = _elapsed_ms(start)
    tensor_io.write_rgb_image(args.output, erp)
    LOGGER.info("Wrote equirectangular image %sx%s", height, width)

    emit_report(
        [
            f"C2E 6 faces of {face_size}x{face_size} -> {height}x{width}",
            f"boundary: {boundary}",
        ],
        {
            "height": height,
            "width": width,
            "face_size": face_size,
            "boundary": args.boundary,
            "time_ms": elapsed,
        },
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    pred = tensor_io.read_depth_any(args.pred, args.scale)
    gt = tensor_io.read_depth_any(args.gt, args.scale)
    result = metrics.compute_metrics(
        pred, gt, args.min_depth, args.max_depth, args.crop
    )
    rows = gt.height - 2 * args.crop

    lines = [
        f"Depth evaluation over {result.valid_pixel_count} pixels "
        f"({rows} rows, crop {args.crop})",
        f"  MAE      {result.mae:.4f}",
        f"  AbsRel   {result.abs_rel:.4f}",
        f"  RMSE     {result.rmse:.4f}",
        f"  RMSElog  {result.rmse_log(args.log_base):.4f} (log base {args.log_base})",
        f"  d1/d2/d3 {result.d1:.4f} / {result.d2:.4f} / {result.d3:.4f}",
    ]
    values: dict[str, object] = {
        "mae": result.mae,
        "abs_rel": result.abs_rel,
        "rmse": result.rmse,
        "rmse_log": result.rmse_log(args.log_base),
        "rmse_log10": result.rmse_log10,
        "rmse_log_e": result.rmse_log_e,
        "d1": result.d1,
        "d2": result.d2,
        "d3": result.d3,
        "valid_pixels": result.valid_pixel_count,
        "rows_evaluated": rows,
        "nonpositive_pred": result.nonpositive_pred_count,
        "log_pixels": result.log_pixel_count,
    }

    if args.reference:
        reference = tensor_io.read_depth_any(args.reference, args.scale)
        baseline = metrics.compute_metrics(
            reference, gt, args.min_depth, args.max_depth, args.crop
        )
        improvement = metrics.relative_improvement(baseline, result)
        lines.append("Improvement over reference (% / percentage points):")
        for name, change in improvement.items():
            lines.append(f"  {name:<10} {change:+.2f}")
            values[f"improve_{name}"] = change

    emit_report(lines, values)
    return 0


def _synthetic_cube(face_size: int) -> torch.Tensor:
    return synthetic.render_cube(synthetic.sh_test_function, face_size)


def cmd_pad(args: argparse.Namespace) -> int:
    if args.synthetic is not None:
        if args.mode not in padding.CUBE_PAD_MODES:
            raise ValueError("--synthetic requires cube or spherical mode")
        tensor = _synthetic_cube(args.synthetic)
    elif args.input:
        tensor = torch.from_numpy(
            tensor_io.read_tensor(args.input).astype(np.float64)
        )
    else:
        raise ValueError("Provide an input tensor or --synthetic R")

    start = time.perf_counter()
    padded = padding.pad_any(tensor, args.pad, args.mode)
    elapsed = _elapsed_ms(start)

    values: dict[str, object] = {
        "mode": args.mode,
        "pad": args.pad,
        "dims": list(padded.shape),
        "time_ms": elapsed,
    }
    if args.synthetic is not None:
        oracle = synthetic.render_padded_cube(
            synthetic.sh_test_function, args.synthetic, args.pad
        )
        mask = torch.from_numpy(synthetic.border_mask(args.synthetic, args.pad))
        error = (padded - oracle).abs()[:, :, mask]
        values["border_mae"] = float(error.mean())

    if args.output:
        tensor_io.write_tensor(args.output, padded)
        LOGGER.info("Wrote padded tensor %s", list(padded.shape))

    emit_report(
        [f"{args.mode} padding p={args.pad}: {list(tensor.shape)} -> "
         f"{list(padded.shape)}"],
        values,
    )
    return 0


def _checksum(tensor: torch.Tensor) -> str:
    data = np.ascontiguousarray(tensor.detach().cpu().numpy(), dtype="<f8")
    return hashlib.sha256(data.tobytes()).hexdigest()


def cmd_fuse_demo(args: argparse.Namespace) -> int:
    channels = args.channels
    height = args.height
    if channels % fusion.CEE_CHANNEL_MULTIPLE != 0:
        raise ValueError(
            f"--channels must be divisible by {fusion.CEE_CHANNEL_MULTIPLE}"
        )
    variant = fusion.FusionVariant(args.module)
    erp, cube = fusion.make_fusion_demo_inputs(channels, height, args.seed)
    params = fusion.init_fusion_params(variant, channels, args.seed)
    grid = resampler.build_c2e_grid(height, 2 * height, height // 2)

    output, gate = fusion.unifuse_skip_demo_with_gate(
        erp, cube, grid, variant, params
    )

    weights, biases = fusion.param_count(params)
    values: dict[str, object] = {
        "module": variant.value,
        "channels": channels,
        "height": height,
        "seed": args.seed,
        "checksum": _checksum(output),
        "weights": weights,
        "biases": biases,
        "total_params": weights + biases,
        "out_min": float(output.min()),
        "out_max": float(output.max()),
        "out_mean": float(output.mean()),
    }
    if gate is not None:
        values["se_gate_min"] = float(gate.min())
        values["se_gate_max"] = float(gate.max())

    lines = [f"Fusion demo: {variant.value}, C={channels}, {height}x{2 * height}"]
    if args.report:
        lines.extend(
            [
                f"  ERP feature   {list(erp.shape)}",
                f"  cube feature  {list(cube.shape)}",
                f"  output        {list(output.shape)}",
                f"  parameters    {weights} weights + {biases} biases",
            ]
        )
        for name, layer in params.layers.items():
            lines.append(f"  layer {name:<12} {list(layer.weight.shape)}")
        if params.se is not None:
            lines.append(
                f"  SE block      {params.se.channels} -> {params.se.hidden} "
                f"-> {params.se.channels}"
            )
    emit_report(lines, values)
    return 0


def cmd_lut(args: argparse.Namespace) -> int:
    height = args.height
    width = 2 * height
    face_size = args.face_size or height // 2

    if args.type == "c2e":
        array = resampler.c2e_grid_to_array(
            resampler.build_c2e_grid(height, width, face_size)
        )
    elif args.type == "e2c":
        array = resampler.e2c_grid_to_array(
            resampler.build_e2c_grid(face_size, height, width)
        )
    else:
        array = resampler.tangent_grid_to_array(
            resampler.build_tangent_grid(height, width, args.kernel)
        )
    tensor_io.write_tensor(args.output, array)
    LOGGER.info("Wrote %s lookup table %s", args.type, list(array.shape))

    emit_report(
        [f"{args.type} lookup table {list(array.shape)}"],
        {"type": args.type, "dims": list(array.shape)},
    )
    return 0


# ------------ 解析器 ------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Spherical panorama projection, padding, fusion and "
        "depth evaluation tools",
    )
    parser.add_argument(
        "--log-level",
        choices=LOG_LEVELS,
        default=None,
        help="Override the global log level",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    e2c = commands.add_parser("e2c", help="Equirectangular image to cube faces")
    e2c.add_argument("input", help="Equirectangular RGB image (W = 2H)")
    e2c.add_argument("outdir", help="Output directory for B.png ... U.png")
    e2c.add_argument("--face-size", type=int, default=None, help="Face side r (default H/2)")
    e2c.set_defaults(handler=cmd_e2c)

    c2e = commands.add_parser("c2e", help="Cube faces to equirectangular image")
    c2e.add_argument("inputs", nargs="+", help="Face directory or six face images")
    c2e.add_argument("-o", "--output", required=True, help="Output PNG")
    c2e.add_argument("--height", type=int, default=None, help="ERP height (default 2r)")
    c2e.add_argument(
        "--boundary",
        choices=tuple(BOUNDARY_FLAGS),
        default="padded",
        help="Seam handling at face borders",
    )
    c2e.set_defaults(handler=cmd_c2e)

    evaluate = commands.add_parser("eval", help="Depth evaluation metrics")
    evaluate.add_argument("pred", help="Predicted depth (.png or tensor container)")
    evaluate.add_argument("gt", help="Ground-truth depth (.png or tensor container)")
    evaluate.add_argument("--min-depth", type=float, default=metrics.DEFAULT_MIN_DEPTH)
    evaluate.add_argument("--max-depth", type=float, default=metrics.DEFAULT_MAX_DEPTH)
    evaluate.add_argument("--crop", type=int, default=metrics.DEFAULT_CROP)
    evaluate.add_argument(
        "--log-base", choices=metrics.LOG_BASES, default=metrics.LOG_BASE_10
    )
    evaluate.add_argument(
        "--scale",
        type=float,
        default=tensor_io.DEFAULT_DEPTH_SCALE,
        help="Meters per raw unit for 16-bit PNG inputs",
    )
    evaluate.add_argument(
        "--reference", default=None, help="Reference prediction to compare against"
    )
    evaluate.set_defaults(handler=cmd_eval)

    pad = commands.add_parser("pad", help="Pad an ERP or cube tensor")
    pad.add_argument("input", nargs="?", default=None, help="Input tensor container")
    pad.add_argument("-o", "--output", default=None, help="Output tensor container")
    pad.add_argument("--mode", choices=padding.PAD_MODES, default=padding.MODE_CIRCULAR)
    pad.add_argument("--pad", type=int, default=1)
    pad.add_argument(
        "--synthetic",
        type=int,
        default=None,
        metavar="R",
        help="Pad a spherical-harmonic cubemap of side R and report border MAE",
    )
    pad.set_defaults(handler=cmd_pad)

    demo = commands.add_parser("fuse-demo", help="Single-stage fusion demo")
    demo.add_argument(
        "--module",
        choices=tuple(variant.value for variant in fusion.FusionVariant),
        default=fusion.FusionVariant.CEE.value,
    )
    demo.add_argument("--channels", type=int, default=DEFAULT_DEMO_CHANNELS)
    demo.add_argument("--height", type=int, default=DEFAULT_DEMO_HEIGHT)
    demo.add_argument("--seed", type=int, default=DEFAULT_DEMO_SEED)
    demo.add_argument("--report", action="store_true", help="Print layer details")
    demo.set_defaults(handler=cmd_fuse_demo)

    lut = commands.add_parser("lut", help="Export a sampling grid")
    lut.add_argument("--type", choices=LUT_TYPES, required=True)
    lut.add_argument("--height", type=int, default=DEFAULT_ERP_HEIGHT)
    lut.add_argument("--face-size", type=int, default=None)
    lut.add_argument("--kernel", type=int, default=DEFAULT_TANGENT_KERNEL)
    lut.add_argument("-o", "--output", required=True)
    lut.set_defaults(handler=cmd_lut)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(force=True, level=args.log_level)
    try:
        return args.handler(args)
    except (ValueError, RuntimeError, OSError) as exc:
        LOGGER.error("%s failed: %s", args.command, exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1

