"""Command-line front end.

Exit codes: 0 ok, 1 usage/config error, 2 data or format error,
3 internal invariant violation.  Failures print one ``error: ...`` line
on stderr.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path


from . import diagnostics, flops
from .errors import (
    AllocationError, ConfigError, DataError, FormatError, IoError, RangeError, ShapeError,
)
from .layout import CropLayout, parse_layout
from .selector import compress_image
from .tensor_io import (
    CompressionConfig, config_from_mapping, read_tensor, write_manifest, write_tensor,
)
from .video import compress_video

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file (default: $GC2_CONFIG)")
    p.add_argument("--ratio", type=float, help="retention ratio R in (0, 1]")
    p.add_argument("--tau", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--strategy")
    p.add_argument("--rounding")
    p.add_argument("--scorer")


def _load_config(args) -> CompressionConfig:
    path = args.config or os.environ.get("GC2_CONFIG")
    obj: dict = {}
    if path:
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
    overrides = {
        "retention_ratio": args.ratio, "tau": args.tau, "alpha": args.alpha,
        "strategy": args.strategy, "rounding": args.rounding, "scorer": args.scorer,
    }
    obj = {**obj, **{k: v for k, v in overrides.items() if v is not None}}
    return config_from_mapping(obj)


def _layout_arg(text: str) -> tuple[int, int]:
    try:
        return parse_layout(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_compress_image(args) -> int:
    cfg = _load_config(args)
    a, b = _layout_arg(args.layout)
    thumb = read_tensor(args.thumb)
    if thumb.ndim != 2:
        raise ShapeError(f"thumbnail tensor must be [h, w], got {list(thumb.shape)}")
    if len(args.crops) == 1:
        crops = read_tensor(args.crops[0])
        if crops.ndim == 2:
            crops = crops[None]
        if crops.ndim != 3:
            raise ShapeError(f"crop tensor must be [n, h, w], got {list(crops.shape)}")
        crops = list(crops)
    else:
        crops = [read_tensor(p) for p in args.crops]
    layout = CropLayout(a, b, *thumb.shape)
    result = compress_image(thumb, crops, layout, cfg)
    expected = result.thumbnail.retained.size + int(result.plan.total_target)
    if result.total_retained != expected:
        raise AllocationError("retained count does not match the plan")
    write_manifest(result.to_json(), args.out)
    if args.render_dir:
        out = Path(args.render_dir)
        out.mkdir(parents=True, exist_ok=True)
        diagnostics.render_mask(thumb, result.thumbnail.retained, out / "thumb.pgm")
        for c, grid in zip(result.crops, crops):
            diagnostics.render_mask(grid, c.retained, out / f"crop_{c.view}.pgm")
    return EXIT_OK


def cmd_compress_video(args) -> int:
    cfg = _load_config(args)
    video = read_tensor(args.video)
    if video.ndim != 3:
        raise ShapeError(f"video tensor must be [T, N, D], got {list(video.shape)}")
    sel = compress_video(video, cfg)
    if sel.total_retained != sel.plan.total_target:
        raise AllocationError("retained count does not match the plan")
    write_manifest(sel.to_json(), args.out)
    return EXIT_OK


def cmd_flops(args) -> int:
    for name in ("tokens", "hidden", "ffn", "layers"):
        if getattr(args, name) <= 0:
            raise UsageError(f"--{name} must be positive")
    dims = flops.ModelDims(hidden=args.hidden, ffn=args.ffn, layers=args.layers, tokens=args.tokens)
    print(f"prefill_flops: {flops.prefill_flops(dims):.3e}")
    print(f"decode_flops_per_token: {flops.decode_flops(dims):.3e}")
    if args.ratio is not None:
        if not 0.0 < args.ratio <= 1.0:
            raise UsageError("--ratio must be in (0, 1]")
        kept = flops.prefill_flops(dims, tokens=args.ratio * args.tokens)
        print(f"prefill_flops_retained: {kept:.3e}")
        print(f"reduction_ratio: {flops.reduction_ratio(dims, args.ratio):.3f}")
    return EXIT_OK


def _synth_spec(args) -> diagnostics.SynthSpec:
    if args.spec:
        try:
            text = Path(args.spec).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read {args.spec}: {exc}") from exc
        return diagnostics.SynthSpec.from_json(text)
    a, b = _layout_arg(args.layout)
    h, w = _layout_arg(args.grid)
    return diagnostics.SynthSpec(h=h, w=w, a=a, b=b, D=args.dim,
                                 noise_scale=args.noise, seed=args.seed)


def _add_synth_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spec", help="SynthSpec JSON file (overrides the flags below)")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--layout", default="2x2", help="crop grid, e.g. 2x2")
    p.add_argument("--grid", default="8x8", help="patch grid per view, e.g. 8x8")
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--noise", type=float, default=0.05)


def cmd_synth(args) -> int:
    fx = diagnostics.synthesize(_synth_spec(args))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_tensor(fx.thumb_scores, out / "thumb.gct")
    write_tensor(fx.crop_local_scores, out / "crops.gct")
    write_tensor(fx.crop_tokens, out / "crop_tokens.gct")
    return EXIT_OK


def cmd_probe_bias(args) -> int:
    cfg = _load_config(args)
    report = diagnostics.probe_bias(args.kind, diagnostics.synthesize(_synth_spec(args)), cfg)
    print(json.dumps(report.to_json()))
    return EXIT_OK


def cmd_render_mask(args) -> int:
    scores = read_tensor(args.scores)
    if scores.ndim != 2:
        raise ShapeError(f"score tensor must be [h, w], got {list(scores.shape)}")
    try:
        retained = [int(t) for t in args.retained.split(",") if t.strip()]
    except ValueError:
        raise UsageError("--retained must be a comma-separated list of integers") from None
    diagnostics.render_mask(scores, retained, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="g2lcomp", description="Global-to-local visual token compression.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ci = sub.add_parser("compress-image", help="select thumbnail and crop tokens")
    ci.add_argument("--thumb", required=True, help="GCT1 [h, w] thumbnail scores")
    ci.add_argument("--crops", required=True, nargs="+",
                    help="one GCT1 [n, h, w] tensor or n GCT1 [h, w] files")
    ci.add_argument("--layout", required=True, help="crop grid, e.g. 2x2")
    ci.add_argument("--out", required=True)
    ci.add_argument("--render-dir")
    _add_config_flags(ci)
    ci.set_defaults(func=cmd_compress_image)

    cv = sub.add_parser("compress-video", help="frame-wise selection of video tokens")
    cv.add_argument("--video", required=True, help="GCT1 [T, N, D] tensor")
    cv.add_argument("--out", required=True)
    _add_config_flags(cv)
    cv.set_defaults(func=cmd_compress_video)

    fl = sub.add_parser("flops", help="prefill/decode FLOPs and reduction ratio")
    fl.add_argument("--tokens", type=int, required=True)
    fl.add_argument("--hidden", type=int, required=True)
    fl.add_argument("--ffn", type=int, required=True)
    fl.add_argument("--layers", type=int, required=True)
    fl.add_argument("--ratio", type=float)
    fl.set_defaults(func=cmd_flops)

    pb = sub.add_parser("probe-bias", help="crop-order bias of a budget scorer")
    pb.add_argument("--scorer", dest="kind", required=True,
                    choices=("globalcom2", "position_weighted"))
    _add_synth_flags(pb)
    pb.add_argument("--config")
    pb.add_argument("--ratio", type=float)
    pb.add_argument("--tau", type=float)
    pb.add_argument("--alpha", type=float)
    pb.add_argument("--strategy")
    pb.add_argument("--rounding")
    pb.set_defaults(func=cmd_probe_bias, scorer=None)

    sy = sub.add_parser("synth", help="write a synthetic fixture")
    _add_synth_flags(sy)
    sy.add_argument("--out-dir", required=True)
    sy.set_defaults(func=cmd_synth)

    rm = sub.add_parser("render-mask", help="write a retention mask as PGM")
    rm.add_argument("--scores", required=True, help="GCT1 [h, w] grid")
    rm.add_argument("--retained", required=True, help="comma-separated flat indices")
    rm.add_argument("--out", required=True)
    rm.set_defaults(func=cmd_render_mask)
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        code, msg = EXIT_USAGE, str(exc)
    except (FormatError, DataError, ShapeError, RangeError, IoError) as exc:
        code, msg = EXIT_DATA, str(exc)
    except AllocationError as exc:
        code, msg = EXIT_INTERNAL, str(exc)
    except Exception as exc:  # noqa: BLE001
        code, msg = EXIT_INTERNAL, f"{type(exc).__name__}: {exc}"
    print(f"error: {' '.join(msg.split())}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
