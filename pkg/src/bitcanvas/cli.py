"""Command-line entry point (`bcv`).

Subcommands cover the whole pipeline: profile inspection, bitstream-to-image
encoding (with a machine-parsable timing line on stderr), synthetic profile
and dataset generation, dataset building, and prediction evaluation.
Exit codes: 0 ok, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import dataset as ds
from .device import (
    BUILTIN_PROFILES,
    resolve_profile,
    save_profile,
    synthetic_profile,
    total_fdri_frames,
)
from .errors import BitcanvasError
from .frames import ContainerFormat, parse_container
from .image import PixelOrder, compression_ratio, encode_image, image_dims, write_image
from .metrics import evaluate


def _order(value: str) -> PixelOrder:
    try:
        return PixelOrder(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown pixel order {value!r}") from None


def _fmt(value: str) -> ContainerFormat:
    try:
        return ContainerFormat(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown container format {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bcv", description="FPGA bitstream image-coding toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_profile = sub.add_parser("profile", help="validate or describe a device profile")
    profile_sub = p_profile.add_subparsers(dest="profile_command", required=True)
    for name in ("validate", "show"):
        p = profile_sub.add_parser(name)
        p.add_argument("path", help=f"profile JSON path or builtin name {BUILTIN_PROFILES}")

    p_encode = sub.add_parser("encode", help="bitstream -> PNG image")
    p_encode.add_argument("--profile", required=True)
    p_encode.add_argument("--in", dest="input", required=True)
    p_encode.add_argument("--out", required=True)
    p_encode.add_argument("--order", type=_order, default=PixelOrder.CHW)
    p_encode.add_argument("--format", type=_fmt, default=ContainerFormat.SYNTH)

    p_synth = sub.add_parser("synth", help="generate synthetic profiles or datasets")
    synth_sub = p_synth.add_subparsers(dest="synth_command", required=True)

    p_sp = synth_sub.add_parser("profile")
    p_sp.add_argument("--family", required=True,
                      help="family profile path or builtin name (zynq7000-family, ultrascale-family)")
    p_sp.add_argument("--rows", type=int, required=True)
    p_sp.add_argument("--clb-cols", type=int, required=True)
    p_sp.add_argument("--non-clb", type=int, default=0)
    p_sp.add_argument("--seed", type=int, default=0)
    p_sp.add_argument("--out", required=True)

    p_sd = synth_sub.add_parser("dataset")
    p_sd.add_argument("--profile", required=True)
    p_sd.add_argument("--out", required=True)
    p_sd.add_argument("--count", type=int, required=True)
    p_sd.add_argument("--seed", type=int, default=0)
    p_sd.add_argument("--classes", default="aes,md5,rc4,sha256",
                      help="comma-separated class labels")
    p_sd.add_argument("--blocks", default="1:3", help="min:max function blocks per image")
    p_sd.add_argument("--noise", type=float, default=0.01,
                      help="background nonzero-byte probability")
    p_sd.add_argument("--ratio", type=float, default=0.8)
    p_sd.add_argument("--format", type=_fmt, default=ContainerFormat.SYNTH)

    p_build = sub.add_parser("dataset", help="build images/labels/splits from a manifest")
    build_sub = p_build.add_subparsers(dest="dataset_command", required=True)
    p_db = build_sub.add_parser("build")
    p_db.add_argument("--manifest", required=True)
    p_db.add_argument("--out", required=True)
    p_db.add_argument("--order", type=_order, default=PixelOrder.CHW)
    p_db.add_argument("--jobs", type=int, default=1)

    p_eval = sub.add_parser("eval", help="score predictions against ground truth")
    p_eval.add_argument("--pred", required=True)
    p_eval.add_argument("--gt", required=True, help="directory of JSON annotation files")
    p_eval.add_argument("--classes", required=True, help="classes.txt path")
    p_eval.add_argument("--iou", default="0.5,0.75", help="comma-separated IoU thresholds")
    p_eval.add_argument("--json", dest="json_out", default=None)

    return parser


def _cmd_profile(args) -> int:
    profile = resolve_profile(args.path)
    frames = total_fdri_frames(profile)
    if args.profile_command == "validate":
        print(f"OK {profile.name}: frames={frames} clbs={profile.total_clbs()} "
              f"grid={profile.grid_rows}x{profile.grid_cols}")
        return 0
    height, width = image_dims(profile)
    fam = profile.family
    info = {
        "name": profile.name,
        "frame_words": fam.frame_words,
        "clbs_per_column": fam.clbs_per_column,
        "excluded_mid_words": fam.excluded_mid_words,
        "clb_bytes_per_frame": fam.clb_bytes_per_frame,
        "frames_per_column": {k.value: v for k, v in fam.frames_per_column.items()},
        "slices_per_clb": fam.slices_per_clb,
        "config_rows": len(profile.config_rows),
        "total_fdri_frames": frames,
        "total_fdri_words": frames * fam.frame_words,
        "total_clbs": profile.total_clbs(),
        "grid": [profile.grid_rows, profile.grid_cols],
        "image_size": [height, width, 3],
    }
    if profile.bitstream_bits:
        info["bitstream_bits"] = profile.bitstream_bits
    print(json.dumps(info, indent=2))
    return 0


def _cmd_encode(args) -> int:
    profile = resolve_profile(args.profile)
    raw = Path(args.input).read_bytes()
    start = time.perf_counter()
    frame_array, ignored = parse_container(raw, profile, args.format)
    image = encode_image(frame_array, profile, args.order)
    elapsed = time.perf_counter() - start
    write_image(image, args.out)
    print(f"elapsed_seconds={elapsed:.6f}", file=sys.stderr)
    if ignored:
        print(f"warning: ignored {ignored} trailing words", file=sys.stderr)
    print(f"{args.out}: {image.height}x{image.width}x3 order={image.order.value}")
    if profile.bitstream_bits:
        print(f"compression_ratio={compression_ratio(image, profile.bitstream_bits):.2f}")
    return 0


def _cmd_synth_profile(args) -> int:
    family = resolve_profile(args.family).family
    profile = synthetic_profile(family, args.rows, args.clb_cols, args.non_clb, args.seed)
    save_profile(profile, args.out)
    print(f"{args.out}: frames={total_fdri_frames(profile)} "
          f"grid={profile.grid_rows}x{profile.grid_cols}")
    return 0


def _cmd_synth_dataset(args) -> int:
    profile = resolve_profile(args.profile)
    labels = [c.strip() for c in args.classes.split(",") if c.strip()]
    try:
        lo, hi = (int(v) for v in args.blocks.split(":"))
    except ValueError:
        raise BitcanvasError(f"--blocks expects MIN:MAX, got {args.blocks!r}") from None
    signatures = ds.default_signatures(labels, profile)
    manifest, summary = ds.synth_dataset(
        profile, signatures, args.count, args.out,
        blocks_per_image=(lo, hi), seed=args.seed,
        background_density=args.noise, split_ratio=args.ratio, fmt=args.format,
    )
    print(f"{args.out}: images={summary.images} blocks={summary.blocks_placed} "
          f"dropped={summary.blocks_dropped} classes={','.join(manifest.class_list)}")
    return 0


def _cmd_dataset_build(args) -> int:
    manifest = ds.load_manifest(args.manifest)
    summary = ds.build_dataset(
        manifest, args.order, args.out, jobs=args.jobs,
        manifest_dir=Path(args.manifest).parent,
    )
    print(f"{args.out}: images={summary.images_written} boxes={summary.boxes_written} "
          f"train={summary.train_count} test={summary.test_count}")
    for name, reason in summary.failures:
        print(f"warning: skipped {name}: {reason}", file=sys.stderr)
    return 0


def _cmd_eval(args) -> int:
    class_list = [
        line.strip()
        for line in Path(args.classes).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    thresholds = [float(v) for v in args.iou.split(",") if v.strip()]
    report = evaluate(args.pred, args.gt, class_list, thresholds)
    for t in report.thresholds:
        print(f"mAP@{t:g} {report.mean_ap[t] * 100:.2f}")
        for cls in report.classes:
            value = report.ap[t][cls]
            shown = "undefined (no ground truth)" if value is None else f"{value * 100:.2f}"
            print(f"  AP@{t:g} {cls:<16} {shown}  "
                  f"(gt={report.gt_counts[cls]}, det={report.det_counts[cls]})")
    if args.json_out:
        Path(args.json_out).write_text(
            json.dumps(report.to_json_dict(), indent=2) + "\n", encoding="utf-8"
        )
    return 0


_HANDLERS = {
    "profile": _cmd_profile,
    "encode": _cmd_encode,
    "eval": _cmd_eval,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            handler = _cmd_synth_profile if args.synth_command == "profile" else _cmd_synth_dataset
        elif args.command == "dataset":
            handler = _cmd_dataset_build
        else:
            handler = _HANDLERS[args.command]
        return handler(args)
    except BitcanvasError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
