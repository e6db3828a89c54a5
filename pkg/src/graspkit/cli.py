"""Command line interface.

Exit codes: 0 success, 1 invalid input (bad arguments or files that fail
validation), 2 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from collections import Counter
from pathlib import Path

from . import __version__
from .errors import EmptyGroundTruthError, FormatError, GraspKitError
from .grasp import RectCriterionConfig, rect_match
from .pipeline import RunConfig, generate_dataset, read_dataset
from .scene import CameraConfig
from .simulate import simulate_grasp, snap_jaw_size
from .storage import manifest_digest, read_predictions

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

DATASET_ENV = "GRASPKIT_DATASET"


def _add_dataset_arg(parser):
    parser.add_argument(
        "--dataset",
        default=os.environ.get(DATASET_ENV),
        help=f"dataset directory (defaults to ${DATASET_ENV})",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graspkit",
        description="Synthetic grasp dataset generation and evaluation.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    fmt = argparse.ArgumentDefaultsHelpFormatter

    gen = sub.add_parser(
        "generate",
        formatter_class=fmt,
        help="generate a dataset from heightmap objects",
    )
    gen.add_argument("--objects", required=True, help="directory of .hmap files")
    gen.add_argument("--out", required=True, help="output dataset directory")
    gen.add_argument("--master-seed", type=int, default=0)
    gen.add_argument("--candidates", type=int, default=5000)
    gen.add_argument("--scenes-per-object", type=int, default=5)
    gen.add_argument("--workers", type=int, default=1)
    gen.add_argument("--camera-width", type=int, default=CameraConfig().width)
    gen.add_argument("--camera-height", type=int, default=CameraConfig().height)
    gen.add_argument(
        "--camera-resolution",
        type=float,
        default=CameraConfig().resolution,
        help="meters per pixel",
    )
    gen.add_argument(
        "--mount-height",
        type=float,
        default=CameraConfig().mount_height,
        help="camera mount height in meters",
    )
    gen.set_defaults(func=cmd_generate)

    rect = sub.add_parser(
        "eval-rect",
        formatter_class=fmt,
        help="score predictions with the rectangle criterion",
    )
    _add_dataset_arg(rect)
    rect.add_argument("--predictions", required=True, help="prediction file")
    rect.add_argument("--angle-thresh", type=float, default=30.0, help="degrees")
    rect.add_argument("--iou-thresh", type=float, default=0.25)
    rect.add_argument(
        "--report", help="JSON report path (default: <predictions>.report.json)"
    )
    rect.set_defaults(func=cmd_eval_rect)

    sgt = sub.add_parser(
        "eval-sgt",
        formatter_class=fmt,
        help="score predictions by replaying grasp trials",
    )
    _add_dataset_arg(sgt)
    sgt.add_argument("--predictions", required=True, help="prediction file")
    sgt.add_argument(
        "--jaw-size",
        type=float,
        default=None,
        help="jaw plate size in meters; overrides the per-line value",
    )
    sgt.add_argument(
        "--report", help="JSON report path (default: <predictions>.report.json)"
    )
    sgt.set_defaults(func=cmd_eval_sgt)

    ovl = sub.add_parser(
        "render-overlay",
        formatter_class=fmt,
        help="render a scene PNG with annotations drawn on top",
    )
    _add_dataset_arg(ovl)
    ovl.add_argument("--scene", required=True, help="scene id")
    ovl.add_argument("--out", required=True, help="output PNG path")
    ovl.add_argument(
        "--predictions", help="optional prediction file to draw as well"
    )
    ovl.set_defaults(func=cmd_render_overlay)

    srv = sub.add_parser(
        "serve",
        formatter_class=fmt,
        help="serve a dataset for remote evaluation over HTTP",
    )
    _add_dataset_arg(srv)
    srv.add_argument("--log", required=True, help="submission log path")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    srv.set_defaults(func=cmd_serve)

    return parser


def _require_dataset(args) -> Path:
    if not args.dataset:
        raise ValueError(
            f"no dataset given: pass --dataset or set ${DATASET_ENV}"
        )
    return Path(args.dataset)


def _report_path(args) -> Path:
    if args.report:
        return Path(args.report)
    return Path(str(args.predictions) + ".report.json")


def _write_report(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_generate(args) -> int:
    for name in ("candidates", "scenes_per_object", "workers"):
        if getattr(args, name) < 1:
            raise ValueError(f"--{name.replace('_', '-')} must be at least 1")
    cfg = RunConfig(
        master_seed=args.master_seed,
        candidates=args.candidates,
        scenes_per_object=args.scenes_per_object,
        camera=CameraConfig(
            width=args.camera_width,
            height=args.camera_height,
            resolution=args.camera_resolution,
            mount_height=args.mount_height,
        ),
    )
    manifest = generate_dataset(args.objects, args.out, cfg, workers=args.workers)
    bare = sum(1 for r in manifest.scenes if r.warning)
    print(f"scenes {len(manifest.scenes)} ({bare} without annotations)")
    print(f"placement failures {len(manifest.failures)}")
    print(f"manifest sha256 {manifest_digest(args.out)}")
    return EXIT_OK


def cmd_eval_rect(args) -> int:
    dataset = read_dataset(_require_dataset(args))
    preds = read_predictions(args.predictions)
    if not preds:
        raise ValueError(f"no predictions in {args.predictions}")
    cfg = RectCriterionConfig(
        angle_thresh=args.angle_thresh, iou_thresh=args.iou_thresh
    )
    per_scene: dict[str, dict[str, int]] = {}
    matched = 0
    for sid, grasp in preds:
        if sid not in dataset.scenes:
            raise ValueError(f"prediction references unknown scene {sid!r}")
        loaded = dataset.scenes[sid]
        if not loaded.annotations:
            raise EmptyGroundTruthError(
                f"scene {sid!r} has no annotations to match against"
            )
        ok, _ = rect_match(grasp, loaded.ground_truth(), cfg)
        matched += int(ok)
        counts = per_scene.setdefault(sid, {"total": 0, "matched": 0})
        counts["total"] += 1
        counts["matched"] += int(ok)
    accuracy = matched / len(preds)
    report = _report_path(args)
    _write_report(
        report,
        {
            "dataset": str(args.dataset),
            "predictions": str(args.predictions),
            "criterion": {
                "angle_thresh": args.angle_thresh,
                "iou_thresh": args.iou_thresh,
            },
            "total": len(preds),
            "matched": matched,
            "accuracy": accuracy,
            "per_scene": per_scene,
        },
    )
    print(f"accuracy {accuracy:.2f} ({matched}/{len(preds)})")
    print(f"report {report}")
    return EXIT_OK


def cmd_eval_sgt(args) -> int:
    dataset = read_dataset(_require_dataset(args))
    preds = read_predictions(args.predictions)
    if not preds:
        raise ValueError(f"no predictions in {args.predictions}")
    gripper = dataset.config.gripper
    res = dataset.config.camera.resolution
    per_scene: dict[str, dict[str, int]] = {}
    reasons: Counter = Counter()
    successes = 0
    for sid, grasp in preds:
        if sid not in dataset.scenes:
            raise ValueError(f"prediction references unknown scene {sid!r}")
        jaw = snap_jaw_size(
            args.jaw_size if args.jaw_size is not None else grasp.h * res, gripper
        )
        outcome = simulate_grasp(dataset.scenes[sid].scene, grasp, jaw, gripper)
        successes += int(outcome.success)
        if not outcome.success:
            reasons[outcome.failure_reason.value] += 1
        counts = per_scene.setdefault(sid, {"total": 0, "successes": 0})
        counts["total"] += 1
        counts["successes"] += int(outcome.success)
    rate = successes / len(preds)
    report = _report_path(args)
    _write_report(
        report,
        {
            "dataset": str(args.dataset),
            "predictions": str(args.predictions),
            "jaw_size_override": args.jaw_size,
            "total": len(preds),
            "successes": successes,
            "success_rate": rate,
            "failure_reasons": dict(sorted(reasons.items())),
            "per_scene": per_scene,
        },
    )
    print(f"success rate {rate:.2f} ({successes}/{len(preds)})")
    for reason, count in sorted(reasons.items()):
        print(f"  {reason} {count}")
    print(f"report {report}")
    return EXIT_OK


def cmd_render_overlay(args) -> int:
    from .overlay import render_overlay

    root = _require_dataset(args)
    predictions = None
    if args.predictions:
        predictions = [
            g for sid, g in read_predictions(args.predictions) if sid == args.scene
        ]
    out = render_overlay(root, args.scene, args.out, predictions)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import serve

    serve(_require_dataset(args), args.log, host=args.host, port=args.port)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 0 for --help/--version and 2 for usage errors;
        # usage errors are input validation here
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (FormatError, EmptyGroundTruthError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except GraspKitError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
