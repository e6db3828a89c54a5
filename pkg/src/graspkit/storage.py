"""On-disk dataset formats.

Dataset layout:

    <root>/manifest.txt
    <root>/<object_id>/object.hmap          rescaled object heightmap
    <root>/<object_id>/<k>/depth.pgm        16-bit depth image
    <root>/<object_id>/<k>/mask.pgm         object mask
    <root>/<object_id>/<k>/scene.txt        pose, camera, seed, metadata
    <root>/<object_id>/<k>/grasps.txt       annotations

Grasp lines are `x;y;theta;opening;jaw_size` (pixels and degrees, one line
per grasp/jaw-size combination); prediction files carry a leading
scene_id field. Floats are written with repr so round trips are exact.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

from .errors import FormatError
from .grasp import Grasp
from .scene import CameraConfig, PlanarPose

MANIFEST_NAME = "manifest.txt"
OBJECT_FILE_NAME = "object.hmap"
_MANIFEST_MAGIC = "graspkit dataset manifest v1"


def _fmt(v: float) -> str:
    return repr(float(v))


def _parse_float(raw: str, what: str, path, lineno: int) -> float:
    try:
        v = float(raw)
    except ValueError:
        raise FormatError(f"{what} is not a number: {raw!r}", path=path, line=lineno) from None
    if v != v or v in (float("inf"), float("-inf")):
        raise FormatError(f"{what} is not finite: {raw!r}", path=path, line=lineno)
    return v


def _parse_grasp_fields(fields, path, lineno) -> Grasp:
    x = _parse_float(fields[0], "x", path, lineno)
    y = _parse_float(fields[1], "y", path, lineno)
    theta = _parse_float(fields[2], "theta", path, lineno)
    opening = _parse_float(fields[3], "opening", path, lineno)
    jaw = _parse_float(fields[4], "jaw_size", path, lineno)
    if not -90.0 < theta <= 90.0:
        raise FormatError(
            f"theta {theta!r} outside (-90, 90]", path=path, line=lineno
        )
    if opening <= 0 or jaw <= 0:
        raise FormatError("opening and jaw_size must be positive", path=path, line=lineno)
    return Grasp(x=x, y=y, w=opening, h=jaw, theta=theta)


def write_grasp_lines(path, grasps: list[Grasp]) -> None:
    """One `x;y;theta;opening;jaw_size` line per grasp (h is the jaw size)."""
    lines = [
        ";".join((_fmt(g.x), _fmt(g.y), _fmt(g.theta), _fmt(g.w), _fmt(g.h)))
        for g in grasps
    ]
    Path(path).write_text("".join(l + "\n" for l in lines))


def read_grasp_lines(path) -> list[Grasp]:
    out = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        if not raw.strip():
            continue
        fields = raw.strip().split(";")
        if len(fields) != 5:
            raise FormatError(
                f"expected 5 ';'-separated fields, got {len(fields)}",
                path=path,
                line=lineno,
            )
        out.append(_parse_grasp_fields(fields, path, lineno))
    return out


def write_predictions(path, preds: list[tuple[str, Grasp]]) -> None:
    lines = [
        ";".join((sid, _fmt(g.x), _fmt(g.y), _fmt(g.theta), _fmt(g.w), _fmt(g.h)))
        for sid, g in preds
    ]
    Path(path).write_text("".join(l + "\n" for l in lines))


def read_predictions(path) -> list[tuple[str, Grasp]]:
    out = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        if not raw.strip():
            continue
        fields = raw.strip().split(";")
        if len(fields) != 6:
            raise FormatError(
                f"expected 6 ';'-separated fields, got {len(fields)}",
                path=path,
                line=lineno,
            )
        sid = fields[0].strip()
        if not sid:
            raise FormatError("empty scene id", path=path, line=lineno)
        out.append((sid, _parse_grasp_fields(fields[1:], path, lineno)))
    return out


def write_scene_meta(path, scene, *, candidates: int, warning: bool) -> None:
    cam = scene.camera
    lines = [
        f"scene_id {scene.scene_id}",
        f"object_id {scene.obj.object_id}",
        f"pose_tx {_fmt(scene.pose.tx)}",
        f"pose_ty {_fmt(scene.pose.ty)}",
        f"pose_yaw {_fmt(scene.pose.yaw)}",
        f"camera_width {cam.width}",
        f"camera_height {cam.height}",
        f"camera_resolution {_fmt(cam.resolution)}",
        f"camera_mount_height {_fmt(cam.mount_height)}",
        f"seed {scene.seed}",
        f"mass {_fmt(scene.obj.mass)}",
        f"candidates {candidates}",
        f"warning {int(warning)}",
    ]
    Path(path).write_text("".join(l + "\n" for l in lines))


def read_scene_meta(path) -> dict:
    kv = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        if not raw.strip():
            continue
        parts = raw.split(None, 1)
        if len(parts) != 2:
            raise FormatError(f"bad metadata line {raw!r}", path=path, line=lineno)
        kv[parts[0]] = parts[1]
    required = {
        "scene_id",
        "object_id",
        "pose_tx",
        "pose_ty",
        "pose_yaw",
        "camera_width",
        "camera_height",
        "camera_resolution",
        "camera_mount_height",
        "seed",
    }
    missing = required - set(kv)
    if missing:
        raise FormatError(f"missing metadata keys: {sorted(missing)}", path=path)
    try:
        meta = {
            "scene_id": kv["scene_id"],
            "object_id": kv["object_id"],
            "pose": PlanarPose(
                tx=float(kv["pose_tx"]),
                ty=float(kv["pose_ty"]),
                yaw=float(kv["pose_yaw"]),
            ),
            "camera": CameraConfig(
                width=int(kv["camera_width"]),
                height=int(kv["camera_height"]),
                resolution=float(kv["camera_resolution"]),
                mount_height=float(kv["camera_mount_height"]),
            ),
            "seed": int(kv["seed"]),
            "candidates": int(kv.get("candidates", 0)),
            "warning": bool(int(kv.get("warning", 0))),
        }
    except ValueError as e:
        raise FormatError(f"bad metadata value: {e}", path=path) from None
    return meta


@dataclass(frozen=True)
class SceneRecord:
    object_id: str
    scene_id: str
    seed: int
    annotation_count: int
    warning: bool


@dataclass(frozen=True)
class DatasetManifest:
    config: dict[str, str]  # flattened `config.*` keys without the prefix
    scenes: tuple[SceneRecord, ...]
    failures: tuple[tuple[str, str], ...]  # (object_id, message)


def write_manifest(root, manifest: DatasetManifest) -> Path:
    lines = [f"# {_MANIFEST_MAGIC}"]
    for key in sorted(manifest.config):
        lines.append(f"config.{key} {manifest.config[key]}")
    for rec in manifest.scenes:
        lines.append(
            f"scene {rec.object_id} {rec.scene_id} {rec.seed} "
            f"{rec.annotation_count} {int(rec.warning)}"
        )
    for object_id, message in manifest.failures:
        lines.append(f"failure {object_id} {message}")
    path = Path(root) / MANIFEST_NAME
    path.write_text("".join(l + "\n" for l in lines))
    return path


def read_manifest(root) -> DatasetManifest:
    path = Path(root) / MANIFEST_NAME
    if not path.is_file():
        raise FormatError("dataset manifest not found", path=path)
    lines = path.read_text().splitlines()
    if not lines or lines[0] != f"# {_MANIFEST_MAGIC}":
        raise FormatError("not a dataset manifest", path=path, line=1)
    config: dict[str, str] = {}
    scenes: list[SceneRecord] = []
    failures: list[tuple[str, str]] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        if raw.startswith("config."):
            key, _, value = raw.partition(" ")
            config[key[len("config.") :]] = value
        elif raw.startswith("scene "):
            fields = raw.split()
            if len(fields) != 6:
                raise FormatError("bad scene record", path=path, line=lineno)
            try:
                scenes.append(
                    SceneRecord(
                        object_id=fields[1],
                        scene_id=fields[2],
                        seed=int(fields[3]),
                        annotation_count=int(fields[4]),
                        warning=bool(int(fields[5])),
                    )
                )
            except ValueError:
                raise FormatError("bad scene record", path=path, line=lineno) from None
        elif raw.startswith("failure "):
            _, object_id, message = raw.split(" ", 2)
            failures.append((object_id, message))
        else:
            raise FormatError(f"unrecognized line {raw!r}", path=path, line=lineno)
    return DatasetManifest(
        config=config, scenes=tuple(scenes), failures=tuple(failures)
    )


def manifest_digest(root) -> str:
    """Hex sha256 of the manifest file bytes."""
    return hashlib.sha256((Path(root) / MANIFEST_NAME).read_bytes()).hexdigest()
