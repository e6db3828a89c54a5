"""Dataset generation: annotate scenes by simulated grasp trials.

Per scene the pipeline samples candidates from the edge heuristic, screens
them with the 2 cm jaw, retests every screening survivor with all
configured jaw sizes, and finally drops near-duplicate grasps. Every seed
decision is derived from (master seed, object id, scene index) alone, so
output bytes do not depend on worker count or object pool ordering.
"""
from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import FormatError, GraspKitError, PlacementError
from .grasp import Grasp, GraspSet, angle_diff
from .heightmap import ObjectModel, load_object, rescale_object, save_object
from .pgm import read_pgm, write_pgm
from .sampler import SamplerConfig, edge_map, probability_map, sample_candidates
from .scene import CameraConfig, Scene, quantize_depth, render_depth, render_mask, settle
from .simulate import GripperConfig, simulate_grasp, snap_jaw_size, trial_all_jaw_sizes
from .storage import (
    OBJECT_FILE_NAME,
    DatasetManifest,
    SceneRecord,
    read_grasp_lines,
    read_manifest,
    read_scene_meta,
    write_grasp_lines,
    write_manifest,
    write_scene_meta,
)

SCREENING_JAW_SIZE = 0.02  # meters; the mid-range jaw used to screen candidates

# rng sub-streams per scene seed
_STREAM_SETTLE = 0
_STREAM_ANNOTATE = 1


@dataclass(frozen=True)
class DedupConfig:
    """Physical-unit thresholds under which two grasps count as duplicates."""

    center_dist: float = 0.01  # meters
    angle: float = 15.0  # degrees
    opening: float = 0.01  # meters

    def __post_init__(self):
        if self.center_dist <= 0 or self.angle <= 0 or self.opening <= 0:
            raise ValueError("dedup thresholds must be positive")


@dataclass(frozen=True)
class AnnotationEntry:
    grasp: Grasp
    jaw_sizes: tuple[float, ...]  # meters, ascending


@dataclass(frozen=True)
class AnnotationSet:
    scene_id: str
    entries: tuple[AnnotationEntry, ...]
    seed: int
    candidates: int
    tool_version: str = __version__

    @property
    def warning(self) -> bool:
        return len(self.entries) == 0

    def line_count(self) -> int:
        return sum(len(e.jaw_sizes) for e in self.entries)


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from a tuple of identifiers."""
    text = "|".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def _dedup_keep(order: list[Grasp], cfg: DedupConfig, resolution: float) -> list[int]:
    kept: list[int] = []
    for i, g in enumerate(order):
        dup = False
        for j in kept:
            k = order[j]
            if (
                np.hypot(k.x - g.x, k.y - g.y) * resolution < cfg.center_dist
                and angle_diff(k.theta, g.theta) < cfg.angle
                and abs(k.w - g.w) * resolution < cfg.opening
            ):
                dup = True
                break
        if not dup:
            kept.append(i)
    return kept


def dedup(
    grasps, cfg: DedupConfig = DedupConfig(), resolution: float = 0.004
) -> list[Grasp]:
    """Greedy keep-first duplicate removal over (x, y, theta)-sorted grasps.

    A grasp is dropped only when some kept grasp is simultaneously within
    the center, angle, and opening thresholds.
    """
    order = sorted(grasps, key=lambda g: (g.x, g.y, g.theta))
    return [order[i] for i in _dedup_keep(order, cfg, resolution)]


def annotate_scene(
    scene: Scene,
    rng: np.random.Generator,
    *,
    candidates: int = 5000,
    gripper: GripperConfig = GripperConfig(),
    sampler: SamplerConfig = SamplerConfig(),
    dedup_cfg: DedupConfig = DedupConfig(),
    seed: int = 0,
) -> AnnotationSet:
    """Annotate one scene: sample, screen with the 2 cm jaw, retest the
    survivors with every jaw size, then drop near duplicates."""
    screening = snap_jaw_size(SCREENING_JAW_SIZE, gripper)
    pmap = probability_map(
        edge_map(scene, sampler), scene.camera.resolution, gripper, sampler
    )
    drawn = sample_candidates(pmap, candidates, rng, gripper, scene.camera, sampler)

    survivors = [
        g for g in drawn if simulate_grasp(scene, g, screening, gripper).success
    ]
    sized = [
        (g, trial_all_jaw_sizes(scene, g, gripper)) for g in survivors
    ]
    order = sorted(range(len(sized)), key=lambda i: (
        sized[i][0].x, sized[i][0].y, sized[i][0].theta
    ))
    ordered = [sized[i] for i in order]
    keep = _dedup_keep([g for g, _ in ordered], dedup_cfg, scene.camera.resolution)
    entries = tuple(
        AnnotationEntry(grasp=ordered[i][0], jaw_sizes=ordered[i][1]) for i in keep
    )
    assert all(e.jaw_sizes for e in entries), "screening size must replay as success"
    return AnnotationSet(
        scene_id=scene.scene_id, entries=entries, seed=seed, candidates=candidates
    )


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines generated dataset content."""

    master_seed: int = 0
    candidates: int = 5000
    scenes_per_object: int = 5
    camera: CameraConfig = CameraConfig()
    gripper: GripperConfig = GripperConfig()
    sampler: SamplerConfig = SamplerConfig()
    dedup: DedupConfig = DedupConfig()

    def to_manifest_config(self) -> dict[str, str]:
        out = {
            "master_seed": str(self.master_seed),
            "candidates": str(self.candidates),
            "scenes_per_object": str(self.scenes_per_object),
            "tool_version": __version__,
        }
        for prefix, obj in (
            ("camera", self.camera),
            ("gripper", self.gripper),
            ("sampler", self.sampler),
            ("dedup", self.dedup),
        ):
            for name, value in vars(obj).items():
                if isinstance(value, tuple):
                    text = ",".join(repr(v) for v in value)
                elif isinstance(value, float):
                    text = repr(value)
                else:
                    text = str(value)
                out[f"{prefix}.{name}"] = text
        return out

    @classmethod
    def from_manifest_config(cls, config: dict[str, str]) -> "RunConfig":
        def group(prefix):
            return {
                k[len(prefix) + 1 :]: v
                for k, v in config.items()
                if k.startswith(prefix + ".")
            }

        cam = group("camera")
        grip = group("gripper")
        samp = group("sampler")
        ded = group("dedup")
        try:
            return cls(
                master_seed=int(config["master_seed"]),
                candidates=int(config["candidates"]),
                scenes_per_object=int(config["scenes_per_object"]),
                camera=CameraConfig(
                    width=int(cam["width"]),
                    height=int(cam["height"]),
                    resolution=float(cam["resolution"]),
                    mount_height=float(cam["mount_height"]),
                ),
                gripper=GripperConfig(
                    max_opening=float(grip["max_opening"]),
                    jaw_sizes=tuple(float(v) for v in grip["jaw_sizes"].split(",")),
                    jaw_thickness=float(grip["jaw_thickness"]),
                    insertion_depth=float(grip["insertion_depth"]),
                    friction_mu=float(grip["friction_mu"]),
                    grip_force=float(grip["grip_force"]),
                    lift_safety_factor=float(grip["lift_safety_factor"]),
                ),
                sampler=SamplerConfig(
                    orientation_bins=int(samp["orientation_bins"]),
                    jitter_deg=float(samp["jitter_deg"]),
                    uniform_mix=float(samp["uniform_mix"]),
                    edge_mag_thresh=float(samp["edge_mag_thresh"]),
                    candidate_jaw_size=float(samp["candidate_jaw_size"]),
                ),
                dedup=DedupConfig(
                    center_dist=float(ded["center_dist"]),
                    angle=float(ded["angle"]),
                    opening=float(ded["opening"]),
                ),
            )
        except KeyError as e:
            raise FormatError(f"manifest config missing key {e}") from None


def annotation_grasp_lines(
    entries, resolution: float
) -> list[Grasp]:
    """Flatten annotation entries to file lines: one grasp per jaw size,
    with h carrying the jaw size in pixels."""
    lines = []
    for e in entries:
        for jaw_m in e.jaw_sizes:
            g = e.grasp
            lines.append(Grasp(x=g.x, y=g.y, w=g.w, h=jaw_m / resolution, theta=g.theta))
    return lines


def _generate_scene(
    model: ObjectModel, k: int, out_root: Path, cfg: RunConfig
) -> SceneRecord:
    seed = derive_seed(cfg.master_seed, model.object_id, k)
    scene_id = f"{model.object_id}_{k}"
    scene = settle(
        model,
        np.random.default_rng((seed, _STREAM_SETTLE)),
        cfg.camera,
        scene_id=scene_id,
        seed=seed,
    )
    ann = annotate_scene(
        scene,
        np.random.default_rng((seed, _STREAM_ANNOTATE)),
        candidates=cfg.candidates,
        gripper=cfg.gripper,
        sampler=cfg.sampler,
        dedup_cfg=cfg.dedup,
        seed=seed,
    )
    scene_dir = out_root / model.object_id / str(k)
    scene_dir.mkdir(parents=True, exist_ok=True)
    write_pgm(scene_dir / "depth.pgm", quantize_depth(render_depth(scene), cfg.camera), 65535)
    write_pgm(scene_dir / "mask.pgm", render_mask(scene).astype(np.uint8), 1)
    write_scene_meta(
        scene_dir / "scene.txt", scene, candidates=cfg.candidates, warning=ann.warning
    )
    write_grasp_lines(
        scene_dir / "grasps.txt",
        annotation_grasp_lines(ann.entries, cfg.camera.resolution),
    )
    return SceneRecord(
        object_id=model.object_id,
        scene_id=scene_id,
        seed=seed,
        annotation_count=ann.line_count(),
        warning=ann.warning,
    )


def generate_dataset(
    objects, out_dir, cfg: RunConfig = RunConfig(), workers: int = 1
) -> DatasetManifest:
    """Generate a dataset from heightmap object files.

    `objects` is a directory of .hmap files or an explicit list of paths.
    Scene content is a pure function of (master seed, object id, scene
    index); worker count only affects wall time.
    """
    paths = _discover_objects(objects)
    out_root = Path(out_dir)
    out_root.mkdir(parents=True, exist_ok=True)

    models = []
    seen = set()
    for p in paths:
        base = load_object(p)
        if base.object_id in seen:
            raise FormatError(f"duplicate object id {base.object_id!r}", path=p)
        seen.add(base.object_id)
        scale_rng = np.random.default_rng(
            derive_seed(cfg.master_seed, base.object_id, "scale")
        )
        models.append(rescale_object(base, scale_rng))

    for model in models:
        obj_dir = out_root / model.object_id
        obj_dir.mkdir(parents=True, exist_ok=True)
        save_object(model, obj_dir / OBJECT_FILE_NAME)

    jobs = [(model, k) for model in models for k in range(cfg.scenes_per_object)]

    def run_job(job):
        model, k = job
        try:
            return _generate_scene(model, k, out_root, cfg), None
        except PlacementError as e:
            return None, (model.object_id, f"scene {k}: {e}")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_job, jobs))
    else:
        results = [run_job(j) for j in jobs]

    records = sorted(
        (rec for rec, _ in results if rec is not None),
        key=lambda r: (r.object_id, int(r.scene_id.rsplit("_", 1)[-1])),
    )
    failures = sorted(err for _, err in results if err is not None)
    manifest = DatasetManifest(
        config=cfg.to_manifest_config(),
        scenes=tuple(records),
        failures=tuple(failures),
    )
    write_manifest(out_root, manifest)
    return manifest


def _discover_objects(objects) -> list[Path]:
    if isinstance(objects, (str, Path)):
        root = Path(objects)
        if not root.is_dir():
            raise FormatError("object directory not found", path=root)
        paths = sorted(root.glob("*.hmap"))
        if not paths:
            raise FormatError("no .hmap object files found", path=root)
        return paths
    paths = [Path(p) for p in objects]
    if not paths:
        raise ValueError("no object files given")
    return paths


@dataclass(frozen=True)
class LoadedScene:
    """A dataset scene rebuilt for evaluation."""

    scene: Scene
    annotations: tuple[tuple[Grasp, float], ...]  # (file grasp, jaw size m)
    warning: bool

    def ground_truth(self) -> GraspSet:
        return GraspSet(
            grasps=tuple(g for g, _ in self.annotations),
            jaw_sizes=tuple((jaw,) for _, jaw in self.annotations),
        )


@dataclass(frozen=True)
class Dataset:
    root: Path
    manifest: DatasetManifest
    config: RunConfig
    scenes: dict[str, LoadedScene] = field(repr=False)

    def scene_ids(self) -> list[str]:
        return sorted(self.scenes)


def read_dataset(root) -> Dataset:
    """Load a generated dataset; scenes are rebuilt from the stored object
    heightmaps and poses so trial replay is exact."""
    root = Path(root)
    manifest = read_manifest(root)
    cfg = RunConfig.from_manifest_config(manifest.config)
    objects: dict[str, ObjectModel] = {}
    scenes: dict[str, LoadedScene] = {}
    for rec in manifest.scenes:
        if rec.object_id not in objects:
            objects[rec.object_id] = load_object(
                root / rec.object_id / OBJECT_FILE_NAME
            )
        obj = objects[rec.object_id]
        k = rec.scene_id.rsplit("_", 1)[-1]
        scene_dir = root / rec.object_id / k
        meta = read_scene_meta(scene_dir / "scene.txt")
        if meta["scene_id"] != rec.scene_id or meta["object_id"] != rec.object_id:
            raise FormatError(
                f"scene metadata does not match manifest record {rec.scene_id}",
                path=scene_dir / "scene.txt",
            )
        scene = Scene(
            scene_id=rec.scene_id,
            obj=obj,
            pose=meta["pose"],
            camera=meta["camera"],
            seed=meta["seed"],
        )
        lines = read_grasp_lines(scene_dir / "grasps.txt")
        if len(lines) != rec.annotation_count:
            raise FormatError(
                f"manifest says {rec.annotation_count} annotations, file has {len(lines)}",
                path=scene_dir / "grasps.txt",
            )
        annotations = tuple(
            (g, snap_jaw_size(g.h * meta["camera"].resolution, cfg.gripper))
            for g in lines
        )
        scenes[rec.scene_id] = LoadedScene(
            scene=scene, annotations=annotations, warning=rec.warning
        )
    return Dataset(root=root, manifest=manifest, config=cfg, scenes=scenes)


def verify_scene_images(root, scene_id: str) -> bool:
    """Cross-check stored depth/mask images against the rebuilt scene."""
    ds = read_dataset(root)
    rec = ds.scenes[scene_id]
    object_id, k = scene_id.rsplit("_", 1)
    scene_dir = Path(root) / object_id / k
    depth, _ = read_pgm(scene_dir / "depth.pgm")
    mask, _ = read_pgm(scene_dir / "mask.pgm")
    expect_depth = quantize_depth(render_depth(rec.scene), rec.scene.camera)
    expect_mask = render_mask(rec.scene).astype(np.uint8)
    return bool(
        np.array_equal(depth, expect_depth) and np.array_equal(mask, expect_mask)
    )
