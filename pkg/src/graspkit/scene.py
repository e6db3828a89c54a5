"""Tabletop scenes: a posed object under a fixed overhead camera.

The camera is orthographic and looks straight down. Depth is the distance
from the camera plane to the first surface, so bare table reads as the
mount height. Poses are planar: a yaw about the vertical axis plus a
table-plane translation, which is what a stable rest pose on a flat table
amounts to for a height-field object.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import PlacementError
from .heightmap import ObjectModel

SETTLE_MAX_ATTEMPTS = 128


@dataclass(frozen=True)
class CameraConfig:
    """Overhead orthographic camera intrinsics."""

    width: int = 320  # image width, px
    height: int = 320  # image height, px
    resolution: float = 0.004  # meters per px
    mount_height: float = 1.2  # camera plane above the table, meters

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        if self.mount_height <= 0:
            raise ValueError("mount height must be positive")

    @property
    def frame_size(self) -> tuple[float, float]:
        """(width, height) of the imaged table region, meters."""
        return self.width * self.resolution, self.height * self.resolution


@dataclass(frozen=True)
class PlanarPose:
    """Object pose on the table: translation in meters, yaw in degrees."""

    tx: float
    ty: float
    yaw: float


@dataclass
class Scene:
    """An object at rest in the camera frame. Treat as immutable."""

    scene_id: str
    obj: ObjectModel
    pose: PlanarPose
    camera: CameraConfig
    seed: int = 0

    @cached_property
    def posed_height(self) -> np.ndarray:
        """Object heights resampled onto the camera grid, meters."""
        return render_height(self)

    @cached_property
    def height_gradient(self) -> tuple[np.ndarray, np.ndarray]:
        """(d height / dx, d height / dy) on the camera grid, central
        differences, in meters per meter."""
        gy, gx = np.gradient(self.posed_height, self.camera.resolution)
        return gx, gy


def _object_center(obj: ObjectModel) -> tuple[float, float]:
    # center of the occupied bounding box, object-frame meters
    r0, r1, c0, c1 = obj.footprint_bbox()
    return (c0 + c1 + 1) / 2.0 * obj.resolution, (r0 + r1 + 1) / 2.0 * obj.resolution


def _half_extents(obj: ObjectModel) -> tuple[float, float]:
    r0, r1, c0, c1 = obj.footprint_bbox()
    return (c1 - c0 + 1) / 2.0 * obj.resolution, (r1 - r0 + 1) / 2.0 * obj.resolution


def settle(
    model: ObjectModel,
    rng: np.random.Generator,
    camera: CameraConfig = CameraConfig(),
    *,
    scene_id: str | None = None,
    seed: int = 0,
) -> Scene:
    """Drop the object into the frame: uniform yaw, then a translation that
    keeps the whole footprint inside the image.

    Yaws whose rotated footprint cannot fit are rejected and redrawn, up to
    SETTLE_MAX_ATTEMPTS; if none fits the object is too large for the frame.
    """
    ex, ey = _half_extents(model)
    frame_w, frame_h = camera.frame_size
    for _ in range(SETTLE_MAX_ATTEMPTS):
        yaw = 180.0 - rng.uniform(0.0, 360.0)  # (-180, 180]
        t = math.radians(yaw)
        rx = ex * abs(math.cos(t)) + ey * abs(math.sin(t))
        ry = ex * abs(math.sin(t)) + ey * abs(math.cos(t))
        if 2 * rx > frame_w or 2 * ry > frame_h:
            continue
        tx = rng.uniform(rx, frame_w - rx)
        ty = rng.uniform(ry, frame_h - ry)
        return Scene(
            scene_id=scene_id if scene_id is not None else f"{model.object_id}_0",
            obj=model,
            pose=PlanarPose(tx=float(tx), ty=float(ty), yaw=float(yaw)),
            camera=camera,
            seed=seed,
        )
    raise PlacementError(
        f"object {model.object_id!r} (longest side {model.longest_side:.3f} m) "
        f"does not fit the {frame_w:.3f} x {frame_h:.3f} m camera frame"
    )


def render_height(scene: Scene) -> np.ndarray:
    """Resample the object heightmap onto the camera grid (nearest cell).

    Camera cell (r, c) has its center at ((c + 0.5) * res, (r + 0.5) * res)
    in scene meters; cells off the object footprint read as table (0).
    """
    cam = scene.camera
    obj = scene.obj
    cx, cy = _object_center(obj)
    t = math.radians(scene.pose.yaw)
    cos_t, sin_t = math.cos(t), math.sin(t)

    xs = (np.arange(cam.width) + 0.5) * cam.resolution - scene.pose.tx
    ys = (np.arange(cam.height) + 0.5) * cam.resolution - scene.pose.ty
    gx, gy = np.meshgrid(xs, ys)
    # inverse rotation into the object frame
    ox = gx * cos_t + gy * sin_t + cx
    oy = -gx * sin_t + gy * cos_t + cy

    rows, cols = obj.heights.shape
    ci = np.floor(ox / obj.resolution).astype(np.int64)
    ri = np.floor(oy / obj.resolution).astype(np.int64)
    valid = (ci >= 0) & (ci < cols) & (ri >= 0) & (ri < rows)
    out = np.zeros((cam.height, cam.width), dtype=np.float64)
    out[valid] = obj.heights[ri[valid], ci[valid]]
    return out


def render_depth(scene: Scene) -> np.ndarray:
    """Depth from the camera plane, meters."""
    return scene.camera.mount_height - scene.posed_height


def render_mask(scene: Scene) -> np.ndarray:
    """Boolean object-presence mask on the camera grid."""
    return scene.posed_height > 0


def quantize_depth(depth: np.ndarray, camera: CameraConfig) -> np.ndarray:
    """Quantize depth in [0, mount_height] meters to uint16 levels."""
    scaled = np.clip(depth / camera.mount_height, 0.0, 1.0) * 65535.0
    return np.rint(scaled).astype(np.uint16)


def dequantize_depth(levels: np.ndarray, camera: CameraConfig) -> np.ndarray:
    return levels.astype(np.float64) / 65535.0 * camera.mount_height
