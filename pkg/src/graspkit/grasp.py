"""Grasp rectangle type and the rectangle-overlap evaluation metric.

A grasp is a rotated rectangle in image coordinates: center (x, y) in
pixels, opening w (distance between the jaw inner faces), jaw size h
(length of each jaw plate), and angle theta in degrees measured from the
image x-axis toward the y-axis. A parallel-jaw gripper is symmetric under
a 180 degree rotation, so theta lives in (-90, +90].
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyGroundTruthError
from .geometry import clip_convex, polygon_area


def normalize_angle(theta: float) -> float:
    """Fold an angle in degrees into (-90, +90]."""
    a = float(theta) % 180.0
    if a > 90.0:
        a -= 180.0
    return a


def angle_diff(a: float, b: float) -> float:
    """Smallest angular separation of two jaw orientations, in [0, 90]."""
    d = abs(a - b) % 180.0
    return min(d, 180.0 - d)


@dataclass(frozen=True)
class Grasp:
    """One grasp rectangle. Units are pixels and degrees."""

    x: float
    y: float
    w: float
    h: float
    theta: float

    def __post_init__(self):
        for name in ("x", "y", "w", "h", "theta"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"grasp field {name} is not finite: {v!r}")
            object.__setattr__(self, name, float(v))
        if self.w <= 0.0:
            raise ValueError(f"grasp opening must be positive, got {self.w}")
        if self.h <= 0.0:
            raise ValueError(f"grasp jaw size must be positive, got {self.h}")
        object.__setattr__(self, "theta", normalize_angle(self.theta))


@dataclass(frozen=True)
class RectCriterionConfig:
    """Thresholds for the rectangle criterion."""

    angle_thresh: float = 30.0
    iou_thresh: float = 0.25

    def __post_init__(self):
        if not 0.0 < self.angle_thresh <= 90.0:
            raise ValueError(f"angle_thresh out of (0, 90]: {self.angle_thresh}")
        if not 0.0 < self.iou_thresh <= 1.0:
            raise ValueError(f"iou_thresh out of (0, 1]: {self.iou_thresh}")


@dataclass(frozen=True)
class GraspSet:
    """An ordered list of grasps for one scene.

    For annotation sets, `jaw_sizes` holds the physical jaw sizes (meters)
    each grasp was verified with, parallel to `grasps`.
    """

    grasps: tuple[Grasp, ...]
    jaw_sizes: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "grasps", tuple(self.grasps))
        if self.jaw_sizes is not None:
            sizes = tuple(tuple(s) for s in self.jaw_sizes)
            if len(sizes) != len(self.grasps):
                raise ValueError("jaw_sizes must parallel grasps")
            if any(len(s) == 0 for s in sizes):
                raise ValueError("annotation jaw size lists must be non-empty")
            object.__setattr__(self, "jaw_sizes", sizes)

    def __len__(self) -> int:
        return len(self.grasps)


def rect_corners(g: Grasp) -> np.ndarray:
    """Corners of the grasp rectangle, (4, 2), counterclockwise.

    The two h-length edges (corners 1-2 and 3-0) are the jaw plates.
    """
    c = math.cos(math.radians(g.theta))
    s = math.sin(math.radians(g.theta))
    hw = g.w / 2.0
    hh = g.h / 2.0
    local = ((-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh))
    return np.array(
        [(g.x + lx * c - ly * s, g.y + lx * s + ly * c) for lx, ly in local]
    )


def iou(a: Grasp, b: Grasp) -> float:
    """Intersection over union of two grasp rectangles, by exact clipping."""
    ca = rect_corners(a)
    cb = rect_corners(b)
    inter = polygon_area(clip_convex(ca, cb))
    if inter <= 0.0:
        return 0.0
    union = a.w * a.h + b.w * b.h - inter
    return min(1.0, inter / union)


def rect_match(
    pred: Grasp, gt: GraspSet, cfg: RectCriterionConfig = RectCriterionConfig()
) -> tuple[bool, int | None]:
    """Rectangle criterion: the prediction is correct if some annotation is
    within `angle_thresh` degrees and overlaps with IoU >= `iou_thresh`.

    Returns (matched, index of first matching annotation or None).
    """
    if len(gt) == 0:
        raise EmptyGroundTruthError("ground-truth grasp set is empty")
    for i, g in enumerate(gt.grasps):
        if angle_diff(pred.theta, g.theta) > cfg.angle_thresh:
            continue
        if iou(pred, g) >= cfg.iou_thresh:
            return True, i
    return False, None


def min_grasp_distance(pred: Grasp, gt: GraspSet) -> float:
    """Smallest squared Euclidean distance between the prediction and any
    annotation, taken on the raw (x, y, h, w, theta) vectors.

    Units are mixed (pixels and degrees); useful as a diagnostic only.
    """
    if len(gt) == 0:
        raise EmptyGroundTruthError("ground-truth grasp set is empty")
    best = math.inf
    for g in gt.grasps:
        d = (
            (g.x - pred.x) ** 2
            + (g.y - pred.y) ** 2
            + (g.h - pred.h) ** 2
            + (g.w - pred.w) ** 2
            + (g.theta - pred.theta) ** 2
        )
        best = min(best, d)
    return best


def batch_accuracy(
    preds: Sequence[tuple[str, Grasp]],
    gts: Mapping[str, GraspSet],
    cfg: RectCriterionConfig = RectCriterionConfig(),
) -> float:
    """Fraction of (scene_id, grasp) predictions that satisfy the rectangle
    criterion against their scene's annotations."""
    if len(preds) == 0:
        raise ValueError("cannot compute accuracy of an empty prediction set")
    unknown = sorted({sid for sid, _ in preds if sid not in gts})
    if unknown:
        raise ValueError(f"predictions reference unknown scene ids: {unknown}")
    hits = 0
    for sid, g in preds:
        ok, _ = rect_match(g, gts[sid], cfg)
        hits += int(ok)
    return hits / len(preds)
