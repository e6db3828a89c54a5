"""Render a scene image with grasp rectangles drawn on top.

Annotations are drawn in green, predictions in red; the jaw plate edges
use the saturated shade and the opening edges a lighter one, so grasp
orientation is readable at a glance. Output PNGs are byte-deterministic
for identical inputs.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .errors import FormatError
from .grasp import Grasp, rect_corners
from .pgm import read_pgm
from .storage import read_grasp_lines

ANNOTATION_JAW = (40, 190, 40)
ANNOTATION_OPENING = (160, 230, 160)
PREDICTION_JAW = (220, 50, 50)
PREDICTION_OPENING = (245, 170, 170)


def depth_to_grayscale(depth: np.ndarray) -> np.ndarray:
    """Stretch a quantized depth image to full 8-bit contrast."""
    lo = int(depth.min())
    hi = int(depth.max())
    if hi == lo:
        return np.full(depth.shape, 128, dtype=np.uint8)
    scaled = (depth.astype(np.float64) - lo) * (255.0 / (hi - lo))
    return np.round(scaled).astype(np.uint8)


def draw_grasp(
    draw: ImageDraw.ImageDraw,
    grasp: Grasp,
    jaw_color: tuple[int, int, int],
    opening_color: tuple[int, int, int],
) -> None:
    c = rect_corners(grasp)
    pts = [tuple(p) for p in c]
    # corners 0-1 and 2-3 span the opening; 1-2 and 3-0 are the jaw plates
    draw.line([pts[0], pts[1]], fill=opening_color, width=1)
    draw.line([pts[2], pts[3]], fill=opening_color, width=1)
    draw.line([pts[1], pts[2]], fill=jaw_color, width=1)
    draw.line([pts[3], pts[0]], fill=jaw_color, width=1)


def render_overlay(
    dataset_root,
    scene_id: str,
    out_path,
    predictions: list[Grasp] | None = None,
) -> Path:
    """Write a PNG of the scene depth image with its annotations and any
    predictions drawn on top. Returns the output path."""
    root = Path(dataset_root)
    object_id, _, k = scene_id.rpartition("_")
    scene_dir = root / object_id / k
    if not scene_dir.is_dir():
        raise FormatError(f"no scene directory for {scene_id!r}", path=scene_dir)
    depth, _ = read_pgm(scene_dir / "depth.pgm")
    annotations = read_grasp_lines(scene_dir / "grasps.txt")

    gray = depth_to_grayscale(depth)
    image = Image.fromarray(gray, mode="L").convert("RGB")
    draw = ImageDraw.Draw(image)
    for g in annotations:
        draw_grasp(draw, g, ANNOTATION_JAW, ANNOTATION_OPENING)
    for g in predictions or []:
        draw_grasp(draw, g, PREDICTION_JAW, PREDICTION_OPENING)

    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    image.save(out, format="PNG")
    return out
