"""Grasp candidate sampling from height-gradient edge structure.

Uniform random candidates mostly land on bare table or at hopeless
orientations, so annotation would waste nearly all of its trials. The
heuristic here scores every cell by how many pairs of opposing edges
straddle it within the gripper's reach, closes along the straddle
direction, and mixes in a small uniform floor so no grasp is ever
unreachable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grasp import Grasp, normalize_angle
from .scene import CameraConfig, Scene
from .simulate import GripperConfig


@dataclass(frozen=True)
class SamplerConfig:
    orientation_bins: int = 18  # 10 degree bins over a half turn
    jitter_deg: float = 15.0  # +- orientation jitter on candidates
    uniform_mix: float = 0.05  # probability mass given to the uniform floor
    edge_mag_thresh: float = 0.5  # min gradient magnitude that counts as edge
    candidate_jaw_size: float = 0.02  # jaw size stamped on candidates, m

    def __post_init__(self):
        if self.orientation_bins <= 0:
            raise ValueError("orientation_bins must be positive")
        if not 0.0 <= self.uniform_mix <= 1.0:
            raise ValueError("uniform_mix must be a probability")
        if self.jitter_deg < 0 or self.edge_mag_thresh <= 0:
            raise ValueError("bad sampler thresholds")


@dataclass(frozen=True)
class EdgeMap:
    """Per-cell edge strength and orientation of the posed heightmap.

    `tangent` is the direction along the edge contour in degrees [0, 180);
    `bin` quantizes it into `orientation_bins` equal bins.
    """

    magnitude: np.ndarray
    tangent: np.ndarray
    bin: np.ndarray
    gx: np.ndarray
    gy: np.ndarray


@dataclass(frozen=True)
class ProbabilityMap:
    """Candidate sampling distribution over image cells.

    `weights` sums to one. `dominant_tangent` is the tangent (degrees) of
    the strongest straddling edge pair per cell, NaN where no pair exists.
    """

    weights: np.ndarray
    dominant_tangent: np.ndarray
    pair_counts: np.ndarray


def edge_map(scene: Scene, cfg: SamplerConfig = SamplerConfig()) -> EdgeMap:
    gx, gy = scene.height_gradient
    magnitude = np.hypot(gx, gy)
    tangent = (np.degrees(np.arctan2(gy, gx)) + 90.0) % 180.0
    bin_width = 180.0 / cfg.orientation_bins
    bins = np.floor(tangent / bin_width).astype(np.int64) % cfg.orientation_bins
    return EdgeMap(magnitude=magnitude, tangent=tangent, bin=bins, gx=gx, gy=gy)


def _shift_sum(src: np.ndarray, offsets: list[tuple[int, int]]) -> np.ndarray:
    """Sum of `src` sampled at cell + offset for each (drow, dcol) offset,
    zero outside the image."""
    h, w = src.shape
    out = np.zeros_like(src, dtype=np.float64)
    for dr, dc in offsets:
        sr0, sr1 = max(0, dr), min(h, h + dr)
        sc0, sc1 = max(0, dc), min(w, w + dc)
        if sr0 >= sr1 or sc0 >= sc1:
            continue
        out[sr0 - dr : sr1 - dr, sc0 - dc : sc1 - dc] += src[sr0:sr1, sc0:sc1]
    return out


def probability_map(
    edges: EdgeMap,
    resolution: float,
    gripper: GripperConfig = GripperConfig(),
    cfg: SamplerConfig = SamplerConfig(),
) -> ProbabilityMap:
    """Score cells by straddling antipodal edge pairs within the gripper
    opening, then blend with a uniform floor.

    For each orientation bin, an edge cell votes for the cells it faces
    (its gradient points at them) up to half the maximum opening away;
    a cell straddled from both sides by facing edges of the same bin gets
    the product of the two counts.
    """
    strong = edges.magnitude >= cfg.edge_mag_thresh
    reach_px = max(1, int(round(gripper.max_opening / 2.0 / resolution)))
    n_bins = cfg.orientation_bins
    bin_width = 180.0 / n_bins

    shape = edges.magnitude.shape
    total = np.zeros(shape, dtype=np.float64)
    best = np.zeros(shape, dtype=np.float64)
    best_bin = np.full(shape, -1, dtype=np.int64)

    for b in range(n_bins):
        members = strong & (edges.bin == b)
        if not members.any():
            continue
        # straddle direction: normal of the bin-center tangent
        normal = math.radians(b * bin_width + bin_width / 2.0 + 90.0)
        nx, ny = math.cos(normal), math.sin(normal)
        facing_along = edges.gx * nx + edges.gy * ny
        ahead_src = members & (facing_along < 0)  # faces back toward the cell
        behind_src = members & (facing_along > 0)  # faces forward at the cell

        offsets = []
        seen = set()
        for step in range(1, reach_px + 1):
            o = (int(round(step * ny)), int(round(step * nx)))
            if o not in seen and o != (0, 0):
                seen.add(o)
                offsets.append(o)
        ahead = _shift_sum(ahead_src.astype(np.float64), offsets)
        behind = _shift_sum(
            behind_src.astype(np.float64), [(-dr, -dc) for dr, dc in offsets]
        )
        pairs = ahead * behind
        total += pairs
        better = pairs > best
        best = np.where(better, pairs, best)
        best_bin = np.where(better, b, best_bin)

    n_cells = total.size
    uniform = np.full(shape, 1.0 / n_cells)
    heur_mass = total.sum()
    if heur_mass > 0:
        weights = (1.0 - cfg.uniform_mix) * total / heur_mass + cfg.uniform_mix * uniform
    else:
        weights = uniform.copy()
    weights /= weights.sum()

    dominant = np.where(
        best_bin >= 0, best_bin * bin_width + bin_width / 2.0, np.nan
    )
    return ProbabilityMap(weights=weights, dominant_tangent=dominant, pair_counts=total)


def uniform_probability_map(shape: tuple[int, int]) -> ProbabilityMap:
    """A heuristic-free map: every cell equally likely, no preferred angle."""
    n = shape[0] * shape[1]
    return ProbabilityMap(
        weights=np.full(shape, 1.0 / n),
        dominant_tangent=np.full(shape, np.nan),
        pair_counts=np.zeros(shape),
    )


def sample_candidates(
    pmap: ProbabilityMap,
    n: int,
    rng: np.random.Generator,
    gripper: GripperConfig = GripperConfig(),
    camera: CameraConfig = CameraConfig(),
    cfg: SamplerConfig = SamplerConfig(),
) -> list[Grasp]:
    """Draw grasp candidates: cell from the weight map, sub-cell jitter,
    orientation across the local dominant edge (or uniform where there is
    none), opening uniform in (0, max]."""
    if n <= 0:
        raise ValueError("candidate count must be positive")
    h, w = pmap.weights.shape
    flat_idx = rng.choice(h * w, size=n, p=pmap.weights.ravel())
    rows, cols = np.divmod(flat_idx, w)
    jx = rng.uniform(-0.5, 0.5, size=n)
    jy = rng.uniform(-0.5, 0.5, size=n)
    jitter = rng.uniform(-cfg.jitter_deg, cfg.jitter_deg, size=n)
    fallback = rng.uniform(-90.0, 90.0, size=n)
    openings_m = gripper.max_opening * (1.0 - rng.random(size=n))

    jaw_px = cfg.candidate_jaw_size / camera.resolution
    out = []
    for i in range(n):
        tang = pmap.dominant_tangent[rows[i], cols[i]]
        if math.isnan(tang):
            theta = fallback[i]
        else:
            theta = normalize_angle(tang + 90.0 + jitter[i])
        out.append(
            Grasp(
                x=cols[i] + 0.5 + jx[i],
                y=rows[i] + 0.5 + jy[i],
                w=openings_m[i] / camera.resolution,
                h=jaw_px,
                theta=theta,
            )
        )
    return out
