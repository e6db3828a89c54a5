"""Deterministic quasi-static grasp trials on heightmap scenes.

A trial replays one parallel-jaw grasp against a posed scene in four
stages. The object never moves (quasi-static): a grasp counts as a
success only if the gripper gets to a stable force-closure hold without
ever pushing the object around.

approach  Descend vertically with the jaws open until the jaw tips reach
          the grasp plane (surface height at the center minus the
          insertion depth). The approach direction is the local surface
          normal; height fields only support near-vertical approaches, so
          a normal tilted more than 30 degrees from vertical fails
          outright, as would the real descent.
close     Both jaws translate toward the grasp center at equal speed and
          each stops at first contact, or at the center if it touches
          nothing.
hold      Contact normals come from the height gradient averaged over the
          first-contact cells. Both must lie inside the friction cone
          around the closing axis.
lift      The held object must stay put under gravity with the configured
          safety margin against the friction payload limit.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .grasp import Grasp
from .scene import Scene

GRAVITY = 9.81
# steepest surface-normal tilt from vertical we still approach, degrees
APPROACH_MAX_TILT_DEG = 30.0
# jaw sizes given in other units are snapped to a configured size, meters
JAW_SNAP_TOL = 1e-6
# thickness of the first-contact cell layer, in cells
CONTACT_LAYER_CELLS = 0.8

_EPS_HEIGHT = 1e-9
_EPS_COORD = 1e-12


class FailureReason(str, enum.Enum):
    APPROACH_COLLISION = "approach-collision"
    NO_CONTACT = "no-contact"
    SINGLE_SIDE_CONTACT = "single-side-contact"
    FRICTION_CONE_VIOLATION = "friction-cone-violation"
    PAYLOAD_EXCEEDED = "payload-exceeded"
    OPENING_EXCEEDED = "opening-exceeded"


@dataclass(frozen=True)
class GripperConfig:
    """Parallel-jaw gripper parameters, SI units."""

    max_opening: float = 0.10
    jaw_sizes: tuple[float, ...] = (0.01, 0.02, 0.03, 0.04, 0.06)
    jaw_thickness: float = 0.005
    insertion_depth: float = 0.01
    friction_mu: float = 0.5
    grip_force: float = 40.0  # per jaw, newtons
    lift_safety_factor: float = 1.2

    def __post_init__(self):
        object.__setattr__(self, "jaw_sizes", tuple(float(s) for s in self.jaw_sizes))
        if not self.jaw_sizes:
            raise ValueError("gripper needs at least one jaw size")
        if any(s <= 0 for s in self.jaw_sizes):
            raise ValueError("jaw sizes must be positive")
        if list(self.jaw_sizes) != sorted(set(self.jaw_sizes)):
            raise ValueError("jaw sizes must be sorted and unique")
        for name in (
            "max_opening",
            "jaw_thickness",
            "insertion_depth",
            "friction_mu",
            "grip_force",
            "lift_safety_factor",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class JawContact:
    """First-contact summary for one jaw."""

    cells: int
    normal: tuple[float, float, float]  # outward surface normal, unit
    travel: float  # closing distance until contact, meters


@dataclass(frozen=True)
class TrialOutcome:
    success: bool
    failure_reason: FailureReason | None = None
    contacts: tuple[JawContact | None, JawContact | None] | None = None


def snap_jaw_size(size_m: float, gripper: GripperConfig) -> float:
    """Map a jaw size in meters onto the matching configured size.

    Sizes that round-tripped through pixels can be off by float noise;
    anything further than JAW_SNAP_TOL from every configured size is
    rejected.
    """
    best = min(gripper.jaw_sizes, key=lambda s: abs(s - size_m))
    if abs(best - size_m) > JAW_SNAP_TOL:
        raise ValueError(
            f"jaw size {size_m!r} m does not match any configured size "
            f"{gripper.jaw_sizes}"
        )
    return best


def _fail(reason: FailureReason, contacts=None) -> TrialOutcome:
    return TrialOutcome(success=False, failure_reason=reason, contacts=contacts)


def simulate_grasp(
    scene: Scene,
    grasp: Grasp,
    jaw_size: float,
    gripper: GripperConfig = GripperConfig(),
) -> TrialOutcome:
    """Run one grasp trial. `grasp` is in image coordinates; `jaw_size` is
    the physical jaw plate length in meters (grasp.h is ignored here).

    Raises ValueError for a jaw size that matches no configured size or a
    grasp center outside the image; everything else is an outcome.
    """
    cam = scene.camera
    res = cam.resolution
    jaw = snap_jaw_size(jaw_size, gripper)
    if not (0.0 <= grasp.x < cam.width and 0.0 <= grasp.y < cam.height):
        raise ValueError(
            f"grasp center ({grasp.x}, {grasp.y}) outside the "
            f"{cam.width}x{cam.height} image"
        )

    opening = grasp.w * res
    if opening > gripper.max_opening + _EPS_COORD:
        return _fail(FailureReason.OPENING_EXCEEDED)

    heights = scene.posed_height
    rows, cols = heights.shape
    row = min(int(grasp.y), rows - 1)
    col = min(int(grasp.x), cols - 1)

    # approach: surface normal at the center must be near vertical
    gx_all, gy_all = scene.height_gradient
    grad_mag = math.hypot(gx_all[row, col], gy_all[row, col])
    if math.degrees(math.atan(grad_mag)) > APPROACH_MAX_TILT_DEG:
        return _fail(FailureReason.APPROACH_COLLISION)

    z_grasp = max(0.0, float(heights[row, col]) - gripper.insertion_depth)
    occupied_above = z_grasp + _EPS_HEIGHT

    cx = grasp.x * res
    cy = grasp.y * res
    half_jaw = jaw / 2.0
    reach = opening / 2.0 + gripper.jaw_thickness
    radius = math.hypot(reach, half_jaw) + res

    r0 = max(0, int((cy - radius) / res) - 1)
    r1 = min(rows, int((cy + radius) / res) + 2)
    c0 = max(0, int((cx - radius) / res) - 1)
    c1 = min(cols, int((cx + radius) / res) + 2)
    crop = heights[r0:r1, c0:c1]
    if float(crop.max()) <= occupied_above:
        # nothing pokes above the grasp plane: clean descent, empty close
        return _fail(FailureReason.NO_CONTACT)

    # grasp-frame coordinates (u along the closing axis, v along the jaws)
    t = math.radians(grasp.theta)
    cos_t, sin_t = math.cos(t), math.sin(t)
    xs = (np.arange(c0, c1) + 0.5) * res - cx
    ys = (np.arange(r0, r1) + 0.5) * res - cy
    dx, dy = np.meshgrid(xs, ys)
    u = dx * cos_t + dy * sin_t
    v = -dx * sin_t + dy * cos_t

    occ = crop > occupied_above
    in_jaw_span = np.abs(v) <= half_jaw + _EPS_COORD
    half_open = opening / 2.0

    plate1 = in_jaw_span & (u >= half_open - _EPS_COORD) & (u <= reach + _EPS_COORD)
    plate2 = in_jaw_span & (u <= -half_open + _EPS_COORD) & (u >= -reach - _EPS_COORD)
    if (occ & (plate1 | plate2)).any():
        return _fail(FailureReason.APPROACH_COLLISION)

    strip = occ & in_jaw_span & (np.abs(u) < half_open)
    if not strip.any():
        return _fail(FailureReason.NO_CONTACT)

    u_occ = u[strip]
    u_max = float(u_occ.max())
    u_min = float(u_occ.min())
    # each jaw travels at most half_open before meeting at the center
    jaw1_touches = u_max >= -_EPS_COORD
    jaw2_touches = u_min <= _EPS_COORD

    layer = CONTACT_LAYER_CELLS * res
    gx = gx_all[r0:r1, c0:c1]
    gy = gy_all[r0:r1, c0:c1]

    def contact_for(mask, travel):
        n_cells = int(mask.sum())
        mgx = float(gx[mask].mean())
        mgy = float(gy[mask].mean())
        n = np.array([-mgx, -mgy, 1.0])
        n /= np.linalg.norm(n)
        return JawContact(cells=n_cells, normal=tuple(n.tolist()), travel=travel)

    contact1 = contact2 = None
    if jaw1_touches:
        contact1 = contact_for(strip & (u >= u_max - layer), half_open - u_max)
    if jaw2_touches:
        contact2 = contact_for(strip & (u <= u_min + layer), half_open + u_min)

    if not (jaw1_touches and jaw2_touches):
        return _fail(FailureReason.SINGLE_SIDE_CONTACT, (contact1, contact2))

    # hold: both contact normals inside the friction cone of the closing axis
    cone_cos = 1.0 / math.sqrt(1.0 + gripper.friction_mu**2)
    axis1 = np.array([cos_t, sin_t, 0.0])
    dot1 = float(np.dot(contact1.normal, axis1))
    dot2 = float(np.dot(contact2.normal, -axis1))
    contacts = (contact1, contact2)
    if dot1 < cone_cos - _EPS_COORD or dot2 < cone_cos - _EPS_COORD:
        return _fail(FailureReason.FRICTION_CONE_VIOLATION, contacts)

    # lift: friction payload with safety margin must carry the object
    payload_limit = 2.0 * gripper.friction_mu * gripper.grip_force
    if payload_limit < gripper.lift_safety_factor * scene.obj.mass * GRAVITY:
        return _fail(FailureReason.PAYLOAD_EXCEEDED, contacts)

    return TrialOutcome(success=True, contacts=contacts)


def trial_all_jaw_sizes(
    scene: Scene, grasp: Grasp, gripper: GripperConfig = GripperConfig()
) -> tuple[float, ...]:
    """Jaw sizes (meters) whose trial of this grasp succeeds."""
    return tuple(
        size
        for size in gripper.jaw_sizes
        if simulate_grasp(scene, grasp, size, gripper).success
    )
