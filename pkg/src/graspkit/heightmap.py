"""Object models as single-valued height fields over a table-plane grid.

An object is a 2-d grid of heights in meters (0 = bare table) at a fixed
cell resolution. Overhangs cannot be represented; that is the modeling
trade-off that keeps collision and contact queries exact and cheap.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import FormatError

# physical scale range for rescaled objects, meters
SCALE_RANGE = (0.08, 0.90)
# mass model: 10 g per cm of longest side
MASS_PER_METER = 1.0

_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_-]*$")


@dataclass(frozen=True)
class ObjectModel:
    """A heightmap object plus its physical attributes."""

    object_id: str
    heights: np.ndarray  # (rows, cols) float64, meters
    resolution: float  # meters per cell
    longest_side: float  # meters
    mass: float  # kg

    @classmethod
    def from_grid(cls, object_id: str, heights, resolution: float) -> "ObjectModel":
        if not _ID_RE.match(object_id):
            raise ValueError(f"object id not filesystem-safe: {object_id!r}")
        grid = np.asarray(heights, dtype=np.float64)
        if grid.ndim != 2 or grid.size == 0:
            raise ValueError(f"heightmap must be a non-empty 2-d grid, got {grid.shape}")
        if not np.isfinite(grid).all():
            raise ValueError("heightmap contains non-finite values")
        if (grid < 0).any():
            raise ValueError("heightmap contains negative heights")
        if not (grid > 0).any():
            raise ValueError(f"object {object_id!r} is empty (no positive heights)")
        if not (math.isfinite(resolution) and resolution > 0):
            raise ValueError(f"resolution must be positive, got {resolution}")
        grid = grid.copy()
        grid.setflags(write=False)
        longest = _longest_side(grid, resolution)
        return cls(
            object_id=object_id,
            heights=grid,
            resolution=float(resolution),
            longest_side=longest,
            mass=MASS_PER_METER * longest,
        )

    def footprint_bbox(self) -> tuple[int, int, int, int]:
        """(row0, row1, col0, col1), inclusive, of cells with material."""
        occ = self.heights > 0
        rows = np.flatnonzero(occ.any(axis=1))
        cols = np.flatnonzero(occ.any(axis=0))
        return int(rows[0]), int(rows[-1]), int(cols[0]), int(cols[-1])


def _longest_side(grid: np.ndarray, resolution: float) -> float:
    occ = grid > 0
    rows = np.flatnonzero(occ.any(axis=1))
    cols = np.flatnonzero(occ.any(axis=0))
    extent_y = (rows[-1] - rows[0] + 1) * resolution
    extent_x = (cols[-1] - cols[0] + 1) * resolution
    return float(max(extent_x, extent_y, grid.max()))


def rescale_to(model: ObjectModel, longest_side: float) -> ObjectModel:
    """Isotropically rescale so the longest bounding-box side equals the
    target. Mass follows the longest side."""
    if longest_side <= 0:
        raise ValueError(f"target longest side must be positive: {longest_side}")
    s = longest_side / model.longest_side
    return ObjectModel.from_grid(
        model.object_id, model.heights * s, model.resolution * s
    )


def rescale_object(model: ObjectModel, rng: np.random.Generator) -> ObjectModel:
    """Rescale to a longest side drawn uniformly from SCALE_RANGE."""
    lo, hi = SCALE_RANGE
    return rescale_to(model, float(rng.uniform(lo, hi)))


def rasterize_mesh(vertices, triangles, resolution: float) -> np.ndarray:
    """Rasterize a triangle mesh into a heightmap grid.

    Per cell, the height is the maximum z over all triangles whose xy
    projection covers the cell center. Triangles with a degenerate xy
    projection (vertical faces) are skipped. Negative z clamps to the
    table plane.
    """
    verts = np.asarray(vertices, dtype=np.float64)
    tris = np.asarray(triangles, dtype=np.int64)
    if verts.ndim != 2 or verts.shape[1] != 3 or len(verts) == 0:
        raise ValueError("vertices must be a non-empty (n, 3) array")
    if tris.ndim != 2 or tris.shape[1] != 3 or len(tris) == 0:
        raise ValueError("triangles must be a non-empty (m, 3) index array")
    if tris.min() < 0 or tris.max() >= len(verts):
        raise ValueError("triangle indices out of range")
    if resolution <= 0:
        raise ValueError(f"resolution must be positive, got {resolution}")

    x0, y0 = verts[:, 0].min(), verts[:, 1].min()
    cols = max(1, int(math.ceil((verts[:, 0].max() - x0) / resolution)))
    rows = max(1, int(math.ceil((verts[:, 1].max() - y0) / resolution)))
    grid = np.zeros((rows, cols), dtype=np.float64)

    cx = x0 + (np.arange(cols) + 0.5) * resolution
    cy = y0 + (np.arange(rows) + 0.5) * resolution

    for ia, ib, ic in tris:
        a, b, c = verts[ia], verts[ib], verts[ic]
        # 2x signed area of the xy projection
        area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(area2) < 1e-18:
            continue
        ci0 = np.searchsorted(cx, min(a[0], b[0], c[0]) - resolution)
        ci1 = np.searchsorted(cx, max(a[0], b[0], c[0]) + resolution)
        ri0 = np.searchsorted(cy, min(a[1], b[1], c[1]) - resolution)
        ri1 = np.searchsorted(cy, max(a[1], b[1], c[1]) + resolution)
        if ci0 == ci1 or ri0 == ri1:
            continue
        px, py = np.meshgrid(cx[ci0:ci1], cy[ri0:ri1])
        # barycentric coordinates in the xy projection
        l1 = ((b[0] - px) * (c[1] - py) - (b[1] - py) * (c[0] - px)) / area2
        l2 = ((c[0] - px) * (a[1] - py) - (c[1] - py) * (a[0] - px)) / area2
        l3 = 1.0 - l1 - l2
        tol = -1e-12
        inside = (l1 >= tol) & (l2 >= tol) & (l3 >= tol)
        z = l1 * a[2] + l2 * b[2] + l3 * c[2]
        z = np.where(inside, np.maximum(z, 0.0), 0.0)
        np.maximum(grid[ri0:ri1, ci0:ci1], z, out=grid[ri0:ri1, ci0:ci1])
    return grid


def save_object(model: ObjectModel, path) -> None:
    """Write an object file: header lines, then the row-major height grid."""
    rows, cols = model.heights.shape
    lines = [
        f"id {model.object_id}",
        f"resolution {model.resolution!r}",
        f"rows {rows}",
        f"cols {cols}",
    ]
    for r in range(rows):
        lines.append(" ".join(repr(v) for v in model.heights[r].tolist()))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_object(path) -> ObjectModel:
    with open(path) as f:
        raw_lines = f.read().splitlines()
    header: dict[str, str] = {}
    idx = -1
    for idx, line in enumerate(raw_lines):
        parts = line.split(None, 1)
        if len(parts) == 2 and parts[0] in ("id", "resolution", "rows", "cols"):
            if parts[0] in header:
                raise FormatError(f"duplicate header key {parts[0]}", path=path, line=idx + 1)
            header[parts[0]] = parts[1]
            if len(header) == 4:
                break
        else:
            idx -= 1  # not a header line; grid starts here
            break
    missing = {"id", "resolution", "rows", "cols"} - set(header)
    if missing:
        raise FormatError(f"missing header keys: {sorted(missing)}", path=path)
    try:
        rows = int(header["rows"])
        cols = int(header["cols"])
        resolution = float(header["resolution"])
    except ValueError as e:
        raise FormatError(f"bad header value: {e}", path=path) from None
    if rows <= 0 or cols <= 0:
        raise FormatError("rows and cols must be positive", path=path)
    grid = np.zeros((rows, cols), dtype=np.float64)
    body = raw_lines[idx + 1 :]
    if len(body) < rows:
        raise FormatError(f"expected {rows} grid rows, found {len(body)}", path=path)
    for r in range(rows):
        lineno = idx + 2 + r
        fields = body[r].split()
        if len(fields) != cols:
            raise FormatError(
                f"row has {len(fields)} values, expected {cols}", path=path, line=lineno
            )
        try:
            grid[r] = [float(v) for v in fields]
        except ValueError:
            raise FormatError("non-numeric height value", path=path, line=lineno) from None
    extra = [l for l in body[rows:] if l.strip()]
    if extra:
        raise FormatError("trailing content after height grid", path=path)
    try:
        return ObjectModel.from_grid(header["id"], grid, resolution)
    except ValueError as e:
        raise FormatError(str(e), path=path) from None
