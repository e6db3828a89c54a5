"""Convex polygon clipping and area helpers for the rectangle overlap metric."""
from __future__ import annotations

import numpy as np


def polygon_area(points) -> float:
    """Shoelace area of a polygon given as an (n, 2) sequence of vertices."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 3:
        return 0.0
    x = pts[:, 0]
    y = pts[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def _cross_side(a, b, p) -> float:
    # signed area of triangle (a, b, p); >= 0 means p is on the left of a->b
    return (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])


def _line_intersection(p, q, a, b):
    # intersection of segment p->q with the infinite line through a->b;
    # callers only invoke this when p and q straddle the line, so the
    # denominator cannot vanish
    ex = b[0] - a[0]
    ey = b[1] - a[1]
    dx = q[0] - p[0]
    dy = q[1] - p[1]
    denom = ex * dy - ey * dx
    t = (ex * (a[1] - p[1]) - ey * (a[0] - p[0])) / denom
    return (p[0] + t * dx, p[1] + t * dy)


def clip_convex(subject, clip) -> list[tuple[float, float]]:
    """Clip convex polygon `subject` against convex polygon `clip`.

    Both polygons must be in counterclockwise vertex order. Returns the
    vertices of the intersection polygon (possibly empty).
    """
    output = [(float(p[0]), float(p[1])) for p in subject]
    clip_pts = [(float(p[0]), float(p[1])) for p in clip]
    n = len(clip_pts)
    for i in range(n):
        if not output:
            return []
        a = clip_pts[i]
        b = clip_pts[(i + 1) % n]
        polygon = output
        output = []
        prev = polygon[-1]
        prev_side = _cross_side(a, b, prev)
        for cur in polygon:
            cur_side = _cross_side(a, b, cur)
            if cur_side >= 0.0:
                if prev_side < 0.0:
                    output.append(_line_intersection(prev, cur, a, b))
                output.append(cur)
            elif prev_side >= 0.0:
                output.append(_line_intersection(prev, cur, a, b))
            prev = cur
            prev_side = cur_side
    return output
