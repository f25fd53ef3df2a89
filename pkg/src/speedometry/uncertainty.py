"""Worst-case distance intervals from contact-point uncertainty boxes.

Each contact point carries a (2m+1) x (2m+1) pixel box asserted to contain
the true tire-road point.  The box boundary is sampled, pushed through
undistortion and the rectifying homography, and wrapped in a convex hull on
the ground plane.  Per segment, d is the center-to-center distance, d_max
the farthest vertex pair, d_min the closest approach of the two hulls
(zero when they overlap), and

    delta_d_i = max(d_max_i - d_i, d_i - d_min_i)

Totals sum over segments: d = sum d_j, delta_d = sum delta_d_j.  As long as
every true point stays inside its box, the true path length lies in
[d - delta_d, d + delta_d]; nothing here is probabilistic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvariantViolation
from .model import ContactPoint, DistortionModel
from .distortion import undistort_points
from .rectify import RectifyingTransform, map_points

SAMPLES_PER_EDGE = 8
_CONTAIN_EPS = 1e-9
# Hull turn tolerance, relative to edge lengths: drops points that are
# collinear to fp noise (box edges map to exact segments when k = 0) while
# keeping genuine distortion curvature, which sits far above this.
_TURN_EPS = 1e-12


@dataclass(frozen=True)
class RectifiedRegion:
    """Ground-plane image of one uncertainty box.

    ``hull`` is CCW and strictly convex; m = 0 collapses it to the single
    rectified point.  ``frame`` ties the region back to its video frame for
    timing lookups.
    """

    hull: tuple[tuple[float, float], ...]
    center: tuple[float, float]
    frame: int

    def __post_init__(self):
        if len(self.hull) < 1:
            raise InvariantViolation("hull", "empty hull")
        flat = [c for v in self.hull for c in v] + list(self.center)
        if not all(math.isfinite(c) for c in flat):
            raise InvariantViolation("hull", "non-finite vertex")
        if len(self.hull) >= 3:
            pts = np.asarray(self.hull)
            nxt = np.roll(pts, -1, axis=0)
            nxt2 = np.roll(pts, -2, axis=0)
            e1 = nxt - pts
            e2 = nxt2 - nxt
            cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
            scale = np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1)
            if np.any(cross <= -_CONTAIN_EPS * scale):
                raise InvariantViolation("hull", "not strictly convex CCW")
            if not _convex_contains(pts, np.asarray(self.center), _hull_scale(pts)):
                raise InvariantViolation("center", "center outside hull")

    @property
    def hull_array(self) -> np.ndarray:
        return np.asarray(self.hull, dtype=float)

    def area(self) -> float:
        return hull_area(self.hull_array)


class SegmentInterval(NamedTuple):
    d_m: float
    d_max_m: float
    d_min_m: float
    delta_d_m: float


class PathDistance(NamedTuple):
    d_m: float
    delta_d_m: float
    segments: tuple[SegmentInterval, ...]


def _hull_scale(pts: np.ndarray) -> float:
    span = pts.max(axis=0) - pts.min(axis=0)
    return float(max(span[0], span[1], 1.0))


def _convex_contains(hull: np.ndarray, p: np.ndarray, scale: float) -> bool:
    nxt = np.roll(hull, -1, axis=0)
    edge = nxt - hull
    rel = p - hull
    cross = edge[:, 0] * rel[:, 1] - edge[:, 1] * rel[:, 0]
    return bool(np.all(cross >= -_CONTAIN_EPS * scale))


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull, CCW, collinear points dropped."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if pts.shape[0] <= 2:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def half(seq):
        out: list[np.ndarray] = []
        for p in seq:
            while len(out) >= 2:
                a, b = out[-2], out[-1]
                cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
                scale = math.hypot(b[0] - a[0], b[1] - a[1]) * math.hypot(p[0] - a[0], p[1] - a[1])
                if cross <= _TURN_EPS * scale:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    if hull.shape[0] < 3:
        # All input points collinear.
        return np.array([pts[0], pts[-1]])
    return hull


def hull_area(hull: np.ndarray) -> float:
    """Shoelace area; 0 for degenerate hulls."""
    hull = np.asarray(hull, dtype=float)
    if hull.shape[0] < 3:
        return 0.0
    x, y = hull[:, 0], hull[:, 1]
    return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def box_boundary_samples(cp: ContactPoint, samples_per_edge: int = SAMPLES_PER_EDGE) -> np.ndarray:
    """Pixel samples on the boundary of the (2m+1)^2 box: 4 corners plus
    ``samples_per_edge`` interior points per edge.  m = 0 yields only the
    center point."""
    x, y, m = cp.point.x, cp.point.y, cp.m
    if m == 0:
        return np.array([[x, y]])
    corners = np.array([[x - m, y - m], [x + m, y - m], [x + m, y + m], [x - m, y + m]], dtype=float)
    pts = [corners]
    ts = (np.arange(1, samples_per_edge + 1) / (samples_per_edge + 1))[:, None]
    for i in range(4):
        a, b = corners[i], corners[(i + 1) % 4]
        pts.append(a + ts * (b - a))
    return np.vstack(pts)


def rectify_region(
    cp: ContactPoint,
    model: DistortionModel,
    T: RectifyingTransform,
    samples_per_edge: int = SAMPLES_PER_EDGE,
) -> RectifiedRegion:
    """Image of the uncertainty box on the ground plane.

    Boundary samples go through undistort then the homography; their convex
    hull stands in for the true (possibly curved) region.  HorizonError from
    the mapping means the box is not measurable.
    """
    samples = box_boundary_samples(cp, samples_per_edge)
    ground = map_points(T, undistort_points(model, samples))
    center = map_points(T, undistort_points(model, np.array([[cp.point.x, cp.point.y]])))[0]
    if cp.m == 0:
        hull = center[None, :]
    else:
        hull = convex_hull(ground)
    return RectifiedRegion(
        hull=tuple((float(p[0]), float(p[1])) for p in hull),
        center=(float(center[0]), float(center[1])),
        frame=cp.frame,
    )


def _segment_segment_distance(p1, p2, q1, q2) -> float:
    """Min distance between segments [p1,p2] and [q1,q2]; handles degenerate
    (zero-length) segments."""
    d1 = p2 - p1
    d2 = q2 - q1
    r = p1 - q1
    a = float(np.dot(d1, d1))
    e = float(np.dot(d2, d2))
    f = float(np.dot(d2, r))
    if a == 0.0 and e == 0.0:
        return float(np.linalg.norm(p1 - q1))
    if a == 0.0:
        t = min(1.0, max(0.0, f / e))
        return float(np.linalg.norm(p1 - (q1 + t * d2)))
    c = float(np.dot(d1, r))
    if e == 0.0:
        s = min(1.0, max(0.0, -c / a))
        return float(np.linalg.norm(p1 + s * d1 - q1))
    b = float(np.dot(d1, d2))
    denom = a * e - b * b
    s = min(1.0, max(0.0, (b * f - c * e) / denom)) if denom > 0 else 0.0
    t = (b * s + f) / e
    if t < 0.0:
        t = 0.0
        s = min(1.0, max(0.0, -c / a))
    elif t > 1.0:
        t = 1.0
        s = min(1.0, max(0.0, (b - c) / a))
    return float(np.linalg.norm((p1 + s * d1) - (q1 + t * d2)))


def _edges(hull: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    n = hull.shape[0]
    if n == 1:
        return [(hull[0], hull[0])]
    if n == 2:
        return [(hull[0], hull[1])]
    return [(hull[i], hull[(i + 1) % n]) for i in range(n)]


def _hulls_min_distance(a: np.ndarray, b: np.ndarray) -> float:
    """0 when the convex hulls intersect, else the min boundary distance."""
    if a.shape[0] >= 3:
        scale = _hull_scale(a)
        if any(_convex_contains(a, q, scale) for q in b):
            return 0.0
    if b.shape[0] >= 3:
        scale = _hull_scale(b)
        if any(_convex_contains(b, p, scale) for p in a):
            return 0.0
    return min(
        _segment_segment_distance(p1, p2, q1, q2)
        for p1, p2 in _edges(a)
        for q1, q2 in _edges(b)
    )


def segment_interval(a: RectifiedRegion, b: RectifiedRegion) -> SegmentInterval:
    """Worst-case distance interval between two regions.

    d_max is exact over hull vertex pairs (the max of a convex function on a
    polytope sits at a vertex); d_min is the exact closest approach.
    """
    ca = np.asarray(a.center)
    cb = np.asarray(b.center)
    d = float(np.linalg.norm(ca - cb))
    ha, hb = a.hull_array, b.hull_array
    diff = ha[:, None, :] - hb[None, :, :]
    d_max = float(np.sqrt((diff ** 2).sum(axis=2)).max())
    d_min = _hulls_min_distance(ha, hb)
    delta = max(d_max - d, d - d_min)
    return SegmentInterval(d_m=d, d_max_m=d_max, d_min_m=d_min, delta_d_m=delta)


def path_distance(regions: Sequence[RectifiedRegion]) -> PathDistance:
    """Totals over consecutive segments: d = sum d_j, delta_d = sum delta_d_j."""
    if len(regions) < 2:
        raise InvariantViolation("regions", "need at least 2 regions for a path")
    segments = tuple(segment_interval(regions[i], regions[i + 1]) for i in range(len(regions) - 1))
    return PathDistance(
        d_m=float(sum(s.d_m for s in segments)),
        delta_d_m=float(sum(s.delta_d_m for s in segments)),
        segments=segments,
    )
