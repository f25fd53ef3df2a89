"""Metric rectification of the imaged road plane.

A 3x3 homography maps undistorted pixel coordinates to a metric top-down
frame anchored at the annotated ground rectangle: corner 0 of the grid goes
to (0, 0), corner 1 to (width, 0), corner 2 to (width, height), corner 3 to
(0, height), all in meters.  The known rectangle size removes the scale
ambiguity, so distances in the rectified frame are real-world distances.

All measurement math operates on points; image warping exists only for the
aerial preview and never enters an estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distortion import distort_points, undistort_point, undistort_points
from .errors import DegenerateGrid, HorizonError
from .model import DistortionModel, GridAnnotation, PixelPoint

_COLLINEAR_SIN_TOL = 1e-12
_HORIZON_W_TOL = 1e-12
_CORNER_REPRODUCTION_TOL_M = 1e-9


@dataclass(frozen=True)
class RectifyingTransform:
    """Homography H (undistorted px -> meters), sign-fixed so visible road
    points have a positive homogeneous w.  ``horizon`` is the pixel line
    a*x + b*y + c = 0 mapped to infinity (the third row of H)."""

    H: np.ndarray

    @property
    def horizon(self) -> tuple[float, float, float]:
        a, b, c = self.H[2]
        return (float(a), float(b), float(c))

    def condition(self) -> float:
        return float(np.linalg.cond(self.H))


def _collinear(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> bool:
    ab = b - a
    ac = c - a
    cross = abs(ab[0] * ac[1] - ab[1] * ac[0])
    scale = np.linalg.norm(ab) * np.linalg.norm(ac)
    return scale == 0.0 or cross <= _COLLINEAR_SIN_TOL * scale


def fit_homography(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Homography H with dst ~ H @ src (homogeneous), for n >= 4 points.

    n == 4 uses the exact 8x8 linear solve (H33 = 1; falls back to the
    homogeneous SVD solve normalised by Frobenius norm when the geometry
    forces H33 = 0).  n > 4 uses Hartley-normalised DLT via SVD.
    """
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    n = src.shape[0]
    if n < 4 or dst.shape[0] != n:
        raise ValueError("need at least 4 point correspondences")

    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                if _collinear(src[i], src[j], src[k]):
                    raise DegenerateGrid(f"source points {i}, {j}, {k} are collinear")

    if n == 4:
        H = _solve_exact_4pt(src, dst)
    else:
        H = _solve_dlt(src, dst)
    return H


def _solve_exact_4pt(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    A = np.zeros((8, 8))
    b = np.zeros(8)
    for i in range(4):
        x, y = src[i]
        X, Y = dst[i]
        A[2 * i] = [x, y, 1, 0, 0, 0, -X * x, -X * y]
        b[2 * i] = X
        A[2 * i + 1] = [0, 0, 0, x, y, 1, -Y * x, -Y * y]
        b[2 * i + 1] = Y
    try:
        if np.linalg.cond(A) > 1e12:
            raise np.linalg.LinAlgError("ill-conditioned")
        h = np.linalg.solve(A, b)
        H = np.array([[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]])
    except np.linalg.LinAlgError:
        # H33 forced to (near) 0 by the geometry: homogeneous solve instead.
        H = _solve_dlt(src, dst)
        H = H / np.linalg.norm(H)
    return H


def _solve_dlt(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    n = src.shape[0]
    src_n, Ts = _hartley_normalize(src)
    dst_n, Td = _hartley_normalize(dst)
    A = np.zeros((2 * n, 9))
    for i in range(n):
        x, y = src_n[i]
        X, Y = dst_n[i]
        A[2 * i] = [x, y, 1, 0, 0, 0, -X * x, -X * y, -X]
        A[2 * i + 1] = [0, 0, 0, x, y, 1, -Y * x, -Y * y, -Y]
    _, _, vt = np.linalg.svd(A)
    Hn = vt[-1].reshape(3, 3)
    H = np.linalg.inv(Td) @ Hn @ Ts
    if abs(H[2, 2]) > 1e-9 * np.linalg.norm(H):
        H = H / H[2, 2]
    else:
        H = H / np.linalg.norm(H)
    return H


def _hartley_normalize(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    mean_dist = np.mean(np.linalg.norm(centered, axis=1))
    scale = math.sqrt(2.0) / mean_dist if mean_dist > 0 else 1.0
    T = np.array([[scale, 0, -scale * centroid[0]], [0, scale, -scale * centroid[1]], [0, 0, 1.0]])
    return centered * scale, T


def estimate_rectifying_transform(grid: GridAnnotation, model: DistortionModel) -> RectifyingTransform:
    """Solve the 4-corner correspondence {undistort(corner_i)} -> metric
    rectangle corners and verify the reproduction to 1e-9 m."""
    src = undistort_points(model, np.array([[c.x, c.y] for c in grid.corners]))
    w, h = grid.width_m, grid.height_m
    dst = np.array([[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]])
    H = fit_homography(src, dst)

    # Fix the overall sign so road-side points get w > 0.
    centroid = src.mean(axis=0)
    w_at_centroid = H[2, 0] * centroid[0] + H[2, 1] * centroid[1] + H[2, 2]
    if w_at_centroid < 0:
        H = -H
    elif w_at_centroid == 0.0:
        raise DegenerateGrid("grid centroid lies on the horizon")

    T = RectifyingTransform(H=H)
    mapped = np.array([map_point_xy(T, float(p[0]), float(p[1])) for p in src])
    err = float(np.max(np.linalg.norm(mapped - dst, axis=1)))
    if err > _CORNER_REPRODUCTION_TOL_M:
        raise DegenerateGrid(f"corner reproduction error {err:.3g} m exceeds {_CORNER_REPRODUCTION_TOL_M} m")
    return T


def map_point_xy(T: RectifyingTransform, x: float, y: float) -> tuple[float, float]:
    """Map one undistorted pixel coordinate to meters on the road plane."""
    hx = T.H[0, 0] * x + T.H[0, 1] * y + T.H[0, 2]
    hy = T.H[1, 0] * x + T.H[1, 1] * y + T.H[1, 2]
    hw = T.H[2, 0] * x + T.H[2, 1] * y + T.H[2, 2]
    if hw <= _HORIZON_W_TOL:
        raise HorizonError(f"pixel ({x}, {y}) at/beyond the vanishing line (w={hw:.3g})")
    return (hx / hw, hy / hw)


def map_point(T: RectifyingTransform, p: PixelPoint) -> tuple[float, float]:
    return map_point_xy(T, p.x, p.y)


def map_points(T: RectifyingTransform, pts: np.ndarray) -> np.ndarray:
    """Vectorised ``map_point`` over an (N, 2) array of undistorted pixels."""
    pts = np.asarray(pts, dtype=float)
    ones = np.ones((pts.shape[0], 1))
    hom = np.hstack([pts, ones]) @ T.H.T
    w = hom[:, 2]
    if np.any(w <= _HORIZON_W_TOL):
        raise HorizonError("point set reaches the vanishing line")
    return hom[:, :2] / w[:, None]


def ground_to_pixel(T: RectifyingTransform, ground: np.ndarray, model: DistortionModel) -> np.ndarray:
    """Inverse chain (meters -> distorted pixel), preview/rendering use only."""
    ground = np.asarray(ground, dtype=float)
    Hinv = np.linalg.inv(T.H)
    ones = np.ones((ground.shape[0], 1))
    hom = np.hstack([ground, ones]) @ Hinv.T
    w = hom[:, 2]
    if np.any(np.abs(w) <= _HORIZON_W_TOL):
        raise HorizonError("ground point maps to infinity in the image")
    ideal = hom[:, :2] / w[:, None]
    return distort_points(model, ideal)


def render_rectified_preview(
    T: RectifyingTransform,
    image: np.ndarray,
    bounds_m: tuple[float, float, float, float],
    px_per_m: float,
    model: DistortionModel | None = None,
) -> np.ndarray:
    """Inverse-warp an aerial (top-down) view of ``image``.

    ``bounds_m`` is (x_min, y_min, x_max, y_max) in the metric frame; output
    resolution is ``px_per_m``.  Bilinear sampling; pixels that fall outside
    the source frame are black.  For reports and the UI only.
    """
    x_min, y_min, x_max, y_max = bounds_m
    if not (x_max > x_min and y_max > y_min and px_per_m > 0):
        raise ValueError("empty preview bounds")
    out_w = max(1, round((x_max - x_min) * px_per_m))
    out_h = max(1, round((y_max - y_min) * px_per_m))

    xs = x_min + (np.arange(out_w) + 0.5) / px_per_m
    ys = y_min + (np.arange(out_h) + 0.5) / px_per_m
    gx, gy = np.meshgrid(xs, ys)
    ground = np.column_stack([gx.ravel(), gy.ravel()])

    Hinv = np.linalg.inv(T.H)
    hom = np.hstack([ground, np.ones((ground.shape[0], 1))]) @ Hinv.T
    w = hom[:, 2]
    valid = np.abs(w) > _HORIZON_W_TOL
    ideal = np.zeros((ground.shape[0], 2))
    ideal[valid] = hom[valid, :2] / w[valid, None]
    if model is not None and model.k != 0.0:
        ideal[valid] = distort_points(model, ideal[valid])

    src_h, src_w = image.shape[:2]
    px = ideal[:, 0]
    py = ideal[:, 1]
    inside = valid & (px >= 0) & (px <= src_w - 1) & (py >= 0) & (py <= src_h - 1)

    channels = image[..., None] if image.ndim == 2 else image
    out = np.zeros((out_h * out_w, channels.shape[2]), dtype=float)

    if np.any(inside):
        x0 = np.floor(px[inside]).astype(int)
        y0 = np.floor(py[inside]).astype(int)
        x1 = np.minimum(x0 + 1, src_w - 1)
        y1 = np.minimum(y0 + 1, src_h - 1)
        fx = (px[inside] - x0)[:, None]
        fy = (py[inside] - y0)[:, None]
        img = channels.astype(float)
        sample = (
            img[y0, x0] * (1 - fx) * (1 - fy)
            + img[y0, x1] * fx * (1 - fy)
            + img[y1, x0] * (1 - fx) * fy
            + img[y1, x1] * fx * fy
        )
        out[inside] = sample

    out = out.reshape(out_h, out_w, channels.shape[2])
    if image.ndim == 2:
        out = out[:, :, 0]
    return np.clip(np.rint(out), 0, 255).astype(np.uint8) if image.dtype == np.uint8 else out


def undistorted_corner_points(grid: GridAnnotation, model: DistortionModel) -> np.ndarray:
    return np.array([[p.x, p.y] for p in (undistort_point(model, c) for c in grid.corners)])
