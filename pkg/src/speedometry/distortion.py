"""Single-parameter division-model lens distortion.

The correction maps a distorted pixel p to its ideal (pinhole) position by
scaling its radius from the distortion centre c:

    p' = c + (p - c) / (1 + k * (r / norm)^2),   r = |p - c|

with the radius normalised by ``norm`` (half the image diagonal) so that k
is comparable across image sizes.  k < 0 corrects barrel distortion.  The
coefficient is estimated from manually annotated lines that are straight in
the world: the correct k is the one that makes them straight in the image.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DegenerateLine, FoldOverError, NoCurvatureSignal
from .model import DistortionModel, LineAnnotation, PixelPoint

K_MIN, K_MAX = -0.5, 0.5
_BRACKET_TOL = 5e-7  # final bracket width < 1e-6
_NO_SIGNAL_RESIDUAL_PX = 1e-3


def identity_model(image_size: tuple[int, int]) -> DistortionModel:
    w, h = image_size
    return DistortionModel(cx=w / 2.0, cy=h / 2.0, k=0.0, norm=half_diagonal(image_size))


def half_diagonal(image_size: tuple[int, int]) -> float:
    w, h = image_size
    return math.hypot(w, h) / 2.0


def undistort_point(model: DistortionModel, p: PixelPoint) -> PixelPoint:
    """Correct one pixel point.  k == 0 is a bit-exact identity."""
    if model.k == 0.0:
        return p
    dx, dy = p.x - model.cx, p.y - model.cy
    r2 = (dx * dx + dy * dy) / (model.norm * model.norm)
    denom = 1.0 + model.k * r2
    if denom <= 0.0:
        raise FoldOverError(f"division-model denominator {denom:.3g} <= 0 at ({p.x}, {p.y})")
    return PixelPoint(x=model.cx + dx / denom, y=model.cy + dy / denom)


def undistort_points(model: DistortionModel, pts: np.ndarray) -> np.ndarray:
    """Vectorised correction of an (N, 2) pixel array."""
    pts = np.asarray(pts, dtype=float)
    if model.k == 0.0:
        return pts.copy()
    c = np.array([model.cx, model.cy])
    d = pts - c
    r2 = np.sum(d * d, axis=-1) / (model.norm * model.norm)
    denom = 1.0 + model.k * r2
    if np.any(denom <= 0.0):
        raise FoldOverError("division-model denominator <= 0 inside point set")
    return c + d / denom[..., None]


def distort_points(model: DistortionModel, pts: np.ndarray, iterations: int = 30) -> np.ndarray:
    """Inverse map (ideal -> distorted), by fixed-point iteration on the radius:

        r_d <- r_u * (1 + k * (r_d / norm)^2)

    Used for image warping and by the synthetic-scene forward model; the
    measurement chain itself never needs it.
    """
    pts = np.asarray(pts, dtype=float)
    if model.k == 0.0:
        return pts.copy()
    c = np.array([model.cx, model.cy])
    d = pts - c
    r_u = np.sqrt(np.sum(d * d, axis=-1))
    r_d = r_u.copy()
    n2 = model.norm * model.norm
    for _ in range(iterations):
        r_d = r_u * (1.0 + model.k * (r_d * r_d) / n2)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(r_u > 0, r_d / np.where(r_u > 0, r_u, 1.0), 1.0)
    return c + d * scale[..., None]


def line_straightness_residual(model: DistortionModel, line: LineAnnotation) -> float:
    """RMS orthogonal distance (px) of the undistorted points to their
    total-least-squares best-fit line."""
    pts = np.array([[p.x, p.y] for p in line.points], dtype=float)
    und = undistort_points(model, pts)
    centered = und - und.mean(axis=0)
    span = np.max(np.linalg.norm(centered, axis=1))
    if span < 1e-9:
        raise DegenerateLine("undistorted points collapse to a point")
    # Principal direction via SVD; residuals are projections on the normal.
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    normal = vt[-1]
    dist = centered @ normal
    return float(np.sqrt(np.mean(dist * dist)))


def _objective(k: float, lines: list[LineAnnotation], cx: float, cy: float, norm: float) -> float:
    model = DistortionModel(cx=cx, cy=cy, k=k, norm=norm)
    total = 0.0
    for line in lines:
        try:
            r = line_straightness_residual(model, line)
        except FoldOverError:
            return float("inf")
        total += r * r
    return total


def fit_distortion(lines, image_size: tuple[int, int]) -> DistortionModel:
    """Fit k from straight-line annotations; centre fixed at the image centre.

    1-D bounded minimisation of the summed squared straightness residuals
    over k in [-0.5, 0.5] (coarse scan, then Brent refinement to a bracket
    narrower than 1e-6).  If the lines are already straight to below 1e-3 px
    at k = 0 there is no curvature signal to fit: the identity model is
    returned and a ``NoCurvatureSignal`` warning is issued.
    """
    lines = list(lines)
    if not lines:
        raise ValueError("need at least one line annotation")
    for line in lines:
        if len(line.points) < 3:
            raise ValueError("each line needs at least 3 points")
    w, h = image_size
    if w <= 0 or h <= 0:
        raise ValueError("image_size must be positive")
    cx, cy = w / 2.0, h / 2.0
    norm = half_diagonal(image_size)

    identity = DistortionModel(cx=cx, cy=cy, k=0.0, norm=norm)
    if all(line_straightness_residual(identity, line) < _NO_SIGNAL_RESIDUAL_PX for line in lines):
        warnings.warn(
            "all lines already straight at k=0; returning identity model", NoCurvatureSignal, stacklevel=2
        )
        return identity

    # Coarse scan guards against refining into a secondary local minimum.
    grid = np.linspace(K_MIN, K_MAX, 101)
    values = [_objective(k, lines, cx, cy, norm) for k in grid]
    best = int(np.argmin(values))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, len(grid) - 1)]
    result = minimize_scalar(
        _objective, bounds=(lo, hi), args=(lines, cx, cy, norm), method="bounded", options={"xatol": _BRACKET_TOL}
    )
    return DistortionModel(cx=cx, cy=cy, k=float(result.x), norm=norm)
