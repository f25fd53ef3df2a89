"""Domain types and the versioned project file format.

A project is a single human-readable JSON document (extension ``.fsp``,
``schema_version: 1``) with sections for the image size, extracted frames,
timing source, straight-line annotations, the metric ground rectangle, the
contact-point path, optional ground truth, and an optional fitted lens
model.  Saving is deterministic (fixed key order, full float precision) so
projects can be diffed and round-trip bit-for-bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path as FsPath
from typing import Optional, Union

from .errors import InvariantViolation, ParseError, SchemaVersionError

SCHEMA_VERSION = 1

# Annotations may sit slightly outside the frame; reject anything further
# than 10% of the image dimension beyond the border.
EDGE_MARGIN_FRACTION = 0.10


def _require_finite(value: float, field_name: str) -> float:
    v = float(value)
    if not math.isfinite(v):
        raise InvariantViolation(field_name, "must be finite")
    return v


@dataclass(frozen=True)
class PixelPoint:
    """Sub-pixel image coordinate, origin at the top-left corner."""

    x: float
    y: float

    def validate(self, field_name: str, image_size: Optional[tuple[int, int]] = None) -> None:
        _require_finite(self.x, field_name + ".x")
        _require_finite(self.y, field_name + ".y")
        if image_size is not None:
            w, h = image_size
            mx, my = EDGE_MARGIN_FRACTION * w, EDGE_MARGIN_FRACTION * h
            if not (-mx <= self.x <= w + mx and -my <= self.y <= h + my):
                raise InvariantViolation(field_name, f"({self.x}, {self.y}) outside image bounds {w}x{h} (+10% margin)")


@dataclass(frozen=True)
class FrameRef:
    """Reference to one extracted video frame."""

    index: int
    image_path: Optional[str] = None
    timestamp_s: Optional[float] = None


@dataclass(frozen=True)
class LineAnnotation:
    """Points sampled along one real-world straight line (for lens calibration)."""

    points: tuple[PixelPoint, ...]

    def validate(self, field_name: str, image_size: Optional[tuple[int, int]] = None) -> None:
        if len(self.points) < 3:
            raise InvariantViolation(field_name, "needs at least 3 points")
        for i, p in enumerate(self.points):
            p.validate(f"{field_name}.points[{i}]", image_size)
        span = max(
            math.hypot(p.x - q.x, p.y - q.y) for p in self.points for q in self.points
        )
        if span <= 1.0:
            raise InvariantViolation(field_name, f"points span {span:.3g} px; need > 1 px")


def _quad_cross_signs(corners) -> list[float]:
    """Cross products of consecutive edges around the quadrilateral."""
    signs = []
    for i in range(4):
        a, b, c = corners[i], corners[(i + 1) % 4], corners[(i + 2) % 4]
        e1 = (b.x - a.x, b.y - a.y)
        e2 = (c.x - b.x, c.y - b.y)
        signs.append(e1[0] * e2[1] - e1[1] * e2[0])
    return signs


@dataclass(frozen=True)
class GridAnnotation:
    """The annotated ground rectangle that fixes the metric scale.

    ``corners`` trace the rectangle boundary; corner 0 maps to (0, 0),
    corner 1 to (width_m, 0), corner 2 to (width_m, height_m), corner 3 to
    (0, height_m).  The declared order is authoritative: it is never
    inferred from the geometry.
    """

    corners: tuple[PixelPoint, PixelPoint, PixelPoint, PixelPoint]
    width_m: float
    height_m: float

    def validate(self, field_name: str = "grid", image_size: Optional[tuple[int, int]] = None) -> None:
        if len(self.corners) != 4:
            raise InvariantViolation(field_name + ".corners", "exactly 4 corners required")
        for i, p in enumerate(self.corners):
            p.validate(f"{field_name}.corners[{i}]", image_size)
        for i, p in enumerate(self.corners):
            for q in self.corners[i + 1:]:
                if p.x == q.x and p.y == q.y:
                    raise InvariantViolation(field_name + ".corners", "corners must be distinct")
        crosses = _quad_cross_signs(self.corners)
        if any(c == 0.0 for c in crosses):
            raise InvariantViolation(field_name + ".corners", "three corners are collinear")
        if not (all(c > 0 for c in crosses) or all(c < 0 for c in crosses)):
            raise InvariantViolation(field_name + ".corners", "corners do not form a strictly convex quadrilateral")
        if not (_require_finite(self.width_m, field_name + ".width_m") > 0):
            raise InvariantViolation(field_name + ".width_m", "must be > 0")
        if not (_require_finite(self.height_m, field_name + ".height_m") > 0):
            raise InvariantViolation(field_name + ".height_m", "must be > 0")


@dataclass(frozen=True)
class ContactPoint:
    """Annotated tire/road contact point with its pixel uncertainty radius.

    ``m`` declares a (2m+1) x (2m+1) pixel box centred on ``point`` that is
    asserted to contain the true contact point.
    """

    frame: int
    point: PixelPoint
    m: int

    def validate(self, field_name: str, image_size: Optional[tuple[int, int]] = None) -> None:
        if self.frame < 0:
            raise InvariantViolation(field_name + ".frame", "must be >= 0")
        if not isinstance(self.m, int) or self.m < 0:
            raise InvariantViolation(field_name + ".m", "must be an integer >= 0")
        self.point.validate(field_name + ".point", image_size)

    def box_pixel_count(self) -> int:
        return (2 * self.m + 1) ** 2


@dataclass(frozen=True)
class PathAnnotation:
    """Ordered contact points defining the vehicle path (N+1 points, N segments)."""

    cps: tuple[ContactPoint, ...]

    def validate(self, field_name: str = "path", image_size: Optional[tuple[int, int]] = None) -> None:
        for i, cp in enumerate(self.cps):
            cp.validate(f"{field_name}.cps[{i}]", image_size)
        for a, b in zip(self.cps, self.cps[1:]):
            if b.frame <= a.frame:
                raise InvariantViolation(field_name, "frames strictly increasing")


@dataclass(frozen=True)
class ConstantFps:
    fps: float

    def validate(self, field_name: str = "timing") -> None:
        if not (_require_finite(self.fps, field_name + ".fps") > 0):
            raise InvariantViolation(field_name + ".fps", "must be > 0")


@dataclass(frozen=True)
class Timestamps:
    """Frame times read from a plain-text PTS sidecar (one seconds value per line)."""

    sidecar: str

    def validate(self, field_name: str = "timing") -> None:
        if not self.sidecar:
            raise InvariantViolation(field_name + ".sidecar", "path must be non-empty")


TimingMode = Union[ConstantFps, Timestamps]

DEFAULT_DELTA_T_S = 0.005


@dataclass(frozen=True)
class TimingSpec:
    """Timing source plus the half-width endpoint time uncertainty."""

    mode: TimingMode
    delta_t_s: float = DEFAULT_DELTA_T_S

    def validate(self, field_name: str = "timing") -> None:
        if not isinstance(self.mode, (ConstantFps, Timestamps)):
            raise InvariantViolation(field_name + ".mode", "must be cfr or pts")
        self.mode.validate(field_name)
        if not (_require_finite(self.delta_t_s, field_name + ".delta_t_s") >= 0):
            raise InvariantViolation(field_name + ".delta_t_s", "must be >= 0")


GROUND_TRUTH_UNITS = ("mph", "km/h", "m/s")


@dataclass(frozen=True)
class GroundTruth:
    speed: float
    unit: str
    source: str = ""

    def validate(self, field_name: str = "ground_truth") -> None:
        if not (_require_finite(self.speed, field_name + ".speed") > 0):
            raise InvariantViolation(field_name + ".speed", "must be > 0")
        if self.unit not in GROUND_TRUTH_UNITS:
            raise InvariantViolation(field_name + ".unit", f"must be one of {GROUND_TRUTH_UNITS}")

    def speed_mps(self) -> float:
        from .speed import to_mps

        return to_mps(self.speed, self.unit)


@dataclass(frozen=True)
class DistortionModel:
    """One-parameter division-model lens distortion (see the distortion module)."""

    cx: float
    cy: float
    k: float
    norm: float

    def validate(self, field_name: str = "distortion") -> None:
        _require_finite(self.cx, field_name + ".cx")
        _require_finite(self.cy, field_name + ".cy")
        _require_finite(self.k, field_name + ".k")
        if not (_require_finite(self.norm, field_name + ".norm") > 0):
            raise InvariantViolation(field_name + ".norm", "must be > 0")
        # No fold-over anywhere a valid annotation can sit (image + 10% margin).
        r_hat_max = 1.0 + EDGE_MARGIN_FRACTION
        if 1.0 + self.k * r_hat_max * r_hat_max <= 0.0:
            raise InvariantViolation(field_name + ".k", "model folds over inside the image")


@dataclass(frozen=True)
class Project:
    """One video analysis: frames, timing, annotations, and optional results."""

    image_size: tuple[int, int]
    frames: tuple[FrameRef, ...] = ()
    timing: Optional[TimingSpec] = None
    lines: tuple[LineAnnotation, ...] = ()
    grid: Optional[GridAnnotation] = None
    path: Optional[PathAnnotation] = None
    ground_truth: Optional[GroundTruth] = None
    distortion: Optional[DistortionModel] = None

    def validate(self) -> None:
        w, h = self.image_size
        if not (isinstance(w, int) and isinstance(h, int) and w > 0 and h > 0):
            raise InvariantViolation("image_size", "width and height must be positive integers")
        size = (w, h)

        declared = set()
        prev_index = None
        prev_ts = None
        for i, f in enumerate(self.frames):
            if f.index < 0:
                raise InvariantViolation(f"frames[{i}].index", "must be >= 0")
            if prev_index is not None and f.index <= prev_index:
                raise InvariantViolation("frames", "indices strictly increasing")
            prev_index = f.index
            declared.add(f.index)
            if f.timestamp_s is not None:
                ts = _require_finite(f.timestamp_s, f"frames[{i}].timestamp_s")
                if prev_ts is not None and ts <= prev_ts:
                    raise InvariantViolation("frames", "timestamps strictly increasing")
                prev_ts = ts

        if self.timing is not None:
            self.timing.validate("timing")
        for i, line in enumerate(self.lines):
            line.validate(f"lines[{i}]", size)
        if self.grid is not None:
            self.grid.validate("grid", size)
        if self.path is not None:
            self.path.validate("path", size)
            if declared:
                for i, cp in enumerate(self.path.cps):
                    if cp.frame not in declared:
                        raise InvariantViolation(f"path.cps[{i}].frame", f"frame {cp.frame} not declared in frames")
        if self.ground_truth is not None:
            self.ground_truth.validate("ground_truth")
        if self.distortion is not None:
            self.distortion.validate("distortion")

    def with_distortion(self, model: Optional[DistortionModel]) -> "Project":
        return replace(self, distortion=model)


# ---------------------------------------------------------------------------
# Serialization


def _point_to_doc(p: PixelPoint) -> dict:
    return {"x": p.x, "y": p.y}


def _point_from_doc(doc, field_name: str) -> PixelPoint:
    try:
        return PixelPoint(x=float(doc["x"]), y=float(doc["y"]))
    except (TypeError, KeyError, ValueError) as e:
        raise ParseError(f"{field_name}: expected {{x, y}} object ({e})") from e


def project_to_doc(project: Project) -> dict:
    """Project -> plain document dict, in canonical key order."""
    doc: dict = {
        "schema_version": SCHEMA_VERSION,
        "image_size": {"width": project.image_size[0], "height": project.image_size[1]},
        "frames": [
            {"index": f.index, "image_path": f.image_path, "timestamp_s": f.timestamp_s}
            for f in project.frames
        ],
    }
    if project.timing is None:
        doc["timing"] = None
    elif isinstance(project.timing.mode, ConstantFps):
        doc["timing"] = {"mode": "cfr", "fps": project.timing.mode.fps, "delta_t_s": project.timing.delta_t_s}
    else:
        doc["timing"] = {"mode": "pts", "sidecar": project.timing.mode.sidecar, "delta_t_s": project.timing.delta_t_s}
    doc["lines"] = [{"points": [_point_to_doc(p) for p in line.points]} for line in project.lines]
    doc["grid"] = (
        None
        if project.grid is None
        else {
            "corners": [_point_to_doc(p) for p in project.grid.corners],
            "width_m": project.grid.width_m,
            "height_m": project.grid.height_m,
        }
    )
    doc["path"] = (
        None
        if project.path is None
        else {
            "cps": [
                {"frame": cp.frame, "point": _point_to_doc(cp.point), "m": cp.m}
                for cp in project.path.cps
            ]
        }
    )
    doc["ground_truth"] = (
        None
        if project.ground_truth is None
        else {
            "speed": project.ground_truth.speed,
            "unit": project.ground_truth.unit,
            "source": project.ground_truth.source,
        }
    )
    doc["distortion"] = (
        None
        if project.distortion is None
        else {
            "cx": project.distortion.cx,
            "cy": project.distortion.cy,
            "k": project.distortion.k,
            "norm": project.distortion.norm,
        }
    )
    return doc


def project_from_doc(doc: dict) -> Project:
    if not isinstance(doc, dict):
        raise ParseError("project document must be an object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"unsupported schema_version {version!r}; expected {SCHEMA_VERSION}")

    try:
        size_doc = doc["image_size"]
        image_size = (int(size_doc["width"]), int(size_doc["height"]))
    except (TypeError, KeyError, ValueError) as e:
        raise ParseError(f"image_size: {e}") from e

    frames = []
    for i, f in enumerate(doc.get("frames") or []):
        try:
            frames.append(
                FrameRef(
                    index=int(f["index"]),
                    image_path=f.get("image_path"),
                    timestamp_s=None if f.get("timestamp_s") is None else float(f["timestamp_s"]),
                )
            )
        except (TypeError, KeyError, ValueError) as e:
            raise ParseError(f"frames[{i}]: {e}") from e

    timing_doc = doc.get("timing")
    timing = None
    if timing_doc is not None:
        mode = timing_doc.get("mode")
        delta_t = float(timing_doc.get("delta_t_s", DEFAULT_DELTA_T_S))
        if mode == "cfr":
            timing = TimingSpec(mode=ConstantFps(fps=float(timing_doc["fps"])), delta_t_s=delta_t)
        elif mode == "pts":
            timing = TimingSpec(mode=Timestamps(sidecar=str(timing_doc["sidecar"])), delta_t_s=delta_t)
        else:
            raise ParseError(f"timing.mode: expected 'cfr' or 'pts', got {mode!r}")

    lines = tuple(
        LineAnnotation(
            points=tuple(_point_from_doc(p, f"lines[{i}].points[{j}]") for j, p in enumerate(line.get("points") or []))
        )
        for i, line in enumerate(doc.get("lines") or [])
    )

    grid_doc = doc.get("grid")
    grid = None
    if grid_doc is not None:
        corners = [_point_from_doc(p, f"grid.corners[{i}]") for i, p in enumerate(grid_doc.get("corners") or [])]
        if len(corners) != 4:
            raise InvariantViolation("grid.corners", f"exactly 4 corners required, got {len(corners)}")
        try:
            grid = GridAnnotation(
                corners=(corners[0], corners[1], corners[2], corners[3]),
                width_m=float(grid_doc["width_m"]),
                height_m=float(grid_doc["height_m"]),
            )
        except (TypeError, KeyError, ValueError) as e:
            raise ParseError(f"grid: {e}") from e

    path_doc = doc.get("path")
    path = None
    if path_doc is not None:
        cps = []
        for i, cp in enumerate(path_doc.get("cps") or []):
            try:
                m = cp["m"]
                if isinstance(m, float) and not m.is_integer():
                    raise InvariantViolation(f"path.cps[{i}].m", "must be an integer")
                cps.append(
                    ContactPoint(frame=int(cp["frame"]), point=_point_from_doc(cp["point"], f"path.cps[{i}].point"), m=int(m))
                )
            except (TypeError, KeyError, ValueError) as e:
                raise ParseError(f"path.cps[{i}]: {e}") from e
        path = PathAnnotation(cps=tuple(cps))

    gt_doc = doc.get("ground_truth")
    ground_truth = None
    if gt_doc is not None:
        try:
            ground_truth = GroundTruth(speed=float(gt_doc["speed"]), unit=str(gt_doc["unit"]), source=str(gt_doc.get("source", "")))
        except (TypeError, KeyError, ValueError) as e:
            raise ParseError(f"ground_truth: {e}") from e

    dist_doc = doc.get("distortion")
    distortion = None
    if dist_doc is not None:
        try:
            distortion = DistortionModel(
                cx=float(dist_doc["cx"]), cy=float(dist_doc["cy"]), k=float(dist_doc["k"]), norm=float(dist_doc["norm"])
            )
        except (TypeError, KeyError, ValueError) as e:
            raise ParseError(f"distortion: {e}") from e

    project = Project(
        image_size=image_size,
        frames=tuple(frames),
        timing=timing,
        lines=lines,
        grid=grid,
        path=path,
        ground_truth=ground_truth,
        distortion=distortion,
    )
    project.validate()
    return project


def save_project(project: Project) -> bytes:
    """Serialize to canonical bytes: fixed key order, full float precision."""
    project.validate()
    doc = project_to_doc(project)
    return (json.dumps(doc, indent=2, allow_nan=False) + "\n").encode("utf-8")


def loads_project(data: Union[str, bytes]) -> Project:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(f"line {e.lineno}: {e.msg}") from e
    project = project_from_doc(doc)
    # json.loads admits NaN/Infinity literals; validate() rejects non-finite
    # values, but only for fields it inspects, so sweep the raw document too.
    _reject_non_finite(doc, "project")
    return project


def _reject_non_finite(node, where: str) -> None:
    if isinstance(node, float) and not math.isfinite(node):
        raise InvariantViolation(where, "must be finite")
    elif isinstance(node, dict):
        for key, value in node.items():
            _reject_non_finite(value, f"{where}.{key}")
    elif isinstance(node, list):
        for i, value in enumerate(node):
            _reject_non_finite(value, f"{where}[{i}]")


def load_project(path) -> Project:
    return loads_project(FsPath(path).read_bytes())


def write_project(project: Project, path) -> None:
    FsPath(path).write_bytes(save_project(project))


# ---------------------------------------------------------------------------
# Analyst-facing warnings (non-blocking)


def validate_warnings(project: Project) -> list[str]:
    """Warn-level checks for an otherwise structurally valid project."""
    warnings = []
    if len(project.lines) == 0:
        warnings.append("distortion uncorrectable: no straight-line annotations")
    elif len(project.lines) < 3:
        warnings.append(f"distortion fit weakly constrained: only {len(project.lines)} line annotation(s)")
    if project.path is not None and len(project.path.cps) == 2:
        warnings.append("straight-path simplification in effect: path has two contact points only")
    if project.path is None or len(project.path.cps) < 2:
        warnings.append("path incomplete: fewer than 2 contact points")
    if project.grid is None:
        warnings.append("no rectification reference: grid missing")
    if project.timing is None:
        warnings.append("timing source not set")
    if project.ground_truth is None:
        warnings.append("no ground truth recorded")
    return warnings


# ---------------------------------------------------------------------------
# Timestamp sidecar (plain text, one seconds value per line)


def parse_sidecar(text: str) -> list[float]:
    """Parse a PTS sidecar: one decimal seconds value per line, ``#`` comments
    and blank lines ignored; values must be strictly increasing."""
    from .errors import NonMonotonicTimestamps

    times: list[float] = []
    prev = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            t = float(stripped)
        except ValueError as e:
            raise ParseError(f"sidecar line {lineno}: {stripped!r} is not a number") from e
        if not math.isfinite(t):
            raise InvariantViolation(f"sidecar line {lineno}", "must be finite")
        if prev is not None and t <= prev:
            raise NonMonotonicTimestamps(lineno)
        times.append(t)
        prev = t
    return times
