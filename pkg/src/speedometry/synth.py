"""Synthetic scene generator: the forward model every stage is tested against.

A pinhole camera above the ground plane (z = 0) images a vehicle moving at
constant speed along a straight ground line.  Projected contact points get
division-model distortion (closed-form forward map, independent of the
iterative inverse used elsewhere) plus bounded annotation noise, and the
result is packaged as a regular project file with known ground truth.

World frame: x/y on the road, z up.  Camera orientation is yaw (about z),
then pitch (downward tilt), then roll (about the optical axis); image x
grows to the camera's right, image y downward.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .distortion import half_diagonal
from .errors import FoldOverError, FrustumError, InvariantViolation, ParseError
from .model import (
    ConstantFps,
    ContactPoint,
    DistortionModel,
    FrameRef,
    GridAnnotation,
    GroundTruth,
    LineAnnotation,
    PathAnnotation,
    PixelPoint,
    Project,
    TimingSpec,
    Timestamps,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_MIN_DEPTH_M = 0.25
_EDGE_GUARD_PX = 1.0
_LINE_SAMPLES = 24
_MIN_LINE_POINTS = 5


@dataclass(frozen=True)
class CameraSpec:
    position: tuple[float, float, float]
    yaw_deg: float
    pitch_deg: float
    roll_deg: float
    focal_px: float
    image_size: tuple[int, int]

    def validate(self) -> None:
        if self.position[2] <= 0:
            raise InvariantViolation("camera.position", "camera must sit above the ground plane")
        if self.focal_px <= 0:
            raise InvariantViolation("camera.focal_px", "must be > 0")
        w, h = self.image_size
        if w < 8 or h < 8:
            raise InvariantViolation("camera.image_size", "implausibly small image")
        if not -90.0 <= self.pitch_deg <= 90.0:
            raise InvariantViolation("camera.pitch_deg", "must be within [-90, 90]")


@dataclass(frozen=True)
class ClockSpec:
    fps: Optional[float] = None
    n_frames: int = 0
    timestamps: Optional[tuple[float, ...]] = None
    sidecar: str = "timestamps.pts"
    delta_t_s: float = 0.005

    def validate(self) -> None:
        if self.timestamps is not None:
            if len(self.timestamps) < 2:
                raise InvariantViolation("clock.timestamps", "need at least 2 timestamps")
            if any(b <= a for a, b in zip(self.timestamps, self.timestamps[1:])):
                raise InvariantViolation("clock.timestamps", "must be strictly increasing")
        else:
            if self.fps is None or self.fps <= 0:
                raise InvariantViolation("clock.fps", "must be > 0")
            if self.n_frames < 2:
                raise InvariantViolation("clock.n_frames", "need at least 2 frames")
        if self.delta_t_s < 0:
            raise InvariantViolation("clock.delta_t_s", "must be >= 0")

    def times(self) -> tuple[float, ...]:
        if self.timestamps is not None:
            return self.timestamps
        return tuple(i / self.fps for i in range(self.n_frames))


@dataclass(frozen=True)
class SceneSpec:
    camera: CameraSpec
    k: float
    grid_origin: tuple[float, float]
    grid_angle_deg: float
    grid_width_m: float
    grid_height_m: float
    vehicle_start: tuple[float, float]
    heading: tuple[float, float]
    speed_mps: float
    clock: ClockSpec
    rho_px: float = 0.0
    cp_m: int = 1
    lane_offsets_m: tuple[float, ...] = (-1.75, 1.75)
    gt_unit: str = "m/s"
    seed: int = 0

    def validate(self) -> None:
        self.camera.validate()
        self.clock.validate()
        if not -0.5 <= self.k <= 0.5:
            raise InvariantViolation("k", "distortion parameter out of range")
        if self.grid_width_m <= 0 or self.grid_height_m <= 0:
            raise InvariantViolation("grid", "rectangle sides must be > 0")
        if math.hypot(*self.heading) == 0:
            raise InvariantViolation("heading", "must be a nonzero vector")
        if self.speed_mps <= 0:
            raise InvariantViolation("speed_mps", "must be > 0")
        if self.rho_px < 0:
            raise InvariantViolation("rho_px", "must be >= 0")
        if self.cp_m < 0:
            raise InvariantViolation("cp_m", "must be >= 0")
        if self.rho_px > self.cp_m:
            raise InvariantViolation("rho_px", f"noise bound {self.rho_px} exceeds annotated m {self.cp_m}")

    def heading_unit(self) -> np.ndarray:
        h = np.asarray(self.heading, dtype=float)
        return h / np.linalg.norm(h)


# ---------------------------------------------------------------------------
# Pinhole projection


def camera_basis(cam: CameraSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(right, down, forward) world-frame unit vectors."""
    psi = math.radians(cam.yaw_deg)
    th = math.radians(cam.pitch_deg)
    ph = math.radians(cam.roll_deg)
    forward = np.array([math.cos(th) * math.cos(psi), math.cos(th) * math.sin(psi), -math.sin(th)])
    right0 = np.array([math.sin(psi), -math.cos(psi), 0.0])
    down0 = np.cross(forward, right0)
    right = math.cos(ph) * right0 + math.sin(ph) * down0
    down = -math.sin(ph) * right0 + math.cos(ph) * down0
    return right, down, forward


def project_ideal(cam: CameraSpec, world: np.ndarray) -> np.ndarray:
    """Undistorted pixel coordinates of (N, 3) world points."""
    right, down, forward = camera_basis(cam)
    rel = np.atleast_2d(world) - np.asarray(cam.position)
    depth = rel @ forward
    if np.any(depth < _MIN_DEPTH_M):
        raise FrustumError(f"point at depth {float(depth.min()):.3g} m is behind the camera")
    w, h = cam.image_size
    u = w / 2.0 + cam.focal_px * (rel @ right) / depth
    v = h / 2.0 + cam.focal_px * (rel @ down) / depth
    return np.column_stack([u, v])


def distort_ideal(spec: SceneSpec, ideal: np.ndarray) -> np.ndarray:
    """Closed-form forward division-model distortion.

    Solving r_u = r_d / (1 + k (r_d / norm)^2) for r_d gives the quadratic
    root continuous at k = 0; FoldOverError when no real solution exists.
    """
    if spec.k == 0.0:
        return np.array(ideal, dtype=float, copy=True)
    w, h = spec.camera.image_size
    cx, cy = w / 2.0, h / 2.0
    norm = half_diagonal(spec.camera.image_size)
    rel = np.atleast_2d(ideal) - [cx, cy]
    r_u = np.linalg.norm(rel, axis=1)
    a = spec.k * r_u / norm**2
    disc = 1.0 - 4.0 * a * r_u
    if np.any(disc < 0):
        raise FoldOverError("ideal point outside the invertible range of the distortion")
    with np.errstate(divide="ignore", invalid="ignore"):
        r_d = np.where(r_u > 0, 2.0 * r_u / (1.0 + np.sqrt(disc)), 0.0)
        scale = np.where(r_u > 0, r_d / r_u, 1.0)
    return np.array([cx, cy]) + rel * scale[:, None]


def scene_distortion_model(spec: SceneSpec) -> DistortionModel:
    w, h = spec.camera.image_size
    return DistortionModel(cx=w / 2.0, cy=h / 2.0, k=spec.k, norm=half_diagonal(spec.camera.image_size))


def project_to_pixels(spec: SceneSpec, world: np.ndarray) -> np.ndarray:
    return distort_ideal(spec, project_ideal(spec.camera, world))


def road_image_plane_angle_deg(spec: SceneSpec) -> float:
    """Angle between the vehicle's road line and the image plane."""
    _, _, forward = camera_basis(spec.camera)
    h = spec.heading_unit()
    return math.degrees(math.asin(abs(h[0] * forward[0] + h[1] * forward[1])))


def yaw_for_road_angle(pitch_deg: float, target_angle_deg: float, heading_deg: float = 0.0) -> float:
    """Yaw that makes the road meet the image plane at the target angle."""
    s = math.sin(math.radians(target_angle_deg)) / math.cos(math.radians(pitch_deg))
    if not 0.0 <= s <= 1.0:
        raise ValueError("target angle unreachable at this pitch")
    return heading_deg - math.degrees(math.acos(s))


# ---------------------------------------------------------------------------
# Scene assembly


def _ground3(p: np.ndarray) -> np.ndarray:
    p = np.atleast_2d(p)
    return np.column_stack([p, np.zeros(p.shape[0])])


def _grid_world_corners(spec: SceneSpec) -> np.ndarray:
    ang = math.radians(spec.grid_angle_deg)
    ex = np.array([math.cos(ang), math.sin(ang)])
    ey = np.array([-math.sin(ang), math.cos(ang)])
    o = np.asarray(spec.grid_origin, dtype=float)
    w, h = spec.grid_width_m, spec.grid_height_m
    return np.array([o, o + w * ex, o + w * ex + h * ey, o + h * ey])


def _vehicle_positions(spec: SceneSpec, times: Sequence[float]) -> np.ndarray:
    start = np.asarray(spec.vehicle_start, dtype=float)
    h = spec.heading_unit()
    return start[None, :] + np.asarray(times)[:, None] * spec.speed_mps * h[None, :]


def _check_inside(pix: np.ndarray, image_size: tuple[int, int], guard: float, what: str) -> None:
    w, h = image_size
    ok = (
        (pix[:, 0] >= guard)
        & (pix[:, 0] <= w - 1 - guard)
        & (pix[:, 1] >= guard)
        & (pix[:, 1] <= h - 1 - guard)
    )
    if not bool(np.all(ok)):
        i = int(np.argmin(ok))
        raise FrustumError(f"{what} at ({pix[i, 0]:.1f}, {pix[i, 1]:.1f}) leaves the {w}x{h} view")


def _calibration_lines(spec: SceneSpec, times: Sequence[float]) -> tuple[LineAnnotation, ...]:
    """Lane-edge world lines sampled along the pass; only points that land
    inside the frame are kept, mirroring what an annotator could click."""
    h = spec.heading_unit()
    perp = np.array([-h[1], h[0]])
    start = np.asarray(spec.vehicle_start, dtype=float)
    t_lo, t_hi = min(times), max(times)
    pad = 0.15 * (t_hi - t_lo)
    ts = np.linspace(t_lo - pad, t_hi + pad, _LINE_SAMPLES)
    w, hgt = spec.camera.image_size
    lines = []
    for off in spec.lane_offsets_m:
        base = start + off * perp
        world = _ground3(base[None, :] + ts[:, None] * spec.speed_mps * h[None, :])
        try:
            pix = project_to_pixels(spec, world)
        except (FrustumError, FoldOverError):
            continue
        keep = (
            (pix[:, 0] >= _EDGE_GUARD_PX)
            & (pix[:, 0] <= w - 1 - _EDGE_GUARD_PX)
            & (pix[:, 1] >= _EDGE_GUARD_PX)
            & (pix[:, 1] <= hgt - 1 - _EDGE_GUARD_PX)
        )
        pts = pix[keep]
        if pts.shape[0] < _MIN_LINE_POINTS:
            continue
        span = np.max(np.linalg.norm(pts - pts[0], axis=1))
        if span <= 2.0:
            continue
        lines.append(LineAnnotation(points=tuple(PixelPoint(float(p[0]), float(p[1])) for p in pts)))
    return tuple(lines)


@dataclass(frozen=True)
class SynthResult:
    project: Project
    gt: GroundTruth
    sidecar_text: Optional[str]  # write next to the project when timing is pts
    true_cp_pixels: np.ndarray  # pre-noise distorted CP pixels, one per frame


def _speed_in_unit(speed_mps: float, unit: str) -> float:
    if unit == "m/s":
        return speed_mps
    if unit == "mph":
        return speed_mps / 0.44704
    if unit == "km/h":
        return speed_mps * 3.6
    raise InvariantViolation("gt_unit", f"unknown unit {unit!r}")


def generate_scene(
    spec: SceneSpec,
    rng: Optional[np.random.Generator] = None,
    true_times: Optional[Sequence[float]] = None,
) -> SynthResult:
    """Render a complete annotated project with known ground truth.

    Deterministic for a fixed spec (the default RNG comes from spec.seed).
    ``true_times`` overrides the instants the vehicle is actually sampled
    at, while the emitted clock still declares the nominal times; coverage
    experiments use this to inject bounded timing error.
    """
    spec.validate()
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    times = spec.clock.times()
    if true_times is None:
        true_times = times
    elif len(true_times) != len(times):
        raise InvariantViolation("true_times", "must match the declared clock length")

    cam = spec.camera
    w, h = cam.image_size

    grid_pix = project_to_pixels(spec, _ground3(_grid_world_corners(spec)))
    _check_inside(grid_pix, cam.image_size, _EDGE_GUARD_PX, "grid corner")
    grid = GridAnnotation(
        corners=tuple(PixelPoint(float(p[0]), float(p[1])) for p in grid_pix),
        width_m=spec.grid_width_m,
        height_m=spec.grid_height_m,
    )

    cp_world = _ground3(_vehicle_positions(spec, true_times))
    cp_pix = project_to_pixels(spec, cp_world)
    _check_inside(cp_pix, cam.image_size, spec.cp_m + _EDGE_GUARD_PX, "contact point")

    noise = rng.uniform(-spec.rho_px, spec.rho_px, size=cp_pix.shape) if spec.rho_px > 0 else np.zeros_like(cp_pix)
    noise = np.clip(noise, -spec.cp_m, spec.cp_m)
    annotated = cp_pix + noise
    cps = tuple(
        ContactPoint(frame=i, point=PixelPoint(float(p[0]), float(p[1])), m=spec.cp_m)
        for i, p in enumerate(annotated)
    )

    if spec.clock.timestamps is not None:
        timing = TimingSpec(mode=Timestamps(sidecar=spec.clock.sidecar), delta_t_s=spec.clock.delta_t_s)
        sidecar_text = "".join(f"{t!r}\n" for t in spec.clock.timestamps)
    else:
        timing = TimingSpec(mode=ConstantFps(fps=spec.clock.fps), delta_t_s=spec.clock.delta_t_s)
        sidecar_text = None

    frames = tuple(FrameRef(index=i, image_path=None, timestamp_s=float(t)) for i, t in enumerate(times))
    gt = GroundTruth(speed=_speed_in_unit(spec.speed_mps, spec.gt_unit), unit=spec.gt_unit, source="synthetic")
    project = Project(
        image_size=(w, h),
        frames=frames,
        timing=timing,
        lines=_calibration_lines(spec, times),
        grid=grid,
        path=PathAnnotation(cps=cps),
        ground_truth=gt,
        distortion=scene_distortion_model(spec),
    )
    project.validate()
    return SynthResult(project=project, gt=gt, sidecar_text=sidecar_text, true_cp_pixels=cp_pix)


def coverage_trial(spec: SceneSpec, trials: int) -> float:
    """Fraction of noisy re-annotations whose interval contains the true
    speed.  Each trial redraws annotation noise within the boxes and true
    sampling times within delta_t of the declared clock; the contract for
    honest bounds is a rate of 1.0."""
    from .speed import evaluate_project

    times = np.asarray(spec.clock.times())
    covered = 0
    for trial in range(trials):
        rng = np.random.default_rng([spec.seed, trial])
        jitter = rng.uniform(-spec.clock.delta_t_s, spec.clock.delta_t_s, size=times.shape)
        result = generate_scene(spec, rng=rng, true_times=times + jitter)
        est = evaluate_project(result.project).estimate
        lo, hi = est.interval_mps
        if lo <= spec.speed_mps <= hi:
            covered += 1
    return covered / trials


# ---------------------------------------------------------------------------
# Randomized scenes (for coverage and property tests)


def random_scene_spec(rng: np.random.Generator, **overrides) -> SceneSpec:
    """Draw a plausible CCTV geometry; not every draw is renderable, so
    callers resample on FrustumError."""
    pitch = float(rng.uniform(10.0, 30.0))
    yaw = float(rng.uniform(50.0, 130.0))
    cam_h = float(rng.uniform(3.0, 8.0))
    dist = float(rng.uniform(10.0, 25.0))
    look_dir = np.array([math.cos(math.radians(yaw)), math.sin(math.radians(yaw))])
    ground_target = -dist * look_dir  # camera placed so it looks at the origin
    cam = CameraSpec(
        position=(float(ground_target[0]), float(ground_target[1]), cam_h),
        yaw_deg=yaw,
        pitch_deg=pitch,
        roll_deg=float(rng.uniform(-3.0, 3.0)),
        focal_px=float(rng.uniform(700.0, 1400.0)),
        image_size=(1280, 720),
    )
    m = int(rng.integers(1, 4))
    n_frames = int(rng.integers(5, 11))
    fps = float(rng.choice([15.0, 25.0, 30.0]))
    speed = float(rng.uniform(8.0, 18.0))
    heading_deg = float(rng.uniform(-25.0, 25.0))
    heading = (math.cos(math.radians(heading_deg)), math.sin(math.radians(heading_deg)))
    duration = (n_frames - 1) / fps
    start = -0.5 * duration * speed * np.asarray(heading)
    defaults = dict(
        camera=cam,
        k=float(rng.uniform(-0.25, 0.1)),
        grid_origin=(float(start[0] - 2.0), float(start[1] + 2.5)),
        grid_angle_deg=heading_deg,
        grid_width_m=float(rng.uniform(2.5, 5.0)),
        grid_height_m=float(rng.uniform(1.5, 3.0)),
        vehicle_start=(float(start[0]), float(start[1])),
        heading=heading,
        speed_mps=speed,
        clock=ClockSpec(fps=fps, n_frames=n_frames, delta_t_s=0.005),
        rho_px=float(m),
        cp_m=m,
        seed=int(rng.integers(0, 2**31 - 1)),
    )
    defaults.update(overrides)
    return SceneSpec(**defaults)


def sample_valid_scene(rng: np.random.Generator, **overrides) -> tuple[SceneSpec, SynthResult]:
    """Rejection-sample random_scene_spec until the scene renders."""
    for _ in range(200):
        spec = random_scene_spec(rng, **overrides)
        try:
            return spec, generate_scene(spec)
        except (FrustumError, FoldOverError):
            continue
    raise FrustumError("no renderable scene after 200 draws")


# ---------------------------------------------------------------------------
# Scene files


def scene_from_toml(text: str) -> SceneSpec:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ParseError(f"scene spec: {e}") from None
    try:
        return _scene_from_doc(doc)
    except KeyError as e:
        raise ParseError(f"scene spec missing required key {e.args[0]!r}") from None


def _scene_from_doc(doc: dict) -> SceneSpec:
    cam = doc["camera"]
    clock = doc["clock"]
    ann = doc.get("annotation", {})
    grid = doc["grid"]
    veh = doc["vehicle"]
    return SceneSpec(
        camera=CameraSpec(
            position=tuple(float(v) for v in cam["position"]),
            yaw_deg=float(cam["yaw_deg"]),
            pitch_deg=float(cam["pitch_deg"]),
            roll_deg=float(cam.get("roll_deg", 0.0)),
            focal_px=float(cam["focal_px"]),
            image_size=(int(cam["image_size"][0]), int(cam["image_size"][1])),
        ),
        k=float(doc.get("distortion", {}).get("k", 0.0)),
        grid_origin=tuple(float(v) for v in grid["origin"]),
        grid_angle_deg=float(grid.get("angle_deg", 0.0)),
        grid_width_m=float(grid["width_m"]),
        grid_height_m=float(grid["height_m"]),
        vehicle_start=tuple(float(v) for v in veh["start"]),
        heading=tuple(float(v) for v in veh["heading"]),
        speed_mps=float(veh["speed_mps"]),
        clock=ClockSpec(
            fps=float(clock["fps"]) if "fps" in clock else None,
            n_frames=int(clock.get("n_frames", 0)),
            timestamps=tuple(float(t) for t in clock["timestamps"]) if "timestamps" in clock else None,
            sidecar=str(clock.get("sidecar", "timestamps.pts")),
            delta_t_s=float(clock.get("delta_t_s", 0.005)),
        ),
        rho_px=float(ann.get("rho_px", 0.0)),
        cp_m=int(ann.get("m", 1)),
        lane_offsets_m=tuple(float(v) for v in ann.get("lane_offsets_m", (-1.75, 1.75))),
        gt_unit=str(ann.get("gt_unit", "m/s")),
        seed=int(doc.get("seed", 0)),
    )


# ---------------------------------------------------------------------------
# Frame rendering (service/UI demos only; never part of a measurement)


def render_frame(spec: SceneSpec, time_s: float) -> np.ndarray:
    """Tiny ray-cast visualization: checkered road, shaded sky, the grid
    rectangle, and a dark vehicle block at its position for ``time_s``.
    Returns an (h, w) uint8 grayscale array."""
    cam = spec.camera
    w, h = cam.image_size
    right, down, forward = camera_basis(cam)
    px, py = np.meshgrid(np.arange(w, dtype=float), np.arange(h, dtype=float))
    if spec.k != 0.0:
        # Undistort the pixel grid so the rendered view carries the lens.
        norm = half_diagonal(cam.image_size)
        rx = px - w / 2.0
        ry = py - h / 2.0
        denom = 1.0 + spec.k * (rx * rx + ry * ry) / norm**2
        denom = np.where(denom <= 1e-9, np.nan, denom)
        px = w / 2.0 + rx / denom
        py = h / 2.0 + ry / denom
    gu = (px - w / 2.0) / cam.focal_px
    gv = (py - h / 2.0) / cam.focal_px
    dirs = gu[..., None] * right + gv[..., None] * down + forward
    dz = dirs[..., 2]
    cz = cam.position[2]
    with np.errstate(divide="ignore", invalid="ignore"):
        t_hit = np.where(dz < -1e-9, -cz / dz, np.inf)
        gx = cam.position[0] + t_hit * dirs[..., 0]
        gy = cam.position[1] + t_hit * dirs[..., 1]
    ground = np.isfinite(t_hit) & np.isfinite(gx) & np.isfinite(gy)
    gx = np.where(ground, gx, 0.0)
    gy = np.where(ground, gy, 0.0)

    img = np.full((h, w), 170, dtype=np.uint8)  # sky
    checker = ((np.floor(gx) + np.floor(gy)) % 2 == 0)
    img[ground] = np.where(checker[ground], 120, 100)

    corners = _grid_world_corners(spec)
    lo = corners.min(axis=0)
    hi = corners.max(axis=0)
    in_grid = ground & (gx >= lo[0]) & (gx <= hi[0]) & (gy >= lo[1]) & (gy <= hi[1])
    img[in_grid] = 200

    pos = _vehicle_positions(spec, [time_s])[0]
    hd = spec.heading_unit()
    perp = np.array([-hd[1], hd[0]])
    rel = np.stack([gx - pos[0], gy - pos[1]], axis=-1)
    along = rel @ hd
    across = rel @ perp
    vehicle = ground & (np.abs(along) <= 2.0) & (np.abs(across) <= 0.9)
    img[vehicle] = 40
    return img
