"""Synthetic scene oracle: projection, forward distortion, scene generation."""

from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from speedometry.distortion import distort_points, fit_distortion
from speedometry.errors import FoldOverError, FrustumError, InvariantViolation
from speedometry.model import Timestamps, save_project
from speedometry.speed import evaluate_project
from speedometry.synth import (
    CameraSpec,
    ClockSpec,
    SceneSpec,
    camera_basis,
    coverage_trial,
    distort_ideal,
    generate_scene,
    project_ideal,
    project_to_pixels,
    random_scene_spec,
    render_frame,
    road_image_plane_angle_deg,
    sample_valid_scene,
    scene_distortion_model,
    scene_from_toml,
    yaw_for_road_angle,
)

from conftest import GT_SPEED_MPS, perpendicular_scene, scene_at_angle


# ---------------------------------------------------------------------------
# Camera model


@given(
    yaw=st.floats(min_value=-180.0, max_value=180.0),
    pitch=st.floats(min_value=-80.0, max_value=80.0),
    roll=st.floats(min_value=-45.0, max_value=45.0),
)
def test_camera_basis_orthonormal(yaw, pitch, roll):
    cam = CameraSpec(position=(0, 0, 5), yaw_deg=yaw, pitch_deg=pitch, roll_deg=roll, focal_px=1000, image_size=(1280, 720))
    right, down, forward = camera_basis(cam)
    for v in (right, down, forward):
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
    assert abs(right @ forward) < 1e-12
    assert abs(down @ forward) < 1e-12
    assert abs(right @ down) < 1e-12
    # right-handed: right x down = forward
    assert np.allclose(np.cross(right, down), forward, atol=1e-12)


def test_point_on_axis_hits_principal_point():
    cam = CameraSpec(position=(0, 0, 5), yaw_deg=0.0, pitch_deg=0.0, roll_deg=0.0, focal_px=1000, image_size=(1280, 720))
    pix = project_ideal(cam, np.array([[20.0, 0.0, 5.0]]))
    assert pix[0] == pytest.approx((640.0, 360.0), abs=1e-9)


def test_pitch_drops_horizon():
    # looking down, a point at camera height lands above the image centre
    cam = CameraSpec(position=(0, 0, 5), yaw_deg=0.0, pitch_deg=20.0, roll_deg=0.0, focal_px=1000, image_size=(1280, 720))
    pix = project_ideal(cam, np.array([[20.0, 0.0, 5.0]]))
    assert pix[0, 1] < 360.0
    ground = project_ideal(cam, np.array([[20.0, 0.0, 0.0]]))
    assert ground[0, 1] > pix[0, 1]


def test_behind_camera_raises():
    cam = CameraSpec(position=(0, 0, 5), yaw_deg=0.0, pitch_deg=0.0, roll_deg=0.0, focal_px=1000, image_size=(1280, 720))
    with pytest.raises(FrustumError):
        project_ideal(cam, np.array([[-3.0, 0.0, 5.0]]))


def test_camera_spec_validation():
    with pytest.raises(InvariantViolation):
        CameraSpec(position=(0, 0, -1), yaw_deg=0, pitch_deg=0, roll_deg=0, focal_px=1000, image_size=(64, 64)).validate()
    with pytest.raises(InvariantViolation):
        CameraSpec(position=(0, 0, 5), yaw_deg=0, pitch_deg=95.0, roll_deg=0, focal_px=1000, image_size=(64, 64)).validate()


# ---------------------------------------------------------------------------
# Forward distortion


def test_distort_ideal_k0_is_copy():
    spec = perpendicular_scene(k=0.0)
    pts = np.array([[1.0, 2.0], [640.0, 360.0]])
    out = distort_ideal(spec, pts)
    assert np.array_equal(out, pts)
    assert out is not pts


def test_distort_ideal_agrees_with_fixed_point_inverse():
    # closed-form quadratic vs the iterative inverse in the distortion module
    spec = perpendicular_scene(k=-0.15)
    model = scene_distortion_model(spec)
    rng = np.random.default_rng(2)
    ideal = rng.uniform([100, 100], [1180, 620], size=(300, 2))
    assert np.allclose(distort_ideal(spec, ideal), distort_points(model, ideal), atol=1e-9)


def test_distort_ideal_fold_over():
    spec = perpendicular_scene(k=0.5)
    with pytest.raises(FoldOverError):
        distort_ideal(spec, np.array([[5000.0, 360.0]]))


def test_distortion_round_trip_through_true_model():
    from speedometry.distortion import undistort_points

    spec = perpendicular_scene(k=-0.2)
    model = scene_distortion_model(spec)
    ideal = np.array([[200.0, 150.0], [640.0, 360.0], [1100.0, 600.0]])
    assert np.allclose(undistort_points(model, distort_ideal(spec, ideal)), ideal, atol=1e-9)


def test_project_to_pixels_composes():
    spec = perpendicular_scene(k=-0.1)
    world = np.array([[0.0, 2.0, 0.0], [1.0, -1.0, 0.0]])
    expected = distort_ideal(spec, project_ideal(spec.camera, world))
    assert np.array_equal(project_to_pixels(spec, world), expected)


# ---------------------------------------------------------------------------
# Road / image-plane angle


def test_perpendicular_scene_angle_is_zero():
    assert road_image_plane_angle_deg(perpendicular_scene()) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("target", [10.0, 30.0, 60.0])
def test_yaw_for_road_angle_hits_target(target):
    spec = scene_at_angle(target)
    assert road_image_plane_angle_deg(spec) == pytest.approx(target, abs=1e-9)


def test_yaw_for_road_angle_unreachable():
    with pytest.raises(ValueError):
        yaw_for_road_angle(pitch_deg=15.0, target_angle_deg=89.0)


# ---------------------------------------------------------------------------
# Scene generation


def test_noise_free_scene_recovers_speed_exactly():
    res = generate_scene(perpendicular_scene(rho_px=0.0, k=0.0))
    est = evaluate_project(res.project).estimate
    assert abs(est.v_mps - GT_SPEED_MPS) / GT_SPEED_MPS <= 1e-9
    lo, hi = est.interval_mps
    assert lo <= GT_SPEED_MPS <= hi


def test_distorted_scene_with_true_model_recovers_speed():
    res = generate_scene(scene_at_angle(30.0, rho_px=0.0, k=-0.15))
    est = evaluate_project(res.project).estimate
    assert abs(est.v_mps - GT_SPEED_MPS) / GT_SPEED_MPS <= 1e-9


def test_distorted_scene_with_fitted_model():
    res = generate_scene(scene_at_angle(30.0, rho_px=0.0, k=-0.15))
    project = res.project
    assert len(project.lines) >= 1
    fitted = fit_distortion(project.lines, project.image_size)
    assert abs(fitted.k - (-0.15)) <= 1e-3
    est = evaluate_project(project.with_distortion(fitted)).estimate
    assert abs(est.v_mps - GT_SPEED_MPS) / GT_SPEED_MPS <= 1e-3


def test_generate_scene_deterministic():
    spec = scene_at_angle(45.0, seed=12, m=3)
    a = generate_scene(spec)
    b = generate_scene(spec)
    assert save_project(a.project) == save_project(b.project)
    assert np.array_equal(a.true_cp_pixels, b.true_cp_pixels)


def test_rho_zero_annotations_are_exact():
    res = generate_scene(perpendicular_scene(rho_px=0.0, m=2))
    pts = np.array([[cp.point.x, cp.point.y] for cp in res.project.path.cps])
    assert np.array_equal(pts, res.true_cp_pixels)
    assert all(cp.m == 2 for cp in res.project.path.cps)


def test_noise_bounded_by_box():
    spec = scene_at_angle(30.0, seed=5, m=2)  # rho = m = 2
    res = generate_scene(spec)
    pts = np.array([[cp.point.x, cp.point.y] for cp in res.project.path.cps])
    off = np.abs(pts - res.true_cp_pixels)
    assert np.all(off <= 2.0)
    assert np.any(off > 0.0)


def test_grid_corner_loop():
    from speedometry.rectify import estimate_rectifying_transform, map_points
    from speedometry.distortion import undistort_points

    res = generate_scene(scene_at_angle(30.0, k=-0.1))
    project = res.project
    T = estimate_rectifying_transform(project.grid, project.distortion)
    corners = np.array([[c.x, c.y] for c in project.grid.corners])
    mapped = map_points(T, undistort_points(project.distortion, corners))
    w, h = project.grid.width_m, project.grid.height_m
    assert np.allclose(mapped, [[0, 0], [w, 0], [w, h], [0, h]], atol=1e-9)


def test_ground_truth_unit_conversion():
    spec = replace(perpendicular_scene(), gt_unit="mph")
    res = generate_scene(spec)
    assert res.gt.unit == "mph"
    assert res.gt.speed == 30.0


def test_rho_above_m_rejected():
    with pytest.raises(InvariantViolation):
        generate_scene(perpendicular_scene(rho_px=3.0, m=2))


def test_pts_clock_emits_sidecar(tmp_path):
    base = perpendicular_scene(n_frames=4)
    jittery = (0.0, 0.034, 0.066, 0.1001)
    spec = replace(base, clock=ClockSpec(timestamps=jittery, sidecar="clip.pts", delta_t_s=0.005))
    res = generate_scene(spec)
    assert isinstance(res.project.timing.mode, Timestamps)
    assert res.sidecar_text == "".join(f"{t!r}\n" for t in jittery)
    (tmp_path / "clip.pts").write_text(res.sidecar_text)
    est = evaluate_project(res.project, base_dir=tmp_path).estimate
    assert est.T_s == pytest.approx(0.1001, abs=1e-12)
    lo, hi = est.interval_mps
    assert lo <= GT_SPEED_MPS <= hi


def test_frames_carry_nominal_timestamps():
    res = generate_scene(perpendicular_scene(fps=25.0, n_frames=4))
    assert [f.timestamp_s for f in res.project.frames] == [0.0, 0.04, 0.08, 0.12]


# ---------------------------------------------------------------------------
# Coverage trials


def test_coverage_full_at_honest_bounds():
    assert coverage_trial(perpendicular_scene(rho_px=2.0, m=2, seed=3), trials=5) == 1.0


def test_coverage_trials_deterministic():
    spec = scene_at_angle(30.0, seed=8, m=2)
    assert coverage_trial(spec, 4) == coverage_trial(spec, 4)


def test_understated_m_breaks_coverage():
    # noise drawn for m = 3 but declared as m = 0: the interval loses its
    # guarantee, which is exactly what the box contract protects against
    missed = 0
    for seed in range(10):
        spec = scene_at_angle(35.0, seed=seed, m=3)  # rho = 3
        res = generate_scene(spec)
        lied = replace(
            res.project,
            path=replace_path_m(res.project.path, 0),
        )
        est = evaluate_project(lied).estimate
        lo, hi = est.interval_mps
        if not (lo <= GT_SPEED_MPS <= hi):
            missed += 1
    assert missed > 0


def replace_path_m(path, m):
    from speedometry.model import ContactPoint, PathAnnotation

    return PathAnnotation(cps=tuple(ContactPoint(frame=cp.frame, point=cp.point, m=m) for cp in path.cps))


# ---------------------------------------------------------------------------
# Random scenes and TOML


def test_sample_valid_scene_project_validates(rng):
    spec, res = sample_valid_scene(rng)
    res.project.validate()
    est = evaluate_project(res.project).estimate
    lo, hi = est.interval_mps
    assert lo <= spec.speed_mps <= hi


def test_random_scene_spec_overrides(rng):
    spec = random_scene_spec(rng, speed_mps=9.0, cp_m=2, rho_px=1.0)
    assert spec.speed_mps == 9.0
    assert spec.cp_m == 2
    assert spec.rho_px == 1.0


def test_scene_from_toml():
    text = """
seed = 4

[camera]
position = [0.0, -18.0, 5.0]
yaw_deg = 90.0
pitch_deg = 15.0
focal_px = 1000.0
image_size = [1280, 720]

[distortion]
k = -0.1

[grid]
origin = [-2.0, 2.0]
width_m = 3.5
height_m = 2.0

[vehicle]
start = [-1.0, 0.0]
heading = [1.0, 0.0]
speed_mps = 13.4112

[clock]
fps = 30.0
n_frames = 5
delta_t_s = 0.005

[annotation]
m = 2
rho_px = 1.5
gt_unit = "mph"
"""
    spec = scene_from_toml(text)
    assert spec.seed == 4
    assert spec.camera.focal_px == 1000.0
    assert spec.k == -0.1
    assert spec.grid_width_m == 3.5
    assert spec.speed_mps == 13.4112
    assert spec.clock.fps == 30.0
    assert spec.cp_m == 2
    assert spec.rho_px == 1.5
    assert spec.gt_unit == "mph"
    generate_scene(spec).project.validate()


def test_scene_from_toml_rejects():
    from speedometry.errors import ParseError

    with pytest.raises(ParseError, match="missing required key 'clock'"):
        scene_from_toml("[camera]\nposition = [0.0, -18.0, 5.0]\n")
    with pytest.raises(ParseError, match="scene spec:"):
        scene_from_toml("not = valid = toml")


def test_scene_from_toml_timestamps():
    text = """
[camera]
position = [0.0, -18.0, 5.0]
yaw_deg = 90.0
pitch_deg = 15.0
focal_px = 1000.0
image_size = [1280, 720]

[grid]
origin = [-2.0, 2.0]
width_m = 3.5
height_m = 2.0

[vehicle]
start = [-1.0, 0.0]
heading = [1.0, 0.0]
speed_mps = 13.4112

[clock]
timestamps = [0.0, 0.034, 0.066]
sidecar = "cam7.pts"
"""
    spec = scene_from_toml(text)
    assert spec.clock.timestamps == (0.0, 0.034, 0.066)
    assert spec.clock.sidecar == "cam7.pts"


# ---------------------------------------------------------------------------
# Frame rendering


def test_render_frame_shape_and_determinism():
    spec = perpendicular_scene()
    img = render_frame(spec, 0.0)
    assert img.shape == (720, 1280)
    assert img.dtype == np.uint8
    assert np.array_equal(img, render_frame(spec, 0.0))


def test_render_frame_vehicle_moves():
    spec = perpendicular_scene()
    a = render_frame(spec, 0.0)
    b = render_frame(spec, 0.1)
    assert not np.array_equal(a, b)
    # sky band at the top, ground texture below
    assert np.all(a[0:10] == 170)
    assert len(np.unique(a)) >= 3
