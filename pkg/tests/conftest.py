"""Shared fixtures: hypothesis profile and canned synthetic scenes."""

import math

import hypothesis
import numpy as np
import pytest

from speedometry.model import (
    ConstantFps,
    ContactPoint,
    FrameRef,
    GridAnnotation,
    PathAnnotation,
    PixelPoint,
    Project,
    TimingSpec,
)
from speedometry.synth import CameraSpec, ClockSpec, SceneSpec, yaw_for_road_angle

hypothesis.settings.register_profile("default", deadline=None)
hypothesis.settings.load_profile("default")

GT_SPEED_MPS = 13.4112  # exactly 30 mph


def perpendicular_scene(n_frames=5, fps=30.0, m=2, rho_px=0.0, k=0.0, seed=0, delta_t_s=0.005):
    """Camera looks straight across the road, so depth is constant along the
    pass and every segment carries the same relative distance error."""
    cam = CameraSpec(
        position=(0.0, -18.0, 5.0),
        yaw_deg=90.0,
        pitch_deg=15.0,
        roll_deg=0.0,
        focal_px=1000.0,
        image_size=(1280, 720),
    )
    start = (-0.5 * (n_frames - 1) / fps * GT_SPEED_MPS, 0.0)
    return SceneSpec(
        camera=cam,
        k=k,
        grid_origin=(start[0] - 1.5, 2.0),
        grid_angle_deg=0.0,
        grid_width_m=3.5,
        grid_height_m=2.0,
        vehicle_start=start,
        heading=(1.0, 0.0),
        speed_mps=GT_SPEED_MPS,
        clock=ClockSpec(fps=fps, n_frames=n_frames, delta_t_s=delta_t_s),
        rho_px=rho_px,
        cp_m=m,
        seed=seed,
    )


def scene_at_angle(angle_deg, seed=0, m=2, rho_px=None, n_frames=7, fps=30.0, k=0.0):
    """Same vehicle and annotation quality; camera yawed so the road meets the
    image plane at ``angle_deg``."""
    pitch = 15.0
    yaw = yaw_for_road_angle(pitch, angle_deg, heading_deg=0.0)
    look = (math.cos(math.radians(yaw)), math.sin(math.radians(yaw)))
    dist = 18.0
    cam = CameraSpec(
        position=(-dist * look[0], -dist * look[1], 5.0),
        yaw_deg=yaw,
        pitch_deg=pitch,
        roll_deg=0.0,
        focal_px=1000.0,
        image_size=(1280, 720),
    )
    dur = (n_frames - 1) / fps
    start = (-0.5 * dur * GT_SPEED_MPS, 0.0)
    if rho_px is None:
        rho_px = float(m)
    return SceneSpec(
        camera=cam,
        k=k,
        grid_origin=(start[0] - 1.5, 2.0),
        grid_angle_deg=0.0,
        grid_width_m=3.5,
        grid_height_m=2.0,
        vehicle_start=start,
        heading=(1.0, 0.0),
        speed_mps=GT_SPEED_MPS,
        clock=ClockSpec(fps=fps, n_frames=n_frames, delta_t_s=0.005),
        rho_px=rho_px,
        cp_m=m,
        seed=seed,
    )


def unit_square_grid(width_m=1.0, height_m=1.0):
    """Grid whose pixel corners are the unit square; with width=height=1 the
    rectifying map is the identity."""
    return GridAnnotation(
        corners=(
            PixelPoint(0.0, 0.0),
            PixelPoint(1.0, 0.0),
            PixelPoint(1.0, 1.0),
            PixelPoint(0.0, 1.0),
        ),
        width_m=width_m,
        height_m=height_m,
    )


@pytest.fixture
def minimal_project():
    """Smallest complete project: identity grid, 3-point straight path, cfr clock."""
    return Project(
        image_size=(100, 100),
        frames=tuple(FrameRef(index=i) for i in range(3)),
        timing=TimingSpec(mode=ConstantFps(fps=10.0), delta_t_s=0.005),
        grid=unit_square_grid(),
        path=PathAnnotation(
            cps=(
                ContactPoint(frame=0, point=PixelPoint(10.0, 50.0), m=1),
                ContactPoint(frame=1, point=PixelPoint(20.0, 50.0), m=1),
                ContactPoint(frame=2, point=PixelPoint(30.0, 50.0), m=1),
            )
        ),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(7)
