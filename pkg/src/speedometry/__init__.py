"""Forensic vehicle-speed measurement from CCTV frames.

Annotated contact points, a metric ground rectangle, and straight-line lens
calibration turn an ordinary traffic camera into a measuring instrument:
the toolkit rectifies the road plane, propagates the annotator's declared
pixel and timing uncertainty as worst-case intervals, and reports the speed
as v with a guaranteed range [v - delta_v, v + delta_v].
"""

from .errors import (
    DegenerateGrid,
    DegenerateLine,
    EmptyAggregate,
    FoldOverError,
    FrustumError,
    HorizonError,
    IncompleteAnnotation,
    InvariantViolation,
    MissingTimestamp,
    NoCurvatureSignal,
    NonMonotonicTimestamps,
    ParseError,
    SchemaVersionError,
    SpeedometryError,
    UnknownPassId,
    ZeroDistance,
    ZeroDuration,
)
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
    load_project,
    loads_project,
    save_project,
    write_project,
)
from .distortion import distort_points, fit_distortion, identity_model, undistort_point, undistort_points
from .rectify import RectifyingTransform, estimate_rectifying_transform, fit_homography, map_point, map_points
from .uncertainty import (
    PathDistance,
    RectifiedRegion,
    SegmentInterval,
    path_distance,
    rectify_region,
    segment_interval,
)
from .timing import FrameClock, build_clock, duration
from .speed import (
    Evaluation,
    SpeedEstimate,
    estimate_document,
    estimate_speed,
    evaluate_project,
    mph_to_mps,
    mps_to_kmh,
    mps_to_mph,
    prefix_analysis,
    to_mps,
)
from .synth import SceneSpec, coverage_trial, generate_scene, scene_from_toml
from .bench import aggregate, ingest_manifest, run_bench, write_report

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "SpeedometryError",
    "ParseError",
    "SchemaVersionError",
    "InvariantViolation",
    "FoldOverError",
    "DegenerateLine",
    "NoCurvatureSignal",
    "DegenerateGrid",
    "HorizonError",
    "ZeroDuration",
    "ZeroDistance",
    "MissingTimestamp",
    "NonMonotonicTimestamps",
    "FrustumError",
    "UnknownPassId",
    "EmptyAggregate",
    "IncompleteAnnotation",
    # model
    "PixelPoint",
    "FrameRef",
    "LineAnnotation",
    "GridAnnotation",
    "ContactPoint",
    "PathAnnotation",
    "ConstantFps",
    "Timestamps",
    "TimingSpec",
    "GroundTruth",
    "DistortionModel",
    "Project",
    "load_project",
    "loads_project",
    "save_project",
    "write_project",
    # distortion
    "identity_model",
    "undistort_point",
    "undistort_points",
    "distort_points",
    "fit_distortion",
    # rectify
    "RectifyingTransform",
    "fit_homography",
    "estimate_rectifying_transform",
    "map_point",
    "map_points",
    # uncertainty
    "RectifiedRegion",
    "SegmentInterval",
    "PathDistance",
    "rectify_region",
    "segment_interval",
    "path_distance",
    # timing
    "FrameClock",
    "build_clock",
    "duration",
    # speed
    "SpeedEstimate",
    "Evaluation",
    "estimate_speed",
    "prefix_analysis",
    "evaluate_project",
    "estimate_document",
    "mps_to_mph",
    "mph_to_mps",
    "mps_to_kmh",
    "to_mps",
    # synth
    "SceneSpec",
    "generate_scene",
    "coverage_trial",
    "scene_from_toml",
    # bench
    "ingest_manifest",
    "run_bench",
    "aggregate",
    "write_report",
]
