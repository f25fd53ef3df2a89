"""Speed and its worst-case interval, plus the full project pipeline.

Given the path totals (d, delta_d) and the duration (T, eps_t):

    v = d / T
    eps_d = delta_d / d
    eps_v = eps_d + eps_t
    delta_v = eps_v * v

and the reported range is [v - delta_v, v + delta_v].  Internal unit is
m/s; mph and km/h appear only at display boundaries with exact constants
(1 mph = 0.44704 m/s, 1 m/s = 3.6 km/h).

``evaluate_project`` is the single computation behind both the CLI and the
HTTP service: distortion correction, rectification, region mapping, clock,
and the estimate.  ``estimate_document`` renders it to the canonical
machine-readable form; both entry points must emit those bytes unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

from .distortion import identity_model
from .errors import IncompleteAnnotation, ZeroDistance, ZeroDuration
from .model import DistortionModel, Project, Timestamps
from .rectify import RectifyingTransform, estimate_rectifying_transform
from .timing import FrameClock, build_clock, duration
from .uncertainty import PathDistance, RectifiedRegion, SegmentInterval, path_distance, rectify_region

MPS_PER_MPH = 0.44704
KMH_PER_MPS = 3.6

ESTIMATE_SCHEMA_VERSION = 1


def mps_to_mph(v: float) -> float:
    return v / MPS_PER_MPH


def mph_to_mps(v: float) -> float:
    return v * MPS_PER_MPH


def mps_to_kmh(v: float) -> float:
    return v * KMH_PER_MPS


def to_mps(value: float, unit: str) -> float:
    """Convert a speed in ``mph``, ``km/h``, or ``m/s`` to m/s."""
    if unit == "m/s":
        return value
    if unit == "mph":
        return value * MPS_PER_MPH
    if unit == "km/h":
        return value / KMH_PER_MPS
    raise ValueError(f"unknown speed unit {unit!r}")


@dataclass(frozen=True)
class SpeedEstimate:
    v_mps: float
    delta_v_mps: float
    d_m: float
    delta_d_m: float
    T_s: float
    delta_t_s: float
    eps_d: float
    eps_t: float
    eps_v: float
    segments: tuple[SegmentInterval, ...]

    @property
    def interval_mps(self) -> tuple[float, float]:
        return (self.v_mps - self.delta_v_mps, self.v_mps + self.delta_v_mps)

    @property
    def v_mph(self) -> float:
        return mps_to_mph(self.v_mps)

    @property
    def delta_v_mph(self) -> float:
        return mps_to_mph(self.delta_v_mps)

    @property
    def v_kmh(self) -> float:
        return mps_to_kmh(self.v_mps)

    @property
    def delta_v_kmh(self) -> float:
        return mps_to_kmh(self.delta_v_mps)


def estimate_speed(
    path_result: PathDistance | tuple,
    duration_result: tuple[float, float],
    delta_t_s: float | None = None,
) -> SpeedEstimate:
    """Compose the distance and time intervals into the speed interval."""
    d, delta_d, segments = path_result
    T, eps_t = duration_result
    if d <= 0:
        raise ZeroDistance(f"path length {d} m")
    if T <= 0:
        raise ZeroDuration(f"duration {T} s")
    if delta_t_s is None:
        delta_t_s = eps_t * T / 2.0
    v = d / T
    eps_d = delta_d / d
    eps_v = eps_d + eps_t
    return SpeedEstimate(
        v_mps=v,
        delta_v_mps=eps_v * v,
        d_m=d,
        delta_d_m=delta_d,
        T_s=T,
        delta_t_s=delta_t_s,
        eps_d=eps_d,
        eps_t=eps_t,
        eps_v=eps_v,
        segments=tuple(segments),
    )


class PrefixRow(NamedTuple):
    k: int  # number of segments in the prefix
    estimate: SpeedEstimate


def prefix_analysis(regions: Sequence[RectifiedRegion], clock: FrameClock) -> list[PrefixRow]:
    """Estimates over growing path prefixes d_1, d_1+d_2, ...

    Longer prefixes shrink eps_t (fixed delta_t over a longer T), which is
    why the uncertainty tightens as frames are added.
    """
    if len(regions) < 2:
        raise IncompleteAnnotation(["path (need >= 2 contact points)"])
    rows = []
    for k in range(1, len(regions)):
        prefix = regions[: k + 1]
        pd = path_distance(prefix)
        dur = duration(clock, prefix[0].frame, prefix[-1].frame)
        rows.append(PrefixRow(k=k, estimate=estimate_speed(pd, dur, delta_t_s=clock.delta_t_s)))
    return rows


# ---------------------------------------------------------------------------
# Whole-project evaluation (shared by CLI and service)


@dataclass(frozen=True)
class Evaluation:
    estimate: SpeedEstimate
    regions: tuple[RectifiedRegion, ...]
    transform: RectifyingTransform
    model: DistortionModel
    clock: FrameClock


def evaluate_project(project: Project, base_dir: Path | str | None = None) -> Evaluation:
    """Run the full chain on an annotated project.

    Raises IncompleteAnnotation listing every missing piece; relative
    sidecar paths resolve against ``base_dir`` (the project file's folder).
    """
    project.validate()
    missing = []
    if project.grid is None:
        missing.append("grid")
    if project.path is None or len(project.path.cps) < 2:
        missing.append("path (need >= 2 contact points)")
    if project.timing is None:
        missing.append("timing")
    if missing:
        raise IncompleteAnnotation(missing)

    model = project.distortion or identity_model(project.image_size)
    transform = estimate_rectifying_transform(project.grid, model)
    regions = tuple(rectify_region(cp, model, transform) for cp in project.path.cps)

    sidecar_text = None
    if isinstance(project.timing.mode, Timestamps):
        path = Path(project.timing.mode.sidecar)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        sidecar_text = path.read_text()
    frames = [cp.frame for cp in project.path.cps]
    clock = build_clock(project.timing, frames, sidecar_text=sidecar_text)

    pd = path_distance(regions)
    dur = duration(clock, frames[0], frames[-1])
    est = estimate_speed(pd, dur, delta_t_s=clock.delta_t_s)
    return Evaluation(estimate=est, regions=regions, transform=transform, model=model, clock=clock)


def _segment_rows(ev: Evaluation) -> list[dict]:
    rows = []
    for j, seg in enumerate(ev.estimate.segments):
        fa = ev.regions[j].frame
        fb = ev.regions[j + 1].frame
        dt = ev.clock.time(fb) - ev.clock.time(fa)
        rows.append(
            {
                "j": j + 1,
                "frame_a": fa,
                "frame_b": fb,
                "d_m": seg.d_m,
                "d_min_m": seg.d_min_m,
                "d_max_m": seg.d_max_m,
                "delta_d_m": seg.delta_d_m,
                "v_mps": seg.d_m / dt,
            }
        )
    return rows


def _estimate_core(est: SpeedEstimate) -> dict:
    lo, hi = est.interval_mps
    return {
        "v_mps": est.v_mps,
        "delta_v_mps": est.delta_v_mps,
        "v_mph": est.v_mph,
        "delta_v_mph": est.delta_v_mph,
        "v_kmh": est.v_kmh,
        "delta_v_kmh": est.delta_v_kmh,
        "interval_mps": [lo, hi],
        "interval_mph": [mps_to_mph(lo), mps_to_mph(hi)],
        "interval_kmh": [mps_to_kmh(lo), mps_to_kmh(hi)],
        "d_m": est.d_m,
        "delta_d_m": est.delta_d_m,
        "T_s": est.T_s,
        "delta_t_s": est.delta_t_s,
        "eps_d": est.eps_d,
        "eps_t": est.eps_t,
        "eps_v": est.eps_v,
    }


def estimate_document(ev: Evaluation, prefix_table: bool = False) -> dict:
    """Canonical machine-readable estimate; key order and float repr are part
    of the contract (CLI and service must both emit exactly this)."""
    doc = {"schema_version": ESTIMATE_SCHEMA_VERSION}
    doc.update(_estimate_core(ev.estimate))
    doc["segments"] = _segment_rows(ev)
    doc["diagnostics"] = {
        "distortion_k": ev.model.k,
        "h_condition": ev.transform.condition(),
        "n_contact_points": len(ev.regions),
        "timing_source": ev.clock.source,
    }
    if prefix_table:
        rows = prefix_analysis(list(ev.regions), ev.clock)
        doc["prefix_table"] = [
            {
                "k": row.k,
                "d_m": row.estimate.d_m,
                "delta_d_m": row.estimate.delta_d_m,
                "T_s": row.estimate.T_s,
                "v_mps": row.estimate.v_mps,
                "delta_v_mps": row.estimate.delta_v_mps,
                "v_mph": row.estimate.v_mph,
                "delta_v_mph": row.estimate.delta_v_mph,
            }
            for row in rows
        ]
    return doc


def dumps_estimate(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def render_estimate_text(ev: Evaluation, prefix_table: bool = False) -> str:
    """Human-readable report: one-decimal display units, full-precision path
    and timing lines, per-segment table."""
    est = ev.estimate
    lo, hi = est.interval_mps
    lines = [
        f"speed    v = {est.v_mph:.1f} mph = {est.v_kmh:.1f} km/h ({est.v_mps:.4f} m/s)",
        f"interval [{mps_to_mph(lo):.1f}, {mps_to_mph(hi):.1f}] mph"
        f"  (delta_v = {est.delta_v_mph:.1f} mph)",
        f"path     d = {est.d_m:.4f} m, delta_d = {est.delta_d_m:.4f} m"
        f" over {len(est.segments)} segment(s)",
        f"timing   T = {est.T_s:.4f} s, delta_t = {est.delta_t_s * 1000:.1f} ms ({ev.clock.source})",
        f"error    eps_d = {est.eps_d:.4%}, eps_t = {est.eps_t:.4%}",
        "",
        "  j  frames        d_j [m]    d_min [m]  d_max [m]  delta_d [m]  v_j [m/s]",
    ]
    for row in _segment_rows(ev):
        lines.append(
            f"  {row['j']:<2} {row['frame_a']:>4} -> {row['frame_b']:<4}"
            f" {row['d_m']:>10.4f} {row['d_min_m']:>10.4f} {row['d_max_m']:>10.4f}"
            f" {row['delta_d_m']:>12.4f} {row['v_mps']:>10.4f}"
        )
    if prefix_table:
        lines += ["", "  prefix     v [mph]    delta_v [mph]"]
        for row in prefix_analysis(list(ev.regions), ev.clock):
            e = row.estimate
            lines.append(f"  d_1..d_{row.k:<3} {e.v_mph:>8.1f} {e.delta_v_mph:>14.1f}")
    return "\n".join(lines) + "\n"
