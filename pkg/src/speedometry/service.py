"""Local HTTP facade for the annotation UI.

One session per project file (opening the same file twice joins the
existing session).  Every accepted mutation bumps the session's revision;
all responses carry the current revision in an ``X-Revision`` header so the
client can reconcile optimistic updates.  The estimate endpoint returns the
same canonical JSON bytes the CLI prints: both are thin shells over one
computation.

Binds to loopback by default; this is a workstation tool, not a hosted
service.
"""

from __future__ import annotations

import hashlib
import io
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .distortion import half_diagonal, identity_model
from .errors import (
    HorizonError,
    IncompleteAnnotation,
    InvariantViolation,
    ParseError,
    SchemaVersionError,
    SpeedometryError,
)
from .model import (
    ConstantFps,
    ContactPoint,
    DistortionModel,
    GridAnnotation,
    LineAnnotation,
    PathAnnotation,
    PixelPoint,
    Project,
    TimingSpec,
    Timestamps,
    project_to_doc,
    load_project,
    validate_warnings,
    write_project,
)
from .rectify import estimate_rectifying_transform, render_rectified_preview
from .speed import dumps_estimate, estimate_document, evaluate_project


@dataclass
class _GridStaging:
    corners: list[tuple[float, float]] = field(default_factory=list)
    size: Optional[tuple[float, float]] = None

    def copy(self) -> "_GridStaging":
        return _GridStaging(corners=list(self.corners), size=self.size)


@dataclass
class Session:
    sid: str
    path: Path
    project: Project
    revision: int = 0
    staging: _GridStaging = field(default_factory=_GridStaging)
    lock: threading.Lock = field(default_factory=threading.Lock)
    estimate_cache: dict = field(default_factory=dict)


def _session_id(path: Path) -> str:
    return hashlib.sha1(str(path).encode()).hexdigest()[:12]


def _point(args: dict, xk: str = "x", yk: str = "y") -> PixelPoint:
    return PixelPoint(x=float(args[xk]), y=float(args[yk]))


def _apply_mutation(project: Project, staging: _GridStaging, mut: dict) -> Project:
    """One mutation against a working copy; raises on anything invalid."""
    op = mut.get("op")
    if op == "add_line":
        pts = tuple(_point(p) for p in mut["points"])
        return replace(project, lines=project.lines + (LineAnnotation(points=pts),))
    if op == "delete_line":
        i = int(mut["index"])
        if not 0 <= i < len(project.lines):
            raise InvariantViolation("lines", f"no line {i}")
        return replace(project, lines=project.lines[:i] + project.lines[i + 1:])

    if op == "add_grid_corner":
        if project.grid is not None:
            raise InvariantViolation("grid", "grid already complete; move corners instead")
        if len(staging.corners) >= 4:
            raise InvariantViolation("grid", "4 corners already staged")
        p = _point(mut)
        staging.corners.append((p.x, p.y))
        return _maybe_commit_grid(project, staging)
    if op == "move_grid_corner":
        i = int(mut["index"])
        p = _point(mut)
        if project.grid is not None:
            if not 0 <= i < 4:
                raise InvariantViolation("grid", f"no corner {i}")
            corners = list(project.grid.corners)
            corners[i] = p
            return replace(project, grid=replace(project.grid, corners=tuple(corners)))
        if not 0 <= i < len(staging.corners):
            raise InvariantViolation("grid", f"no staged corner {i}")
        staging.corners[i] = (p.x, p.y)
        return _maybe_commit_grid(project, staging)
    if op == "set_grid_size":
        w, h = float(mut["width_m"]), float(mut["height_m"])
        if project.grid is not None:
            return replace(project, grid=replace(project.grid, width_m=w, height_m=h))
        staging.size = (w, h)
        return _maybe_commit_grid(project, staging)
    if op == "clear_grid":
        staging.corners.clear()
        staging.size = None
        return replace(project, grid=None)

    if op == "add_contact_point":
        cp = ContactPoint(frame=int(mut["frame"]), point=_point(mut), m=int(mut.get("m", 1)))
        cps = list(project.path.cps) if project.path is not None else []
        if any(c.frame == cp.frame for c in cps):
            raise InvariantViolation("path", f"frame {cp.frame} already has a contact point")
        cps.append(cp)
        cps.sort(key=lambda c: c.frame)
        return replace(project, path=PathAnnotation(cps=tuple(cps)))
    if op in ("move_contact_point", "delete_contact_point", "set_m"):
        if project.path is None or not 0 <= int(mut["index"]) < len(project.path.cps):
            raise InvariantViolation("path", f"no contact point {mut.get('index')}")
        i = int(mut["index"])
        cps = list(project.path.cps)
        if op == "delete_contact_point":
            del cps[i]
        elif op == "set_m":
            cps[i] = replace(cps[i], m=int(mut["m"]))
        else:
            cp = cps[i]
            frame = int(mut.get("frame", cp.frame))
            cps[i] = replace(cp, point=_point(mut), frame=frame)
            cps.sort(key=lambda c: c.frame)
        return replace(project, path=PathAnnotation(cps=tuple(cps)))

    if op == "set_delta_t":
        if project.timing is None:
            raise InvariantViolation("timing", "set a timing source before delta_t")
        return replace(project, timing=replace(project.timing, delta_t_s=float(mut["delta_t_s"])))
    if op == "set_timing_cfr":
        delta = float(mut.get("delta_t_s", project.timing.delta_t_s if project.timing else 0.005))
        return replace(project, timing=TimingSpec(mode=ConstantFps(fps=float(mut["fps"])), delta_t_s=delta))
    if op == "set_timing_pts":
        delta = float(mut.get("delta_t_s", project.timing.delta_t_s if project.timing else 0.005))
        return replace(project, timing=TimingSpec(mode=Timestamps(sidecar=str(mut["sidecar"])), delta_t_s=delta))

    if op == "set_distortion":
        w, h = project.image_size
        model = DistortionModel(
            cx=float(mut.get("cx", w / 2.0)),
            cy=float(mut.get("cy", h / 2.0)),
            k=float(mut["k"]),
            norm=float(mut.get("norm", half_diagonal(project.image_size))),
        )
        return replace(project, distortion=model)
    if op == "clear_distortion":
        return replace(project, distortion=None)

    raise InvariantViolation("mutation", f"unknown op {op!r}")


def _maybe_commit_grid(project: Project, staging: _GridStaging) -> Project:
    if len(staging.corners) == 4 and staging.size is not None:
        grid = GridAnnotation(
            corners=tuple(PixelPoint(x, y) for x, y in staging.corners),
            width_m=staging.size[0],
            height_m=staging.size[1],
        )
        staging.corners.clear()
        staging.size = None
        return replace(project, grid=grid)
    return project


def create_app(frontend_dir: Path | str | None = None) -> FastAPI:
    app = FastAPI(title="speedometry service", docs_url=None, redoc_url=None)
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()

    def _get(sid: str) -> Session:
        s = sessions.get(sid)
        if s is None:
            raise LookupError(sid)
        return s

    def _err(status: int, message: str, revision: Optional[int] = None, **extra):
        body = {"error": message, **extra}
        headers = {}
        if revision is not None:
            body["revision"] = revision
            headers["X-Revision"] = str(revision)
        return JSONResponse(status_code=status, content=body, headers=headers)

    @app.post("/session")
    def open_session(body: dict):
        raw = body.get("path")
        if not raw:
            return _err(400, "body must include a project 'path'")
        path = Path(raw).resolve()
        sid = _session_id(path)
        with registry_lock:
            if sid not in sessions:
                try:
                    project = load_project(path)
                except FileNotFoundError:
                    return _err(404, f"no such project file: {path}")
                except (ParseError, SchemaVersionError, InvariantViolation) as e:
                    return _err(400, str(e))
                sessions[sid] = Session(sid=sid, path=path, project=project)
            s = sessions[sid]
        return JSONResponse(
            {
                "session_id": s.sid,
                "revision": s.revision,
                "project": project_to_doc(s.project),
            },
            headers={"X-Revision": str(s.revision)},
        )

    @app.get("/session/{sid}/project")
    def get_project(sid: str):
        try:
            s = _get(sid)
        except LookupError:
            return _err(404, f"no session {sid}")
        return JSONResponse(project_to_doc(s.project), headers={"X-Revision": str(s.revision)})

    @app.get("/session/{sid}/warnings")
    def get_warnings(sid: str):
        try:
            s = _get(sid)
        except LookupError:
            return _err(404, f"no session {sid}")
        return JSONResponse(
            {"warnings": validate_warnings(s.project), "revision": s.revision},
            headers={"X-Revision": str(s.revision)},
        )

    @app.post("/session/{sid}/mutations")
    def post_mutations(sid: str, body: dict):
        try:
            s = _get(sid)
        except LookupError:
            return _err(404, f"no session {sid}")
        muts = body.get("mutations")
        if not isinstance(muts, list) or not muts:
            return _err(400, "body must include a non-empty 'mutations' list", revision=s.revision)
        with s.lock:
            project = s.project
            staging = s.staging.copy()
            try:
                for mut in muts:
                    project = _apply_mutation(project, staging, mut)
                    project.validate()
            except (InvariantViolation, SpeedometryError, KeyError, TypeError, ValueError) as e:
                return _err(409, f"mutation rejected: {e}", revision=s.revision)
            s.project = project
            s.staging = staging
            s.revision += len(muts)
            s.estimate_cache.clear()
            return JSONResponse(
                {"revision": s.revision, "staged_grid_corners": len(staging.corners)},
                headers={"X-Revision": str(s.revision)},
            )

    @app.get("/session/{sid}/estimate")
    def get_estimate(sid: str, prefix_table: bool = False):
        try:
            s = _get(sid)
        except LookupError:
            return _err(404, f"no session {sid}")
        with s.lock:
            revision = s.revision
            key = (revision, prefix_table)
            cached = s.estimate_cache.get(key)
            project = s.project
        if cached is None:
            try:
                ev = evaluate_project(project, base_dir=s.path.parent)
                cached = dumps_estimate(estimate_document(ev, prefix_table=prefix_table)).encode()
            except IncompleteAnnotation as e:
                return _err(422, "incomplete annotation", revision=revision, missing=e.missing)
            except (SpeedometryError, OSError) as e:
                return _err(422, str(e), revision=revision)
            with s.lock:
                if s.revision == revision:
                    s.estimate_cache[key] = cached
        return Response(
            content=cached,
            media_type="application/json",
            headers={"X-Revision": str(revision)},
        )

    @app.get("/frames/{index}.png")
    def get_frame(index: int, session: Optional[str] = None):
        if session is None and len(sessions) == 1:
            session = next(iter(sessions))
        try:
            s = _get(session) if session else None
        except LookupError:
            s = None
        if s is None:
            return _err(404, "unknown session (pass ?session=<id>)")
        ref = next((f for f in s.project.frames if f.index == index), None)
        if ref is None or ref.image_path is None:
            return _err(404, f"frame {index} has no image", revision=s.revision)
        img_path = Path(ref.image_path)
        if not img_path.is_absolute():
            img_path = s.path.parent / img_path
        if not img_path.exists():
            return _err(404, f"image file missing: {img_path}", revision=s.revision)
        return Response(
            content=img_path.read_bytes(),
            media_type="image/png",
            headers={"X-Revision": str(s.revision)},
        )

    @app.get("/session/{sid}/rectified-preview.png")
    def get_preview(
        sid: str,
        frame: Optional[int] = None,
        px_per_m: float = 40.0,
        margin_m: float = 2.0,
    ):
        from PIL import Image

        try:
            s = _get(sid)
        except LookupError:
            return _err(404, f"no session {sid}")
        project = s.project
        if project.grid is None:
            return _err(422, "incomplete annotation", revision=s.revision, missing=["grid"])
        if frame is None:
            if project.path is not None and project.path.cps:
                frame = project.path.cps[0].frame
            elif project.frames:
                frame = project.frames[0].index
            else:
                return _err(404, "project has no frames", revision=s.revision)
        ref = next((f for f in project.frames if f.index == frame), None)
        if ref is None or ref.image_path is None:
            return _err(404, f"frame {frame} has no image", revision=s.revision)
        img_path = Path(ref.image_path)
        if not img_path.is_absolute():
            img_path = s.path.parent / img_path
        if not img_path.exists():
            return _err(404, f"image file missing: {img_path}", revision=s.revision)

        model = project.distortion or identity_model(project.image_size)
        try:
            T = estimate_rectifying_transform(project.grid, model)
            image = np.asarray(Image.open(img_path))
            bounds = (-margin_m, -margin_m, project.grid.width_m + margin_m, project.grid.height_m + margin_m)
            aerial = render_rectified_preview(T, image, bounds, px_per_m, model=model)
        except (SpeedometryError, HorizonError) as e:
            return _err(422, str(e), revision=s.revision)
        buf = io.BytesIO()
        Image.fromarray(aerial).save(buf, format="PNG")
        return Response(
            content=buf.getvalue(),
            media_type="image/png",
            headers={"X-Revision": str(s.revision)},
        )

    @app.post("/session/{sid}/save")
    def save(sid: str):
        try:
            s = _get(sid)
        except LookupError:
            return _err(404, f"no session {sid}")
        with s.lock:
            write_project(s.project, s.path)
            return JSONResponse(
                {"revision": s.revision, "path": str(s.path)},
                headers={"X-Revision": str(s.revision)},
            )

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(frontend_dir), html=True), name="ui")

    return app


def default_frontend_dir() -> Optional[Path]:
    """Built UI assets, when the sibling frontend package has been built."""
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return candidate if candidate.is_dir() else None
