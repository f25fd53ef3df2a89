"""Command-line entry points.

    speedometry calibrate       fit the lens model from line annotations
    speedometry rectify-preview render the aerial view of one frame
    speedometry estimate        speed and worst-case interval for a project
    speedometry synth           generate a synthetic annotated project
    speedometry bench           batch-evaluate a dataset manifest
    speedometry serve           run the local annotation service
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .bench import ingest_manifest, render_summary, run_bench, write_report
from .distortion import fit_distortion, identity_model, line_straightness_residual
from .errors import SpeedometryError
from .model import FrameRef, load_project, save_project, write_project
from .rectify import estimate_rectifying_transform, render_rectified_preview
from .speed import dumps_estimate, estimate_document, evaluate_project, render_estimate_text
from .synth import generate_scene, render_frame, scene_from_toml


def _cmd_calibrate(args) -> int:
    path = Path(args.project)
    project = load_project(path)
    if not project.lines:
        print("no line annotations; nothing to calibrate", file=sys.stderr)
        return 2
    model = fit_distortion(list(project.lines), project.image_size)
    print(f"fitted k = {model.k:.6g} (center {model.cx:.1f}, {model.cy:.1f}; norm {model.norm:.1f} px)")
    for i, line in enumerate(project.lines):
        before = line_straightness_residual(identity_model(project.image_size), line)
        after = line_straightness_residual(model, line)
        print(f"  line {i}: residual {before:.4f} px -> {after:.4f} px")
    if args.write_model:
        write_project(replace(project, distortion=model), path)
        print(f"model written to {path}")
    return 0


def _cmd_rectify_preview(args) -> int:
    import numpy as np
    from PIL import Image

    path = Path(args.project)
    project = load_project(path)
    if project.grid is None:
        print("project has no grid; cannot rectify", file=sys.stderr)
        return 2
    ref = next((f for f in project.frames if f.index == args.frame), None)
    if ref is None or ref.image_path is None:
        print(f"frame {args.frame} has no image", file=sys.stderr)
        return 2
    img_path = Path(ref.image_path)
    if not img_path.is_absolute():
        img_path = path.parent / img_path
    model = project.distortion or identity_model(project.image_size)
    T = estimate_rectifying_transform(project.grid, model)
    image = np.asarray(Image.open(img_path))
    margin = args.margin
    bounds = (-margin, -margin, project.grid.width_m + margin, project.grid.height_m + margin)
    aerial = render_rectified_preview(T, image, bounds, args.px_per_m, model=model)
    Image.fromarray(aerial).save(args.out)
    print(f"wrote {args.out} ({aerial.shape[1]}x{aerial.shape[0]} px at {args.px_per_m} px/m)")
    return 0


def _cmd_estimate(args) -> int:
    path = Path(args.project)
    ev = evaluate_project(load_project(path), base_dir=path.parent)
    if args.format == "json":
        sys.stdout.write(dumps_estimate(estimate_document(ev, prefix_table=args.prefix_table)))
    else:
        sys.stdout.write(render_estimate_text(ev, prefix_table=args.prefix_table))
    return 0


def _cmd_synth(args) -> int:
    from PIL import Image

    spec = scene_from_toml(Path(args.spec).read_text())
    result = generate_scene(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    project = result.project

    if args.frames_dir:
        frames_dir = Path(args.frames_dir)
        frames_dir.mkdir(parents=True, exist_ok=True)
        refs = []
        for ref in project.frames:
            img = render_frame(spec, ref.timestamp_s)
            img_file = frames_dir / f"{ref.index:04d}.png"
            Image.fromarray(img).save(img_file)
            try:
                rel = img_file.relative_to(out.parent)
            except ValueError:
                rel = img_file
            refs.append(FrameRef(index=ref.index, image_path=str(rel), timestamp_s=ref.timestamp_s))
        project = replace(project, frames=tuple(refs))

    if result.sidecar_text is not None:
        (out.parent / spec.clock.sidecar).write_text(result.sidecar_text)
    out.write_bytes(save_project(project))
    if args.gt:
        Path(args.gt).write_text(f"{result.gt.speed!r} {result.gt.unit}\n")
    print(f"wrote {out} ({len(project.path.cps)} contact points, gt {result.gt.speed:g} {result.gt.unit})")
    return 0


def _cmd_bench(args) -> int:
    manifest = ingest_manifest(args.manifest, gt_table_path=args.gt_table)
    records = run_bench(manifest)
    report = write_report(records, args.out, svg=not args.no_svg)
    sys.stdout.write(render_summary(report))
    print(f"report written to {args.out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app, default_frontend_dir

    frontend = Path(args.frontend) if args.frontend else default_frontend_dir()
    app = create_app(frontend_dir=frontend)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="speedometry", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="fit the lens distortion model from line annotations")
    p.add_argument("--project", required=True)
    p.add_argument("--write-model", action="store_true", help="store the fitted model in the project")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("rectify-preview", help="render a top-down preview of one frame")
    p.add_argument("--project", required=True)
    p.add_argument("--frame", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--px-per-m", type=float, default=50.0)
    p.add_argument("--margin", type=float, default=2.0, help="meters of context around the grid")
    p.set_defaults(func=_cmd_rectify_preview)

    p = sub.add_parser("estimate", help="compute speed and its worst-case interval")
    p.add_argument("--project", required=True)
    p.add_argument("--prefix-table", action="store_true", help="include the growing-prefix breakdown")
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("synth", help="generate a synthetic annotated project")
    p.add_argument("--spec", required=True, help="scene description (TOML)")
    p.add_argument("--out", required=True, help="project file to write")
    p.add_argument("--gt", help="ground-truth text file to write")
    p.add_argument("--frames-dir", help="also render frame images into this directory")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("bench", help="evaluate every project in a dataset manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--gt-table", help="ground-truth override table (pass_id<TAB>mph)")
    p.add_argument("--no-svg", action="store_true")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("serve", help="run the local annotation service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8077)
    p.add_argument("--frontend", help="directory of built UI assets to serve at /ui")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpeedometryError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
