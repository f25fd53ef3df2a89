"""Command-line interface: every subcommand against real files."""

import json
import subprocess
import sys
from dataclasses import replace

import numpy as np
import pytest
from PIL import Image

from speedometry.cli import build_parser, main
from speedometry.model import load_project, write_project
from speedometry.speed import dumps_estimate, estimate_document, evaluate_project
from speedometry.synth import generate_scene

from conftest import perpendicular_scene


SCENE_TOML = """
seed = 11

[camera]
position = [0.0, -18.0, 5.0]
yaw_deg = 90.0
pitch_deg = 15.0
focal_px = 1000.0
image_size = [1280, 720]

[grid]
origin = [-2.4, 2.0]
width_m = 3.5
height_m = 2.0

[vehicle]
start = [-0.8941, 0.0]
heading = [1.0, 0.0]
speed_mps = 13.4112

[clock]
fps = 30.0
n_frames = 5

[annotation]
m = 2
gt_unit = "mph"
"""


@pytest.fixture
def scene_file(tmp_path):
    path = tmp_path / "scene.fsp"
    write_project(generate_scene(perpendicular_scene(rho_px=0.0)).project, path)
    return path


# ---------------------------------------------------------------------------
# estimate


def test_estimate_json_matches_library(scene_file, capsys):
    assert main(["estimate", "--project", str(scene_file), "--format", "json"]) == 0
    out = capsys.readouterr().out
    ev = evaluate_project(load_project(scene_file), base_dir=scene_file.parent)
    assert out == dumps_estimate(estimate_document(ev))
    assert json.loads(out)["v_mph"] == pytest.approx(30.0, abs=1e-6)


def test_estimate_json_prefix_table(scene_file, capsys):
    main(["estimate", "--project", str(scene_file), "--format", "json", "--prefix-table"])
    doc = json.loads(capsys.readouterr().out)
    assert [row["k"] for row in doc["prefix_table"]] == [1, 2, 3, 4]


def test_estimate_text(scene_file, capsys):
    assert main(["estimate", "--project", str(scene_file)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("speed    v = ")
    assert "interval [" in out
    assert "d_1..d_" not in out
    main(["estimate", "--project", str(scene_file), "--prefix-table"])
    assert "d_1..d_2" in capsys.readouterr().out


def test_estimate_missing_file(tmp_path, capsys):
    assert main(["estimate", "--project", str(tmp_path / "ghost.fsp")]) == 2
    assert "error:" in capsys.readouterr().err


def test_estimate_incomplete_project(tmp_path, minimal_project, capsys):
    path = tmp_path / "nogrid.fsp"
    write_project(replace(minimal_project, grid=None), path)
    assert main(["estimate", "--project", str(path)]) == 2
    assert "grid" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# synth


def test_synth_writes_project_and_gt(tmp_path, capsys):
    spec_file = tmp_path / "scene.toml"
    spec_file.write_text(SCENE_TOML)
    out = tmp_path / "pass1.fsp"
    gt = tmp_path / "gt.txt"
    assert main(["synth", "--spec", str(spec_file), "--out", str(out), "--gt", str(gt)]) == 0
    assert "wrote" in capsys.readouterr().out

    project = load_project(out)
    project.validate()
    assert len(project.path.cps) == 5
    assert gt.read_text() == "30.0 mph\n"


def test_synth_emits_sidecar_for_pts_clock(tmp_path):
    toml = SCENE_TOML.replace(
        'fps = 30.0\nn_frames = 5',
        'timestamps = [0.0, 0.034, 0.066, 0.1]\nsidecar = "clip.pts"',
    )
    spec_file = tmp_path / "scene.toml"
    spec_file.write_text(toml)
    out = tmp_path / "sub" / "pass1.fsp"
    assert main(["synth", "--spec", str(spec_file), "--out", str(out)]) == 0
    sidecar = out.parent / "clip.pts"
    assert sidecar.read_text() == "0.0\n0.034\n0.066\n0.1\n"
    # the emitted project evaluates against its own sidecar
    ev = evaluate_project(load_project(out), base_dir=out.parent)
    assert ev.estimate.T_s == pytest.approx(0.1, abs=1e-12)


def test_synth_renders_frames(tmp_path):
    spec_file = tmp_path / "scene.toml"
    spec_file.write_text(SCENE_TOML)
    out = tmp_path / "pass1.fsp"
    frames_dir = tmp_path / "frames"
    assert main([
        "synth", "--spec", str(spec_file), "--out", str(out), "--frames-dir", str(frames_dir),
    ]) == 0
    project = load_project(out)
    assert [f.image_path for f in project.frames] == [f"frames/{i:04d}.png" for i in range(5)]
    img = Image.open(frames_dir / "0000.png")
    assert img.size == (1280, 720)


def test_synth_bad_spec(tmp_path, capsys):
    spec_file = tmp_path / "scene.toml"
    spec_file.write_text("[camera]\n")  # missing everything else
    assert main(["synth", "--spec", str(spec_file), "--out", str(tmp_path / "x.fsp")]) == 2
    assert "missing required key" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# calibrate


def test_calibrate_recovers_k(tmp_path, capsys):
    res = generate_scene(perpendicular_scene(rho_px=0.0, k=-0.12))
    path = tmp_path / "curved.fsp"
    write_project(replace(res.project, distortion=None), path)

    assert main(["calibrate", "--project", str(path)]) == 0
    out = capsys.readouterr().out
    assert "fitted k = " in out
    assert "line 0: residual" in out
    assert load_project(path).distortion is None  # no --write-model: file untouched

    assert main(["calibrate", "--project", str(path), "--write-model"]) == 0
    model = load_project(path).distortion
    assert model is not None
    assert model.k == pytest.approx(-0.12, abs=1e-3)


def test_calibrate_without_lines(tmp_path, minimal_project, capsys):
    path = tmp_path / "min.fsp"
    write_project(minimal_project, path)
    assert main(["calibrate", "--project", str(path)]) == 2
    assert "no line annotations" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# rectify-preview


@pytest.fixture
def imaged_file(tmp_path, minimal_project):
    Image.fromarray(np.full((100, 100), 90, dtype=np.uint8)).save(tmp_path / "f0.png")
    grid = replace(
        minimal_project.grid,
        corners=tuple(
            type(c)(x, y) for (x, y), c in zip(
                [(10.0, 10.0), (90.0, 10.0), (90.0, 90.0), (10.0, 90.0)],
                minimal_project.grid.corners,
            )
        ),
        width_m=2.0,
        height_m=1.0,
    )
    frames = (replace(minimal_project.frames[0], image_path="f0.png"),) + minimal_project.frames[1:]
    path = tmp_path / "prev.fsp"
    write_project(replace(minimal_project, grid=grid, frames=frames, path=None), path)
    return path


def test_rectify_preview(imaged_file, tmp_path, capsys):
    out = tmp_path / "aerial.png"
    rc = main(["rectify-preview", "--project", str(imaged_file), "--frame", "0", "--out", str(out)])
    assert rc == 0
    assert Image.open(out).size == (300, 250)  # (2 + 4) x (1 + 4) m at 50 px/m
    assert "wrote" in capsys.readouterr().out

    rc = main([
        "rectify-preview", "--project", str(imaged_file), "--frame", "0",
        "--out", str(out), "--px-per-m", "10", "--margin", "0",
    ])
    assert rc == 0
    assert Image.open(out).size == (20, 10)


def test_rectify_preview_requires_grid_and_image(imaged_file, tmp_path, minimal_project, capsys):
    assert main([
        "rectify-preview", "--project", str(imaged_file), "--frame", "1", "--out", str(tmp_path / "x.png"),
    ]) == 2
    assert "has no image" in capsys.readouterr().err

    bare = tmp_path / "nogrid.fsp"
    write_project(replace(minimal_project, grid=None), bare)
    assert main([
        "rectify-preview", "--project", str(bare), "--frame", "0", "--out", str(tmp_path / "x.png"),
    ]) == 2
    assert "no grid" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# bench


def test_bench_cli(tmp_path, capsys):
    write_project(generate_scene(perpendicular_scene(rho_px=0.0, seed=1)).project, tmp_path / "good.fsp")
    manifest = tmp_path / "manifest.txt"
    manifest.write_text("Lorex/cam1/T2P3 good.fsp\n")
    out = tmp_path / "report"
    assert main(["bench", "--manifest", str(manifest), "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert printed.splitlines()[0].startswith("perspective")
    assert f"report written to {out}" in printed
    assert (out / "summary.txt").exists()
    assert (out / "records.csv").exists()
    assert (out / "dv_hist_strong.svg").exists()

    out2 = tmp_path / "report2"
    assert main(["bench", "--manifest", str(manifest), "--out", str(out2), "--no-svg"]) == 0
    assert not (out2 / "dv_hist_strong.svg").exists()
    assert (out2 / "dv_hist_strong.csv").exists()


def test_bench_missing_manifest(tmp_path, capsys):
    assert main(["bench", "--manifest", str(tmp_path / "nope.txt"), "--out", str(tmp_path / "r")]) == 2
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# Parser plumbing


def test_parser_requires_subcommand():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "speedometry.cli", "--help"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "speedometry" in proc.stdout
    assert "estimate" in proc.stdout
