#!/usr/bin/env python3
"""Build a self-contained demo workspace: scene spec, annotated project,
rendered frames, sidecar timestamps, and ground truth.

    python3 scripts/make_demo_scene.py demo/
    speedometry estimate --project demo/pass1.fsp --prefix-table
    speedometry serve &  # then open a session on demo/pass1.fsp
"""

import argparse
from pathlib import Path

from speedometry.cli import main as cli_main

SCENE_TOML = """\
# A 30 mph pass in front of a kerb-mounted camera, mild barrel distortion.
seed = 7

[camera]
position = [0.0, -18.0, 5.0]
yaw_deg = 75.0
pitch_deg = 15.0
focal_px = 1000.0
image_size = [1280, 720]

[distortion]
k = -0.12

[grid]
origin = [-2.4, 2.0]
width_m = 3.5
height_m = 2.0

[vehicle]
start = [-1.2, 0.0]
heading = [1.0, 0.0]
speed_mps = 13.4112

[clock]
timestamps = [0.0, 0.0333, 0.0671, 0.1002, 0.1334, 0.1669, 0.2]
sidecar = "pass1.pts"
delta_t_s = 0.005

[annotation]
m = 2
rho_px = 1.5
gt_unit = "mph"
"""


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out_dir", nargs="?", default="demo")
    ap.add_argument("--no-frames", action="store_true", help="skip rendering frame images")
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "scene.toml").write_text(SCENE_TOML)

    argv = [
        "synth",
        "--spec", str(out / "scene.toml"),
        "--out", str(out / "pass1.fsp"),
        "--gt", str(out / "pass1.gt.txt"),
    ]
    if not args.no_frames:
        argv += ["--frames-dir", str(out / "frames")]
    rc = cli_main(argv)
    if rc == 0:
        print(f"demo workspace ready in {out}/")
    return rc


if __name__ == "__main__":
    raise SystemExit(main())
