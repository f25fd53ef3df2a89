#!/usr/bin/env python3
"""Coverage check for the worst-case interval over randomized scenes.

Each trial draws a random camera geometry, renders a pass, perturbs the
annotations within their declared boxes and the frame times within delta_t,
and counts how often the reported interval contains the true speed.  With
honest bounds the rate must be 1.0; --understate-m shows what happens when
annotators claim tighter boxes than their actual click error.
"""

import argparse
import time
from dataclasses import replace

import numpy as np

from speedometry.model import ContactPoint, PathAnnotation
from speedometry.speed import evaluate_project
from speedometry.synth import coverage_trial, generate_scene, sample_valid_scene


def understated_coverage(rng: np.random.Generator, n_scenes: int, declared_m: int) -> float:
    covered = 0
    for _ in range(n_scenes):
        spec, result = sample_valid_scene(rng, cp_m=3, rho_px=3.0)
        cps = tuple(
            ContactPoint(frame=cp.frame, point=cp.point, m=declared_m)
            for cp in result.project.path.cps
        )
        lied = replace(result.project, path=PathAnnotation(cps=cps))
        est = evaluate_project(lied).estimate
        lo, hi = est.interval_mps
        covered += lo <= spec.speed_mps <= hi
    return covered / n_scenes


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenes", type=int, default=200)
    ap.add_argument("--trials", type=int, default=1, help="noise redraws per scene")
    ap.add_argument("--seed", type=int, default=20260815)
    ap.add_argument(
        "--understate-m",
        type=int,
        metavar="M",
        help="declare box half-width M while the true click noise spans 3 px",
    )
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    if args.understate_m is not None:
        rate = understated_coverage(rng, args.scenes, args.understate_m)
        print(f"declared m = {args.understate_m}, true noise 3 px: coverage {rate:.3f}")
        return 0

    t0 = time.perf_counter()
    total = 0.0
    for _ in range(args.scenes):
        spec, _ = sample_valid_scene(rng)
        total += coverage_trial(spec, args.trials)
    rate = total / args.scenes
    print(
        f"coverage {rate:.4f} over {args.scenes} scenes x {args.trials} trials"
        f" ({time.perf_counter() - t0:.1f} s)"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
