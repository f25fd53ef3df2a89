import { describe, expect, it } from "vitest";

import {
  boxSizeLabel,
  errorLine,
  headline,
  intervalLine,
  missingLabel,
  pathLine,
  percent,
  speedLine,
  timingLabel,
  timingLine,
} from "../src/format.js";
import type { EstimateDoc, SegmentRow } from "../src/types.js";

function segment(j: number): SegmentRow {
  return {
    j,
    frame_a: j - 1,
    frame_b: j,
    d_m: 0.44704,
    d_min_m: 0.3695,
    d_max_m: 0.6003,
    delta_d_m: 0.1533,
    v_mps: 13.4112,
  };
}

const doc: EstimateDoc = {
  schema_version: 1,
  v_mps: 13.411199999999978,
  delta_v_mps: 5.519268510050322,
  v_mph: 29.99999999999995,
  delta_v_mph: 12.346252035724593,
  v_kmh: 48.28031999999992,
  delta_v_kmh: 19.869366636181162,
  interval_mps: [7.8919314899496555, 18.9304685100503],
  interval_mph: [17.653747964275357, 42.34625203572455],
  interval_kmh: [28.41095336381876, 68.14968663618109],
  d_m: 1.788159999999997,
  delta_d_m: 0.6017904680067098,
  T_s: 0.13333333333333333,
  delta_t_s: 0.005,
  eps_d: 0.33654173452415376,
  eps_t: 0.075,
  eps_v: 0.41154173452415377,
  segments: [segment(1), segment(2), segment(3), segment(4)],
  diagnostics: {
    distortion_k: 0.0,
    h_condition: 20340.6,
    n_contact_points: 5,
    timing_source: "cfr",
  },
};

describe("estimate lines", () => {
  it("formats the speed in all three units", () => {
    expect(speedLine(doc)).toBe("v = 30.0 mph = 48.3 km/h (13.4112 m/s)");
  });

  it("formats the worst-case interval", () => {
    expect(intervalLine(doc)).toBe("[17.7, 42.3] mph (delta_v = 12.3 mph)");
  });

  it("formats path totals with the segment count", () => {
    expect(pathLine(doc)).toBe("d = 1.7882 m, delta_d = 0.6018 m over 4 segment(s)");
  });

  it("formats timing with delta_t in milliseconds", () => {
    expect(timingLine(doc)).toBe("T = 0.1333 s, delta_t = 5.0 ms (cfr)");
  });

  it("formats the relative error split", () => {
    expect(errorLine(doc)).toBe("eps_d = 33.6542%, eps_t = 7.5000%");
  });

  it("stacks all five lines", () => {
    const lines = headline(doc);
    expect(lines).toHaveLength(5);
    expect(lines[0]).toContain("30.0 mph");
    expect(lines[4]).toContain("eps_t");
  });
});

describe("percent", () => {
  it("renders a fraction with four decimals", () => {
    expect(percent(0.075)).toBe("7.5000%");
    expect(percent(0)).toBe("0.0000%");
  });
});

describe("labels", () => {
  it("describes the 2m+1 box side", () => {
    expect(boxSizeLabel(0)).toBe("1x1 px");
    expect(boxSizeLabel(1)).toBe("3x3 px");
    expect(boxSizeLabel(2)).toBe("5x5 px");
  });

  it("describes the timing source", () => {
    expect(timingLabel({ mode: "cfr", fps: 30.0, delta_t_s: 0.005 })).toBe("cfr 30 fps");
    expect(timingLabel({ mode: "pts", sidecar: "pass1.pts", delta_t_s: 0.005 })).toBe(
      "pts pass1.pts",
    );
    expect(timingLabel(null)).toBe("no timing source");
  });

  it("lists what the estimate still needs", () => {
    expect(missingLabel(["grid", "path"])).toBe("estimate needs: grid, path");
    expect(missingLabel([])).toBe("estimate unavailable");
  });
});
