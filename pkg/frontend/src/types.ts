// JSON shapes served by the annotation service. The UI never recomputes
// anything these documents already state; it only formats and draws them.

export interface PixelPoint {
  x: number;
  y: number;
}

export interface FrameRef {
  index: number;
  image_path: string | null;
  timestamp_s: number | null;
}

export interface ContactPoint {
  frame: number;
  point: PixelPoint;
  m: number;
}

export interface Grid {
  corners: PixelPoint[];
  width_m: number;
  height_m: number;
}

export interface Line {
  points: PixelPoint[];
}

export interface Timing {
  mode: "cfr" | "pts";
  fps?: number;
  sidecar?: string;
  delta_t_s: number;
}

export interface Distortion {
  cx: number;
  cy: number;
  k: number;
  norm: number;
}

export interface ProjectDoc {
  schema_version: number;
  image_size: { width: number; height: number };
  frames: FrameRef[];
  timing: Timing | null;
  lines: Line[];
  grid: Grid | null;
  path: { cps: ContactPoint[] } | null;
  ground_truth: { speed: number; unit: string; source: string | null } | null;
  distortion: Distortion | null;
}

export interface SegmentRow {
  j: number;
  frame_a: number;
  frame_b: number;
  d_m: number;
  d_min_m: number;
  d_max_m: number;
  delta_d_m: number;
  v_mps: number;
}

export interface PrefixRow {
  k: number;
  d_m: number;
  delta_d_m: number;
  T_s: number;
  v_mps: number;
  delta_v_mps: number;
  v_mph: number;
  delta_v_mph: number;
}

export interface EstimateDoc {
  schema_version: number;
  v_mps: number;
  delta_v_mps: number;
  v_mph: number;
  delta_v_mph: number;
  v_kmh: number;
  delta_v_kmh: number;
  interval_mps: [number, number];
  interval_mph: [number, number];
  interval_kmh: [number, number];
  d_m: number;
  delta_d_m: number;
  T_s: number;
  delta_t_s: number;
  eps_d: number;
  eps_t: number;
  eps_v: number;
  segments: SegmentRow[];
  diagnostics: {
    distortion_k: number | null;
    h_condition: number | null;
    n_contact_points: number;
    timing_source: string;
  };
  prefix_table?: PrefixRow[];
}

export type Mutation = Record<string, unknown> & { op: string };

export interface OpenResponse {
  session_id: string;
  revision: number;
  project: ProjectDoc;
}

export interface MutationResponse {
  revision: number;
  staged_grid_corners: number;
}

export interface WarningsResponse {
  warnings: string[];
  revision: number;
}
