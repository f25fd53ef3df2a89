// Display formatting for estimate documents. Same conventions as the CLI
// text report: one decimal for display units, four for metres and seconds.

import type { EstimateDoc, Timing } from "./types.js";

export function speedLine(doc: EstimateDoc): string {
  return (
    `v = ${doc.v_mph.toFixed(1)} mph = ${doc.v_kmh.toFixed(1)} km/h` +
    ` (${doc.v_mps.toFixed(4)} m/s)`
  );
}

export function intervalLine(doc: EstimateDoc): string {
  const [lo, hi] = doc.interval_mph;
  return `[${lo.toFixed(1)}, ${hi.toFixed(1)}] mph (delta_v = ${doc.delta_v_mph.toFixed(1)} mph)`;
}

export function pathLine(doc: EstimateDoc): string {
  return (
    `d = ${doc.d_m.toFixed(4)} m, delta_d = ${doc.delta_d_m.toFixed(4)} m` +
    ` over ${doc.segments.length} segment(s)`
  );
}

export function timingLine(doc: EstimateDoc): string {
  return (
    `T = ${doc.T_s.toFixed(4)} s, delta_t = ${(doc.delta_t_s * 1000).toFixed(1)} ms` +
    ` (${doc.diagnostics.timing_source})`
  );
}

export function errorLine(doc: EstimateDoc): string {
  return `eps_d = ${percent(doc.eps_d)}, eps_t = ${percent(doc.eps_t)}`;
}

export function percent(frac: number): string {
  return `${(frac * 100).toFixed(4)}%`;
}

export function headline(doc: EstimateDoc): string[] {
  return [speedLine(doc), intervalLine(doc), pathLine(doc), timingLine(doc), errorLine(doc)];
}

// 2m+1 pixels on a side, (x, y) at the centre pixel
export function boxSizeLabel(m: number): string {
  const side = 2 * m + 1;
  return `${side}x${side} px`;
}

export function timingLabel(timing: Timing | null): string {
  if (timing === null) return "no timing source";
  if (timing.mode === "cfr") return `cfr ${timing.fps} fps`;
  return `pts ${timing.sidecar}`;
}

export function missingLabel(missing: string[]): string {
  if (missing.length === 0) return "estimate unavailable";
  return `estimate needs: ${missing.join(", ")}`;
}
