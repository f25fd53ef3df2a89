// Canvas/image coordinate mapping and hit testing. All annotation geometry
// stays in image pixel coordinates; only drawing goes through the view
// transform, so a resized canvas never perturbs stored points.

import type { ContactPoint, Grid, PixelPoint } from "./types.js";

export interface ViewTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export function fitTransform(
  imageW: number,
  imageH: number,
  canvasW: number,
  canvasH: number,
): ViewTransform {
  const scale = Math.min(canvasW / imageW, canvasH / imageH);
  return {
    scale,
    offsetX: (canvasW - imageW * scale) / 2,
    offsetY: (canvasH - imageH * scale) / 2,
  };
}

export function toCanvas(t: ViewTransform, p: PixelPoint): PixelPoint {
  return { x: t.offsetX + p.x * t.scale, y: t.offsetY + p.y * t.scale };
}

export function toImage(t: ViewTransform, p: PixelPoint): PixelPoint {
  return { x: (p.x - t.offsetX) / t.scale, y: (p.y - t.offsetY) / t.scale };
}

export interface Box {
  left: number;
  top: number;
  width: number;
  height: number;
}

// uncertainty box corners sit m pixels from the annotated centre
export function uncertaintyBox(cp: ContactPoint): Box {
  return {
    left: cp.point.x - cp.m,
    top: cp.point.y - cp.m,
    width: 2 * cp.m,
    height: 2 * cp.m,
  };
}

export function nearestContactPoint(
  cps: ContactPoint[],
  p: PixelPoint,
  tolPx: number,
): number | null {
  let best: number | null = null;
  let bestD2 = tolPx * tolPx;
  cps.forEach((cp, i) => {
    const dx = cp.point.x - p.x;
    const dy = cp.point.y - p.y;
    const d2 = dx * dx + dy * dy;
    if (d2 <= bestD2) {
      best = i;
      bestD2 = d2;
    }
  });
  return best;
}

export function pathPolyline(cps: ContactPoint[]): PixelPoint[] {
  return [...cps].sort((a, b) => a.frame - b.frame).map((cp) => cp.point);
}

export function gridPolygon(grid: Grid): PixelPoint[] {
  return [...grid.corners, grid.corners[0]!];
}
