/** Region drag math for the schematic screen proxy.
 *
 * The proxy is a scaled-down rectangle of the selected screen; pointer deltas
 * are divided back by the scale so the region is always tracked in real
 * screen pixels. All functions are pure so drags are testable without a DOM.
 */

import type { Region, Screen } from "./types.js";

/** Smallest capture dimension the engine accepts. */
export const REGION_MIN = 16;

export type DragMode = "move" | "resize";

export interface DragStart {
  mode: DragMode;
  pointerX: number;
  pointerY: number;
  region: Region;
}

/** Scale factor that fits a screen into a maxW x maxH proxy box (never >1). */
export function proxyScale(screen: Screen, maxW: number, maxH: number): number {
  return Math.min(maxW / screen.w, maxH / screen.h, 1);
}

/** Clamp a region to the screen: integer coords, min size, inside bounds. */
export function clampRegion(r: Region, screen: Screen): Region {
  let w = Math.round(Math.min(Math.max(r.w, REGION_MIN), screen.w));
  let h = Math.round(Math.min(Math.max(r.h, REGION_MIN), screen.h));
  const x = Math.round(Math.min(Math.max(r.x, 0), screen.w - w));
  const y = Math.round(Math.min(Math.max(r.y, 0), screen.h - h));
  w = Math.min(w, screen.w - x);
  h = Math.min(h, screen.h - y);
  return { screen_index: screen.index, x, y, w, h };
}

/** New region after the pointer moved to (px, py) in proxy coordinates. */
export function applyDrag(
  start: DragStart,
  px: number,
  py: number,
  scale: number,
  screen: Screen,
): Region {
  const dx = (px - start.pointerX) / scale;
  const dy = (py - start.pointerY) / scale;
  const r = start.region;
  const moved =
    start.mode === "move"
      ? { ...r, x: r.x + dx, y: r.y + dy }
      : { ...r, w: r.w + dx, h: r.h + dy };
  return clampRegion(moved, screen);
}

/** Config patch document that applies a region. */
export function regionPatch(r: Region): {
  input: {
    screen_index: number;
    region_x: number;
    region_y: number;
    region_w: number;
    region_h: number;
  };
} {
  return {
    input: {
      screen_index: r.screen_index,
      region_x: r.x,
      region_y: r.y,
      region_w: r.w,
      region_h: r.h,
    },
  };
}

export function sameRegion(a: Region | null, b: Region | null): boolean {
  if (a === null || b === null) return a === b;
  return (
    a.screen_index === b.screen_index &&
    a.x === b.x &&
    a.y === b.y &&
    a.w === b.w &&
    a.h === b.h
  );
}
