/** Single state store. Every field mirrors something the API can reproduce,
 * so a reload rebuilds the same state from reads alone; the only panel-local
 * bits are the active tab and transient banners. */

import type { ConfigDoc, Phase, Region, Screen, StageRow, StatsDoc } from "./types.js";

export type Tab = "setup" | "processing";

export interface Banner {
  kind: "ok" | "error";
  text: string;
}

export interface PanelState {
  tab: Tab;
  connected: boolean;
  phase: Phase;
  screens: Screen[];
  config: ConfigDoc | null;
  stats: StatsDoc | null;
  /** Epoch ms of the last stats message; staleness is derived from it. */
  statsAt: number | null;
  statsStale: boolean;
  preview: { ts: number; source: string; native: string } | null;
  setupMsg: Banner | null;
  runMsg: Banner | null;
}

export function initialState(): PanelState {
  return {
    tab: "setup",
    connected: false,
    phase: "idle",
    screens: [],
    config: null,
    stats: null,
    statsAt: null,
    statsStale: false,
    preview: null,
    setupMsg: null,
    runMsg: null,
  };
}

export type Listener = (state: PanelState) => void;

export class Store {
  private state = initialState();
  private listeners = new Set<Listener>();

  get(): PanelState {
    return this.state;
  }

  set(patch: Partial<PanelState>): void {
    this.state = { ...this.state, ...patch };
    for (const fn of this.listeners) fn(this.state);
  }

  subscribe(fn: Listener): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }
}

// -- selectors --------------------------------------------------------------

export const STAGE_ORDER = ["capture", "depth", "views", "map", "sink"] as const;

/** Stats silence threshold before the dashboard is marked stale. */
export const STALE_AFTER_MS = 3000;

/** Capture region from the config mirror, or null when none is set. */
export function regionOf(config: ConfigDoc | null): Region | null {
  const inp = config?.input;
  if (
    !inp ||
    inp.region_x === undefined ||
    inp.region_y === undefined ||
    inp.region_w === undefined ||
    inp.region_h === undefined
  ) {
    return null;
  }
  return {
    screen_index: inp.screen_index ?? 0,
    x: inp.region_x,
    y: inp.region_y,
    w: inp.region_w,
    h: inp.region_h,
  };
}

function zeroRow(): StageRow {
  return { ema_ms: 0, last_ms: 0, processed: 0, dropped: 0, offered: 0 };
}

export interface DashboardView {
  fps: number;
  elapsed_s: number;
  depthInput: { w: number; h: number } | null;
  stages: Array<{ name: string; row: StageRow }>;
}

/** What the dashboard renders: live numbers while running, zeros otherwise. */
export function dashboard(state: PanelState): DashboardView {
  const live = state.phase === "running" && state.stats !== null;
  const stats = live ? (state.stats as StatsDoc) : null;
  return {
    fps: stats ? stats.fps : 0,
    elapsed_s: stats ? stats.elapsed_s : 0,
    depthInput: stats ? stats.depth_input : null,
    stages: STAGE_ORDER.map((name) => ({
      name,
      row: stats?.stages[name] ?? zeroRow(),
    })),
  };
}
