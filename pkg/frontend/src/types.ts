/** JSON document shapes exchanged with the control service. */

export interface Screen {
  index: number;
  w: number;
  h: number;
}

export interface Region {
  screen_index: number;
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface InputDoc {
  type: string;
  path?: string | null;
  camera_index?: number;
  screen_index?: number;
  region_x?: number;
  region_y?: number;
  region_w?: number;
  region_h?: number;
}

export interface OutputDoc {
  type: string;
  path: string;
  display_index: number;
  port: number;
}

export interface ProcessingDoc {
  map: string | null;
  calibration: string | null;
  quilt_rows: number;
  quilt_cols: number;
  tile_w: number;
  tile_h: number;
  decimation: number;
  algorithm: string;
  model: string;
  provider: string;
  fps: number | null;
  duration_s: number | null;
  alpha: number;
  gain: number | null;
  zero_parallax: number;
}

export interface ConfigDoc {
  input: InputDoc;
  output: OutputDoc;
  processing: ProcessingDoc;
}

export interface StageRow {
  ema_ms: number;
  last_ms: number;
  processed: number;
  dropped: number;
  offered: number;
}

export interface StatsDoc {
  stages: Record<string, StageRow>;
  fps: number;
  elapsed_s: number;
  depth_input: { w: number; h: number };
}

export type Phase = "idle" | "running" | "stopping";

export interface StatusDoc {
  phase: Phase;
  stats: StatsDoc;
}

export interface MapSummary {
  path?: string;
  screen_w: number;
  screen_h: number;
  rows: number;
  cols: number;
  tile_w: number;
  tile_h: number;
  entries: number;
}

export interface ApiErrorBody {
  error: string;
  detail: string;
}

export interface StatsMessage {
  phase: Phase;
  stats: StatsDoc;
}

export type PreviewMessage =
  | { type: "idle" }
  | { type: "frame"; ts: number; source: string; native: string };
