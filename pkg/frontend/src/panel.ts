/** Panel controller: every user-visible action is one API call, and every
 * piece of rendered state comes back from the service (HTTP reads or the two
 * WebSocket feeds), so a page reload reconstructs the same panel.
 */

import { ApiClient, ApiError, type SocketLike } from "./api.js";
import { clampRegion, regionPatch } from "./region.js";
import { STALE_AFTER_MS, Store, regionOf, type Banner } from "./store.js";
import type { PreviewMessage, Region, StatsMessage } from "./types.js";

export const RECONNECT_MS = 1000;
export const DRAG_PATCH_MS = 150;
const STALE_CHECK_MS = 250;

function msg(kind: Banner["kind"], text: string): Banner {
  return { kind, text };
}

function errText(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  return err instanceof Error ? err.message : String(err);
}

function dataUrl(b64: string): string {
  return `data:image/png;base64,${b64}`;
}

export interface GenerateForm {
  calibrationText: string;
  rows: number;
  cols: number;
  tileW: number;
  tileH: number;
  output: string;
  force: boolean;
}

export interface ReuseForm {
  path: string;
  adopt: boolean;
  rows?: number;
  cols?: number;
  tileW?: number;
  tileH?: number;
}

export class Panel {
  private statsSock: SocketLike | null = null;
  private previewSock: SocketLike | null = null;
  private staleTimer: ReturnType<typeof setInterval> | null = null;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private disposed = false;
  private dragPending: Region | null = null;
  private dragCooldown: ReturnType<typeof setTimeout> | null = null;
  /** Region PATCHes are chained so a drag's updates reach the service in
   * pointer order even when responses overtake each other. */
  private regionQueue: Promise<unknown> = Promise.resolve();

  constructor(
    readonly api: ApiClient,
    readonly store: Store,
  ) {}

  /** Fetch everything the panel mirrors; safe to call again for a resync. */
  async boot(): Promise<void> {
    const [screens, config, status] = await Promise.all([
      this.api.screens(),
      this.api.getConfig(),
      this.api.status(),
    ]);
    this.store.set({
      screens,
      config,
      phase: status.phase,
      stats: status.stats,
      connected: true,
      tab: status.phase === "idle" ? this.store.get().tab : "processing",
    });
    this.openStats();
    this.ensurePreview();
    if (this.staleTimer === null) {
      this.staleTimer = setInterval(() => this.checkStale(), STALE_CHECK_MS);
      (this.staleTimer as { unref?: () => void }).unref?.();
    }
  }

  dispose(): void {
    this.disposed = true;
    if (this.staleTimer !== null) clearInterval(this.staleTimer);
    if (this.reconnectTimer !== null) clearTimeout(this.reconnectTimer);
    if (this.dragCooldown !== null) clearTimeout(this.dragCooldown);
    this.statsSock?.close();
    this.previewSock?.close();
    this.statsSock = null;
    this.previewSock = null;
  }

  setTab(tab: "setup" | "processing"): void {
    this.store.set({ tab });
  }

  // -- live feeds ----------------------------------------------------------

  private openStats(): void {
    if (this.disposed || this.statsSock !== null) return;
    const sock = this.api.statsSocket();
    this.statsSock = sock;
    sock.onmessage = (ev) => {
      const doc = JSON.parse(String(ev.data)) as StatsMessage;
      const wasRunning = this.store.get().phase === "running";
      this.store.set({
        phase: doc.phase,
        stats: doc.stats,
        statsAt: Date.now(),
        statsStale: false,
        connected: true,
      });
      if (doc.phase === "running") this.ensurePreview();
      else if (wasRunning) this.store.set({ preview: null });
    };
    sock.onclose = () => {
      if (this.statsSock !== sock) return;
      this.statsSock = null;
      this.store.set({ connected: false });
      this.scheduleResync();
    };
    sock.onerror = () => sock.close();
  }

  private ensurePreview(): void {
    if (this.disposed || this.previewSock !== null) return;
    if (this.store.get().phase !== "running") return;
    const sock = this.api.previewSocket();
    this.previewSock = sock;
    sock.onmessage = (ev) => {
      const doc = JSON.parse(String(ev.data)) as PreviewMessage;
      if (doc.type === "frame") {
        this.store.set({
          preview: { ts: doc.ts, source: dataUrl(doc.source), native: dataUrl(doc.native) },
        });
      }
    };
    sock.onclose = () => {
      if (this.previewSock !== sock) return;
      this.previewSock = null;
      if (!this.disposed && this.store.get().phase === "running") {
        setTimeout(() => this.ensurePreview(), RECONNECT_MS);
      }
    };
    sock.onerror = () => sock.close();
  }

  private scheduleResync(): void {
    if (this.disposed || this.reconnectTimer !== null) return;
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      this.boot().catch(() => this.scheduleResync());
    }, RECONNECT_MS);
  }

  private checkStale(): void {
    const s = this.store.get();
    if (s.statsAt !== null && !s.statsStale && Date.now() - s.statsAt > STALE_AFTER_MS) {
      this.store.set({ statsStale: true });
    }
  }

  // -- setup tab -----------------------------------------------------------

  /** Generate a MAP file; the pasted document is checked before any request. */
  async generateMap(form: GenerateForm): Promise<boolean> {
    let calibration: unknown;
    try {
      calibration = JSON.parse(form.calibrationText);
    } catch (err) {
      this.store.set({
        setupMsg: msg("error", `calibration is not valid JSON: ${errText(err)}`),
      });
      return false;
    }
    try {
      const summary = await this.api.generateMap({
        calibration,
        output: form.output,
        rows: form.rows,
        cols: form.cols,
        tile_w: form.tileW,
        tile_h: form.tileH,
        force: form.force,
      });
      const config = await this.api.patchConfig({
        processing: {
          map: summary.path ?? form.output,
          quilt_rows: form.rows,
          quilt_cols: form.cols,
          tile_w: form.tileW,
          tile_h: form.tileH,
        },
      });
      this.store.set({
        config,
        setupMsg: msg("ok", `MAP written to ${form.output} (${summary.entries} entries)`),
      });
      return true;
    } catch (err) {
      this.store.set({ setupMsg: msg("error", errText(err)) });
      return false;
    }
  }

  /** Point the config at an existing MAP, adopting or checking its mask. */
  async reuseMap(form: ReuseForm): Promise<boolean> {
    let info;
    try {
      info = await this.api.inspectMap(form.path);
    } catch (err) {
      this.store.set({ setupMsg: msg("error", errText(err)) });
      return false;
    }
    if (
      !form.adopt &&
      (form.rows !== info.rows ||
        form.cols !== info.cols ||
        form.tileW !== info.tile_w ||
        form.tileH !== info.tile_h)
    ) {
      this.store.set({
        setupMsg: msg(
          "error",
          `mask ${form.rows}x${form.cols} tiles ${form.tileW}x${form.tileH} does not ` +
            `match MAP header ${info.rows}x${info.cols} tiles ${info.tile_w}x${info.tile_h}`,
        ),
      });
      return false;
    }
    try {
      const config = await this.api.patchConfig({
        processing: {
          map: form.path,
          quilt_rows: info.rows,
          quilt_cols: info.cols,
          tile_w: info.tile_w,
          tile_h: info.tile_h,
        },
      });
      this.store.set({
        config,
        setupMsg: msg("ok", `using MAP ${form.path} (${info.rows}x${info.cols} mask)`),
      });
      return true;
    } catch (err) {
      this.store.set({ setupMsg: msg("error", errText(err)) });
      return false;
    }
  }

  // -- processing tab ------------------------------------------------------

  /** One PATCH with the given region; banner on failure. */
  setRegion(r: Region): Promise<boolean> {
    const next = this.regionQueue.then(() => this.patchRegion(r));
    this.regionQueue = next.catch(() => undefined);
    return next;
  }

  private async patchRegion(r: Region): Promise<boolean> {
    try {
      const config = await this.api.patchConfig(regionPatch(r));
      this.store.set({ config, runMsg: null });
      return true;
    } catch (err) {
      this.store.set({ runMsg: msg("error", errText(err)) });
      return false;
    }
  }

  /** Region updates streamed during a drag, throttled to one PATCH per
   * DRAG_PATCH_MS; call setRegion with the final rect on release. */
  setRegionLive(r: Region): void {
    if (this.dragCooldown !== null) {
      this.dragPending = r;
      return;
    }
    void this.setRegion(r);
    this.dragCooldown = setTimeout(() => {
      this.dragCooldown = null;
      if (this.dragPending !== null) {
        const next = this.dragPending;
        this.dragPending = null;
        this.setRegionLive(next);
      }
    }, DRAG_PATCH_MS);
  }

  /** Switch screens, re-clamping any region to the new bounds. */
  async selectScreen(index: number): Promise<boolean> {
    const state = this.store.get();
    const screen = state.screens.find((s) => s.index === index);
    const region = regionOf(state.config);
    if (screen && region) {
      return this.setRegion(clampRegion({ ...region, screen_index: index }, screen));
    }
    return this.applyPatch({ input: { screen_index: index } });
  }

  /** Generic config patch from the processing forms; banner on failure. */
  async applyPatch(patch: unknown): Promise<boolean> {
    try {
      const config = await this.api.patchConfig(patch);
      this.store.set({ config, runMsg: null });
      return true;
    } catch (err) {
      this.store.set({ runMsg: msg("error", errText(err)) });
      return false;
    }
  }

  async start(): Promise<boolean> {
    try {
      await this.api.start();
      this.store.set({ phase: "running", runMsg: null });
      this.ensurePreview();
      return true;
    } catch (err) {
      this.store.set({ runMsg: msg("error", errText(err)) });
      return false;
    }
  }

  async stop(): Promise<boolean> {
    try {
      const resp = await this.api.stop();
      this.store.set({ phase: "idle", stats: resp.stats, preview: null, runMsg: null });
      return true;
    } catch (err) {
      this.store.set({ runMsg: msg("error", errText(err)) });
      return false;
    }
  }
}
