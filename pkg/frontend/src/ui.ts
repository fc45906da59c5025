/** DOM adapter: binds the static markup to the store and the panel actions.
 * Rendering is one-way (store to DOM); every control simply calls a panel
 * method, so this file holds no state beyond the in-flight drag.
 */

import type { Panel } from "./panel.js";
import { dashboard, regionOf, type PanelState, type Store } from "./store.js";
import { applyDrag, clampRegion, proxyScale, type DragStart } from "./region.js";
import type { Region, Screen } from "./types.js";

const PROXY_MAX_W = 380;
const PROXY_MAX_H = 240;

export function bindUi(panel: Panel, store: Store, doc: Document = document): () => void {
  const el = <T extends HTMLElement>(id: string): T => {
    const node = doc.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
  };

  const phaseBadge = el<HTMLSpanElement>("phase-badge");
  const connDot = el<HTMLSpanElement>("conn-dot");
  const stopAny = el<HTMLButtonElement>("stop-any");
  const tabSetup = el<HTMLButtonElement>("tab-setup");
  const tabProcessing = el<HTMLButtonElement>("tab-processing");
  const paneSetup = el<HTMLElement>("pane-setup");
  const paneProcessing = el<HTMLElement>("pane-processing");
  const setupMsg = el<HTMLDivElement>("setup-msg");
  const runMsg = el<HTMLDivElement>("run-msg");

  const genCal = el<HTMLTextAreaElement>("gen-cal");
  const genRows = el<HTMLInputElement>("gen-rows");
  const genCols = el<HTMLInputElement>("gen-cols");
  const genTileW = el<HTMLInputElement>("gen-tile-w");
  const genTileH = el<HTMLInputElement>("gen-tile-h");
  const genOutput = el<HTMLInputElement>("gen-output");
  const genForce = el<HTMLInputElement>("gen-force");
  const reusePath = el<HTMLInputElement>("reuse-path");
  const reuseAdopt = el<HTMLInputElement>("reuse-adopt");
  const reuseRows = el<HTMLInputElement>("reuse-rows");
  const reuseCols = el<HTMLInputElement>("reuse-cols");
  const reuseTileW = el<HTMLInputElement>("reuse-tile-w");
  const reuseTileH = el<HTMLInputElement>("reuse-tile-h");

  const srcType = el<HTMLSelectElement>("src-type");
  const srcPath = el<HTMLInputElement>("src-path");
  const screenSelect = el<HTMLSelectElement>("screen-select");
  const proxy = el<HTMLDivElement>("screen-proxy");
  const regionRect = el<HTMLDivElement>("region-rect");
  const regionHandle = el<HTMLSpanElement>("region-handle");
  const regX = el<HTMLInputElement>("reg-x");
  const regY = el<HTMLInputElement>("reg-y");
  const regW = el<HTMLInputElement>("reg-w");
  const regH = el<HTMLInputElement>("reg-h");
  const propFps = el<HTMLInputElement>("prop-fps");
  const propDuration = el<HTMLInputElement>("prop-duration");
  const algoModel = el<HTMLInputElement>("algo-model");
  const algoKind = el<HTMLSelectElement>("algo-kind");
  const algoDecimation = el<HTMLInputElement>("algo-decimation");
  const sinkType = el<HTMLSelectElement>("sink-type");
  const sinkPath = el<HTMLInputElement>("sink-path");
  const sinkDisplay = el<HTMLInputElement>("sink-display");
  const sinkPort = el<HTMLInputElement>("sink-port");
  const startBtn = el<HTMLButtonElement>("start");
  const stopBtn = el<HTMLButtonElement>("stop");
  const fpsCounter = el<HTMLSpanElement>("fps-counter");
  const elapsed = el<HTMLSpanElement>("elapsed");
  const depthInput = el<HTMLSpanElement>("depth-input");
  const stageBars = el<HTMLDivElement>("stage-bars");
  const staleBadge = el<HTMLSpanElement>("stale-badge");
  const previewSource = el<HTMLImageElement>("preview-source");
  const previewNative = el<HTMLImageElement>("preview-native");

  const setVal = (input: HTMLInputElement | HTMLSelectElement, value: string) => {
    if (doc.activeElement !== input && input.value !== value) input.value = value;
  };
  const num = (input: HTMLInputElement): number => Number(input.value);

  // -- selected screen and region geometry --------------------------------

  const selectedScreen = (s: PanelState): Screen | null => {
    const region = regionOf(s.config);
    const want = region?.screen_index ?? s.config?.input.screen_index ?? 0;
    return s.screens.find((sc) => sc.index === want) ?? s.screens[0] ?? null;
  };

  const currentRegion = (s: PanelState, screen: Screen): Region =>
    regionOf(s.config) ?? {
      screen_index: screen.index,
      x: 0,
      y: 0,
      w: Math.min(640, screen.w),
      h: Math.min(480, screen.h),
    };

  // -- drag handling -------------------------------------------------------

  let drag: { start: DragStart; scale: number; screen: Screen } | null = null;

  const beginDrag = (ev: PointerEvent, mode: DragStart["mode"]) => {
    const s = store.get();
    const screen = selectedScreen(s);
    if (!screen) return;
    drag = {
      start: { mode, pointerX: ev.clientX, pointerY: ev.clientY, region: currentRegion(s, screen) },
      scale: proxyScale(screen, PROXY_MAX_W, PROXY_MAX_H),
      screen,
    };
    (ev.target as Element).setPointerCapture?.(ev.pointerId);
    ev.preventDefault();
    ev.stopPropagation();
  };

  const dragTo = (ev: PointerEvent): Region | null =>
    drag ? applyDrag(drag.start, ev.clientX, ev.clientY, drag.scale, drag.screen) : null;

  regionRect.addEventListener("pointerdown", (ev) => beginDrag(ev, "move"));
  regionHandle.addEventListener("pointerdown", (ev) => beginDrag(ev, "resize"));
  for (const node of [regionRect, regionHandle]) {
    node.addEventListener("pointermove", (ev) => {
      const r = dragTo(ev);
      if (!r || !drag) return;
      placeRect(r, drag.scale);
      panel.setRegionLive(r);
    });
    node.addEventListener("pointerup", (ev) => {
      const r = dragTo(ev);
      drag = null;
      if (r) void panel.setRegion(r);
    });
  }

  const placeRect = (r: Region, scale: number) => {
    regionRect.style.left = `${r.x * scale}px`;
    regionRect.style.top = `${r.y * scale}px`;
    regionRect.style.width = `${r.w * scale}px`;
    regionRect.style.height = `${r.h * scale}px`;
  };

  // -- control wiring ------------------------------------------------------

  tabSetup.addEventListener("click", () => panel.setTab("setup"));
  tabProcessing.addEventListener("click", () => panel.setTab("processing"));

  el<HTMLButtonElement>("gen-submit").addEventListener("click", () => {
    void panel.generateMap({
      calibrationText: genCal.value,
      rows: num(genRows),
      cols: num(genCols),
      tileW: num(genTileW),
      tileH: num(genTileH),
      output: genOutput.value.trim(),
      force: genForce.checked,
    });
  });

  reuseAdopt.addEventListener("change", () => {
    for (const input of [reuseRows, reuseCols, reuseTileW, reuseTileH]) {
      input.disabled = reuseAdopt.checked;
    }
  });

  el<HTMLButtonElement>("reuse-submit").addEventListener("click", () => {
    void panel.reuseMap({
      path: reusePath.value.trim(),
      adopt: reuseAdopt.checked,
      rows: num(reuseRows),
      cols: num(reuseCols),
      tileW: num(reuseTileW),
      tileH: num(reuseTileH),
    });
  });

  const applySource = () => {
    void panel.applyPatch({
      input: { type: srcType.value, path: srcPath.value },
    });
  };
  srcType.addEventListener("change", applySource);
  srcPath.addEventListener("change", applySource);

  screenSelect.addEventListener("change", () => {
    void panel.selectScreen(Number(screenSelect.value));
  });

  el<HTMLButtonElement>("reg-apply").addEventListener("click", () => {
    const s = store.get();
    const screen = selectedScreen(s);
    if (!screen) return;
    const wanted: Region = {
      screen_index: screen.index,
      x: num(regX),
      y: num(regY),
      w: num(regW),
      h: num(regH),
    };
    void panel.setRegion(clampRegion(wanted, screen));
  });

  el<HTMLButtonElement>("props-apply").addEventListener("click", () => {
    void panel.applyPatch({
      processing: {
        fps: propFps.value === "" ? null : num(propFps),
        duration_s: propDuration.value === "" ? null : num(propDuration),
      },
    });
  });

  el<HTMLButtonElement>("algo-apply").addEventListener("click", () => {
    void panel.applyPatch({
      processing: {
        model: algoModel.value,
        algorithm: algoKind.value,
        decimation: num(algoDecimation),
      },
    });
  });

  el<HTMLButtonElement>("sink-apply").addEventListener("click", () => {
    void panel.applyPatch({
      output: {
        type: sinkType.value,
        path: sinkPath.value,
        display_index: num(sinkDisplay),
        port: num(sinkPort),
      },
    });
  });

  startBtn.addEventListener("click", () => void panel.start());
  stopBtn.addEventListener("click", () => void panel.stop());
  stopAny.addEventListener("click", () => void panel.stop());

  // -- rendering -----------------------------------------------------------

  const renderBanner = (node: HTMLDivElement, banner: PanelState["setupMsg"]) => {
    if (!banner) {
      node.classList.add("hidden");
      node.textContent = "";
      return;
    }
    node.classList.remove("hidden");
    node.className = `banner ${banner.kind}`;
    node.textContent = banner.text;
  };

  let screenSig = "";

  const render = (s: PanelState) => {
    phaseBadge.textContent = s.phase;
    phaseBadge.className = `badge ${s.phase}`;
    connDot.classList.toggle("connected", s.connected);
    stopAny.classList.toggle("hidden", s.phase === "idle");

    tabSetup.classList.toggle("active", s.tab === "setup");
    tabProcessing.classList.toggle("active", s.tab === "processing");
    paneSetup.classList.toggle("hidden", s.tab !== "setup");
    paneProcessing.classList.toggle("hidden", s.tab !== "processing");

    renderBanner(setupMsg, s.setupMsg);
    renderBanner(runMsg, s.runMsg);

    const sig = s.screens.map((sc) => `${sc.index}:${sc.w}x${sc.h}`).join(",");
    if (sig !== screenSig) {
      screenSig = sig;
      screenSelect.replaceChildren(
        ...s.screens.map((sc) => {
          const opt = doc.createElement("option");
          opt.value = String(sc.index);
          opt.textContent = `screen ${sc.index} (${sc.w}x${sc.h})`;
          return opt;
        }),
      );
    }

    const screen = selectedScreen(s);
    if (screen) {
      setVal(screenSelect, String(screen.index));
      const scale = proxyScale(screen, PROXY_MAX_W, PROXY_MAX_H);
      proxy.style.width = `${Math.round(screen.w * scale)}px`;
      proxy.style.height = `${Math.round(screen.h * scale)}px`;
      if (!drag) {
        const region = regionOf(s.config);
        regionRect.classList.toggle("hidden", region === null);
        if (region) {
          placeRect(region, scale);
          setVal(regX, String(region.x));
          setVal(regY, String(region.y));
          setVal(regW, String(region.w));
          setVal(regH, String(region.h));
        }
      }
    }

    const cfg = s.config;
    if (cfg) {
      setVal(srcType, cfg.input.type);
      setVal(srcPath, cfg.input.path ?? "");
      setVal(propFps, cfg.processing.fps === null ? "" : String(cfg.processing.fps));
      setVal(
        propDuration,
        cfg.processing.duration_s === null ? "" : String(cfg.processing.duration_s),
      );
      setVal(algoModel, cfg.processing.model);
      setVal(algoKind, cfg.processing.algorithm);
      setVal(algoDecimation, String(cfg.processing.decimation));
      setVal(sinkType, cfg.output.type);
      setVal(sinkPath, cfg.output.path);
      setVal(sinkDisplay, String(cfg.output.display_index));
      setVal(sinkPort, String(cfg.output.port));
    }

    const idle = s.phase === "idle";
    startBtn.disabled = !idle || !s.connected;
    stopBtn.disabled = idle;
    // cold settings lock while a run is active; hot ones stay editable
    for (const input of [
      srcType, srcPath, propDuration, algoModel, algoKind,
      algoDecimation, sinkType, sinkPath, sinkDisplay, sinkPort,
    ]) {
      input.disabled = !idle;
    }

    const dash = dashboard(s);
    fpsCounter.textContent = `${dash.fps.toFixed(1)} fps`;
    elapsed.textContent = `${dash.elapsed_s.toFixed(1)} s`;
    depthInput.textContent = dash.depthInput
      ? `depth in ${dash.depthInput.w}x${dash.depthInput.h}`
      : "";
    stageBars.replaceChildren(
      ...dash.stages.map(({ name, row }) => {
        const div = doc.createElement("div");
        div.className = "stage";
        const label = doc.createElement("span");
        label.className = "name";
        label.textContent = name;
        const bar = doc.createElement("span");
        bar.className = "bar";
        bar.style.width = `${Math.min(row.ema_ms * 3, 240)}px`;
        const nums = doc.createElement("span");
        nums.className = "nums";
        nums.textContent =
          `${row.ema_ms.toFixed(1)} ms  ok ${row.processed}  drop ${row.dropped}`;
        div.append(label, bar, nums);
        return div;
      }),
    );
    staleBadge.classList.toggle("hidden", !s.statsStale);

    if (s.preview) {
      previewSource.src = s.preview.source;
      previewNative.src = s.preview.native;
    } else {
      previewSource.removeAttribute("src");
      previewNative.removeAttribute("src");
    }
  };

  render(store.get());
  return store.subscribe(render);
}
