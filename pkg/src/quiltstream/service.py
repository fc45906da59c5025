"""Localhost control service: configuration, pipeline lifecycle, MAP
generation, live preview, and stats over HTTP plus WebSocket.

One service owns one engine, so at most one pipeline runs at a time. The
phase moves idle -> running -> stopping -> idle and nothing else. All
request bodies and responses are JSON; errors carry {"error", "detail"}.
"""

from __future__ import annotations

import asyncio
import base64
import json
import threading
import time

import cv2
import numpy as np
from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from .calibration import derive_effective, parse_calibration
from .config import (
    PipelineConfig,
    SourceSpec,
    config_to_dict,
    merge_config,
    patched_keys,
)
from .errors import AlreadyRunning, QuiltStreamError
from .lut import QuiltGeometry, build_lut, inspect_map, save_map
from .pipeline import STAGES, Engine, StageStats, StageTiming
from .screens import enumerate_screens

HOT_KEYS = {
    "input.region_x",
    "input.region_y",
    "input.region_w",
    "input.region_h",
    "input.screen_index",
    "processing.fps",
}

PREVIEW_MAX_W = 480
PREVIEW_INTERVAL_S = 0.25  # 4 fps, under the 5 fps ceiling
STATS_INTERVAL_S = 0.5


def _zero_stats() -> StageStats:
    return StageStats(stages={name: StageTiming() for name in STAGES})


def _error_body(exc: Exception) -> dict:
    return {"error": type(exc).__name__, "detail": str(exc)}


def _default_config() -> PipelineConfig:
    return PipelineConfig(source=SourceSpec(kind="synthetic"))


class ServiceState:
    """Mutable service-side state guarded by one lock.

    Readers always see either the previous or the merged config, never a
    half-applied patch: updates swap the config reference atomically.
    """

    def __init__(self, engine: Engine, config: PipelineConfig):
        self.lock = threading.Lock()
        self.engine = engine
        self.config = config
        self.phase = "idle"
        self.last_stats: StageStats | None = None
        # preview cache: one encode shared by all subscribers
        self._enc_key: tuple[int, int] | None = None
        self._enc_payload: dict | None = None

    # -- phase helpers (call with lock held) --------------------------------

    def _finalize_if_done(self) -> None:
        """A run that stopped on its own (duration, EOF) flips us back to idle."""
        if self.phase == "running":
            handle = self.engine.handle
            if handle is None or handle.finished:
                if handle is not None:
                    self.last_stats = handle.stop()
                self.phase = "idle"

    def snapshot(self) -> tuple[str, StageStats]:
        with self.lock:
            self._finalize_if_done()
            if self.phase == "running" and self.engine.handle is not None:
                return self.phase, self.engine.handle.stats()
            return self.phase, (self.last_stats or _zero_stats())

    def preview_payload(self) -> dict | None:
        """Latest source+native snapshot, downscaled and PNG-encoded.

        Cached by frame identity so N subscribers cost one encode. Returns
        None while no frame has been produced yet.
        """
        handle = self.engine.handle
        if handle is None:
            return None
        src = handle.latest_source
        native = handle.latest_native
        if src is None and native is None:
            return None
        key = (id(src), id(native))
        if key == self._enc_key and self._enc_payload is not None:
            return self._enc_payload
        payload = {"type": "frame", "ts": time.time()}
        if src is not None:
            payload["source"] = _encode_preview(src)
        if native is not None:
            payload["native"] = _encode_preview(native)
        self._enc_key = key
        self._enc_payload = payload
        return payload


def _encode_preview(frame: np.ndarray) -> str:
    h, w = frame.shape[:2]
    if w > PREVIEW_MAX_W:
        scale = PREVIEW_MAX_W / w
        frame = cv2.resize(
            frame, (PREVIEW_MAX_W, max(1, round(h * scale))), interpolation=cv2.INTER_AREA
        )
    ok, buf = cv2.imencode(".png", cv2.cvtColor(frame, cv2.COLOR_RGB2BGR))
    if not ok:
        return ""
    return base64.b64encode(buf.tobytes()).decode("ascii")


def create_app(
    engine: Engine | None = None,
    initial_config: PipelineConfig | None = None,
    panel_dir: str | None = None,
) -> FastAPI:
    """Build the FastAPI app; state is per-app so tests can run many."""
    state = ServiceState(engine or Engine(), initial_config or _default_config())
    app = FastAPI(title="quiltstream control", docs_url=None, redoc_url=None)
    app.state.service = state

    @app.exception_handler(QuiltStreamError)
    async def _domain_error(_req, exc: QuiltStreamError):
        return JSONResponse(status_code=400, content=_error_body(exc))

    # -- read side ----------------------------------------------------------

    @app.get("/api/status")
    def status():
        phase, stats = state.snapshot()
        return {"phase": phase, "stats": stats.as_dict()}

    @app.get("/api/screens")
    def screens():
        return {
            "screens": [
                {"index": s.index, "w": s.w, "h": s.h} for s in enumerate_screens()
            ]
        }

    @app.get("/api/config")
    def get_config():
        with state.lock:
            return config_to_dict(state.config)

    # -- config mutation ----------------------------------------------------

    @app.patch("/api/config")
    async def patch_config(request: Request):
        try:
            patch = await request.json()
        except (json.JSONDecodeError, UnicodeDecodeError):
            return JSONResponse(
                status_code=400,
                content={"error": "MalformedDocument", "detail": "body is not JSON"},
            )
        if not isinstance(patch, dict):
            return JSONResponse(
                status_code=400,
                content={"error": "MalformedDocument", "detail": "body must be an object"},
            )
        with state.lock:
            state._finalize_if_done()
            keys = patched_keys(patch)
            if state.phase != "idle":
                cold = keys - HOT_KEYS
                if cold:
                    return JSONResponse(
                        status_code=409,
                        content={
                            "error": "NotEditable",
                            "detail": f"cannot change {sorted(cold)} while running",
                        },
                    )
            try:
                merged = merge_config(state.config, patch)
            except QuiltStreamError as exc:
                return JSONResponse(status_code=400, content=_error_body(exc))
            if state.phase == "running":
                # apply to the live run first; on failure the old config stands
                handle = state.engine.handle
                try:
                    if "processing.fps" in keys and handle is not None:
                        handle.set_fps(merged.target_fps)
                    if keys & (HOT_KEYS - {"processing.fps"}) and handle is not None:
                        if merged.source.region is not None:
                            handle.set_region(merged.source.region)
                except QuiltStreamError as exc:
                    return JSONResponse(status_code=400, content=_error_body(exc))
            state.config = merged
            return config_to_dict(state.config)

    # -- lifecycle ----------------------------------------------------------

    @app.post("/api/pipeline/start")
    async def start(request: Request):
        body = b""
        try:
            body = await request.body()
        except Exception:
            pass
        patch = None
        if body:
            try:
                patch = json.loads(body)
            except (json.JSONDecodeError, UnicodeDecodeError):
                return JSONResponse(
                    status_code=400,
                    content={"error": "MalformedDocument", "detail": "body is not JSON"},
                )
            if patch is not None and not isinstance(patch, dict):
                return JSONResponse(
                    status_code=400,
                    content={"error": "MalformedDocument", "detail": "body must be an object"},
                )
        with state.lock:
            state._finalize_if_done()
            if state.phase != "idle":
                return JSONResponse(
                    status_code=409,
                    content={"error": "AlreadyRunning", "detail": f"phase is {state.phase}"},
                )
            cfg = state.config
            if patch:
                try:
                    cfg = merge_config(cfg, patch)
                except QuiltStreamError as exc:
                    return JSONResponse(status_code=400, content=_error_body(exc))
            try:
                state.engine.start(cfg)
            except AlreadyRunning as exc:
                return JSONResponse(status_code=409, content=_error_body(exc))
            except QuiltStreamError as exc:
                return JSONResponse(status_code=400, content=_error_body(exc))
            state.config = cfg
            state.phase = "running"
            return {"phase": "running"}

    @app.post("/api/pipeline/stop")
    def stop():
        with state.lock:
            state._finalize_if_done()
            if state.phase != "running":
                return JSONResponse(
                    status_code=409,
                    content={"error": "NotRunning", "detail": f"phase is {state.phase}"},
                )
            state.phase = "stopping"
            handle = state.engine.handle
        # joins stage threads; keep the lock free so reads stay responsive
        stats = handle.stop() if handle is not None else _zero_stats()
        with state.lock:
            state.last_stats = stats
            state.phase = "idle"
        return {"phase": "idle", "stats": stats.as_dict()}

    # -- MAP tooling --------------------------------------------------------

    @app.post("/api/map/generate")
    async def map_generate(request: Request):
        try:
            body = await request.json()
        except (json.JSONDecodeError, UnicodeDecodeError):
            return JSONResponse(
                status_code=400,
                content={"error": "MalformedDocument", "detail": "body is not JSON"},
            )
        if not isinstance(body, dict):
            return JSONResponse(
                status_code=400,
                content={"error": "MalformedDocument", "detail": "body must be an object"},
            )
        calib_doc = body.get("calibration")
        output = body.get("output")
        if calib_doc is None or not output:
            return JSONResponse(
                status_code=400,
                content={
                    "error": "MissingRequired",
                    "detail": "body needs 'calibration' and 'output'",
                },
            )
        text = calib_doc if isinstance(calib_doc, str) else json.dumps(calib_doc)
        try:
            calib = parse_calibration(text)
            geometry = QuiltGeometry(
                rows=int(body.get("rows", 6)),
                cols=int(body.get("cols", 8)),
                tile_w=int(body.get("tile_w", 420)),
                tile_h=int(body.get("tile_h", 560)),
            )
        except (QuiltStreamError, ValueError, TypeError) as exc:
            return JSONResponse(status_code=400, content=_error_body(exc))
        import os

        if os.path.exists(output) and not body.get("force"):
            return JSONResponse(
                status_code=409,
                content={"error": "Exists", "detail": f"{output} exists; set force"},
            )
        try:
            lut_map = build_lut(derive_effective(calib), geometry)
            save_map(lut_map, output)
        except QuiltStreamError as exc:
            return JSONResponse(status_code=400, content=_error_body(exc))
        except OSError as exc:
            return JSONResponse(status_code=400, content=_error_body(exc))
        return {
            "path": str(output),
            "screen_w": lut_map.screen_w,
            "screen_h": lut_map.screen_h,
            "rows": geometry.rows,
            "cols": geometry.cols,
            "tile_w": geometry.tile_w,
            "tile_h": geometry.tile_h,
            "entries": int(lut_map.offsets.size),
        }

    @app.get("/api/map/inspect")
    def map_inspect(path: str):
        import os

        if not os.path.exists(path):
            return JSONResponse(
                status_code=404,
                content={"error": "NotFound", "detail": f"no such file: {path}"},
            )
        try:
            return inspect_map(path)
        except QuiltStreamError as exc:
            return JSONResponse(status_code=400, content=_error_body(exc))

    # -- websockets ---------------------------------------------------------

    @app.websocket("/ws/preview")
    async def ws_preview(ws: WebSocket):
        await ws.accept()
        phase, _ = state.snapshot()
        if phase != "running":
            await ws.send_json({"type": "idle"})
            await ws.close()
            return
        try:
            while True:
                phase, _ = state.snapshot()
                if phase != "running":
                    await ws.send_json({"type": "idle"})
                    await ws.close()
                    return
                payload = await asyncio.to_thread(state.preview_payload)
                if payload is not None:
                    await ws.send_json(payload)
                await asyncio.sleep(PREVIEW_INTERVAL_S)
        except (WebSocketDisconnect, RuntimeError):
            return

    @app.websocket("/ws/stats")
    async def ws_stats(ws: WebSocket):
        await ws.accept()
        try:
            while True:
                phase, stats = state.snapshot()
                await ws.send_json({"phase": phase, "stats": stats.as_dict()})
                await asyncio.sleep(STATS_INTERVAL_S)
        except (WebSocketDisconnect, RuntimeError):
            return

    if panel_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=panel_dir, html=True), name="panel")

    return app
