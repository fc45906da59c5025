"""The staged real-time engine: capture, depth, views, map, sink.

One worker thread per stage, connected by capacity-2 hand-off queues.
Live sources use latest-wins dropping (oldest frame evicted so latency
stays bounded); file-like sources block instead, so every frame is
processed. Capture paces itself to the target fps and optionally stops
after a fixed duration. Per-stage wall-clock timings and drop counters
are exposed as StageStats snapshots at any time.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass, replace

import cv2
import numpy as np

from .calibration import parse_calibration, derive_effective
from .config import PipelineConfig, RegionSpec
from .depth import make_backend, normalize, temporal_smooth
from .errors import (
    AlreadyRunning,
    InvalidValue,
    MapLoadFailure,
    ModelLoadFailure,
    QuiltStreamError,
    SinkOpenFailure,
    SourceOpenFailure,
)
from .lut import load_map
from .native import DirectMapper
from .quilt import adapt_aspect, decimate
from .sinks import open_sink
from .sources import ScreenRegionSource, open_source
from .viewsynth import ViewParams, inpaint_viewset, synth_views

STAGES = ("capture", "depth", "views", "map", "sink")

EMA_FACTOR = 0.9

_END = object()

_warm_lock = threading.Lock()
_warmed = False


def _ensure_kernels_warm() -> None:
    """Compile the hot-loop kernels once per process so the first frames of a
    run measure work, not JIT time."""
    global _warmed
    with _warm_lock:
        if not _warmed:
            from . import _kernels

            _kernels.warm_up()
            _warmed = True


def _clamp_kernel_threads() -> None:
    """Cap kernel worker threads at the usable core count.

    Oversubscribing a small host adds scheduler overhead without any
    gain; results are identical for any worker count, so this is purely
    a performance policy.
    """
    import os

    import numba

    try:
        cores = len(os.sched_getaffinity(0))
    except AttributeError:
        cores = os.cpu_count() or 1
    numba.set_num_threads(max(1, min(numba.get_num_threads(), cores)))


@dataclass
class StageTiming:
    """Counters and wall-clock timings of one stage."""

    ema_ms: float = 0.0
    last_ms: float = 0.0
    processed: int = 0
    dropped: int = 0
    offered: int = 0

    def record(self, dt_ms: float) -> None:
        self.last_ms = dt_ms
        if self.ema_ms == 0.0:
            self.ema_ms = dt_ms
        else:
            self.ema_ms = EMA_FACTOR * self.ema_ms + (1.0 - EMA_FACTOR) * dt_ms


@dataclass
class StageStats:
    """Snapshot of all stage timings plus overall throughput."""

    stages: dict[str, StageTiming]
    fps: float = 0.0
    elapsed_s: float = 0.0
    depth_input_w: int = 0
    depth_input_h: int = 0

    def as_dict(self) -> dict:
        return {
            "fps": self.fps,
            "elapsed_s": self.elapsed_s,
            "depth_input": {"w": self.depth_input_w, "h": self.depth_input_h},
            "stages": {
                name: {
                    "ema_ms": t.ema_ms,
                    "last_ms": t.last_ms,
                    "processed": t.processed,
                    "dropped": t.dropped,
                    "offered": t.offered,
                }
                for name, t in self.stages.items()
            },
        }


class _Handoff:
    """Bounded queue between two stages.

    drop_oldest=True evicts the stalest item when full (live mode);
    otherwise put blocks until the consumer catches up or the run stops.
    """

    def __init__(self, capacity: int = 2, drop_oldest: bool = True):
        self._capacity = capacity
        self._drop = drop_oldest
        self._items: deque = deque()
        self._cv = threading.Condition()
        self._closed = False

    def put(self, item, stop_event: threading.Event) -> tuple[bool, int]:
        """Returns (accepted, evicted_count)."""
        with self._cv:
            while True:
                if self._closed or stop_event.is_set():
                    return False, 0
                if len(self._items) < self._capacity:
                    self._items.append(item)
                    self._cv.notify_all()
                    return True, 0
                if self._drop:
                    self._items.popleft()
                    self._items.append(item)
                    self._cv.notify_all()
                    return True, 1
                self._cv.wait(0.05)

    def get(self, timeout: float = 0.05):
        """An item, None on timeout, or _END when closed and empty."""
        with self._cv:
            if not self._items and not self._closed:
                self._cv.wait(timeout)
            if self._items:
                item = self._items.popleft()
                self._cv.notify_all()
                return item
            return _END if self._closed else None

    def close(self) -> None:
        with self._cv:
            self._closed = True
            self._cv.notify_all()

    def drain(self) -> int:
        with self._cv:
            count = len(self._items)
            self._items.clear()
            self._cv.notify_all()
            return count


class RunHandle:
    """Owner of one pipeline run: stats, hot settings, stop."""

    def __init__(self, cfg: PipelineConfig):
        cfg.validate()
        _ensure_kernels_warm()
        _clamp_kernel_threads()
        self.config = cfg
        self.stop_event = threading.Event()
        self.error: Exception | None = None
        self.done = threading.Event()
        self.latest_source: np.ndarray | None = None
        self.latest_native: np.ndarray | None = None
        self.depth_input_w = 0
        self.depth_input_h = 0

        self._timing = {name: StageTiming() for name in STAGES}
        self._target_fps = cfg.target_fps
        self._delays = cfg.stage_delays or {}
        self._final: StageStats | None = None
        self._stop_lock = threading.Lock()
        self._t_start: float | None = None
        self._t_first_out: float | None = None
        self._t_last_out: float | None = None

        # ---- build the run (any failure cleans up what was opened) ----
        self._source = None
        self._sink = None
        try:
            if cfg.map_path:
                try:
                    lut_map = load_map(cfg.map_path)
                except (OSError, QuiltStreamError) as exc:
                    raise MapLoadFailure(f"cannot load map {cfg.map_path!r}: {exc}") from exc
                if cfg.geometry != lut_map.geometry:
                    raise MapLoadFailure(
                        f"configured quilt mask {cfg.geometry} does not match "
                        f"MAP header {lut_map.geometry}"
                    )
                self._mapper = DirectMapper.from_lut(lut_map)
            elif cfg.calibration_path:
                try:
                    with open(cfg.calibration_path, "r", encoding="utf-8") as f:
                        calib = parse_calibration(f.read())
                except (OSError, QuiltStreamError) as exc:
                    raise MapLoadFailure(
                        f"cannot build map from calibration {cfg.calibration_path!r}: {exc}"
                    ) from exc
                self._mapper = DirectMapper.from_calibration(
                    derive_effective(calib), cfg.geometry
                )
            else:
                raise MapLoadFailure("config needs either a map path or a calibration path")

            try:
                self._backend = make_backend(
                    cfg.model, provider=cfg.provider
                )
            except ModelLoadFailure:
                raise
            except QuiltStreamError as exc:
                raise ModelLoadFailure(str(exc)) from exc

            try:
                self._source = open_source(cfg.source)
            except QuiltStreamError as exc:
                raise SourceOpenFailure(str(exc)) from exc

            native_dims = (self._mapper.screen_h, self._mapper.screen_w)
            try:
                self._sink = open_sink(cfg.sink, native_dims)
            except SinkOpenFailure:
                raise
            except QuiltStreamError as exc:
                raise SinkOpenFailure(str(exc)) from exc
        except BaseException:
            if self._source is not None:
                self._source.close()
            if self._sink is not None:
                self._sink.close()
            raise

        g = cfg.geometry
        gain = cfg.gain if cfg.gain is not None else 0.04 * g.tile_w
        self._vparams = ViewParams(
            n_views=g.n_views,
            gain=gain,
            zero_parallax=cfg.zero_parallax,
            algorithm=cfg.algorithm,
        )

        drop = self._source.is_live
        self._q_depth = _Handoff(2, drop)
        self._q_views = _Handoff(2, drop)
        self._q_map = _Handoff(2, drop)
        self._q_sink = _Handoff(2, drop)

        self._threads = [
            threading.Thread(target=self._capture_loop, name="qs-capture", daemon=True),
            threading.Thread(
                target=self._stage_loop,
                args=("depth", self._q_depth, self._q_views, "views", self._depth_fn),
                name="qs-depth", daemon=True,
            ),
            threading.Thread(
                target=self._stage_loop,
                args=("views", self._q_views, self._q_map, "map", self._views_fn),
                name="qs-views", daemon=True,
            ),
            threading.Thread(
                target=self._stage_loop,
                args=("map", self._q_map, self._q_sink, "sink", self._map_fn),
                name="qs-map", daemon=True,
            ),
            threading.Thread(
                target=self._stage_loop,
                args=("sink", self._q_sink, None, None, self._sink_fn),
                name="qs-sink", daemon=True,
            ),
        ]
        self._prev_depth: np.ndarray | None = None

    def _start_threads(self) -> None:
        self._t_start = time.perf_counter()
        for t in self._threads:
            t.start()

    # ---- stage bodies ----------------------------------------------------

    def _sleep_delay(self, name: str) -> None:
        d = self._delays.get(name)
        if d:
            time.sleep(d)

    def _fail(self, exc: Exception) -> None:
        if self.error is None:
            self.error = exc
        self.stop_event.set()
        for q in (self._q_depth, self._q_views, self._q_map, self._q_sink):
            q.close()

    def _capture_loop(self) -> None:
        timing = self._timing["capture"]
        depth_timing = self._timing["depth"]
        duration = self.config.duration_s
        try:
            start = time.perf_counter()
            next_t = start
            while not self.stop_event.is_set():
                if duration is not None and time.perf_counter() - start >= duration:
                    break
                t0 = time.perf_counter()
                frame = self._source.next()
                if frame is None:
                    break
                self._sleep_delay("capture")
                # record before the hand-off so a blocked put (file-mode
                # backpressure) does not masquerade as capture work
                timing.record((time.perf_counter() - t0) * 1e3)
                timing.offered += 1
                self.latest_source = frame
                ts_us = time.time_ns() // 1000
                accepted, evicted = self._q_depth.put((ts_us, frame), self.stop_event)
                depth_timing.dropped += evicted
                if not accepted:
                    timing.dropped += 1
                    break
                timing.processed += 1
                depth_timing.offered += 1
                next_t += 1.0 / self._target_fps
                now = time.perf_counter()
                if next_t > now:
                    if self.stop_event.wait(next_t - now):
                        break
                else:
                    next_t = now
        except Exception as exc:
            self._fail(exc)
        finally:
            self._q_depth.close()

    def _stage_loop(self, name, inq, outq, next_name, fn) -> None:
        timing = self._timing[name]
        next_timing = self._timing[next_name] if next_name else None
        try:
            while True:
                if self.stop_event.is_set():
                    break
                item = inq.get(0.05)
                if item is None:
                    continue
                if item is _END:
                    break
                t0 = time.perf_counter()
                result = fn(item)
                timing.record((time.perf_counter() - t0) * 1e3)
                if outq is None:
                    timing.processed += 1
                    now = time.perf_counter()
                    if self._t_first_out is None:
                        self._t_first_out = now
                    self._t_last_out = now
                    continue
                if self.stop_event.is_set():
                    timing.dropped += 1  # in-flight result discarded at stop
                    break
                accepted, evicted = outq.put(result, self.stop_event)
                next_timing.dropped += evicted
                if accepted:
                    timing.processed += 1
                    next_timing.offered += 1
                else:
                    timing.dropped += 1
                    break
        except Exception as exc:
            self._fail(exc)
        finally:
            if outq is not None:
                outq.close()
            timing.dropped += inq.drain()
            if name == "sink":
                self.done.set()

    def _depth_fn(self, item):
        ts, frame = item
        self._sleep_delay("depth")
        g = self.config.geometry
        adapted = adapt_aspect(frame, g.tile_w, g.tile_h)
        dec = decimate(adapted, self.config.decimation)
        self.depth_input_h, self.depth_input_w = dec.shape[:2]
        dm = normalize(self._backend.estimate(dec))
        if (
            self.config.alpha > 0.0
            and self._source.is_live
            and self._prev_depth is not None
            and self._prev_depth.shape == dm.shape
        ):
            dm = temporal_smooth(self._prev_depth, dm, self.config.alpha)
        self._prev_depth = dm
        if dm.shape != (g.tile_h, g.tile_w):
            dm = cv2.resize(dm, (g.tile_w, g.tile_h), interpolation=cv2.INTER_LINEAR)
        return ts, adapted, dm

    def _views_fn(self, item):
        ts, adapted, dm = item
        self._sleep_delay("views")
        vs = synth_views(adapted, dm, self._vparams)
        return ts, inpaint_viewset(vs)

    def _map_fn(self, item):
        ts, vs = item
        self._sleep_delay("map")
        native = self._mapper.map_views(vs)
        self.latest_native = native
        return ts, native

    def _sink_fn(self, item):
        ts, native = item
        self._sleep_delay("sink")
        self._sink.write(native, ts)
        return None

    # ---- control ---------------------------------------------------------

    @property
    def finished(self) -> bool:
        return all(not t.is_alive() for t in self._threads)

    def join(self, timeout: float | None = None) -> bool:
        """Wait for natural completion; True when all stages have exited."""
        deadline = None if timeout is None else time.perf_counter() + timeout
        for t in self._threads:
            remaining = None if deadline is None else max(0.0, deadline - time.perf_counter())
            t.join(remaining)
        return self.finished

    def set_fps(self, fps: float) -> None:
        if not fps > 0:
            raise InvalidValue("processing.fps", fps, "> 0")
        self._target_fps = float(fps)

    def set_region(self, region: RegionSpec) -> None:
        if not isinstance(self._source, ScreenRegionSource):
            raise InvalidValue("input.region", region, "source has no region")
        self._source.set_region(region)

    @property
    def target_fps(self) -> float:
        return self._target_fps

    def stats(self) -> StageStats:
        stages = {name: replace(t) for name, t in self._timing.items()}
        fps = 0.0
        sink_n = stages["sink"].processed
        if (
            sink_n >= 2
            and self._t_first_out is not None
            and self._t_last_out is not None
            and self._t_last_out > self._t_first_out
        ):
            fps = (sink_n - 1) / (self._t_last_out - self._t_first_out)
        elapsed = 0.0
        if self._t_start is not None:
            end = time.perf_counter() if not self.finished else (self._t_last_out or time.perf_counter())
            elapsed = max(0.0, end - self._t_start)
        return StageStats(
            stages=stages,
            fps=fps,
            elapsed_s=elapsed,
            depth_input_w=self.depth_input_w,
            depth_input_h=self.depth_input_h,
        )

    def stop(self) -> StageStats:
        """Quiesce all stages and return final stats. Idempotent."""
        with self._stop_lock:
            if self._final is not None:
                return self._final
            self.stop_event.set()
            for q in (self._q_depth, self._q_views, self._q_map, self._q_sink):
                q.close()
            for t in self._threads:
                t.join(timeout=30.0)
            self._source.close()
            self._sink.close()
            self._final = self.stats()
            self.done.set()
            return self._final


class Engine:
    """Owns at most one running pipeline at a time."""

    def __init__(self):
        self._lock = threading.Lock()
        self._handle: RunHandle | None = None

    @property
    def handle(self) -> RunHandle | None:
        return self._handle

    @property
    def running(self) -> bool:
        h = self._handle
        return h is not None and not h.finished

    def start(self, cfg: PipelineConfig) -> RunHandle:
        """Open everything and launch the stage threads.

        Raises AlreadyRunning if a previous run has not finished, and
        SourceOpenFailure / SinkOpenFailure / MapLoadFailure /
        ModelLoadFailure when a component cannot be opened.
        """
        with self._lock:
            if self._handle is not None and not self._handle.finished:
                raise AlreadyRunning("a pipeline run is already active")
            handle = RunHandle(cfg)
            handle._start_threads()
            self._handle = handle
            return handle

    def stop(self) -> StageStats | None:
        with self._lock:
            if self._handle is None:
                return None
            return self._handle.stop()
