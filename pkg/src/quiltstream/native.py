"""Quilt/ViewSet to Native image mapping and the display-simulation inverse.

The hot loop is a single gather per output subpixel driven by a LutMap.
``views_to_native_direct`` produces the same bytes without ever building
the quilt: quilt offsets translate one-to-one into (view, in-tile) indices,
so the gather runs straight off the view stack.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass

import numba
import numpy as np

from . import _kernels
from .calibration import EffectiveCalibration
from .errors import CountMismatch, GeometryMismatch, TileDimMismatch
from .lut import LutMap, QuiltGeometry, build_lut, view_field
from .validation import ensure_rgb8
from .viewsynth import ViewSet


@contextmanager
def _thread_count(workers):
    if workers is None:
        yield
        return
    limit = numba.config.NUMBA_NUM_THREADS
    clamped = max(1, min(int(workers), limit))
    previous = numba.get_num_threads()
    numba.set_num_threads(clamped)
    try:
        yield
    finally:
        numba.set_num_threads(previous)


def quilt_to_native(q: np.ndarray, m: LutMap, workers: int | None = None) -> np.ndarray:
    """Gather every native subpixel from the quilt through the LUT.

    Output is independent of the worker count (disjoint writes only).
    """
    ensure_rgb8(q, "quilt")
    g = m.geometry
    if q.shape != (g.quilt_h, g.quilt_w, 3):
        raise GeometryMismatch(
            f"quilt dims {q.shape[:2]} do not match LUT geometry "
            f"{g.quilt_h}x{g.quilt_w}"
        )
    src = np.ascontiguousarray(q).reshape(-1)
    out = np.empty(m.screen_h * m.screen_w * 3, np.uint8)
    with _thread_count(workers):
        _kernels.gather_u32(src, m.offsets, out)
    return out.reshape(m.screen_h, m.screen_w, 3)


def translate_offsets(offsets: np.ndarray, g: QuiltGeometry) -> np.ndarray:
    """Rewrite quilt-buffer offsets as offsets into a (n, th, tw, 3) stack.

    Exact integer bijection between the two layouts; applying the result to
    a view stack equals applying the original to the assembled quilt.
    """
    off = offsets.astype(np.int64)
    ch = off % 3
    pix = off // 3
    qx = pix % g.quilt_w
    qy = pix // g.quilt_w
    img_row = qy // g.tile_h
    sy = qy % g.tile_h
    col = qx // g.tile_w
    sx = qx % g.tile_w
    k = (g.rows - 1 - img_row) * g.cols + col
    idx = ((k * g.tile_h + sy) * g.tile_w + sx) * 3 + ch
    if idx.size and int(idx.max()) < (1 << 32):
        return idx.astype(np.uint32)
    return idx


def _check_views(arr: np.ndarray, g: QuiltGeometry) -> np.ndarray:
    if arr.ndim != 4 or arr.shape[3] != 3:
        raise TileDimMismatch(f"view stack must be (n, h, w, 3), got {arr.shape}")
    if arr.shape[0] != g.n_views:
        raise CountMismatch(f"{arr.shape[0]} views for a {g.rows}x{g.cols} quilt")
    if arr.shape[1:3] != (g.tile_h, g.tile_w):
        raise TileDimMismatch(
            f"view dims {arr.shape[1:3]} do not match tile {g.tile_h}x{g.tile_w}"
        )
    return np.ascontiguousarray(arr)


@dataclass
class DirectMapper:
    """Precomputed views-to-native gather for the streaming hot loop."""

    screen_w: int
    screen_h: int
    geometry: QuiltGeometry
    view_offsets: np.ndarray

    @classmethod
    def from_lut(cls, m: LutMap) -> "DirectMapper":
        return cls(
            screen_w=m.screen_w,
            screen_h=m.screen_h,
            geometry=m.geometry,
            view_offsets=translate_offsets(m.offsets, m.geometry),
        )

    @classmethod
    def from_calibration(cls, e: EffectiveCalibration, g: QuiltGeometry) -> "DirectMapper":
        return cls.from_lut(build_lut(e, g))

    def map_views(self, views, workers: int | None = None) -> np.ndarray:
        arr = views.views if isinstance(views, ViewSet) else np.asarray(views)
        arr = _check_views(arr, self.geometry)
        out = np.empty(self.screen_h * self.screen_w * 3, np.uint8)
        with _thread_count(workers):
            _kernels.gather_u32(arr.reshape(-1), self.view_offsets, out)
        return out.reshape(self.screen_h, self.screen_w, 3)


def views_to_native_direct(
    v, e: EffectiveCalibration, g: QuiltGeometry, workers: int | None = None
) -> np.ndarray:
    """Map a ViewSet straight to the native image, skipping the quilt.

    Bit-exact equal to quilt_to_native(assemble_quilt(v, g), build_lut(e, g)).
    """
    return DirectMapper.from_calibration(e, g).map_views(v, workers=workers)


@dataclass(frozen=True)
class ViewSamples:
    """All native subpixels assigned to one view, with their tile sources."""

    x: np.ndarray
    y: np.ndarray
    ch: np.ndarray
    tile_x: np.ndarray
    tile_y: np.ndarray
    value: np.ndarray

    def __len__(self) -> int:
        return self.x.size


def reconstruct_view_samples(
    n: np.ndarray, e: EffectiveCalibration, g: QuiltGeometry, k: int
) -> ViewSamples:
    """Display-simulation inverse: which subpixels carry view k, and from where.

    For a native image produced by quilt_to_native, each returned value
    equals the quilt at (tile of k, tile_y, tile_x, ch) exactly.
    """
    if not 0 <= k < g.n_views:
        raise ValueError(f"view index {k} outside [0, {g.n_views})")
    ensure_rgb8(n, "native")
    if n.shape != (e.screen_h, e.screen_w, 3):
        raise GeometryMismatch(
            f"native dims {n.shape[:2]} do not match screen "
            f"{e.screen_h}x{e.screen_w}"
        )
    kf = view_field(e, g.n_views)
    ys, xs, chs = np.nonzero(kf == k)
    tile_x = (xs * g.tile_w) // e.screen_w
    tile_y = (ys * g.tile_h) // e.screen_h
    return ViewSamples(
        x=xs, y=ys, ch=chs, tile_x=tile_x, tile_y=tile_y, value=n[ys, xs, chs]
    )
