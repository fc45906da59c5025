"""Frame conditioning and quilt assembly.

``adapt_aspect`` letterboxes a frame into the tile size without distorting
it, ``decimate`` subsamples for cheaper depth inference, and
``assemble_quilt`` lays N views out on the rows x cols grid (view 0 at the
bottom-left, advancing row-major upward).
"""

from __future__ import annotations

import cv2
import numpy as np

from .errors import CountMismatch, GeometryMismatch, TileDimMismatch
from .lut import QuiltGeometry
from .validation import ensure_positive_int, ensure_rgb8
from .viewsynth import ViewSet


def adapt_aspect(frame: np.ndarray, target_w: int, target_h: int) -> np.ndarray:
    """Scale into target dims preserving aspect ratio; letterbox with black.

    Bars split evenly; an odd remainder gives the extra row/column to the
    bottom/right edge.
    """
    ensure_rgb8(frame, "frame")
    target_w = ensure_positive_int(target_w, "target_w")
    target_h = ensure_positive_int(target_h, "target_h")
    h, w = frame.shape[:2]
    if w * target_h >= h * target_w:
        ow = target_w
        oh = min(target_h, max(1, round(h * target_w / w)))
    else:
        oh = target_h
        ow = min(target_w, max(1, round(w * target_h / h)))
    if (ow, oh) != (w, h):
        resized = cv2.resize(frame, (ow, oh), interpolation=cv2.INTER_LINEAR)
    else:
        resized = frame
    if (ow, oh) == (target_w, target_h):
        return np.ascontiguousarray(resized)
    out = np.zeros((target_h, target_w, 3), np.uint8)
    y0 = (target_h - oh) // 2
    x0 = (target_w - ow) // 2
    out[y0 : y0 + oh, x0 : x0 + ow] = resized
    return out


def decimate(frame: np.ndarray, factor: int) -> np.ndarray:
    """Point-sample every factor-th pixel; dims become max(1, dim//factor)."""
    ensure_rgb8(frame, "frame")
    factor = ensure_positive_int(factor, "factor")
    if factor == 1:
        return frame
    h, w = frame.shape[:2]
    oh = max(1, h // factor)
    ow = max(1, w // factor)
    return np.ascontiguousarray(frame[::factor, ::factor][:oh, :ow])


def _views_array(views) -> np.ndarray:
    if isinstance(views, ViewSet):
        return views.views
    return np.asarray(views)


def assemble_quilt(views, g: QuiltGeometry) -> np.ndarray:
    """Tile N views into the quilt collage.

    View k lands at grid row ``k // cols`` counted from the bottom, column
    ``k % cols`` from the left.
    """
    arr = _views_array(views)
    if arr.shape[0] != g.n_views:
        raise CountMismatch(f"{arr.shape[0]} views for a {g.rows}x{g.cols} quilt")
    if arr.shape[1:] != (g.tile_h, g.tile_w, 3):
        raise TileDimMismatch(
            f"view dims {arr.shape[1:3]} do not match tile {g.tile_h}x{g.tile_w}"
        )
    q = np.empty((g.quilt_h, g.quilt_w, 3), np.uint8)
    for k in range(g.n_views):
        row = g.rows - 1 - k // g.cols
        col = k % g.cols
        q[row * g.tile_h : (row + 1) * g.tile_h, col * g.tile_w : (col + 1) * g.tile_w] = arr[k]
    return q


def extract_views(quilt: np.ndarray, g: QuiltGeometry) -> np.ndarray:
    """Inverse of assemble_quilt: recover the (n, tile_h, tile_w, 3) stack."""
    ensure_rgb8(quilt, "quilt")
    if quilt.shape != (g.quilt_h, g.quilt_w, 3):
        raise GeometryMismatch(
            f"quilt dims {quilt.shape[:2]} do not match geometry "
            f"{g.quilt_h}x{g.quilt_w}"
        )
    out = np.empty((g.n_views, g.tile_h, g.tile_w, 3), np.uint8)
    for k in range(g.n_views):
        row = g.rows - 1 - k // g.cols
        col = k % g.cols
        out[k] = quilt[
            row * g.tile_h : (row + 1) * g.tile_h, col * g.tile_w : (col + 1) * g.tile_w
        ]
    return out
