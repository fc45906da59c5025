"""Per-subpixel view assignment and the precomputed quilt-offset table.

Every native subpixel (x, y, channel) belongs to exactly one of the N views;
which one is a pure function of the effective calibration. ``build_lut``
evaluates that function once for the whole screen and stores, per subpixel,
the linear offset of the quilt buffer entry it must copy. The table is
serialized as the MAP file so later runs skip the trigonometry entirely.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .calibration import EffectiveCalibration
from .errors import (
    BadMagic,
    GeometryMismatch,
    SizeOverflow,
    Truncated,
    VersionMismatch,
)

MAP_MAGIC = b"ALTM"
MAP_VERSION = 2
_HEADER = struct.Struct("<4sIIIHHII")  # magic, version, w, h, rows, cols, tile_w, tile_h

_U32_LIMIT = 1 << 32


@dataclass(frozen=True)
class QuiltGeometry:
    """Tile grid of the quilt: rows x cols views, each tile_w x tile_h."""

    rows: int
    cols: int
    tile_w: int
    tile_h: int

    def __post_init__(self):
        for name in ("rows", "cols", "tile_w", "tile_h"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"QuiltGeometry.{name} must be an integer >= 1, got {value!r}")

    @property
    def n_views(self) -> int:
        return self.rows * self.cols

    @property
    def quilt_w(self) -> int:
        return self.cols * self.tile_w

    @property
    def quilt_h(self) -> int:
        return self.rows * self.tile_h


@dataclass(eq=False)
class LutMap:
    """Precomputed per-subpixel offsets into the quilt channel buffer.

    ``offsets`` is flat, length screen_w*screen_h*3, ordered row-major by
    (y, x, ch). Each entry indexes the quilt's channel-interleaved buffer.
    """

    screen_w: int
    screen_h: int
    geometry: QuiltGeometry
    offsets: np.ndarray  # uint32, shape (screen_w*screen_h*3,)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LutMap):
            return NotImplemented
        return (
            self.screen_w == other.screen_w
            and self.screen_h == other.screen_h
            and self.geometry == other.geometry
            and np.array_equal(self.offsets, other.offsets)
        )


def subpixel_view(
    e: EffectiveCalibration, x: int, y: int, ch: int, n_views: int
) -> tuple[int, float]:
    """View index and phase fraction for one native subpixel.

    Scalar reference form; ``view_field`` is the vectorized equivalent and
    must agree bit-for-bit.
    """
    u = (x + 0.5) / e.screen_w
    if e.flip_x:
        u = 1.0 - u
    v = (y + 0.5) / e.screen_h
    chp = 2 - ch if e.flip_subpixels else ch
    t = (u + chp * e.subp + v * e.tilt_eff) * e.pitch_eff - e.center
    z = t - math.floor(t)
    if e.inv_view:
        z = 1.0 - z
    k = min(int(math.floor(z * n_views)), n_views - 1)
    return k, z


def view_field(e: EffectiveCalibration, n_views: int) -> np.ndarray:
    """View index of every subpixel, shape (screen_h, screen_w, 3), int64.

    Evaluates the same arithmetic as ``subpixel_view`` with identical
    operation ordering so results match the scalar form exactly.
    """
    w, h = e.screen_w, e.screen_h
    u = (np.arange(w, dtype=np.float64) + 0.5) / w
    if e.flip_x:
        u = 1.0 - u
    v = (np.arange(h, dtype=np.float64) + 0.5) / h
    chp = np.array([2.0, 1.0, 0.0] if e.flip_subpixels else [0.0, 1.0, 2.0])
    phase = u[None, :, None] + (chp * e.subp)[None, None, :]
    t = (phase + (v * e.tilt_eff)[:, None, None]) * e.pitch_eff - e.center
    z = t - np.floor(t)
    if e.inv_view:
        z = 1.0 - z
    k = np.floor(z * n_views).astype(np.int64)
    return np.minimum(k, n_views - 1)


def quilt_offset(
    g: QuiltGeometry, k: int, x: int, y: int, screen_w: int, screen_h: int, ch: int
) -> int:
    """Linear offset into the quilt channel buffer for one native subpixel.

    View 0 occupies the bottom-left tile; views advance row-major upward.
    The in-tile sample uses the floor rule (x*tile_w)//screen_w.
    """
    if not 0 <= k < g.n_views:
        raise ValueError(f"view index {k} outside [0, {g.n_views})")
    col = k % g.cols
    img_row = g.rows - 1 - (k // g.cols)
    sx = (x * g.tile_w) // screen_w
    sy = (y * g.tile_h) // screen_h
    qx = col * g.tile_w + sx
    qy = img_row * g.tile_h + sy
    return (qy * g.quilt_w + qx) * 3 + ch


def offsets_for_field(
    kfield: np.ndarray, g: QuiltGeometry, screen_w: int, screen_h: int
) -> np.ndarray:
    """Vectorized ``quilt_offset`` over a full (h, w, 3) view-index field."""
    x = np.arange(screen_w, dtype=np.int64)
    y = np.arange(screen_h, dtype=np.int64)
    sx = (x * g.tile_w) // screen_w
    sy = (y * g.tile_h) // screen_h
    col = kfield % g.cols
    img_row = g.rows - 1 - (kfield // g.cols)
    qx = col * g.tile_w + sx[None, :, None]
    qy = img_row * g.tile_h + sy[:, None, None]
    ch = np.arange(3, dtype=np.int64)
    return (qy * g.quilt_w + qx) * 3 + ch[None, None, :]


def build_lut(e: EffectiveCalibration, g: QuiltGeometry) -> LutMap:
    """Evaluate the view formula for every subpixel and tabulate offsets.

    Deterministic: two builds of the same inputs are bit-identical.

    Raises:
        SizeOverflow: table length or quilt buffer size exceeds 32-bit range.
    """
    n_entries = e.screen_w * e.screen_h * 3
    quilt_size = g.quilt_w * g.quilt_h * 3
    if n_entries >= _U32_LIMIT:
        raise SizeOverflow(f"offset table length {n_entries} exceeds 32-bit index range")
    if quilt_size >= _U32_LIMIT:
        raise SizeOverflow(f"quilt buffer size {quilt_size} exceeds 32-bit offset range")
    kfield = view_field(e, g.n_views)
    offsets = offsets_for_field(kfield, g, e.screen_w, e.screen_h)
    flat = np.ascontiguousarray(offsets.reshape(-1).astype(np.uint32))
    flat.setflags(write=False)
    return LutMap(screen_w=e.screen_w, screen_h=e.screen_h, geometry=g, offsets=flat)


def save_map(m: LutMap, path) -> None:
    """Write a LutMap as a MAP file (magic ALTM, version 2, little-endian)."""
    g = m.geometry
    header = _HEADER.pack(
        MAP_MAGIC, MAP_VERSION, m.screen_w, m.screen_h, g.rows, g.cols, g.tile_w, g.tile_h
    )
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(m.offsets, dtype="<u4").tobytes())


def inspect_map(path) -> dict:
    """Read only the MAP header plus a size check; cheap enough for an API call.

    Returns a dict with screen dims, quilt mask, tile size, and entry count.
    Raises the same errors as ``load_map`` for a bad header or wrong file size.
    """
    import os

    size = os.stat(path).st_size
    with open(path, "rb") as f:
        head = f.read(_HEADER.size)
    if len(head) < _HEADER.size:
        if head[: len(MAP_MAGIC)] != MAP_MAGIC[: len(head)]:
            raise BadMagic("not a MAP file")
        raise Truncated(f"header requires {_HEADER.size} bytes, file has {len(head)}")
    magic, version, w, h, rows, cols, tile_w, tile_h = _HEADER.unpack_from(head)
    if magic != MAP_MAGIC:
        raise BadMagic(f"expected magic {MAP_MAGIC!r}, found {magic!r}")
    if version != MAP_VERSION:
        raise VersionMismatch(f"unsupported MAP version {version}")
    try:
        QuiltGeometry(rows=rows, cols=cols, tile_w=tile_w, tile_h=tile_h)
    except ValueError as exc:
        raise GeometryMismatch(str(exc)) from exc
    if w < 1 or h < 1:
        raise GeometryMismatch(f"invalid screen dims {w}x{h}")
    expected = _HEADER.size + w * h * 3 * 4
    if size < expected:
        raise Truncated(f"file requires {expected} bytes, has {size}")
    if size > expected:
        raise GeometryMismatch(f"file is {size} bytes but header declares {expected}")
    return {
        "screen_w": w,
        "screen_h": h,
        "rows": rows,
        "cols": cols,
        "tile_w": tile_w,
        "tile_h": tile_h,
        "entries": w * h * 3,
    }


def load_map(path) -> LutMap:
    """Read and validate a MAP file.

    Raises:
        BadMagic: wrong leading magic bytes.
        VersionMismatch: unsupported format version.
        Truncated: header or body shorter than declared.
        GeometryMismatch: body longer than declared, invalid header geometry,
            or offsets outside the quilt buffer.
    """
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < _HEADER.size:
        if data[: len(MAP_MAGIC)] != MAP_MAGIC[: len(data)]:
            raise BadMagic("not a MAP file")
        raise Truncated(f"header requires {_HEADER.size} bytes, file has {len(data)}")
    magic, version, w, h, rows, cols, tile_w, tile_h = _HEADER.unpack_from(data)
    if magic != MAP_MAGIC:
        raise BadMagic(f"expected magic {MAP_MAGIC!r}, found {magic!r}")
    if version != MAP_VERSION:
        raise VersionMismatch(f"unsupported MAP version {version}")
    try:
        g = QuiltGeometry(rows=rows, cols=cols, tile_w=tile_w, tile_h=tile_h)
    except ValueError as exc:
        raise GeometryMismatch(str(exc)) from exc
    if w < 1 or h < 1:
        raise GeometryMismatch(f"invalid screen dims {w}x{h}")
    expected = w * h * 3 * 4
    body = data[_HEADER.size :]
    if len(body) < expected:
        raise Truncated(f"body requires {expected} bytes, file has {len(body)}")
    if len(body) > expected:
        raise GeometryMismatch(
            f"body is {len(body)} bytes but header declares {expected}"
        )
    offsets = np.frombuffer(body, dtype="<u4")
    quilt_size = g.quilt_w * g.quilt_h * 3
    if offsets.size and int(offsets.max()) >= quilt_size:
        raise GeometryMismatch(
            f"offset {int(offsets.max())} outside quilt buffer of {quilt_size}"
        )
    return LutMap(screen_w=w, screen_h=h, geometry=g, offsets=offsets)
