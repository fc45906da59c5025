"""Framed RGB byte protocol shared by the raw-pipe and TCP stream kinds.

Per frame, little-endian: magic ``ALTF``, u32 payload length, u16 width,
u16 height, u8 pixel format (0 = RGB8), u64 timestamp in microseconds,
then the payload bytes.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import BadMagic, Truncated, Unsupported

FRAME_MAGIC = b"ALTF"
FORMAT_RGB8 = 0

_HEADER = struct.Struct("<4sIHHBQ")

HEADER_SIZE = _HEADER.size


def pack_frame(frame: np.ndarray, timestamp_us: int = 0) -> bytes:
    """Serialize one RGB frame with its header."""
    h, w = frame.shape[:2]
    payload = np.ascontiguousarray(frame, dtype=np.uint8).tobytes()
    header = _HEADER.pack(FRAME_MAGIC, len(payload), w, h, FORMAT_RGB8, timestamp_us)
    return header + payload


def write_frame(stream, frame: np.ndarray, timestamp_us: int = 0) -> None:
    stream.write(pack_frame(frame, timestamp_us))


def read_frame(stream) -> tuple[np.ndarray, int] | None:
    """Read one framed image; None on clean end-of-stream.

    Raises:
        BadMagic: stream is not positioned at a frame header.
        Truncated: stream ended inside a header or payload.
        Unsupported: unknown pixel format byte.
    """
    header = stream.read(HEADER_SIZE)
    if len(header) == 0:
        return None
    if len(header) < HEADER_SIZE:
        raise Truncated(f"frame header needs {HEADER_SIZE} bytes, got {len(header)}")
    magic, length, w, h, fmt, ts = _HEADER.unpack(header)
    if magic != FRAME_MAGIC:
        raise BadMagic(f"expected frame magic {FRAME_MAGIC!r}, found {magic!r}")
    if fmt != FORMAT_RGB8:
        raise Unsupported(f"pixel format {fmt}")
    expected = w * h * 3
    if length != expected:
        raise Truncated(f"declared length {length} != {w}x{h}x3 = {expected}")
    payload = stream.read(length)
    if len(payload) < length:
        raise Truncated(f"frame payload needs {length} bytes, got {len(payload)}")
    frame = np.frombuffer(payload, dtype=np.uint8).reshape(h, w, 3).copy()
    return frame, ts
