"""Frame sinks: where native images go.

A sink declares the frame dimensions it accepts when opened; writes with
other dimensions raise DimsMismatch. Payload bytes are never altered on the
way out (the TCP and pipe sinks emit exactly the produced image).
"""

from __future__ import annotations

import socket
import sys
from pathlib import Path

import cv2
import numpy as np

from .config import SinkSpec
from .errors import DimsMismatch, InvalidValue, SinkOpenFailure, Unsupported
from .wire import write_frame


class FrameSink:
    kind: str = ""

    def __init__(self, dims: tuple[int, int]):
        self.dims = dims  # (h, w)
        self.written = 0

    def _check(self, frame: np.ndarray) -> None:
        if frame.shape[:2] != self.dims:
            raise DimsMismatch(
                f"sink opened for {self.dims}, frame is {frame.shape[:2]}"
            )

    def write(self, frame: np.ndarray, timestamp_us: int = 0) -> None:
        raise NotImplementedError

    def close(self) -> None:
        pass


class NullSink(FrameSink):
    """Counts frames and discards them."""

    kind = "null"

    def write(self, frame: np.ndarray, timestamp_us: int = 0) -> None:
        self._check(frame)
        self.written += 1


class ImageSequenceSink(FrameSink):
    """Numbered PNG files in a directory."""

    kind = "image_sequence"

    def __init__(self, dims: tuple[int, int], path: str, prefix: str = "native"):
        super().__init__(dims)
        self._dir = Path(path)
        try:
            self._dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise SinkOpenFailure(f"cannot create {path!r}: {exc}") from exc
        self._prefix = prefix

    def write(self, frame: np.ndarray, timestamp_us: int = 0) -> None:
        self._check(frame)
        out = self._dir / f"{self._prefix}_{self.written:06d}.png"
        if not cv2.imwrite(str(out), np.ascontiguousarray(frame[:, :, ::-1])):
            raise SinkOpenFailure(f"cannot write {out}")
        self.written += 1


class RawPipeSink(FrameSink):
    """Framed RGB stream to a file or stdout ('-')."""

    kind = "raw_pipe"

    def __init__(self, dims: tuple[int, int], path: str):
        super().__init__(dims)
        if path in ("", "-"):
            self._stream = sys.stdout.buffer
            self._owned = False
        else:
            try:
                self._stream = open(path, "wb")
            except OSError as exc:
                raise SinkOpenFailure(f"cannot open pipe sink {path!r}: {exc}") from exc
            self._owned = True

    def write(self, frame: np.ndarray, timestamp_us: int = 0) -> None:
        self._check(frame)
        write_frame(self._stream, frame, timestamp_us)
        self._stream.flush()
        self.written += 1

    def close(self) -> None:
        if self._owned:
            self._stream.close()


class TcpStreamSink(FrameSink):
    """Framed RGB stream over one TCP connection."""

    kind = "tcp_stream"

    def __init__(self, dims: tuple[int, int], host: str, port: int):
        super().__init__(dims)
        try:
            self._sock = socket.create_connection((host, port), timeout=5.0)
        except OSError as exc:
            raise SinkOpenFailure(f"cannot connect to {host}:{port}: {exc}") from exc

    def write(self, frame: np.ndarray, timestamp_us: int = 0) -> None:
        self._check(frame)
        from .wire import pack_frame

        try:
            self._sock.sendall(pack_frame(frame, timestamp_us))
        except OSError as exc:
            raise SinkOpenFailure(f"tcp send failed: {exc}") from exc
        self.written += 1

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


class WindowSink(FrameSink):
    """On-screen preview window; unavailable on headless hosts."""

    kind = "window"

    def __init__(self, dims: tuple[int, int], title: str = "quiltstream"):
        super().__init__(dims)
        self._title = title
        try:
            cv2.namedWindow(title, cv2.WINDOW_NORMAL)
        except cv2.error as exc:
            raise Unsupported(f"window ({exc})") from exc

    def write(self, frame: np.ndarray, timestamp_us: int = 0) -> None:
        self._check(frame)
        cv2.imshow(self._title, np.ascontiguousarray(frame[:, :, ::-1]))
        cv2.waitKey(1)
        self.written += 1

    def close(self) -> None:
        try:
            cv2.destroyWindow(self._title)
        except cv2.error:
            pass


def open_sink(spec: SinkSpec, dims: tuple[int, int]) -> FrameSink:
    """Open the FrameSink described by a SinkSpec for (h, w) native frames."""
    if spec.kind == "null":
        return NullSink(dims)
    if spec.kind == "image_sequence":
        return ImageSequenceSink(dims, spec.path)
    if spec.kind == "raw_pipe":
        return RawPipeSink(dims, spec.path)
    if spec.kind == "tcp_stream":
        host = spec.path or "127.0.0.1"
        return TcpStreamSink(dims, host, spec.port)
    if spec.kind == "window":
        return WindowSink(dims)
    raise InvalidValue("output.type", spec.kind, "unknown sink kind")
