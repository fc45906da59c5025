"""Frame sources behind one pull-based contract.

``next()`` returns the next RGB frame or None at end of stream; ``is_live``
tells the pipeline whether dropping frames is acceptable (live capture) or
every frame must be processed (file-like streams). Frames keep constant
dimensions for the lifetime of a source.
"""

from __future__ import annotations

import re
import sys
from pathlib import Path

import cv2
import numpy as np

from .config import RegionSpec, SourceSpec
from .errors import DimsMismatch, InvalidValue, NotFound
from .screens import RegionGrabber, enumerate_screens
from .wire import read_frame

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp")


class FrameSource:
    kind: str = ""
    is_live: bool = False
    fps: float | None = None

    def next(self) -> np.ndarray | None:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __iter__(self):
        while True:
            frame = self.next()
            if frame is None:
                return
            yield frame


class ImageSequenceSource(FrameSource):
    """Numbered images in a directory, lexicographic order."""

    kind = "image_sequence"

    def __init__(self, path: str):
        root = Path(path)
        if not root.is_dir():
            raise NotFound(f"image directory {path!r}")
        self._files = sorted(
            p for p in root.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS
        )
        if not self._files:
            raise NotFound(f"no images in {path!r}")
        self._pos = 0
        self._dims: tuple[int, int] | None = None

    def next(self) -> np.ndarray | None:
        if self._pos >= len(self._files):
            return None
        path = self._files[self._pos]
        self._pos += 1
        bgr = cv2.imread(str(path), cv2.IMREAD_COLOR)
        if bgr is None:
            raise NotFound(f"unreadable image {path}")
        frame = np.ascontiguousarray(bgr[:, :, ::-1])
        dims = frame.shape[:2]
        if self._dims is None:
            self._dims = dims
        elif dims != self._dims:
            raise DimsMismatch(f"{path} is {dims}, stream started as {self._dims}")
        return frame


class RawPipeSource(FrameSource):
    """Framed RGB stream from a file or stdin ('-')."""

    kind = "raw_pipe"

    def __init__(self, path: str):
        if path in ("", "-"):
            self._stream = sys.stdin.buffer
            self._owned = False
        else:
            try:
                self._stream = open(path, "rb")
            except OSError as exc:
                raise NotFound(f"cannot open pipe source {path!r}: {exc}") from exc
            self._owned = True
        self._dims: tuple[int, int] | None = None

    def next(self) -> np.ndarray | None:
        result = read_frame(self._stream)
        if result is None:
            return None
        frame, _ts = result
        dims = frame.shape[:2]
        if self._dims is None:
            self._dims = dims
        elif dims != self._dims:
            raise DimsMismatch(f"frame is {dims}, stream started as {self._dims}")
        return frame

    def close(self) -> None:
        if self._owned:
            self._stream.close()


_SYNTH_RE = re.compile(
    r"^(?P<pattern>[a-z-]+)?(?::?(?P<w>\d+)x(?P<h>\d+))?(?:@(?P<fps>\d+(?:\.\d+)?))?"
    r"(?::frames=(?P<frames>\d+))?$"
)


class SyntheticSource(FrameSource):
    """Deterministic moving-gradient frames.

    Descriptor: ``moving-gradient:320x240@10:frames=50``; dimensions default
    to 640x480, frame count absent means endless (treated as live).
    """

    kind = "synthetic"

    def __init__(self, descriptor: str = "", w: int = 640, h: int = 480,
                 fps: float = 10.0, n_frames: int | None = None):
        if descriptor:
            m = _SYNTH_RE.match(descriptor.strip())
            if not m:
                raise InvalidValue("input.path", descriptor, "bad synthetic descriptor")
            if m.group("pattern") not in (None, "", "moving-gradient"):
                raise InvalidValue("input.path", descriptor, "unknown synthetic pattern")
            if m.group("w"):
                w, h = int(m.group("w")), int(m.group("h"))
            if m.group("fps"):
                fps = float(m.group("fps"))
            if m.group("frames"):
                n_frames = int(m.group("frames"))
        if w < 1 or h < 1:
            raise InvalidValue("input.path", f"{w}x{h}", "dims must be >= 1")
        self.w, self.h = w, h
        self.fps = fps
        self.n_frames = n_frames
        self.is_live = n_frames is None
        self._t = 0

    def frame_at(self, t: int) -> np.ndarray:
        xs = np.arange(self.w, dtype=np.int32)
        ys = np.arange(self.h, dtype=np.int32)
        out = np.empty((self.h, self.w, 3), np.uint8)
        out[:, :, 0] = ((xs[None, :] + 8 * t) % 256).astype(np.uint8)
        out[:, :, 1] = (ys[:, None] % 256).astype(np.uint8)
        out[:, :, 2] = ((xs[None, :] + ys[:, None] + 4 * t) % 256).astype(np.uint8)
        return out

    def next(self) -> np.ndarray | None:
        if self.n_frames is not None and self._t >= self.n_frames:
            return None
        frame = self.frame_at(self._t)
        self._t += 1
        return frame


class CameraSource(FrameSource):
    """USB camera by index, through OpenCV capture."""

    kind = "camera"
    is_live = True

    def __init__(self, index: int):
        self._cap = cv2.VideoCapture(index)
        if not self._cap.isOpened():
            self._cap.release()
            raise NotFound(f"camera index {index}")
        self.fps = self._cap.get(cv2.CAP_PROP_FPS) or None

    def next(self) -> np.ndarray | None:
        ok, bgr = self._cap.read()
        if not ok:
            return None
        return np.ascontiguousarray(bgr[:, :, ::-1])

    def close(self) -> None:
        self._cap.release()


class ScreenRegionSource(FrameSource):
    """Live capture of a screen region via the platform provider."""

    kind = "screen_region"
    is_live = True

    def __init__(self, region: RegionSpec | None):
        if region is None:
            screens = enumerate_screens()
            if not screens:
                from .errors import Unsupported

                raise Unsupported("screen_region")
            region = RegionSpec(screen_index=0, x=0, y=0, w=screens[0].w, h=screens[0].h)
        region.validate()
        self.region = region
        self._grabber = RegionGrabber(
            region.screen_index, region.x, region.y, region.w, region.h
        )

    def next(self) -> np.ndarray | None:
        return self._grabber.grab()

    def set_region(self, region: RegionSpec) -> None:
        """Hot-swap the capture rectangle (same screen provider)."""
        region.validate()
        grabber = RegionGrabber(
            region.screen_index, region.x, region.y, region.w, region.h
        )
        old = self._grabber
        self._grabber = grabber
        self.region = region
        old.close()

    def close(self) -> None:
        self._grabber.close()


def open_source(spec: SourceSpec) -> FrameSource:
    """Open the FrameSource described by a SourceSpec.

    Raises NotFound, Unsupported, or InvalidValue depending on the failure.
    """
    if spec.kind == "image_sequence":
        return ImageSequenceSource(spec.path)
    if spec.kind == "raw_pipe":
        return RawPipeSource(spec.path)
    if spec.kind == "synthetic":
        return SyntheticSource(spec.path)
    if spec.kind == "camera":
        return CameraSource(spec.camera_index)
    if spec.kind == "screen_region":
        return ScreenRegionSource(spec.region)
    raise InvalidValue("input.type", spec.kind, "unknown source kind")
