"""Screen enumeration and region capture, behind a capability provider.

Real desktop capture needs a display server and a grabber library, neither
of which exists on a headless host. The provider chain is:

1. ``QUILTSTREAM_VIRTUAL_SCREENS`` environment variable (e.g.fixed
   ``1920x1080,1280x720``): deterministic synthetic screens, intended for
   tests and headless service runs.
2. ``mss`` if importable: real desktop capture.
3. Nothing: enumeration returns [], capture reports Unsupported.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass

import numpy as np

from .errors import InvalidValue, NotFound, Unsupported

VIRTUAL_ENV_VAR = "QUILTSTREAM_VIRTUAL_SCREENS"


@dataclass(frozen=True)
class ScreenInfo:
    index: int
    w: int
    h: int


def _parse_virtual(spec: str) -> list[ScreenInfo]:
    screens = []
    for i, token in enumerate(t for t in spec.split(",") if t.strip()):
        m = re.fullmatch(r"\s*(\d+)x(\d+)\s*", token)
        if not m:
            raise InvalidValue(VIRTUAL_ENV_VAR, token, "expected WxH")
        screens.append(ScreenInfo(index=i, w=int(m.group(1)), h=int(m.group(2))))
    return screens


def _mss_screens():
    try:
        import mss
    except ImportError:
        return None
    with mss.mss() as grabber:
        monitors = grabber.monitors[1:]  # entry 0 is the combined bounding box
        return [
            ScreenInfo(index=i, w=mon["width"], h=mon["height"])
            for i, mon in enumerate(monitors)
        ]


def enumerate_screens() -> list[ScreenInfo]:
    """List capturable screens via the active provider (may be empty)."""
    spec = os.environ.get(VIRTUAL_ENV_VAR)
    if spec:
        return _parse_virtual(spec)
    real = _mss_screens()
    return real if real is not None else []


def virtual_frame(screen: ScreenInfo, t: int) -> np.ndarray:
    """Deterministic full-screen content of a virtual screen at tick t.

    A moving diagonal gradient, phase-shifted per screen index so captures
    from different screens are distinguishable.
    """
    xs = np.arange(screen.w, dtype=np.int32)
    ys = np.arange(screen.h, dtype=np.int32)
    phase = 37 * screen.index
    r = (xs[None, :] + 3 * t + phase) % 256
    g = (ys[:, None] + 2 * t) % 256
    b = (xs[None, :] + ys[:, None] + t) % 256
    out = np.empty((screen.h, screen.w, 3), np.uint8)
    out[:, :, 0] = r
    out[:, :, 1] = g
    out[:, :, 2] = b
    return out


class RegionGrabber:
    """Capture a fixed region of one screen, one frame per call."""

    def __init__(self, screen_index: int, x: int, y: int, w: int, h: int):
        self.screen_index = screen_index
        self.x, self.y, self.w, self.h = x, y, w, h
        spec = os.environ.get(VIRTUAL_ENV_VAR)
        if spec:
            screens = _parse_virtual(spec)
            self._mode = "virtual"
        else:
            screens = _mss_screens()
            if screens is None:
                raise Unsupported("screen_region")
            self._mode = "mss"
        if not 0 <= screen_index < len(screens):
            raise NotFound(f"screen index {screen_index} (have {len(screens)} screens)")
        self._screen = screens[screen_index]
        if x < 0 or y < 0 or x + w > self._screen.w or y + h > self._screen.h:
            raise InvalidValue(
                "region", (x, y, w, h),
                f"outside screen {self._screen.w}x{self._screen.h}",
            )
        self._tick = 0
        self._sct = None
        if self._mode == "mss":
            import mss

            self._sct = mss.mss()

    def grab(self) -> np.ndarray:
        if self._mode == "virtual":
            full = virtual_frame(self._screen, self._tick)
            self._tick += 1
            return np.ascontiguousarray(
                full[self.y : self.y + self.h, self.x : self.x + self.w]
            )
        mon = self._sct.monitors[1:][self.screen_index]
        raw = self._sct.grab(
            {
                "left": mon["left"] + self.x,
                "top": mon["top"] + self.y,
                "width": self.w,
                "height": self.h,
            }
        )
        bgra = np.frombuffer(raw.raw, dtype=np.uint8).reshape(raw.height, raw.width, 4)
        return np.ascontiguousarray(bgra[:, :, 2::-1])

    def close(self):
        if self._sct is not None:
            self._sct.close()
            self._sct = None
