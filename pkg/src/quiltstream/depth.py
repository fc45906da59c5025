"""Per-frame relative inverse-depth estimation.

Two backend families implement the same contract: ``neural`` runs a
monocular-depth ONNX model (MiDaS-style, larger value = nearer) through the
OpenCV DNN runtime; ``synthetic`` produces fixed analytic patterns that act
as deterministic oracles for everything downstream. Estimates are resampled
to frame dimensions, normalized to [0, 1], and optionally blended over time
to suppress flicker on live streams.
"""

from __future__ import annotations

import logging

import cv2
import numpy as np

from .errors import DimensionMismatch, InferenceFailure, InvalidValue, ModelLoadFailure

log = logging.getLogger(__name__)

PROVIDERS = ("cpu", "accel", "accel_fp16")

DEFAULT_INFER_SIZE = 256
DEFAULT_ALPHA = 0.3


class DepthBackend:
    """Common contract: ``estimate(frame) -> float32 (h, w)`` map.

    Deterministic for a fixed input and backend state; larger values mean
    nearer surfaces (inverse-depth convention).
    """

    kind: str = ""
    descriptor: str = ""

    def estimate(self, frame: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class SyntheticDepth(DepthBackend):
    """Analytic depth patterns, independent of pixel colors.

    Patterns: ``hramp`` (x/(w-1)), ``vramp`` (y/(h-1)),
    ``constant:c``, ``disk:cx,cy,r,near,far`` (relative coordinates).
    Single-row/column ramps degenerate to the constant 0.5.
    """

    kind = "synthetic"

    def __init__(self, pattern: str):
        self.descriptor = f"synthetic:{pattern}"
        parts = pattern.split(":")
        self.pattern = parts[0]
        args = parts[1].split(",") if len(parts) > 1 else []
        try:
            if self.pattern == "constant":
                self.args = (float(args[0]) if args else 0.5,)
            elif self.pattern == "disk":
                vals = [float(a) for a in args]
            elif self.pattern in ("hramp", "vramp"):
                self.args = ()
            else:
                raise InvalidValue("depth.pattern", pattern, "unknown synthetic pattern")
        except (ValueError, IndexError) as exc:
            raise InvalidValue("depth.pattern", pattern, "bad pattern arguments") from exc
        if self.pattern == "disk":
            if len(vals) != 5:
                raise InvalidValue("depth.pattern", pattern, "disk needs cx,cy,r,near,far")
            self.args = tuple(vals)

    def estimate(self, frame: np.ndarray) -> np.ndarray:
        h, w = frame.shape[:2]
        if h < 1 or w < 1:
            raise ValueError("empty frame")
        if self.pattern == "hramp":
            if w == 1:
                return np.full((h, w), 0.5, np.float32)
            col = (np.arange(w, dtype=np.float32) / np.float32(w - 1))
            return np.broadcast_to(col, (h, w)).copy()
        if self.pattern == "vramp":
            if h == 1:
                return np.full((h, w), 0.5, np.float32)
            row = (np.arange(h, dtype=np.float32) / np.float32(h - 1))
            return np.broadcast_to(row[:, None], (h, w)).copy()
        if self.pattern == "constant":
            return np.full((h, w), np.float32(self.args[0]), np.float32)
        cx, cy, r, near, far = self.args
        px = np.arange(w, dtype=np.float32) - np.float32(cx * (w - 1))
        py = np.arange(h, dtype=np.float32) - np.float32(cy * (h - 1))
        r_px = np.float32(r * min(w, h))
        inside = (px[None, :] ** 2 + py[:, None] ** 2) <= r_px**2
        return np.where(inside, np.float32(near), np.float32(far))


class NeuralDepth(DepthBackend):
    """ONNX monocular-depth model through the OpenCV DNN runtime.

    Inference runs on a reduced internal resolution: each side is the model's
    preferred square size (default 256) or the largest multiple of 32 that
    fits the input, whichever is smaller, so smaller inputs always cost less.
    """

    kind = "neural"

    def __init__(self, model_path: str, infer_size: int = DEFAULT_INFER_SIZE,
                 provider: str = "cpu"):
        if provider not in PROVIDERS:
            raise InvalidValue("depth.provider", provider, f"one of {PROVIDERS}")
        self.descriptor = model_path
        self.infer_size = int(infer_size)
        self.provider = provider
        try:
            self._net = cv2.dnn.readNetFromONNX(model_path)
        except cv2.error as exc:
            raise ModelLoadFailure(f"cannot load model {model_path!r}: {exc}") from exc
        self._apply_provider()

    def _apply_provider(self):
        if self.provider == "cpu":
            return
        try:
            if cv2.cuda.getCudaEnabledDeviceCount() > 0:
                target = (
                    cv2.dnn.DNN_TARGET_CUDA_FP16
                    if self.provider == "accel_fp16"
                    else cv2.dnn.DNN_TARGET_CUDA
                )
                self._net.setPreferableBackend(cv2.dnn.DNN_BACKEND_CUDA)
                self._net.setPreferableTarget(target)
                return
        except cv2.error:
            pass
        log.warning("provider %r unavailable, falling back to cpu", self.provider)

    def _infer_dims(self, h: int, w: int) -> tuple[int, int]:
        ih = min(self.infer_size, max(32, (h // 32) * 32))
        iw = min(self.infer_size, max(32, (w // 32) * 32))
        return ih, iw

    def estimate(self, frame: np.ndarray) -> np.ndarray:
        h, w = frame.shape[:2]
        if h < 1 or w < 1:
            raise ValueError("empty frame")
        ih, iw = self._infer_dims(h, w)
        try:
            blob = cv2.dnn.blobFromImage(
                frame, scalefactor=1.0 / 255.0, size=(iw, ih), mean=(0.0, 0.0, 0.0),
                swapRB=False, crop=False,
            )
            self._net.setInput(blob)
            out = self._net.forward()
        except cv2.error as exc:
            raise InferenceFailure(f"model forward pass failed: {exc}") from exc
        raw = np.asarray(out, dtype=np.float32).reshape(out.shape[-2], out.shape[-1])
        if not np.all(np.isfinite(raw)):
            raise InferenceFailure("model produced non-finite depth values")
        if raw.shape != (h, w):
            raw = cv2.resize(raw, (w, h), interpolation=cv2.INTER_LINEAR)
        return raw


def make_backend(descriptor: str, infer_size: int = DEFAULT_INFER_SIZE,
                 provider: str = "cpu") -> DepthBackend:
    """Build a backend from its descriptor.

    ``synthetic:<pattern>`` selects a synthetic pattern; anything else is
    treated as a path to an ONNX model file.
    """
    if descriptor.startswith("synthetic:"):
        return SyntheticDepth(descriptor[len("synthetic:"):])
    return NeuralDepth(descriptor, infer_size=infer_size, provider=provider)


def normalize(d: np.ndarray) -> np.ndarray:
    """Linear rescale to [0, 1]; a constant map becomes all 0.5."""
    d = np.asarray(d, dtype=np.float32)
    lo = d.min()
    hi = d.max()
    if hi == lo:
        return np.full(d.shape, 0.5, np.float32)
    return (d - lo) / (hi - lo)


def temporal_smooth(prev: np.ndarray, cur: np.ndarray, alpha: float) -> np.ndarray:
    """Exponential blend: alpha*prev + (1-alpha)*cur, per pixel."""
    if prev.shape != cur.shape:
        raise DimensionMismatch(f"depth dims {prev.shape} vs {cur.shape}")
    return (alpha * prev + (1.0 - alpha) * cur).astype(np.float32, copy=False)
