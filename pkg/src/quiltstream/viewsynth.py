"""N-view synthesis by horizontal forward warping, plus hole inpainting.

Two algorithms produce per-view disparities from normalized inverse depth:
FAST is linear in depth, GEOMETRIC reprojects through a pinhole model and is
harmonic in metric distance. Both forward-warp source pixels with a
nearest-wins collision rule, record disocclusion holes, and hand the holes
to a fast-marching (Telea-style) inpainter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionMismatch
from .validation import ensure_depth32, ensure_rgb8

ALGORITHMS = ("fast", "geometric")

INPAINT_RADIUS = 3


@dataclass(frozen=True)
class ViewParams:
    """View synthesis parameters.

    ``gain`` is the full disparity swing in pixels for the FAST algorithm.
    The pinhole parameters (focal, baseline, z_near, z_far) drive GEOMETRIC;
    when ``focal`` is omitted it defaults to ``2 * gain`` so the extreme
    views of both algorithms reach the same maximal disparity.
    """

    n_views: int
    gain: float
    zero_parallax: float = 0.5
    focal: float | None = None
    baseline: float = 1.0
    z_near: float = 1.0
    z_far: float = 10.0
    algorithm: str = "fast"

    def __post_init__(self):
        if self.n_views < 1:
            raise ValueError(f"n_views must be >= 1, got {self.n_views}")
        if self.gain < 0:
            raise ValueError(f"gain must be >= 0, got {self.gain}")
        if not self.z_near < self.z_far:
            raise ValueError(f"need z_near < z_far, got {self.z_near} >= {self.z_far}")
        if self.z_near <= 0:
            raise ValueError(f"z_near must be > 0, got {self.z_near}")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")

    @property
    def focal_eff(self) -> float:
        return 2.0 * self.gain if self.focal is None else self.focal

    @classmethod
    def defaults(cls, frame_w: int, n_views: int, algorithm: str = "fast") -> "ViewParams":
        """Documented defaults: gain = 4% of frame width, mid zero-parallax."""
        return cls(n_views=n_views, gain=0.04 * frame_w, algorithm=algorithm)


@dataclass
class ViewSet:
    """N warped views plus the per-view disocclusion masks."""

    views: np.ndarray  # uint8, (n, h, w, 3)
    holes: np.ndarray  # bool, (n, h, w)

    @property
    def n_views(self) -> int:
        return self.views.shape[0]

    @property
    def height(self) -> int:
        return self.views.shape[1]

    @property
    def width(self) -> int:
        return self.views.shape[2]


def _kterm(k: int, n_views: int) -> float:
    return 0.0 if n_views == 1 else k / (n_views - 1) - 0.5


def round_shift(s: float) -> int:
    """Round a disparity half-away-from-zero, the warp's rounding rule."""
    if s >= 0.0:
        return int(s + 0.5)
    return -int(-s + 0.5)


def shift_for_view(k: int, p: ViewParams, d_hat: float) -> float:
    """Signed disparity (pixels, real-valued) of a depth sample in view k.

    Scalar reference form; the warp kernels evaluate the same expressions
    in the same order, so results agree bit-for-bit.
    """
    kterm = _kterm(k, p.n_views)
    if p.algorithm == "fast":
        return (p.gain * kterm) * (d_hat - p.zero_parallax)
    t_k = p.baseline * kterm
    q1 = 1.0 / p.z_near - 1.0 / p.z_far
    q2 = 1.0 / p.z_far
    invz = d_hat * q1 + q2
    z = 1.0 / invz
    return (p.focal_eff * t_k) / z


def synth_views(frame: np.ndarray, depth: np.ndarray, p: ViewParams) -> ViewSet:
    """Forward-warp one frame into p.n_views horizontally displaced views.

    Collisions resolve nearest-wins (larger depth value wins; on equal depth
    the larger source x wins). Unwritten targets are zeroed and flagged in
    the hole mask. Inputs are not modified.
    """
    ensure_rgb8(frame, "frame")
    depth = ensure_depth32(depth, "depth")
    if depth.shape != frame.shape[:2]:
        raise DimensionMismatch(
            f"depth dims {depth.shape} do not match frame {frame.shape[:2]}"
        )
    n = p.n_views
    h, w = depth.shape
    src = np.ascontiguousarray(frame)
    dep = np.ascontiguousarray(depth)
    out = np.empty((n, h, w, 3), np.uint8)
    holes = np.empty((n, h, w), np.bool_)
    if p.algorithm == "fast":
        ck = np.array([p.gain * _kterm(k, n) for k in range(n)], np.float64)
        _kernels.warp_fast(src, dep, ck, float(p.zero_parallax), out, holes)
    else:
        ftk = np.array(
            [p.focal_eff * (p.baseline * _kterm(k, n)) for k in range(n)], np.float64
        )
        q1 = 1.0 / p.z_near - 1.0 / p.z_far
        q2 = 1.0 / p.z_far
        _kernels.warp_geometric(src, dep, ftk, q1, q2, out, holes)
    return ViewSet(views=out, holes=holes)


def inpaint(view: np.ndarray, holes: np.ndarray, radius: int = INPAINT_RADIUS) -> np.ndarray:
    """Fill hole pixels by fast-marching inpainting; others stay bit-identical.

    Fill values are clamped to the min/max of the known pixels in each hole
    region's 5x5 dilation ring, so no fill escapes its local value range.
    """
    ensure_rgb8(view, "view")
    if holes.shape != view.shape[:2]:
        raise DimensionMismatch(
            f"hole mask dims {holes.shape} do not match view {view.shape[:2]}"
        )
    out = np.ascontiguousarray(view).copy()
    if not holes.any():
        return out
    mask = np.ascontiguousarray(holes, dtype=np.bool_)
    _kernels.fmm_fill_views(out[None], mask[None], radius)
    return out


def inpaint_viewset(vs: ViewSet, radius: int = INPAINT_RADIUS) -> ViewSet:
    """Inpaint every view of a ViewSet; hole masks are carried over."""
    views = np.ascontiguousarray(vs.views).copy()
    holes = np.ascontiguousarray(vs.holes, dtype=np.bool_)
    _kernels.fmm_fill_views(views, holes, radius)
    return ViewSet(views=views, holes=vs.holes)
