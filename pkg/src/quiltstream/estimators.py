"""Estimator-style wrappers over the functional core.

These follow the fit/transform convention: constructor arguments are stored
verbatim and reported by ``get_params``, ``fit`` resolves them into working
state (model handles, lookup tables), and ``transform`` maps frames through
the pipeline stages. A single array in gives a single array out; a list in
gives a list out.
"""

from __future__ import annotations

import json

import cv2
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .calibration import Calibration, derive_effective, parse_calibration
from .depth import DEFAULT_INFER_SIZE, make_backend, normalize, temporal_smooth
from .lut import QuiltGeometry, load_map
from .native import DirectMapper
from .quilt import adapt_aspect, decimate
from .viewsynth import ViewParams, ViewSet, inpaint_viewset, synth_views


def _resolve_calibration(source) -> Calibration:
    if isinstance(source, Calibration):
        return source
    if isinstance(source, dict):
        return parse_calibration(json.dumps(source))
    if isinstance(source, str):
        text = source.strip()
        if text.startswith("{"):
            return parse_calibration(text)
        with open(source, "r", encoding="utf-8") as f:
            return parse_calibration(f.read())
    raise TypeError(f"cannot interpret calibration from {type(source).__name__}")


def _check_fitted(est, attr: str) -> None:
    if not hasattr(est, attr):
        raise NotFittedError(
            f"This {type(est).__name__} instance is not fitted yet; call fit first."
        )


def _map_frames(X, fn):
    if isinstance(X, np.ndarray):
        return fn(X)
    return [fn(item) for item in X]


class DepthEstimator(BaseEstimator, TransformerMixin):
    """Frames to normalized depth maps at frame resolution.

    Parameters
    ----------
    backend : depth backend descriptor ("synthetic:<pattern>" or model path).
    decimation : integer subsampling applied before estimation.
    smooth_alpha : temporal blend across the frames of one transform call
        (0 disables smoothing).
    infer_size : neural backend internal inference side length.
    provider : neural execution provider ("cpu", "accel", "accel_fp16").
    """

    def __init__(self, backend="synthetic:hramp", decimation=1, smooth_alpha=0.0,
                 infer_size=DEFAULT_INFER_SIZE, provider="cpu"):
        self.backend = backend
        self.decimation = decimation
        self.smooth_alpha = smooth_alpha
        self.infer_size = infer_size
        self.provider = provider

    def fit(self, X=None, y=None):
        self.backend_ = make_backend(
            self.backend, infer_size=self.infer_size, provider=self.provider
        )
        return self

    def transform(self, X):
        _check_fitted(self, "backend_")
        prev: list[np.ndarray | None] = [None]

        def one(frame: np.ndarray) -> np.ndarray:
            h, w = frame.shape[:2]
            dec = decimate(frame, self.decimation)
            dm = normalize(self.backend_.estimate(dec))
            if self.smooth_alpha > 0.0 and prev[0] is not None and prev[0].shape == dm.shape:
                dm = temporal_smooth(prev[0], dm, self.smooth_alpha)
            prev[0] = dm
            if dm.shape != (h, w):
                dm = cv2.resize(dm, (w, h), interpolation=cv2.INTER_LINEAR)
            return dm

        return _map_frames(X, one)


class ViewSynthesizer(BaseEstimator, TransformerMixin):
    """(frame, depth) pairs to inpainted ViewSets."""

    def __init__(self, n_views=48, gain=None, zero_parallax=0.5, algorithm="fast",
                 fill_holes=True):
        self.n_views = n_views
        self.gain = gain
        self.zero_parallax = zero_parallax
        self.algorithm = algorithm
        self.fill_holes = fill_holes

    def fit(self, X=None, y=None):
        self.fitted_ = True
        return self

    def _params_for(self, frame_w: int) -> ViewParams:
        gain = self.gain if self.gain is not None else 0.04 * frame_w
        return ViewParams(
            n_views=self.n_views,
            gain=gain,
            zero_parallax=self.zero_parallax,
            algorithm=self.algorithm,
        )

    def transform(self, X):
        _check_fitted(self, "fitted_")

        def one(pair) -> ViewSet:
            frame, dm = pair
            vs = synth_views(frame, dm, self._params_for(frame.shape[1]))
            return inpaint_viewset(vs) if self.fill_holes else vs

        if isinstance(X, tuple):
            return one(X)
        return [one(item) for item in X]


class NativeMapper(BaseEstimator, TransformerMixin):
    """ViewSets or quilt images to native display images.

    Exactly one of ``calibration`` (document/path/dict/Calibration plus the
    quilt grid parameters) or ``map_path`` (a MAP file) must be provided.
    """

    def __init__(self, calibration=None, map_path=None, rows=6, cols=8,
                 tile_w=420, tile_h=560):
        self.calibration = calibration
        self.map_path = map_path
        self.rows = rows
        self.cols = cols
        self.tile_w = tile_w
        self.tile_h = tile_h

    def fit(self, X=None, y=None):
        if (self.calibration is None) == (self.map_path is None):
            raise ValueError("provide exactly one of calibration or map_path")
        if self.map_path is not None:
            lut_map = load_map(self.map_path)
            self.geometry_ = lut_map.geometry
            self.mapper_ = DirectMapper.from_lut(lut_map)
        else:
            cal = _resolve_calibration(self.calibration)
            self.geometry_ = QuiltGeometry(
                rows=self.rows, cols=self.cols, tile_w=self.tile_w, tile_h=self.tile_h
            )
            self.mapper_ = DirectMapper.from_calibration(
                derive_effective(cal), self.geometry_
            )
        return self

    def transform(self, X):
        _check_fitted(self, "mapper_")
        g = self.geometry_

        def one(item) -> np.ndarray:
            if isinstance(item, ViewSet):
                return self.mapper_.map_views(item)
            arr = np.asarray(item)
            if arr.ndim == 4:
                return self.mapper_.map_views(arr)
            # a quilt image: slice it back into views, then gather
            from .quilt import extract_views

            return self.mapper_.map_views(extract_views(arr, g))

        if isinstance(X, (ViewSet, np.ndarray)):
            return one(X)
        return [one(item) for item in X]


class FrameToNative(BaseEstimator, TransformerMixin):
    """Full conversion: 2D frames to native display images.

    Composes aspect adaptation, depth estimation, view synthesis, and the
    direct views-to-native mapping. ``fit`` precomputes the lookup table and
    loads the depth backend; ``transform`` then runs per frame with no
    per-pixel trigonometry.
    """

    def __init__(self, calibration=None, map_path=None, rows=6, cols=8,
                 tile_w=420, tile_h=560, depth_backend="synthetic:hramp",
                 decimation=1, algorithm="fast", gain=None, zero_parallax=0.5,
                 provider="cpu", fill_holes=True):
        self.calibration = calibration
        self.map_path = map_path
        self.rows = rows
        self.cols = cols
        self.tile_w = tile_w
        self.tile_h = tile_h
        self.depth_backend = depth_backend
        self.decimation = decimation
        self.algorithm = algorithm
        self.gain = gain
        self.zero_parallax = zero_parallax
        self.provider = provider
        self.fill_holes = fill_holes

    def fit(self, X=None, y=None):
        self.mapper_est_ = NativeMapper(
            calibration=self.calibration, map_path=self.map_path,
            rows=self.rows, cols=self.cols, tile_w=self.tile_w, tile_h=self.tile_h,
        ).fit()
        self.depth_est_ = DepthEstimator(
            backend=self.depth_backend, decimation=self.decimation,
            provider=self.provider,
        ).fit()
        g = self.mapper_est_.geometry_
        self.views_est_ = ViewSynthesizer(
            n_views=g.n_views, gain=self.gain, zero_parallax=self.zero_parallax,
            algorithm=self.algorithm, fill_holes=self.fill_holes,
        ).fit()
        return self

    def transform(self, X):
        _check_fitted(self, "mapper_est_")
        g = self.mapper_est_.geometry_

        def one(frame: np.ndarray) -> np.ndarray:
            adapted = adapt_aspect(frame, g.tile_w, g.tile_h)
            dm = self.depth_est_.transform(adapted)
            vs = self.views_est_.transform((adapted, dm))
            return self.mapper_est_.transform(vs)

        return _map_frames(X, one)


__all__ = [
    "DepthEstimator",
    "ViewSynthesizer",
    "NativeMapper",
    "FrameToNative",
]
