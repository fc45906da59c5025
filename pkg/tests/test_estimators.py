"""Estimator wrappers: params protocol, fitting, and equivalence to the
functional stages they compose."""

import json

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from quiltstream.calibration import derive_effective, parse_calibration
from quiltstream.depth import make_backend, normalize, temporal_smooth
from quiltstream.estimators import (
    DepthEstimator,
    FrameToNative,
    NativeMapper,
    ViewSynthesizer,
)
from quiltstream.lut import QuiltGeometry
from quiltstream.native import views_to_native_direct
from quiltstream.quilt import adapt_aspect, assemble_quilt, extract_views
from quiltstream.viewsynth import ViewParams, inpaint_viewset, synth_views

from onnx_fixture import build_light_model

TINY_GEO = QuiltGeometry(rows=2, cols=3, tile_w=16, tile_h=12)

SMALL_CAL = {
    "pitch": 50.0,
    "slope": -7.5,
    "center": 0.4,
    "dpi": 324.0,
    "screen_w": 48,
    "screen_h": 32,
}


@pytest.fixture(scope="module")
def light_model(tmp_path_factory):
    path = tmp_path_factory.mktemp("est_onnx") / "light.onnx"
    build_light_model(str(path))
    return str(path)


def rand_frame(rng, h, w):
    return rng.integers(0, 256, (h, w, 3), dtype=np.uint8)


def tiny_viewset(rng):
    frame = rand_frame(rng, TINY_GEO.tile_h, TINY_GEO.tile_w)
    depth = rng.random((TINY_GEO.tile_h, TINY_GEO.tile_w), dtype=np.float32)
    params = ViewParams(n_views=TINY_GEO.n_views, gain=2.0)
    return inpaint_viewset(synth_views(frame, depth, params))


# ---------------------------------------------------------------------------
# params protocol
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "est",
    [
        DepthEstimator(),
        ViewSynthesizer(),
        NativeMapper(map_path="/tmp/x.map"),
        FrameToNative(calibration=SMALL_CAL),
    ],
    ids=lambda e: type(e).__name__,
)
def test_get_set_params_round_trip(est):
    params = est.get_params()
    assert params
    rebuilt = type(est)(**params)
    assert rebuilt.get_params() == params
    # set_params returns self and applies
    key = sorted(params)[0]
    assert est.set_params(**{key: params[key]}) is est


def test_depth_estimator_params_exact():
    est = DepthEstimator(backend="synthetic:vramp", decimation=2, smooth_alpha=0.3)
    p = est.get_params()
    assert p["backend"] == "synthetic:vramp"
    assert p["decimation"] == 2
    assert p["smooth_alpha"] == 0.3
    assert "infer_size" in p and "provider" in p


def test_clone_drops_fitted_state(tiny_map_path):
    est = NativeMapper(map_path=tiny_map_path).fit()
    assert hasattr(est, "mapper_")
    fresh = clone(est)
    assert fresh.get_params() == est.get_params()
    assert not hasattr(fresh, "mapper_")
    with pytest.raises(NotFittedError):
        fresh.transform(np.zeros((2, 2, 3), np.uint8))


@pytest.mark.parametrize(
    "est,arg",
    [
        (DepthEstimator(), np.zeros((4, 4, 3), np.uint8)),
        (ViewSynthesizer(), (np.zeros((4, 4, 3), np.uint8), np.zeros((4, 4), np.float32))),
        (NativeMapper(calibration=SMALL_CAL), np.zeros((12, 16, 3), np.uint8)),
        (FrameToNative(calibration=SMALL_CAL), np.zeros((4, 4, 3), np.uint8)),
    ],
    ids=lambda v: type(v).__name__ if hasattr(v, "get_params") else "",
)
def test_transform_before_fit_raises(est, arg):
    with pytest.raises(NotFittedError):
        est.transform(arg)


# ---------------------------------------------------------------------------
# DepthEstimator
# ---------------------------------------------------------------------------


def test_depth_estimator_matches_functional(rng):
    frame = rand_frame(rng, 24, 40)
    est = DepthEstimator(backend="synthetic:hramp").fit()
    dm = est.transform(frame)
    backend = make_backend("synthetic:hramp")
    assert np.array_equal(dm, normalize(backend.estimate(frame)))
    assert dm.shape == (24, 40)


def test_depth_estimator_decimation_restores_shape(rng):
    frame = rand_frame(rng, 24, 40)
    dm = DepthEstimator(backend="synthetic:hramp", decimation=4).fit().transform(frame)
    assert dm.shape == (24, 40)
    # still a left-to-right ramp after the round trip through low resolution
    assert dm[:, 0].mean() < 0.2 and dm[:, -1].mean() > 0.8


def test_depth_estimator_list_in_list_out(rng):
    frames = [rand_frame(rng, 8, 10) for _ in range(3)]
    out = DepthEstimator().fit().transform(frames)
    assert isinstance(out, list) and len(out) == 3
    single = DepthEstimator().fit().transform(frames[0])
    assert isinstance(single, np.ndarray)
    assert np.array_equal(out[0], single)


def test_depth_estimator_smoothing_across_call(light_model, rng):
    f1 = np.zeros((64, 64, 3), np.uint8)
    f2 = np.full((64, 64, 3), 200, np.uint8)
    backend = make_backend(light_model)
    d1 = normalize(backend.estimate(f1))
    d2 = normalize(backend.estimate(f2))
    expected = [d1, temporal_smooth(d1, d2, 0.4)]
    est = DepthEstimator(backend=light_model, smooth_alpha=0.4).fit()
    out = est.transform([f1, f2])
    assert np.array_equal(out[0], expected[0])
    assert np.array_equal(out[1], expected[1])


def test_depth_estimator_no_smoothing_by_default(light_model):
    f1 = np.zeros((64, 64, 3), np.uint8)
    f2 = np.full((64, 64, 3), 200, np.uint8)
    est = DepthEstimator(backend=light_model).fit()
    out = est.transform([f1, f2])
    backend = make_backend(light_model)
    assert np.array_equal(out[1], normalize(backend.estimate(f2)))


# ---------------------------------------------------------------------------
# ViewSynthesizer
# ---------------------------------------------------------------------------


def test_view_synthesizer_matches_functional(rng):
    frame = rand_frame(rng, 12, 16)
    depth = rng.random((12, 16), dtype=np.float32)
    est = ViewSynthesizer(n_views=6, gain=2.0, zero_parallax=0.4).fit()
    got = est.transform((frame, depth))
    want = inpaint_viewset(
        synth_views(frame, depth, ViewParams(n_views=6, gain=2.0, zero_parallax=0.4))
    )
    assert np.array_equal(got.views, want.views)
    assert np.array_equal(got.holes, want.holes)


def test_view_synthesizer_default_gain_scales_with_width(rng):
    frame = rand_frame(rng, 10, 50)
    depth = rng.random((10, 50), dtype=np.float32)
    got = ViewSynthesizer(n_views=4).fit().transform((frame, depth))
    want = inpaint_viewset(
        synth_views(frame, depth, ViewParams(n_views=4, gain=0.04 * 50))
    )
    assert np.array_equal(got.views, want.views)


def test_view_synthesizer_keep_holes(rng):
    frame = rand_frame(rng, 12, 16)
    depth = rng.random((12, 16), dtype=np.float32)
    got = ViewSynthesizer(n_views=6, gain=3.0, fill_holes=False).fit().transform(
        (frame, depth)
    )
    raw = synth_views(frame, depth, ViewParams(n_views=6, gain=3.0))
    assert np.array_equal(got.views, raw.views)
    assert got.holes.any()


def test_view_synthesizer_list_input(rng):
    pairs = [
        (rand_frame(rng, 8, 12), rng.random((8, 12), dtype=np.float32))
        for _ in range(2)
    ]
    out = ViewSynthesizer(n_views=3, gain=1.0).fit().transform(pairs)
    assert isinstance(out, list) and len(out) == 2
    assert out[0].n_views == 3


# ---------------------------------------------------------------------------
# NativeMapper
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("kwargs", [{}, {"calibration": SMALL_CAL, "map_path": "x"}])
def test_native_mapper_needs_exactly_one_source(kwargs):
    with pytest.raises(ValueError, match="exactly one"):
        NativeMapper(**kwargs).fit()


def test_native_mapper_from_map(tiny_map_path, rng):
    vs = tiny_viewset(rng)
    est = NativeMapper(map_path=tiny_map_path).fit()
    assert est.geometry_ == TINY_GEO
    got = est.transform(vs)
    eff = derive_effective(parse_calibration(json.dumps(SMALL_CAL)))
    want = views_to_native_direct(vs.views, eff, TINY_GEO)
    assert np.array_equal(got, want)


def test_native_mapper_calibration_routes_agree(tiny_map_path, rng):
    vs = tiny_viewset(rng)
    from_map = NativeMapper(map_path=tiny_map_path).fit().transform(vs)
    geo_kw = dict(rows=2, cols=3, tile_w=16, tile_h=12)
    for source in (
        SMALL_CAL,
        json.dumps(SMALL_CAL),
        parse_calibration(json.dumps(SMALL_CAL)),
    ):
        got = NativeMapper(calibration=source, **geo_kw).fit().transform(vs)
        assert np.array_equal(got, from_map)


def test_native_mapper_calibration_from_file(tmp_path, tiny_map_path, rng):
    path = tmp_path / "cal.json"
    path.write_text(json.dumps(SMALL_CAL))
    vs = tiny_viewset(rng)
    got = NativeMapper(
        calibration=str(path), rows=2, cols=3, tile_w=16, tile_h=12
    ).fit().transform(vs)
    want = NativeMapper(map_path=tiny_map_path).fit().transform(vs)
    assert np.array_equal(got, want)


def test_native_mapper_bad_calibration_type():
    with pytest.raises(TypeError):
        NativeMapper(calibration=42).fit()


def test_native_mapper_accepts_quilt_and_stack(tiny_map_path, rng):
    vs = tiny_viewset(rng)
    est = NativeMapper(map_path=tiny_map_path).fit()
    want = est.transform(vs)
    quilt = assemble_quilt(vs.views, TINY_GEO)
    assert np.array_equal(est.transform(quilt), want)
    assert np.array_equal(est.transform(vs.views), want)
    assert np.array_equal(extract_views(quilt, TINY_GEO), vs.views)


def test_native_mapper_list_input(tiny_map_path, rng):
    sets = [tiny_viewset(rng) for _ in range(2)]
    est = NativeMapper(map_path=tiny_map_path).fit()
    out = est.transform(sets)
    assert isinstance(out, list) and len(out) == 2
    assert np.array_equal(out[1], est.transform(sets[1]))


# ---------------------------------------------------------------------------
# FrameToNative
# ---------------------------------------------------------------------------


def test_frame_to_native_matches_functional_chain(tiny_map_path, rng):
    frame = rand_frame(rng, 37, 29)
    est = FrameToNative(map_path=tiny_map_path, algorithm="fast").fit()
    got = est.transform(frame)

    adapted = adapt_aspect(frame, TINY_GEO.tile_w, TINY_GEO.tile_h)
    dm = normalize(make_backend("synthetic:hramp").estimate(adapted))
    vs = inpaint_viewset(
        synth_views(
            adapted,
            dm,
            ViewParams(n_views=TINY_GEO.n_views, gain=0.04 * TINY_GEO.tile_w),
        )
    )
    eff = derive_effective(parse_calibration(json.dumps(SMALL_CAL)))
    want = views_to_native_direct(vs.views, eff, TINY_GEO)
    assert np.array_equal(got, want)
    assert got.shape == (32, 48, 3)


def test_frame_to_native_from_calibration(rng):
    frame = rand_frame(rng, 24, 24)
    est = FrameToNative(
        calibration=SMALL_CAL, rows=2, cols=3, tile_w=16, tile_h=12,
        depth_backend="synthetic:vramp", gain=1.5,
    ).fit()
    out = est.transform(frame)
    assert out.shape == (32, 48, 3)
    assert out.dtype == np.uint8


def test_frame_to_native_list(tiny_map_path, rng):
    frames = [rand_frame(rng, 12, 16) for _ in range(2)]
    est = FrameToNative(map_path=tiny_map_path).fit()
    out = est.transform(frames)
    assert isinstance(out, list) and len(out) == 2
    assert np.array_equal(out[0], est.transform(frames[0]))
