"""Depth backends: synthetic patterns, neural inference, normalization."""

import numpy as np
import pytest

from quiltstream.depth import (
    DEFAULT_INFER_SIZE,
    NeuralDepth,
    SyntheticDepth,
    make_backend,
    normalize,
    temporal_smooth,
)
from quiltstream.errors import DimensionMismatch, InvalidValue, ModelLoadFailure

from onnx_fixture import build_light_model, light_reference


@pytest.fixture(scope="module")
def light_model(tmp_path_factory):
    path = tmp_path_factory.mktemp("models") / "light.onnx"
    build_light_model(str(path))
    return str(path)


def frame_gradient(h, w, seed=0):
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:h, 0:w]
    base = ((x * 255) // max(1, w - 1)).astype(np.uint8)
    out = np.stack([base, np.flipud(base), (base // 2)], axis=-1)
    noise = rng.integers(0, 8, out.shape, dtype=np.uint8)
    return (out.astype(np.int32) + noise).clip(0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# synthetic patterns
# ---------------------------------------------------------------------------


def test_hramp_pattern():
    d = SyntheticDepth("hramp").estimate(np.zeros((4, 5, 3), np.uint8))
    assert d.shape == (4, 5)
    assert d.dtype == np.float32
    for row in d:
        assert np.allclose(row, np.arange(5) / 4.0)


def test_hramp_degenerate_width():
    d = SyntheticDepth("hramp").estimate(np.zeros((3, 1, 3), np.uint8))
    assert np.all(d == 0.5)


def test_vramp_pattern():
    d = SyntheticDepth("vramp").estimate(np.zeros((5, 4, 3), np.uint8))
    for col in d.T:
        assert np.allclose(col, np.arange(5) / 4.0)


def test_vramp_degenerate_height():
    d = SyntheticDepth("vramp").estimate(np.zeros((1, 3, 3), np.uint8))
    assert np.all(d == 0.5)


def test_constant_pattern():
    d = SyntheticDepth("constant:0.3").estimate(np.zeros((2, 2, 3), np.uint8))
    assert np.all(d == np.float32(0.3))
    d = SyntheticDepth("constant").estimate(np.zeros((2, 2, 3), np.uint8))
    assert np.all(d == 0.5)


def test_disk_pattern():
    d = SyntheticDepth("disk:0.5,0.5,0.25,1,0").estimate(np.zeros((9, 9, 3), np.uint8))
    assert d[4, 4] == 1.0
    assert d[0, 0] == 0.0
    assert d[8, 8] == 0.0


def test_disk_requires_five_args():
    with pytest.raises(InvalidValue):
        SyntheticDepth("disk:0.5,0.5,0.25")


def test_unknown_pattern_rejected():
    with pytest.raises(InvalidValue):
        SyntheticDepth("swirl")


def test_bad_pattern_args_rejected():
    with pytest.raises(InvalidValue):
        SyntheticDepth("constant:x")


def test_synthetic_ignores_content():
    rng = np.random.default_rng(3)
    a = rng.integers(0, 256, (6, 7, 3), np.uint8)
    b = rng.integers(0, 256, (6, 7, 3), np.uint8)
    backend = SyntheticDepth("hramp")
    assert np.array_equal(backend.estimate(a), backend.estimate(b))


# ---------------------------------------------------------------------------
# normalization and smoothing
# ---------------------------------------------------------------------------


def test_normalize_affine():
    raw = np.array([[2.0, 4.0, 6.0]], np.float32)
    out = normalize(raw)
    assert np.allclose(out, [[0.0, 0.5, 1.0]])
    assert out.dtype == np.float32


def test_normalize_constant_input():
    out = normalize(np.full((3, 3), 7.0, np.float32))
    assert np.all(out == 0.5)


def test_normalize_range():
    rng = np.random.default_rng(0)
    out = normalize(rng.normal(size=(8, 8)).astype(np.float32) * 100)
    assert out.min() == 0.0
    assert out.max() == 1.0


def test_temporal_smooth_frozen():
    prev = np.full((2, 2), 0.2, np.float32)
    cur = np.full((2, 2), 0.6, np.float32)
    out = temporal_smooth(prev, cur, 0.25)
    assert np.allclose(out, 0.5, atol=1e-7)


def test_temporal_smooth_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        temporal_smooth(np.zeros((2, 2), np.float32), np.zeros((2, 3), np.float32), 0.3)


# ---------------------------------------------------------------------------
# neural backend
# ---------------------------------------------------------------------------


def test_neural_matches_reference_at_native_size(light_model):
    frame = frame_gradient(64, 64)
    backend = NeuralDepth(light_model, infer_size=256)
    d = backend.estimate(frame)
    ref = light_reference(frame).astype(np.float32)
    assert d.shape == (64, 64)
    assert d.dtype == np.float32
    assert np.abs(d - ref).max() < 2e-4


def test_neural_resize_path(light_model):
    frame = frame_gradient(100, 80)
    d = NeuralDepth(light_model, infer_size=256).estimate(frame)
    ref = light_reference(frame).astype(np.float32)
    assert d.shape == (100, 80)
    assert np.isfinite(d).all()
    # inference runs at 96x64 so only low-frequency agreement is expected
    assert np.abs(d - ref).mean() < 0.01
    assert np.abs(d - ref).max() < 0.25


def test_neural_ordinal_disk(light_model):
    frame = np.zeros((64, 64, 3), np.uint8)
    frame[24:40, 24:40] = 255
    d = NeuralDepth(light_model, infer_size=64).estimate(frame)
    assert d[28:36, 28:36].mean() > d[0:8, 0:8].mean() + 0.5


def test_infer_dims_rule(light_model):
    backend = NeuralDepth(light_model)
    assert backend._infer_dims(480, 640) == (256, 256)
    assert backend._infer_dims(60, 80) == (32, 64)
    assert backend._infer_dims(20, 20) == (32, 32)
    assert backend._infer_dims(300, 100) == (256, 96)


def test_neural_deterministic(light_model):
    frame = frame_gradient(48, 32, seed=5)
    backend = NeuralDepth(light_model)
    assert np.array_equal(backend.estimate(frame), backend.estimate(frame))


def test_model_load_failure(tmp_path):
    bad = tmp_path / "junk.onnx"
    bad.write_bytes(b"this is not a model")
    with pytest.raises(ModelLoadFailure):
        NeuralDepth(str(bad))


def test_unknown_provider(light_model):
    with pytest.raises(InvalidValue):
        NeuralDepth(light_model, provider="quantum")


def test_accel_provider_falls_back(light_model):
    backend = NeuralDepth(light_model, provider="accel")
    d = backend.estimate(frame_gradient(32, 32))
    assert d.shape == (32, 32)


# ---------------------------------------------------------------------------
# factory
# ---------------------------------------------------------------------------


def test_make_backend_synthetic():
    backend = make_backend("synthetic:hramp")
    assert isinstance(backend, SyntheticDepth)


def test_make_backend_neural(light_model):
    backend = make_backend(light_model)
    assert isinstance(backend, NeuralDepth)


def test_default_infer_size():
    assert DEFAULT_INFER_SIZE == 256
