"""Shared test environment and the acceptance report channel.

The environment variables must be set before the package (and through it,
numba) is imported anywhere, which is why they live at the top of this file
rather than in a fixture.
"""

import os

os.environ.setdefault("NUMBA_NUM_THREADS", "8")
os.environ.setdefault("QUILTSTREAM_VIRTUAL_SCREENS", "1920x1080,1280x720")

import json

import numpy as np
import pytest

ACCEPTANCE_LINES: list[str] = []


def record_criterion(name: str, ok: bool, detail: str = "") -> bool:
    status = "PASS" if ok else "FAIL"
    line = f"[{status}] {name}"
    if detail:
        line += f" -- {detail}"
    ACCEPTANCE_LINES.append(line)
    return ok


@pytest.fixture(scope="session")
def acceptance():
    """Recorder for one-line per-criterion results, printed at session end."""
    return record_criterion


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# ---------------------------------------------------------------------------
# shared fixtures
# ---------------------------------------------------------------------------

CAL_DOC = {
    "pitch": 50.0,
    "slope": -7.5,
    "center": 0.4,
    "dpi": 324.0,
    "screen_w": 1536,
    "screen_h": 2048,
}


@pytest.fixture
def cal_doc():
    """A realistic calibration document as a dict."""
    return dict(CAL_DOC)


@pytest.fixture
def toy_effective():
    """Tiny hand-checkable effective calibration: 4x2 screen, unit pitch."""
    from quiltstream.calibration import EffectiveCalibration

    return EffectiveCalibration(
        pitch_eff=1.0,
        tilt_eff=0.0,
        center=0.125,
        subp=1.0 / 12.0,
        screen_w=4,
        screen_h=2,
    )


@pytest.fixture(scope="session")
def tiny_map_path(tmp_path_factory):
    """A small but nontrivial MAP file shared across service/pipeline tests."""
    from quiltstream.calibration import parse_calibration, derive_effective
    from quiltstream.lut import QuiltGeometry, build_lut, save_map

    doc = dict(CAL_DOC, screen_w=48, screen_h=32)
    e = derive_effective(parse_calibration(json.dumps(doc)))
    g = QuiltGeometry(rows=2, cols=3, tile_w=16, tile_h=12)
    path = tmp_path_factory.mktemp("maps") / "tiny.map"
    save_map(build_lut(e, g), path)
    return str(path)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
