"""Run configuration: dataclasses, INI parsing, and the JSON mirror.

INI schema (sections and keys):

    [input]      type, path, camera_index, screen_index,
                 region_x, region_y, region_w, region_h
    [output]     type, path, display_index, port
    [processing] map, calibration, quilt_rows, quilt_cols, tile_w, tile_h,
                 decimation, algorithm, model, provider, fps, duration_s,
                 alpha, gain, zero_parallax

``calibration``, ``provider``, ``gain`` and ``zero_parallax`` are extensions
beyond the minimal key set; they fall back to documented defaults when
absent. Unknown keys are warned about and ignored.
"""

from __future__ import annotations

import configparser
import logging
from dataclasses import dataclass, field

from .depth import DEFAULT_ALPHA, PROVIDERS
from .errors import InvalidValue, MalformedDocument, MissingRequired
from .lut import QuiltGeometry
from .viewsynth import ALGORITHMS

log = logging.getLogger(__name__)

SOURCE_KINDS = ("image_sequence", "raw_pipe", "synthetic", "camera", "screen_region")
SINK_KINDS = ("image_sequence", "raw_pipe", "window", "tcp_stream", "null")

# short INI tokens for each kind (canonical token first)
_SOURCE_TOKENS = {
    "file": "image_sequence",
    "image_sequence": "image_sequence",
    "pipe": "raw_pipe",
    "raw_pipe": "raw_pipe",
    "synthetic": "synthetic",
    "camera": "camera",
    "screen": "screen_region",
    "screen_region": "screen_region",
}
_SINK_TOKENS = {
    "file": "image_sequence",
    "image_sequence": "image_sequence",
    "pipe": "raw_pipe",
    "raw_pipe": "raw_pipe",
    "window": "window",
    "tcp": "tcp_stream",
    "tcp_stream": "tcp_stream",
    "null": "null",
}
_SOURCE_NAMES = {v: k for k, v in reversed(_SOURCE_TOKENS.items())}
_SINK_NAMES = {v: k for k, v in reversed(_SINK_TOKENS.items())}

REGION_MIN = 16

DEFAULT_GEOMETRY = QuiltGeometry(rows=6, cols=8, tile_w=420, tile_h=560)
DEFAULT_FPS = 10.0
DEFAULT_MODEL = "synthetic:hramp"


@dataclass(frozen=True)
class RegionSpec:
    """A capture rectangle on one screen."""

    screen_index: int = 0
    x: int = 0
    y: int = 0
    w: int = REGION_MIN
    h: int = REGION_MIN

    def validate(self) -> None:
        if self.screen_index < 0:
            raise InvalidValue("input.screen_index", self.screen_index, ">= 0")
        if self.x < 0 or self.y < 0:
            raise InvalidValue("input.region", (self.x, self.y), "origin must be >= 0")
        if self.w < REGION_MIN or self.h < REGION_MIN:
            raise InvalidValue(
                "input.region", (self.w, self.h), f"dims must be >= {REGION_MIN}"
            )


@dataclass(frozen=True)
class SourceSpec:
    kind: str
    path: str = ""
    camera_index: int = 0
    region: RegionSpec | None = None


@dataclass(frozen=True)
class SinkSpec:
    kind: str = "null"
    path: str = ""
    display_index: int = 0
    port: int = 9966


@dataclass
class PipelineConfig:
    """Everything one run needs; the INI and the API config mirror this."""

    source: SourceSpec
    sink: SinkSpec = SinkSpec()
    map_path: str = ""
    calibration_path: str = ""
    geometry: QuiltGeometry = DEFAULT_GEOMETRY
    decimation: int = 1
    algorithm: str = "fast"
    model: str = DEFAULT_MODEL
    provider: str = "cpu"
    target_fps: float = DEFAULT_FPS
    duration_s: float | None = None
    alpha: float = DEFAULT_ALPHA
    gain: float | None = None
    zero_parallax: float = 0.5
    # test/bench aid: per-stage artificial delay in seconds; never serialized
    stage_delays: dict | None = field(default=None, compare=False)

    def validate(self) -> None:
        if self.source.kind not in SOURCE_KINDS:
            raise InvalidValue("input.type", self.source.kind, f"one of {SOURCE_KINDS}")
        if self.sink.kind not in SINK_KINDS:
            raise InvalidValue("output.type", self.sink.kind, f"one of {SINK_KINDS}")
        if self.source.region is not None:
            self.source.region.validate()
        if not 1 <= self.sink.port <= 65535:
            raise InvalidValue("output.port", self.sink.port, "1..65535")
        if self.decimation < 1:
            raise InvalidValue("processing.decimation", self.decimation, ">= 1")
        if self.algorithm not in ALGORITHMS:
            raise InvalidValue("processing.algorithm", self.algorithm, f"one of {ALGORITHMS}")
        if self.provider not in PROVIDERS:
            raise InvalidValue("processing.provider", self.provider, f"one of {PROVIDERS}")
        if not self.target_fps > 0:
            raise InvalidValue("processing.fps", self.target_fps, "> 0")
        if self.duration_s is not None and not self.duration_s > 0:
            raise InvalidValue("processing.duration_s", self.duration_s, "> 0")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidValue("processing.alpha", self.alpha, "in [0, 1]")
        if self.gain is not None and self.gain < 0:
            raise InvalidValue("processing.gain", self.gain, ">= 0")
        if not 0.0 <= self.zero_parallax <= 1.0:
            raise InvalidValue("processing.zero_parallax", self.zero_parallax, "in [0, 1]")


_KNOWN_KEYS = {
    "input": {
        "type", "path", "camera_index", "screen_index",
        "region_x", "region_y", "region_w", "region_h",
    },
    "output": {"type", "path", "display_index", "port"},
    "processing": {
        "map", "calibration", "quilt_rows", "quilt_cols", "tile_w", "tile_h",
        "decimation", "algorithm", "model", "provider", "fps", "duration_s",
        "alpha", "gain", "zero_parallax",
    },
}


def _to_int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise InvalidValue(f"{section}.{key}", raw, "not an integer") from exc


def _to_float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise InvalidValue(f"{section}.{key}", raw, "not a number") from exc


def parse_ini(text: str) -> PipelineConfig:
    """Parse an INI document into a validated PipelineConfig."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise MalformedDocument(f"bad INI: {exc}") from exc

    for section in parser.sections():
        known = _KNOWN_KEYS.get(section)
        if known is None:
            log.warning("unknown INI section [%s] ignored", section)
            continue
        for key in parser[section]:
            if key not in known:
                log.warning("unknown INI key %s.%s ignored", section, key)

    if not parser.has_option("input", "type"):
        raise MissingRequired("input.type")
    inp = parser["input"]
    token = inp.get("type", "").strip().lower()
    if token not in _SOURCE_TOKENS:
        raise InvalidValue("input.type", token, f"one of {sorted(set(_SOURCE_TOKENS))}")
    kind = _SOURCE_TOKENS[token]

    region = None
    if any(f"region_{a}" in inp for a in "xywh"):
        region = RegionSpec(
            screen_index=_to_int("input", "screen_index", inp.get("screen_index", "0")),
            x=_to_int("input", "region_x", inp.get("region_x", "0")),
            y=_to_int("input", "region_y", inp.get("region_y", "0")),
            w=_to_int("input", "region_w", inp.get("region_w", str(REGION_MIN))),
            h=_to_int("input", "region_h", inp.get("region_h", str(REGION_MIN))),
        )
    elif kind == "screen_region" and "screen_index" in inp:
        region = RegionSpec(
            screen_index=_to_int("input", "screen_index", inp.get("screen_index", "0"))
        )
    source = SourceSpec(
        kind=kind,
        path=inp.get("path", "").strip(),
        camera_index=_to_int("input", "camera_index", inp.get("camera_index", "0")),
        region=region,
    )

    sink = SinkSpec()
    if parser.has_section("output"):
        out = parser["output"]
        token = out.get("type", "null").strip().lower()
        if token not in _SINK_TOKENS:
            raise InvalidValue("output.type", token, f"one of {sorted(set(_SINK_TOKENS))}")
        sink = SinkSpec(
            kind=_SINK_TOKENS[token],
            path=out.get("path", "").strip(),
            display_index=_to_int("output", "display_index", out.get("display_index", "0")),
            port=_to_int("output", "port", out.get("port", "9966")),
        )

    proc = parser["processing"] if parser.has_section("processing") else {}

    def pval(key, default=None):
        raw = proc.get(key)
        return default if raw is None or raw == "" else raw

    try:
        geometry = QuiltGeometry(
            rows=_to_int("processing", "quilt_rows", pval("quilt_rows", "6")),
            cols=_to_int("processing", "quilt_cols", pval("quilt_cols", "8")),
            tile_w=_to_int("processing", "tile_w", pval("tile_w", "420")),
            tile_h=_to_int("processing", "tile_h", pval("tile_h", "560")),
        )
    except ValueError as exc:
        raise InvalidValue("processing.quilt", str(exc), "bad quilt geometry") from exc

    duration_raw = pval("duration_s")
    gain_raw = pval("gain")
    cfg = PipelineConfig(
        source=source,
        sink=sink,
        map_path=pval("map", ""),
        calibration_path=pval("calibration", ""),
        geometry=geometry,
        decimation=_to_int("processing", "decimation", pval("decimation", "1")),
        algorithm=str(pval("algorithm", "fast")).strip().lower(),
        model=str(pval("model", DEFAULT_MODEL)).strip(),
        provider=str(pval("provider", "cpu")).strip().lower(),
        target_fps=_to_float("processing", "fps", pval("fps", str(DEFAULT_FPS))),
        duration_s=None if duration_raw is None else _to_float("processing", "duration_s", duration_raw),
        alpha=_to_float("processing", "alpha", pval("alpha", str(DEFAULT_ALPHA))),
        gain=None if gain_raw is None else _to_float("processing", "gain", gain_raw),
        zero_parallax=_to_float("processing", "zero_parallax", pval("zero_parallax", "0.5")),
    )
    cfg.validate()
    return cfg


def serialize_ini(cfg: PipelineConfig) -> str:
    """Write a config back to INI text; parse_ini inverts this exactly."""
    lines = ["[input]", f"type = {_SOURCE_NAMES[cfg.source.kind]}"]
    if cfg.source.path:
        lines.append(f"path = {cfg.source.path}")
    if cfg.source.camera_index:
        lines.append(f"camera_index = {cfg.source.camera_index}")
    if cfg.source.region is not None:
        r = cfg.source.region
        lines.append(f"screen_index = {r.screen_index}")
        lines.append(f"region_x = {r.x}")
        lines.append(f"region_y = {r.y}")
        lines.append(f"region_w = {r.w}")
        lines.append(f"region_h = {r.h}")
    lines.append("")
    lines.append("[output]")
    lines.append(f"type = {_SINK_NAMES[cfg.sink.kind]}")
    if cfg.sink.path:
        lines.append(f"path = {cfg.sink.path}")
    if cfg.sink.display_index:
        lines.append(f"display_index = {cfg.sink.display_index}")
    lines.append(f"port = {cfg.sink.port}")
    lines.append("")
    lines.append("[processing]")
    if cfg.map_path:
        lines.append(f"map = {cfg.map_path}")
    if cfg.calibration_path:
        lines.append(f"calibration = {cfg.calibration_path}")
    g = cfg.geometry
    lines.append(f"quilt_rows = {g.rows}")
    lines.append(f"quilt_cols = {g.cols}")
    lines.append(f"tile_w = {g.tile_w}")
    lines.append(f"tile_h = {g.tile_h}")
    lines.append(f"decimation = {cfg.decimation}")
    lines.append(f"algorithm = {cfg.algorithm}")
    lines.append(f"model = {cfg.model}")
    lines.append(f"provider = {cfg.provider}")
    lines.append(f"fps = {cfg.target_fps!r}")
    if cfg.duration_s is not None:
        lines.append(f"duration_s = {cfg.duration_s!r}")
    lines.append(f"alpha = {cfg.alpha!r}")
    if cfg.gain is not None:
        lines.append(f"gain = {cfg.gain!r}")
    lines.append(f"zero_parallax = {cfg.zero_parallax!r}")
    return "\n".join(lines) + "\n"


def config_to_dict(cfg: PipelineConfig) -> dict:
    """JSON-friendly mirror of the INI sections, used by the HTTP API."""
    inp: dict = {"type": _SOURCE_NAMES[cfg.source.kind]}
    if cfg.source.path:
        inp["path"] = cfg.source.path
    inp["camera_index"] = cfg.source.camera_index
    if cfg.source.region is not None:
        r = cfg.source.region
        inp.update(
            screen_index=r.screen_index,
            region_x=r.x, region_y=r.y, region_w=r.w, region_h=r.h,
        )
    out: dict = {
        "type": _SINK_NAMES[cfg.sink.kind],
        "path": cfg.sink.path,
        "display_index": cfg.sink.display_index,
        "port": cfg.sink.port,
    }
    g = cfg.geometry
    proc: dict = {
        "map": cfg.map_path,
        "calibration": cfg.calibration_path,
        "quilt_rows": g.rows,
        "quilt_cols": g.cols,
        "tile_w": g.tile_w,
        "tile_h": g.tile_h,
        "decimation": cfg.decimation,
        "algorithm": cfg.algorithm,
        "model": cfg.model,
        "provider": cfg.provider,
        "fps": cfg.target_fps,
        "duration_s": cfg.duration_s,
        "alpha": cfg.alpha,
        "gain": cfg.gain,
        "zero_parallax": cfg.zero_parallax,
    }
    return {"input": inp, "output": out, "processing": proc}


def config_from_dict(doc: dict) -> PipelineConfig:
    """Inverse of config_to_dict; validates like parse_ini."""
    if not isinstance(doc, dict):
        raise MalformedDocument("config must be an object")
    inp = doc.get("input") or {}
    out = doc.get("output") or {}
    proc = doc.get("processing") or {}
    for name, section in (("input", inp), ("output", out), ("processing", proc)):
        if not isinstance(section, dict):
            raise MalformedDocument(f"config section {name!r} must be an object")
        for key in section:
            if key not in _KNOWN_KEYS[name]:
                log.warning("unknown config key %s.%s ignored", name, key)
    if "type" not in inp:
        raise MissingRequired("input.type")

    token = str(inp["type"]).strip().lower()
    if token not in _SOURCE_TOKENS:
        raise InvalidValue("input.type", token, f"one of {sorted(set(_SOURCE_TOKENS))}")

    def as_int(section, key, value):
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise InvalidValue(f"{section}.{key}", value, "not an integer")
        try:
            return int(value)
        except (TypeError, ValueError) as exc:
            raise InvalidValue(f"{section}.{key}", value, "not an integer") from exc

    def as_float(section, key, value):
        try:
            return float(value)
        except (TypeError, ValueError) as exc:
            raise InvalidValue(f"{section}.{key}", value, "not a number") from exc

    region = None
    if any(f"region_{a}" in inp for a in "xywh") or "screen_index" in inp:
        region = RegionSpec(
            screen_index=as_int("input", "screen_index", inp.get("screen_index", 0)),
            x=as_int("input", "region_x", inp.get("region_x", 0)),
            y=as_int("input", "region_y", inp.get("region_y", 0)),
            w=as_int("input", "region_w", inp.get("region_w", REGION_MIN)),
            h=as_int("input", "region_h", inp.get("region_h", REGION_MIN)),
        )
    source = SourceSpec(
        kind=_SOURCE_TOKENS[token],
        path=str(inp.get("path", "") or ""),
        camera_index=as_int("input", "camera_index", inp.get("camera_index", 0)),
        region=region,
    )

    sink_token = str(out.get("type", "null")).strip().lower()
    if sink_token not in _SINK_TOKENS:
        raise InvalidValue("output.type", sink_token, f"one of {sorted(set(_SINK_TOKENS))}")
    sink = SinkSpec(
        kind=_SINK_TOKENS[sink_token],
        path=str(out.get("path", "") or ""),
        display_index=as_int("output", "display_index", out.get("display_index", 0)),
        port=as_int("output", "port", out.get("port", 9966)),
    )

    try:
        geometry = QuiltGeometry(
            rows=as_int("processing", "quilt_rows", proc.get("quilt_rows", 6)),
            cols=as_int("processing", "quilt_cols", proc.get("quilt_cols", 8)),
            tile_w=as_int("processing", "tile_w", proc.get("tile_w", 420)),
            tile_h=as_int("processing", "tile_h", proc.get("tile_h", 560)),
        )
    except ValueError as exc:
        raise InvalidValue("processing.quilt", str(exc), "bad quilt geometry") from exc

    duration = proc.get("duration_s")
    gain = proc.get("gain")
    cfg = PipelineConfig(
        source=source,
        sink=sink,
        map_path=str(proc.get("map", "") or ""),
        calibration_path=str(proc.get("calibration", "") or ""),
        geometry=geometry,
        decimation=as_int("processing", "decimation", proc.get("decimation", 1)),
        algorithm=str(proc.get("algorithm", "fast")).strip().lower(),
        model=str(proc.get("model", DEFAULT_MODEL)).strip(),
        provider=str(proc.get("provider", "cpu")).strip().lower(),
        target_fps=as_float("processing", "fps", proc.get("fps", DEFAULT_FPS)),
        duration_s=None if duration in (None, "") else as_float("processing", "duration_s", duration),
        alpha=as_float("processing", "alpha", proc.get("alpha", DEFAULT_ALPHA)),
        gain=None if gain in (None, "") else as_float("processing", "gain", gain),
        zero_parallax=as_float("processing", "zero_parallax", proc.get("zero_parallax", 0.5)),
    )
    cfg.validate()
    return cfg


def merge_config(cfg: PipelineConfig, patch: dict) -> PipelineConfig:
    """Apply a partial {section: {key: value}} update; returns a new config."""
    base = config_to_dict(cfg)
    if not isinstance(patch, dict):
        raise MalformedDocument("patch must be an object")
    for section, updates in patch.items():
        if section not in base:
            raise InvalidValue(section, updates, "unknown section")
        if not isinstance(updates, dict):
            raise MalformedDocument(f"patch section {section!r} must be an object")
        base[section].update(updates)
    merged = config_from_dict(base)
    merged.stage_delays = cfg.stage_delays
    return merged


def patched_keys(patch: dict) -> set[str]:
    """Flat 'section.key' names touched by a PATCH body."""
    keys = set()
    if isinstance(patch, dict):
        for section, updates in patch.items():
            if isinstance(updates, dict):
                for key in updates:
                    keys.add(f"{section}.{key}")
    return keys


__all__ = [
    "RegionSpec",
    "SourceSpec",
    "SinkSpec",
    "PipelineConfig",
    "parse_ini",
    "serialize_ini",
    "config_to_dict",
    "config_from_dict",
    "merge_config",
    "patched_keys",
    "DEFAULT_GEOMETRY",
    "REGION_MIN",
]
