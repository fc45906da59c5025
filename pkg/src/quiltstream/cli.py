"""Command line tools: rt (file/camera conversion), live (screen capture),
lutgen (MAP generation), serve (control service).

Exit codes shared by rt and live: 0 clean run, 2 bad arguments or invalid
configuration, 3 map/model load failure, 4 source/sink failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys

from .calibration import derive_effective, parse_calibration
from .config import PipelineConfig, SourceSpec, parse_ini
from .errors import (
    MapLoadFailure,
    ModelLoadFailure,
    QuiltStreamError,
    SinkOpenFailure,
    SourceOpenFailure,
)
from .lut import QuiltGeometry, build_lut, load_map, save_map
from .pipeline import Engine

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_LOAD = 3
EXIT_IO = 4


def _parse_pair(text: str, sep: str, what: str) -> tuple[int, int]:
    parts = text.lower().split(sep)
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"{what} must look like AxB, got {text!r}")
    try:
        a, b = int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"{what} must be integers, got {text!r}") from exc
    return a, b


def _quilt_arg(text: str) -> tuple[int, int]:
    return _parse_pair(text, "x", "quilt mask (rows x cols)")


def _tile_arg(text: str) -> tuple[int, int]:
    return _parse_pair(text, "x", "tile size (w x h)")


def _processing_parser(prog: str, description: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog=prog, description=description)
    p.add_argument("--ini", metavar="FILE", help="INI config with [input]/[output] sections")
    p.add_argument("--map", metavar="FILE", help="precomputed MAP file")
    p.add_argument("--calibration", metavar="FILE", help="calibration JSON (builds the map at start)")
    p.add_argument("--quilt", type=_quilt_arg, metavar="RxC", help="quilt mask, e.g. 6x8")
    p.add_argument("--tile", type=_tile_arg, metavar="WxH", help="tile size, e.g. 420x560")
    p.add_argument("--model", metavar="DESC", help="depth backend (model path or synthetic:<pattern>)")
    p.add_argument("--provider", choices=("cpu", "accel", "accel_fp16"))
    p.add_argument("--decimation", type=int, metavar="N")
    p.add_argument("--algorithm", choices=("fast", "geometric"))
    p.add_argument("--fps", type=float, metavar="HZ")
    p.add_argument("--duration", type=float, metavar="SECONDS")
    return p


def _ini_has_quilt_keys(ini_text: str) -> bool:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(ini_text)
    except configparser.Error:
        return False
    if not parser.has_section("processing"):
        return False
    return any(
        parser.has_option("processing", key)
        for key in ("quilt_rows", "quilt_cols", "tile_w", "tile_h")
    )


def _build_config(args) -> tuple[PipelineConfig, bool]:
    """Merge INI and flag overrides; returns (config, quilt_explicit)."""
    ini_text = None
    if args.ini:
        with open(args.ini, "r", encoding="utf-8") as f:
            ini_text = f.read()
        cfg = parse_ini(ini_text)
    else:
        cfg = PipelineConfig(source=SourceSpec(kind="synthetic"))

    quilt_explicit = bool(
        args.quilt or args.tile or (ini_text and _ini_has_quilt_keys(ini_text))
    )
    if args.quilt or args.tile:
        g = cfg.geometry
        rows, cols = args.quilt if args.quilt else (g.rows, g.cols)
        tile_w, tile_h = args.tile if args.tile else (g.tile_w, g.tile_h)
        cfg.geometry = QuiltGeometry(rows=rows, cols=cols, tile_w=tile_w, tile_h=tile_h)
    if args.map:
        cfg.map_path = args.map
    if args.calibration:
        cfg.calibration_path = args.calibration
    if args.model:
        cfg.model = args.model
    if args.provider:
        cfg.provider = args.provider
    if args.decimation is not None:
        cfg.decimation = args.decimation
    if args.algorithm:
        cfg.algorithm = args.algorithm
    if args.fps is not None:
        cfg.target_fps = args.fps
    if args.duration is not None:
        cfg.duration_s = args.duration
    return cfg, quilt_explicit


def _adopt_map_geometry(cfg: PipelineConfig, quilt_explicit: bool) -> PipelineConfig:
    """A MAP file fixes its own quilt mask; adopt it unless the user chose one."""
    if cfg.map_path and not quilt_explicit:
        try:
            cfg.geometry = load_map(cfg.map_path).geometry
        except (OSError, QuiltStreamError):
            pass  # the engine will report the load failure properly
    return cfg


def _run_pipeline(cfg: PipelineConfig, out=sys.stdout, err=sys.stderr) -> int:
    engine = Engine()
    try:
        handle = engine.start(cfg)
    except (MapLoadFailure, ModelLoadFailure) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_LOAD
    except (SourceOpenFailure, SinkOpenFailure) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_IO
    except QuiltStreamError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE

    try:
        while not handle.join(timeout=0.2):
            pass
    except KeyboardInterrupt:
        pass
    stats = handle.stop()
    print(json.dumps(stats.as_dict()), file=out)
    if handle.error is not None:
        print(f"error: {handle.error}", file=err)
        if isinstance(handle.error, (MapLoadFailure, ModelLoadFailure)):
            return EXIT_LOAD
        return EXIT_IO
    return EXIT_OK


def cli_rt(argv=None, out=sys.stdout, err=sys.stderr) -> int:
    """Convert a 2D stream (file, pipe, synthetic, camera) to native frames."""
    p = _processing_parser(
        "quiltstream-rt",
        "Real-time 2D-to-native conversion driven by an INI config.",
    )
    try:
        args = p.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        cfg, quilt_explicit = _build_config(args)
    except OSError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE
    except QuiltStreamError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE
    if not cfg.map_path and not cfg.calibration_path:
        print("error: provide --map FILE or --calibration FILE", file=err)
        p.print_usage(err)
        return EXIT_USAGE
    cfg = _adopt_map_geometry(cfg, quilt_explicit)
    try:
        cfg.validate()
    except QuiltStreamError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE
    return _run_pipeline(cfg, out=out, err=err)


def cli_live(argv=None, out=sys.stdout, err=sys.stderr) -> int:
    """Convert a live screen region to native frames."""
    p = _processing_parser(
        "quiltstream-live",
        "Live screen-region capture to native stream; region comes from the INI.",
    )
    try:
        args = p.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if not args.ini:
        print("error: --ini FILE with a [input] screen region is required", file=err)
        return EXIT_USAGE
    try:
        cfg, quilt_explicit = _build_config(args)
    except OSError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE
    except QuiltStreamError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE
    if cfg.source.kind != "screen_region":
        print("error: [input] type must be screen for live capture", file=err)
        return EXIT_USAGE
    if cfg.source.region is not None:
        try:
            cfg.source.region.validate()
        except QuiltStreamError as exc:
            print(f"error: {exc}", file=err)
            return EXIT_USAGE
    if not cfg.map_path and not cfg.calibration_path:
        print("error: provide --map FILE or --calibration FILE", file=err)
        return EXIT_USAGE
    cfg = _adopt_map_geometry(cfg, quilt_explicit)
    try:
        cfg.validate()
    except QuiltStreamError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE
    return _run_pipeline(cfg, out=out, err=err)


def cli_lutgen(argv=None, out=sys.stdout, err=sys.stderr) -> int:
    """Build a MAP file from a calibration document."""
    p = argparse.ArgumentParser(
        prog="quiltstream-lutgen",
        description="Precompute the per-subpixel quilt-offset table (MAP file).",
    )
    p.add_argument("calibration", help="calibration JSON file")
    p.add_argument("--quilt", type=_quilt_arg, default=(6, 8), metavar="RxC")
    p.add_argument("--tile", type=_tile_arg, default=(420, 560), metavar="WxH")
    p.add_argument("-o", "--output", required=True, metavar="FILE")
    p.add_argument("--force", action="store_true", help="overwrite an existing output file")
    try:
        args = p.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK

    from pathlib import Path

    out_path = Path(args.output)
    if out_path.exists() and not args.force:
        print(f"error: {out_path} exists; pass --force to overwrite", file=err)
        return EXIT_USAGE
    try:
        with open(args.calibration, "r", encoding="utf-8") as f:
            calib = parse_calibration(f.read())
    except OSError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_LOAD
    except QuiltStreamError as exc:
        print(f"error: invalid calibration: {exc}", file=err)
        return EXIT_LOAD
    rows, cols = args.quilt
    tile_w, tile_h = args.tile
    try:
        geometry = QuiltGeometry(rows=rows, cols=cols, tile_w=tile_w, tile_h=tile_h)
    except ValueError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE
    try:
        lut_map = build_lut(derive_effective(calib), geometry)
        save_map(lut_map, out_path)
    except QuiltStreamError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_LOAD
    except OSError as exc:
        print(f"error: cannot write {out_path}: {exc}", file=err)
        return EXIT_IO
    print(
        json.dumps(
            {
                "path": str(out_path),
                "screen_w": lut_map.screen_w,
                "screen_h": lut_map.screen_h,
                "rows": geometry.rows,
                "cols": geometry.cols,
                "tile_w": geometry.tile_w,
                "tile_h": geometry.tile_h,
                "entries": int(lut_map.offsets.size),
            }
        ),
        file=out,
    )
    return EXIT_OK


def cli_serve(argv=None, err=sys.stderr) -> int:
    """Run the localhost control service (HTTP + WebSocket)."""
    p = argparse.ArgumentParser(
        prog="quiltstream-serve",
        description="Control service for the panel: config, lifecycle, preview, stats.",
    )
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--config", metavar="FILE", help="initial INI config")
    p.add_argument("--panel", metavar="DIR", help="serve this directory as the web panel")
    p.add_argument(
        "--virtual-screens",
        metavar="SPEC",
        help="expose synthetic screens, e.g. 1920x1080,1280x720 (headless mode)",
    )
    try:
        args = p.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK

    if args.virtual_screens:
        import os

        os.environ["QUILTSTREAM_VIRTUAL_SCREENS"] = args.virtual_screens

    initial = None
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as f:
                initial = parse_ini(f.read())
        except (OSError, QuiltStreamError) as exc:
            print(f"error: {exc}", file=err)
            return EXIT_USAGE

    import uvicorn

    from .service import create_app

    app = create_app(initial_config=initial, panel_dir=args.panel)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def main_rt() -> None:
    sys.exit(cli_rt())


def main_live() -> None:
    sys.exit(cli_live())


def main_lutgen() -> None:
    sys.exit(cli_lutgen())


def main_serve() -> None:
    sys.exit(cli_serve())
