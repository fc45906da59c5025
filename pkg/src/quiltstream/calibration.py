"""Display calibration: parsing, validation, and derived mapping constants.

A lenticular display ships with a JSON calibration document describing its
lens geometry (pitch, slant, phase) and panel layout. This module parses
that document into :class:`Calibration` and derives the three constants
(``pitch_eff``, ``tilt_eff``, ``subp``) that the per-subpixel view formula
consumes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import MalformedDocument, MissingField, OutOfRange

# Accepted aliases per field, first entry is the canonical name used when
# serializing. The camelCase forms match documents exported by the vendor
# tooling for Holoplay-class devices.
_ALIASES = {
    "pitch": ("pitch",),
    "slope": ("slope",),
    "center": ("center",),
    "dpi": ("dpi", "DPI"),
    "screen_w": ("screen_w", "screenW"),
    "screen_h": ("screen_h", "screenH"),
    "view_cone": ("view_cone", "viewCone"),
    "inv_view": ("inv_view", "invView"),
    "flip_x": ("flip_x", "flipImageX"),
    "flip_y": ("flip_y", "flipImageY"),
    "flip_subpixels": ("flip_subpixels", "flipSubp"),
    "serial": ("serial",),
}

_REQUIRED = ("pitch", "slope", "center", "dpi", "screen_w", "screen_h")


@dataclass(frozen=True)
class Calibration:
    """Raw device calibration parameters."""

    pitch: float
    slope: float
    center: float
    dpi: float
    screen_w: int
    screen_h: int
    view_cone: float = 40.0
    inv_view: bool = False
    flip_x: bool = False
    flip_y: bool = False
    flip_subpixels: bool = False
    serial: str = ""


@dataclass(frozen=True)
class EffectiveCalibration:
    """Derived constants consumed by the per-subpixel view formula.

    ``subp`` is the normalized width of one subpixel, exactly
    ``1 / (3 * screen_w)``.
    """

    pitch_eff: float
    tilt_eff: float
    center: float
    subp: float
    screen_w: int
    screen_h: int
    inv_view: bool = False
    flip_x: bool = False
    flip_y: bool = False
    flip_subpixels: bool = False


@dataclass(frozen=True)
class Violation:
    """A single failed calibration invariant."""

    field: str
    value: object
    constraint: str


def _unwrap(value):
    # Vendor documents sometimes nest scalars as {"value": x}.
    if isinstance(value, dict) and "value" in value:
        return value["value"]
    return value


def parse_calibration(text: str) -> Calibration:
    """Parse a JSON calibration document.

    Unknown fields are ignored; flags default to false when absent.

    Raises:
        MalformedDocument: text is not a JSON object.
        MissingField: a required field is absent.
        OutOfRange: a field violates its range invariant.
    """
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, TypeError) as exc:
        raise MalformedDocument(f"calibration is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedDocument("calibration document must be a JSON object")

    raw: dict[str, object] = {}
    for name, aliases in _ALIASES.items():
        for alias in aliases:
            if alias in doc:
                raw[name] = _unwrap(doc[alias])
                break

    for name in _REQUIRED:
        if name not in raw:
            raise MissingField(name)

    def _num(name: str, cast) -> float:
        value = raw[name]
        try:
            return cast(value)
        except (TypeError, ValueError) as exc:
            raise MalformedDocument(f"field {name!r} is not numeric: {value!r}") from exc

    cal = Calibration(
        pitch=_num("pitch", float),
        slope=_num("slope", float),
        center=_num("center", float),
        dpi=_num("dpi", float),
        screen_w=_num("screen_w", int),
        screen_h=_num("screen_h", int),
        view_cone=_num("view_cone", float) if "view_cone" in raw else 40.0,
        inv_view=bool(raw.get("inv_view", False)),
        flip_x=bool(raw.get("flip_x", False)),
        flip_y=bool(raw.get("flip_y", False)),
        flip_subpixels=bool(raw.get("flip_subpixels", False)),
        serial=str(raw.get("serial", "")),
    )
    violations = validate(cal)
    if violations:
        v = violations[0]
        raise OutOfRange(v.field, v.value, v.constraint)
    return cal


def serialize_calibration(c: Calibration) -> str:
    """Serialize to the canonical JSON document form.

    ``parse_calibration(serialize_calibration(c)) == c`` for valid ``c``.
    """
    doc = {
        "pitch": c.pitch,
        "slope": c.slope,
        "center": c.center,
        "dpi": c.dpi,
        "screen_w": c.screen_w,
        "screen_h": c.screen_h,
        "view_cone": c.view_cone,
        "inv_view": c.inv_view,
        "flip_x": c.flip_x,
        "flip_y": c.flip_y,
        "flip_subpixels": c.flip_subpixels,
        "serial": c.serial,
    }
    return json.dumps(doc, indent=2)


def validate(c: Calibration) -> list[Violation]:
    """Check every calibration invariant; returns one Violation per failure."""
    out: list[Violation] = []
    if c.screen_w < 3:
        out.append(Violation("screen_w", c.screen_w, "screen_w >= 3"))
    if c.screen_h < 1:
        out.append(Violation("screen_h", c.screen_h, "screen_h >= 1"))
    if not c.dpi > 0:
        out.append(Violation("dpi", c.dpi, "dpi > 0"))
    if c.slope == 0:
        out.append(Violation("slope", c.slope, "slope != 0"))
    if not c.pitch > 0:
        out.append(Violation("pitch", c.pitch, "pitch > 0"))
    if not 0 < c.view_cone < 180:
        out.append(Violation("view_cone", c.view_cone, "0 < view_cone < 180"))
    return out


def derive_effective(c: Calibration) -> EffectiveCalibration:
    """Derive the per-subpixel mapping constants from a valid calibration.

    tilt_eff = screen_h / (screen_w * slope), negated when flip_y.
    pitch_eff = pitch * (screen_w / dpi) * cos(atan(1 / |slope|)).
    """
    tilt = c.screen_h / (c.screen_w * c.slope)
    if c.flip_y:
        tilt = -tilt
    pitch_eff = c.pitch * (c.screen_w / c.dpi) * math.cos(math.atan(1.0 / abs(c.slope)))
    return EffectiveCalibration(
        pitch_eff=pitch_eff,
        tilt_eff=tilt,
        center=c.center,
        subp=1.0 / (3 * c.screen_w),
        screen_w=c.screen_w,
        screen_h=c.screen_h,
        inv_view=c.inv_view,
        flip_x=c.flip_x,
        flip_y=c.flip_y,
        flip_subpixels=c.flip_subpixels,
    )
