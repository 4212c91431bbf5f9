"""Unit handling at the I/O boundary.

Internally every frequency or rate is an angular frequency in rad/s. Text
inputs and CSV outputs express frequencies as plain Hz (cycles per second);
the factor 2*pi is applied only by :func:`hz_to_rad` and :func:`rad_to_hz`.
"""
from __future__ import annotations

import math
import re

TWO_PI = 2.0 * math.pi


class UnitError(ValueError):
    """A quantity string has a unit that does not fit the expected kind."""


# unit suffix -> (kind, multiplier to SI); frequencies convert to Hz, not rad/s
_UNITS: dict[str, tuple[str, float]] = {
    "Hz": ("frequency", 1.0),
    "kHz": ("frequency", 1e3),
    "MHz": ("frequency", 1e6),
    "GHz": ("frequency", 1e9),
    "THz": ("frequency", 1e12),
    "K": ("temperature", 1.0),
    "mK": ("temperature", 1e-3),
    "uK": ("temperature", 1e-6),
    "m": ("length", 1.0),
    "mm": ("length", 1e-3),
    "um": ("length", 1e-6),
    "nm": ("length", 1e-9),
    "s": ("time", 1.0),
    "ms": ("time", 1e-3),
    "us": ("time", 1e-6),
    "ns": ("time", 1e-9),
    "Pa": ("pressure", 1.0),
    "kPa": ("pressure", 1e3),
    "MPa": ("pressure", 1e6),
    "GPa": ("pressure", 1e9),
    "kg/m3": ("density", 1.0),
    "g/cm3": ("density", 1e3),
    "m/s": ("velocity", 1.0),
    "km/s": ("velocity", 1e3),
    "T": ("field", 1.0),
    "mT": ("field", 1e-3),
    "Hz/strain": ("strain_susceptibility", 1.0),
    "GHz/T": ("gyromagnetic", 1e9),
    "MHz/T": ("gyromagnetic", 1e6),
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z/0-9]*)\s*$")


def hz_to_rad(f_hz: float) -> float:
    return TWO_PI * f_hz


def rad_to_hz(omega: float) -> float:
    return omega / TWO_PI


def parse_quantity(text: str, kind: str | None) -> float:
    """Parse ``"10 MHz"``-style text into SI units.

    ``kind=None`` expects a bare dimensionless number. A bare number is also
    accepted for any kind and is read in SI units (Hz for frequencies).
    """
    match = _QUANTITY.match(text)
    if match is None:
        raise UnitError(f"cannot parse quantity {text!r}")
    value, unit = float(match.group(1)), match.group(2)
    if not unit:
        return value
    if unit not in _UNITS:
        raise UnitError(f"unknown unit {unit!r} in {text!r}")
    unit_kind, scale = _UNITS[unit]
    if kind is None or unit_kind != kind:
        expected = "a dimensionless number" if kind is None else f"a {kind}"
        raise UnitError(f"{text!r} has unit {unit!r} ({unit_kind}), expected {expected}")
    return value * scale


def read_flat(text: str) -> list[tuple[int, str, str]]:
    """Split flat ``section.key = value`` text into ``(line_no, key, value)``.

    Blank lines and ``#`` comments (full-line or trailing) are skipped.
    """
    entries = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {line_no}: expected 'section.key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ValueError(f"line {line_no}: empty key or value in {raw.strip()!r}")
        entries.append((line_no, key, value))
    return entries
