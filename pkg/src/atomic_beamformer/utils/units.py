"""
Unit-tagged configuration values.

Dimensioned configuration entries are strings such as "20 cm" or "6.9458 GHz".
They are parsed with astropy and reduced to SI floats; the inverse formatting
writes SI strings that parse back to the identical float.
"""

import math
from typing import Any, Dict

import astropy.units as u

from ..core.errors import ConfigError

# kind -> (SI target unit, canonical string written by format_quantity)
_KINDS: Dict[str, tuple] = {
    "length": (u.m, "m"),
    "frequency": (u.Hz, "Hz"),
    "angular_frequency": (u.rad / u.s, "rad / s"),
    "time": (u.s, "s"),
    "temperature": (u.K, "K"),
    "power": (u.W, "W"),
    "field": (u.V / u.m, "V / m"),
    "dipole": (u.C * u.m, "C m"),
    "mass": (u.kg, "kg"),
    "density": (u.m**-3, "m-3"),
    "angle": (u.rad, "rad"),
    "attenuation": (1 / u.m, "1 / m"),
    "chi_slope": (u.s / (u.m * u.rad), "s / (m rad)"),
}

_PER_CYCLE_SLOPE = 1 / (u.m * u.Hz)


def parse_quantity(raw: Any, field: str, kind: str) -> float:
    """Convert a unit-tagged value to an SI float.

    Angular quantities given per cycle (Hz) are multiplied by 2 pi; a
    susceptibility slope given per Hz is divided by 2 pi.

    Raises:
        ConfigError: naming `field` when the unit is missing or of the wrong dimension.
    """
    if kind not in _KINDS:
        raise ValueError(f"unknown quantity kind {kind!r}")
    label = kind.replace("_", " ")
    if isinstance(raw, bool) or isinstance(raw, (int, float)):
        raise ConfigError(field, f"missing unit on {raw!r}; expected a {label}")
    if not isinstance(raw, str):
        raise ConfigError(
            field, f"expected a unit-tagged string, got {type(raw).__name__}"
        )
    try:
        quantity = u.Quantity(raw)
    except (ValueError, TypeError) as e:
        raise ConfigError(field, f"cannot parse {raw!r} as a quantity ({e})") from None
    if quantity.unit == u.dimensionless_unscaled:
        raise ConfigError(field, f"missing unit on {raw!r}; expected a {label}")

    target, _ = _KINDS[kind]
    unit = quantity.unit
    converted = not unit.is_equivalent(target)
    if kind == "angular_frequency" and converted and unit.is_equivalent(u.Hz):
        return 2.0 * math.pi * float(quantity.to_value(u.Hz))
    if kind == "frequency" and converted and unit.is_equivalent(u.rad / u.s):
        return float(quantity.to_value(u.rad / u.s)) / (2.0 * math.pi)
    if kind == "chi_slope" and converted and unit.is_equivalent(_PER_CYCLE_SLOPE):
        return float(quantity.to_value(_PER_CYCLE_SLOPE)) / (2.0 * math.pi)
    if not unit.is_equivalent(target):
        raise ConfigError(field, f"unit '{unit}' of {raw!r} is not a {label}")
    return float(quantity.to_value(target))


def format_quantity(value: float, kind: str) -> str:
    """SI string for `value` that parse_quantity maps back to the same float."""
    return f"{float(value)!r} {_KINDS[kind][1]}"


def parse_count(raw: Any, field: str, minimum: int = 0) -> int:
    """Plain integer field (segment counts, node counts, seeds)."""
    if isinstance(raw, bool) or not isinstance(raw, (int, float)) or int(raw) != raw:
        raise ConfigError(field, f"expected an integer, got {raw!r}")
    if raw < minimum:
        raise ConfigError(field, f"must be >= {minimum}, got {raw}")
    return int(raw)


def parse_number(raw: Any, field: str) -> float:
    """Plain dimensionless number."""
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(field, f"expected a plain number, got {raw!r}")
    return float(raw)
