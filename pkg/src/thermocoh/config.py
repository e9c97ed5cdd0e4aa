"""TOML configuration files with unit-suffixed values.

Model quantities are given in units of the mechanical frequency, either as
bare numbers or as strings such as ``"0.1 omega_m"``. Angles accept
``rad``, ``deg`` or ``pi`` (``"0.25 pi"``). Circuit files use SI units with
common prefixes (``"2 fF"``, ``"50 nm"``, ``"5 GHz"`` as ``h f``).

Every error is a :class:`~thermocoh.errors.ConfigError` naming the file,
the line (when it can be located) and the offending key.
"""

from __future__ import annotations

import math
import re
import sys
from pathlib import Path
from typing import Any

from scipy import constants

from .errors import ConfigError, ThermocohError

if sys.version_info >= (3, 11):  # pragma: no cover
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_VALUE_RE = re.compile(rf"^\s*({_NUM})\s*([A-Za-z_]*)\s*$")

FREQUENCY_KEYS = ("omega_m", "omega_q", "delta", "g0", "gamma_m", "gamma_q1", "g_m")
ANGLE_KEYS = ("theta", "phi")
PLAIN_KEYS = ("n_m", "n_q", "p_ee")
INTEGER_KEYS = ("cutoff",)
PARAM_KEYS = FREQUENCY_KEYS + ANGLE_KEYS + PLAIN_KEYS + INTEGER_KEYS

_ANGLE_UNITS = {"": 1.0, "rad": 1.0, "deg": math.pi / 180.0, "pi": math.pi}
_FREQ_UNITS = {"": 1.0, "omega_m": 1.0}

_SI_PREFIX = {"": 1.0, "G": 1e9, "M": 1e6, "k": 1e3, "m": 1e-3, "u": 1e-6,
              "n": 1e-9, "p": 1e-12, "f": 1e-15, "a": 1e-18}

CIRCUIT_UNITS = {
    "E_c": "energy", "E_J": "energy", "C_0": "F", "C_m0": "F",
    "x_0": "m", "x_zpf": "m", "V_dc": "V", "n_g": "",
}


class Located:
    """Raw TOML text kept alongside the parsed data for error locations."""

    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source
        self._lines = text.splitlines()

    def line_of(self, key: str, section: str | None = None) -> int | None:
        in_section = section is None
        pat = re.compile(rf"^\s*{re.escape(key)}\s*=")
        for i, line in enumerate(self._lines, 1):
            stripped = line.strip()
            if stripped.startswith("["):
                name = stripped.strip("[]").strip()
                in_section = section is None or name == section
                continue
            if in_section and pat.match(line):
                return i
        return None

    def error(self, message: str, key: str | None = None, section: str | None = None) -> ConfigError:
        where = self.source
        if key is not None:
            line = self.line_of(key, section)
            if line is not None:
                where += f":{line}"
            label = f"{section}.{key}" if section else key
            return ConfigError(f"{where}: key '{label}': {message}")
        return ConfigError(f"{where}: {message}")


def load(path: str | Path) -> tuple[dict, Located]:
    """Parse a TOML file, mapping syntax errors to :class:`ConfigError`."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{p}: cannot read config: {exc.strerror or exc}") from exc
    return loads(text, str(p))


def loads(text: str, source: str = "<string>") -> tuple[dict, Located]:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return data, Located(text, source)


def _split(value: Any, loc: Located, key: str, section: str | None) -> tuple[float, str]:
    if isinstance(value, bool):
        raise loc.error("expected a number, got a boolean", key, section)
    if isinstance(value, (int, float)):
        return float(value), ""
    if isinstance(value, str):
        m = _VALUE_RE.match(value)
        if m:
            return float(m.group(1)), m.group(2)
    raise loc.error(f"cannot parse {value!r} as '<number> [unit]'", key, section)


def _finite(x: float, loc: Located, key: str, section: str | None) -> float:
    if not math.isfinite(x):
        raise loc.error("value must be finite", key, section)
    return x


def parse_param(key: str, value: Any, loc: Located, section: str | None = "params") -> float | int:
    """Convert one model parameter to ω_m-normalized units."""
    x, unit = _split(value, loc, key, section)
    x = _finite(x, loc, key, section)
    if key in FREQUENCY_KEYS:
        table = _FREQ_UNITS
    elif key in ANGLE_KEYS:
        table = _ANGLE_UNITS
    elif key in PLAIN_KEYS or key in INTEGER_KEYS:
        table = {"": 1.0}
    else:
        raise loc.error(f"unknown parameter (expected one of {', '.join(PARAM_KEYS)})", key, section)
    if unit not in table:
        allowed = ", ".join(repr(u) for u in table if u) or "none (dimensionless)"
        raise loc.error(f"unit {unit!r} not allowed; accepted units: {allowed}", key, section)
    x *= table[unit]
    if key in INTEGER_KEYS:
        if x != int(x):
            raise loc.error("must be an integer", key, section)
        return int(x)
    return x


def parse_params(table: dict, loc: Located, section: str = "params") -> dict[str, float]:
    if not isinstance(table, dict):
        raise loc.error(f"[{section}] must be a table")
    return {k: parse_param(k, v, loc, section) for k, v in table.items()}


def parse_axis_values(axis: str, values: Any, loc: Located, section: str = "scenario") -> tuple[float, ...]:
    if not isinstance(values, list) or not values:
        raise loc.error("must be a non-empty array", "values", section)
    key = {"delta": "delta", "theta": "theta"}.get(axis, axis)
    out = []
    for v in values:
        if key in PARAM_KEYS:
            out.append(float(parse_param(key, v, loc, section) if key not in INTEGER_KEYS else v))
        else:
            x, unit = _split(v, loc, "values", section)
            if unit not in ("", "K"):
                raise loc.error(f"unit {unit!r} not allowed for axis {axis!r}", "values", section)
            out.append(_finite(x, loc, "values", section))
    return tuple(out)


def parse_frequency_hz(value: Any, loc: Located, key: str, section: str | None) -> float:
    """Frequency with ``Hz``/``kHz``/``MHz``/``GHz`` suffix, returned in Hz."""
    x, unit = _split(value, loc, key, section)
    if not unit.endswith("Hz") or unit[:-2] not in _SI_PREFIX:
        raise loc.error(f"expected a frequency such as '5 GHz', got unit {unit!r}", key, section)
    return _finite(x * _SI_PREFIX[unit[:-2]], loc, key, section)


def _si(value: Any, kind: str, loc: Located, key: str, section: str) -> float:
    x, unit = _split(value, loc, key, section)
    x = _finite(x, loc, key, section)
    if kind == "":
        if unit:
            raise loc.error(f"dimensionless quantity cannot carry unit {unit!r}", key, section)
        return x
    if kind == "energy":
        if unit.endswith("eV") and unit[:-2] in _SI_PREFIX:
            return x * _SI_PREFIX[unit[:-2]] * constants.e
        if unit.endswith("Hz") and unit[:-2] in _SI_PREFIX:
            return x * _SI_PREFIX[unit[:-2]] * constants.h
        if unit.endswith("J") and unit[:-1] in _SI_PREFIX:
            return x * _SI_PREFIX[unit[:-1]]
        raise loc.error(f"expected an energy in J, eV or Hz (as h f), got unit {unit!r}", key, section)
    if unit.endswith(kind) and unit[: -len(kind)] in _SI_PREFIX:
        return x * _SI_PREFIX[unit[: -len(kind)]]
    if unit == "um" and kind == "m":
        return x * 1e-6
    raise loc.error(f"expected a value in {kind} (with optional SI prefix), got unit {unit!r}", key, section)


def parse_circuit(data: dict, loc: Located):
    """Build :class:`~thermocoh.circuit.CircuitParams` from a ``[circuit]`` table.

    Returns ``(params, omega_m)`` where ``omega_m`` is the optional mechanical
    angular frequency in rad/s (from ``mechanical_frequency`` in Hz).
    """
    from .circuit import CircuitParams

    table = data.get("circuit")
    if not isinstance(table, dict):
        raise loc.error("missing [circuit] table")
    unknown = set(table) - set(CIRCUIT_UNITS) - {"mechanical_frequency"}
    if unknown:
        key = sorted(unknown)[0]
        raise loc.error(f"unknown key (expected {', '.join(CIRCUIT_UNITS)}, mechanical_frequency)", key, "circuit")
    missing = [k for k in CIRCUIT_UNITS if k not in table]
    if missing:
        raise loc.error(f"missing required key(s): {', '.join(missing)}")
    kwargs = {k: _si(table[k], kind, loc, k, "circuit") for k, kind in CIRCUIT_UNITS.items()}
    omega_m = None
    if "mechanical_frequency" in table:
        omega_m = 2.0 * math.pi * parse_frequency_hz(table["mechanical_frequency"], loc, "mechanical_frequency", "circuit")
    try:
        return CircuitParams(**kwargs), omega_m
    except ThermocohError as exc:
        raise loc.error(str(exc)) from exc
