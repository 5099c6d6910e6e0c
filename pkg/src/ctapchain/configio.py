"""INI-style configuration files and metadata sidecars.

A configuration file has a mandatory ``[chain]`` section and optional
command sections::

    [chain]
    n_dqd = 3
    t_max = 25pi          ; a trailing "pi" (or "*pi") multiplies by pi
    gamma = 0
    ; omega_max = 1, omega_s_ratio = 10, sigma_ratio = 0.125, margin_ratio = 0.1
    ; t_max_pi = 25       ; alternative to t_max, in units of pi/omega_max

    [integrator]
    method = rk4          ; or adaptive
    steps_per_tmax = 50000

    [output]
    samples = 2000        ; trajectory / spectrum sample count

    [axis:t_max]          ; one section per sweep axis, in order
    start = 10pi
    stop = 40pi
    count = 7
    spacing = linear

    [sweep]
    observable = transfer_probability

    [optimize]
    start = 5pi
    stop = 60pi
    resolution = 2.5pi

    [miscalibrate]
    target = omega_i      ; omega_i | omega_interior | omega_f
    kind = amplitude      ; amplitude | peak_time
    fraction = 0.1
    start = 10pi
    stop = 50pi
    count = 9

    [swap]
    n_values = 3, 5, 7, 9
    omega_max = 100
    delta_e_st = 500
    t_swap_units = 11.254
    ctap_threshold = 0.99
    search_range_pi = 1, 100
    resolution_pi = 2.5
    tolerance_pi = 0.01

Times (``t_max`` and the ``start``/``stop``/``resolution`` ranges) are
absolute; with ``omega_max = 1`` the value ``25pi`` is 25 pi/omega_max.
The ``[optimize]`` range defaults to 5pi..60pi at 2.5pi and the
``[miscalibrate]`` range to 10pi..50pi, both in units of pi/omega_max.
Unknown sections or keys are rejected.
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field

from .analysis import MiscalibrationSpec, SwapComparisonSpec, SweepAxis
from .chain import ChainConfig
from .dynamics import IntegratorSettings
from .errors import ConfigParseError, ConfigurationError

_PI = re.compile(r"^\s*(?P<num>[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?)?\s*\*?\s*pi\s*$", re.I)

CHAIN_KEYS = {"n_dqd", "t_max", "t_max_pi", "omega_max", "omega_s_ratio", "sigma_ratio",
              "gamma", "margin_ratio"}
SECTION_KEYS = {
    "chain": CHAIN_KEYS,
    "integrator": {"method", "steps_per_tmax", "rtol", "atol"},
    "output": {"samples"},
    "sweep": {"observable"},
    "optimize": {"start", "stop", "resolution"},
    "miscalibrate": {"target", "kind", "fraction", "start", "stop", "count"},
    "swap": {"n_values", "omega_max", "delta_e_st", "t_swap_units", "ctap_threshold",
             "search_range_pi", "resolution_pi", "tolerance_pi"},
}
AXIS_KEYS = {"start", "stop", "count", "spacing"}


def parse_quantity(text):
    """Float from text; ``"25pi"``, ``"25*pi"`` and ``"pi"`` are multiples of pi."""
    text = str(text).strip()
    m = _PI.match(text)
    if m:
        num = m.group("num")
        return (float(num) if num else 1.0) * math.pi
    return float(text)


@dataclass
class ParsedConfig:
    chain: ChainConfig
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)
    samples: int = 2000
    axes: list = field(default_factory=list)
    observable: str = "transfer_probability"
    optimize: dict | None = None
    miscalibration: dict | None = None
    swap: SwapComparisonSpec | None = None


class _Reader:
    def __init__(self, text, source):
        self.lines = text.splitlines()
        self.source = source

    def where(self, section, key=None):
        """``source:line`` of a section header or of a key inside it."""
        in_section = False
        for no, line in enumerate(self.lines, 1):
            s = line.strip()
            if s.startswith("["):
                in_section = s == f"[{section}]"
                if in_section and key is None:
                    return f"{self.source}:{no}"
                continue
            if in_section and key is not None and re.match(rf"{re.escape(key)}\s*[=:]", s):
                return f"{self.source}:{no}"
        return self.source

    def error(self, section, key, message):
        loc = self.where(section, key)
        target = f"[{section}]" + (f" {key}" if key else "")
        return ConfigParseError(f"{loc}: {target}: {message}")


def _get(reader, sec, section, key, conv):
    try:
        return conv(sec[key])
    except (ValueError, TypeError) as exc:
        raise reader.error(section, key, f"cannot parse {sec[key]!r} ({exc})") from None


def _int(text):
    v = float(text)
    if not v.is_integer():
        raise ValueError("not an integer")
    return int(v)


def _pair(text):
    parts = [p for p in str(text).split(",") if p.strip()]
    if len(parts) != 2:
        raise ValueError("expected two comma-separated numbers")
    return tuple(parse_quantity(p) for p in parts)


def parse_config_text(text, source="<config>"):
    reader = _Reader(text, source)
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigParseError(str(exc)) from None

    for section in cp.sections():
        keys = AXIS_KEYS if section.startswith("axis:") else SECTION_KEYS.get(section)
        if keys is None:
            raise reader.error(section, None, "unknown section")
        for key in cp[section]:
            if key not in keys:
                raise reader.error(section, key, f"unknown key {key!r}")
    if "chain" not in cp:
        raise ConfigParseError(f"{source}: missing [chain] section")

    sec = cp["chain"]
    if "t_max" in sec and "t_max_pi" in sec:
        raise reader.error("chain", "t_max_pi", "give either t_max or t_max_pi, not both")
    for required in ("n_dqd",):
        if required not in sec:
            raise reader.error("chain", None, f"missing key {required!r}")
    if "t_max" not in sec and "t_max_pi" not in sec:
        raise reader.error("chain", None, "missing key 't_max'")
    kwargs = {"n_dqd": _get(reader, sec, "chain", "n_dqd", _int)}
    for key in ("omega_max", "omega_s_ratio", "sigma_ratio", "gamma", "margin_ratio"):
        if key in sec:
            kwargs[key] = _get(reader, sec, "chain", key, parse_quantity)
    if "t_max" in sec:
        kwargs["t_max"] = _get(reader, sec, "chain", "t_max", parse_quantity)
    else:
        kwargs["t_max"] = (_get(reader, sec, "chain", "t_max_pi", parse_quantity) * math.pi
                           / kwargs.get("omega_max", 1.0))
    try:
        chain = ChainConfig(**kwargs)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{reader.where('chain')}: [chain]: {exc}") from None
    out = ParsedConfig(chain)

    if "integrator" in cp:
        sec = cp["integrator"]
        kw = {}
        if "method" in sec:
            kw["method"] = sec["method"].strip()
        if "steps_per_tmax" in sec:
            kw["steps_per_tmax"] = _get(reader, sec, "integrator", "steps_per_tmax", _int)
        for key in ("rtol", "atol"):
            if key in sec:
                kw[key] = _get(reader, sec, "integrator", key, float)
        try:
            out.integrator = IntegratorSettings(**kw)
        except ValueError as exc:
            raise ConfigurationError(f"{reader.where('integrator')}: [integrator]: {exc}") from None

    if "output" in cp and "samples" in cp["output"]:
        out.samples = _get(reader, cp["output"], "output", "samples", _int)

    for section in cp.sections():
        if not section.startswith("axis:"):
            continue
        sec = cp[section]
        try:
            out.axes.append(SweepAxis(
                name=section[len("axis:"):],
                start=_get(reader, sec, section, "start", parse_quantity),
                stop=_get(reader, sec, section, "stop", parse_quantity),
                count=_get(reader, sec, section, "count", _int),
                spacing=sec.get("spacing", "linear").strip()))
        except KeyError as exc:
            raise reader.error(section, None, f"missing key {exc}") from None
        except ConfigurationError as exc:
            raise ConfigurationError(f"{reader.where(section)}: [{section}]: {exc}") from None

    if "sweep" in cp and "observable" in cp["sweep"]:
        out.observable = cp["sweep"]["observable"].strip()

    if "optimize" in cp:
        sec = cp["optimize"]
        out.optimize = {k: _get(reader, sec, "optimize", k, parse_quantity) for k in sec}

    if "miscalibrate" in cp:
        sec = cp["miscalibrate"]
        try:
            spec = MiscalibrationSpec(sec["target"].strip(), sec["kind"].strip(),
                                      _get(reader, sec, "miscalibrate", "fraction", float))
        except KeyError as exc:
            raise reader.error("miscalibrate", None, f"missing key {exc}") from None
        out.miscalibration = {"spec": spec}
        for key in ("start", "stop"):
            if key in sec:
                out.miscalibration[key] = _get(reader, sec, "miscalibrate", key, parse_quantity)
        if "count" in sec:
            out.miscalibration["count"] = _get(reader, sec, "miscalibrate", "count", _int)

    if "swap" in cp:
        sec = cp["swap"]
        kw = {}
        if "n_values" in sec:
            kw["n_values"] = _get(reader, sec, "swap", "n_values",
                                  lambda s: tuple(_int(p) for p in s.split(",") if p.strip()))
        for key in ("omega_max", "delta_e_st", "t_swap_units", "ctap_threshold",
                    "resolution_pi", "tolerance_pi"):
            if key in sec:
                kw[key] = _get(reader, sec, "swap", key, parse_quantity)
        if "search_range_pi" in sec:
            kw["search_range_pi"] = _get(reader, sec, "swap", "search_range_pi", _pair)
        for required in ("n_values", "omega_max", "delta_e_st"):
            if required not in kw:
                raise reader.error("swap", None, f"missing key {required!r}")
        try:
            out.swap = SwapComparisonSpec(**kw)
        except ConfigurationError as exc:
            raise ConfigurationError(f"{reader.where('swap')}: [swap]: {exc}") from None
    return out


def parse_config(path):
    """Read and validate a configuration file."""
    with open(path) as fh:
        text = fh.read()
    return parse_config_text(text, str(path))


def chain_section(config):
    return {key: repr(value) for key, value in config.as_dict().items()}


def dump_config(config, integrator=None):
    """Text of a config file that parses back to ``config`` exactly."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["chain"] = chain_section(config)
    if integrator is not None:
        cp["integrator"] = {k: str(v) for k, v in integrator.as_dict().items()}
    return _to_text(cp)


def _to_text(cp):
    lines = []
    for section in cp.sections():
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {v}" for k, v in cp[section].items())
        lines.append("")
    return "\n".join(lines)


def write_metadata(path, sections):
    """Write an ordered ``{section: {key: value}}`` mapping as key-value text."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    for name, items in sections.items():
        cp[name] = {str(k): _meta_value(v) for k, v in items.items()}
    with open(path, "w") as fh:
        fh.write(_to_text(cp))


def _meta_value(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ", ".join(_meta_value(x) for x in v)
    return str(v)


def read_metadata(path):
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read(path)
    return {s: dict(cp[s]) for s in cp.sections()}
