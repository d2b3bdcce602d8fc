"""Run configuration: schema, defaults and value parsing.

Angles are accepted as plain radians (``0.3``) or as rational multiples of
pi written like ``3/16 pi``, ``-7pi/16``, ``pi/8`` or ``1/8*pi``.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import ConfigError

SCENARIOS = (
    "phase-diagram",
    "displacement-scan",
    "edge",
    "disorder-edge",
    "disorder-scan",
    "ingest",
    "oracle-check",
)
FORMATS = ("csv", "json", "svg")
OUTPUT_ENV = "NUQW_OUTPUT_DIR"


def parse_number(value) -> float:
    if isinstance(value, bool):
        raise ValueError("booleans are not numbers")
    if isinstance(value, (int, float)):
        return float(value)
    s = str(value).strip().replace(" ", "")
    try:
        return float(Fraction(s))
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not a number: {value!r}") from None


def parse_angle(value) -> float:
    """Radians from a number or an expression such as ``'3/16 pi'``."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    s = str(value).strip().lower().replace(" ", "").replace("*", "").replace("π", "pi")
    if "pi" not in s:
        return parse_number(s)
    before, _, after = s.partition("pi")
    if before in ("", "+"):
        coef = Fraction(1)
    elif before == "-":
        coef = Fraction(-1)
    else:
        try:
            coef = Fraction(before)
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"bad angle {value!r}") from None
    if after:
        if not after.startswith("/"):
            raise ValueError(f"bad angle {value!r}")
        try:
            coef /= Fraction(after[1:])
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"bad angle {value!r}") from None
    # exact rational times pi, rounded once
    return coef.numerator * math.pi / coef.denominator


def _listify(value):
    if isinstance(value, str):
        return [v for v in value.split(",") if v.strip()]
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


def _prob(value, allow_zero=False):
    p = parse_number(value)
    if not ((0.0 <= p if allow_zero else 0.0 < p) and p <= 1.0):
        raise ValueError(f"probability must lie in {'[0' if allow_zero else '(0'}, 1], got {p}")
    return p


def _int(value, minimum=None):
    if isinstance(value, bool):
        raise ValueError("expected an integer")
    try:
        f = float(value) if not isinstance(value, str) else float(Fraction(value.strip()))
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"expected an integer, got {value!r}") from None
    if f != int(f):
        raise ValueError(f"expected an integer, got {value!r}")
    i = int(f)
    if minimum is not None and i < minimum:
        raise ValueError(f"must be >= {minimum}, got {i}")
    return i


def _pair(parser):
    def parse(value):
        items = _listify(value)
        if len(items) != 2:
            raise ValueError(f"expected two values, got {len(items)}")
        return [parser(v) for v in items]

    return parse


def _frame(value):
    key = str(value).strip().lower().replace("-", "_")
    if key not in ("prime", "double_prime"):
        raise ValueError(f"frame must be 'prime' or 'double_prime', got {value!r}")
    return key


def _bool(value):
    if isinstance(value, bool):
        return value
    s = str(value).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {value!r}")


def _list(parser, nonempty=True):
    def parse(value):
        items = [parser(v) for v in _listify(value)]
        if nonempty and not items:
            raise ValueError("list must not be empty")
        return items

    return parse


def _resolution(value):
    items = _listify(value)
    if len(items) == 1:
        items = items * 2
    if len(items) != 2:
        raise ValueError("resolution takes one or two integers")
    return [_int(v, 2) for v in items]


def _optional_path(value):
    return None if value in (None, "") else str(value)


def _nonneg_angle(value):
    a = parse_angle(value)
    if a < 0:
        raise ValueError("must be non-negative")
    return a


# key -> (default, parser, help)
_COMMON = {
    "seed": (0, lambda v: _int(v, 0), "base seed for every random stream"),
    "workers": (1, lambda v: _int(v, 1), "parallel worker threads"),
}

SCHEMAS = {
    "phase-diagram": {
        "theta1_range": (["-pi", "pi"], _pair(parse_angle), "theta1 interval (inclusive)"),
        "theta2_range": (["-pi", "pi"], _pair(parse_angle), "theta2 interval (inclusive)"),
        "resolution": ([21, 21], _resolution, "grid points per axis"),
        "p": ("2/3", lambda v: _prob(v, allow_zero=True), "loss probability"),
        "grid": (256, lambda v: _int(v, 64), "k-grid size"),
    },
    "displacement-scan": {
        "theta2": ("1/4 pi", parse_angle, "fixed theta2"),
        "theta1": (None, _list(parse_angle), "theta1 values (default: 13-point sweep)"),
        "p": (["1", "2/3", "9/25"], _list(_prob), "loss probabilities"),
        "steps": (7, lambda v: _int(v, 1), "finite step count"),
        "frames": (["prime", "double_prime"], _list(_frame), "time frames"),
        "eps": (1e-8, lambda v: _prob(v), "long-run survival threshold"),
        "t_max": (500, lambda v: _int(v, 1), "long-run step cap"),
        "winding": (True, _bool, "also report k-space winding numbers"),
    },
    "edge": {
        "inner": (["1/8 pi", "3/16 pi"], _pair(parse_angle), "inner-region coin"),
        "outer": (["-7/16 pi", "-3/8 pi"], _pair(parse_angle), "outer-region coin"),
        "x0": (4, lambda v: _int(v, 0), "inner region is |x| <= x0"),
        "start": (4, _int, "initial site"),
        "p": ("2/3", _prob, "loss probability"),
        "steps": (5, lambda v: _int(v, 1), "step count"),
        "frame": ("prime", _frame, "time frame"),
        "half_width": (0, lambda v: _int(v, 0), "lattice half-width (0 = automatic)"),
    },
    "disorder-edge": {
        "inner": (["1/8 pi", "3/16 pi"], _pair(parse_angle), "inner-region mean coin"),
        "outer": (["-5/8 pi", "-9/16 pi"], _pair(parse_angle), "outer-region mean coin"),
        "x0": (4, lambda v: _int(v, 0), "inner region is |x| <= x0"),
        "start": (4, _int, "initial site"),
        "p": ("2/3", _prob, "loss probability"),
        "steps": (5, lambda v: _int(v, 1), "step count"),
        "frame": ("prime", _frame, "time frame"),
        "half_width": (0, lambda v: _int(v, 0), "lattice half-width (0 = automatic)"),
        "amplitude": ("1/20 pi", _nonneg_angle, "disorder half-width"),
        "ensemble": (10, lambda v: _int(v, 1), "realizations"),
    },
    "disorder-scan": {
        "theta2": ("1/4 pi", parse_angle, "mean theta2"),
        "theta1": (None, _list(parse_angle), "mean theta1 values (default: 13-point sweep)"),
        "p": ("2/3", _prob, "loss probability"),
        "steps": (5, lambda v: _int(v, 1), "step count"),
        "frame": ("prime", _frame, "time frame"),
        "amplitude": ("1/20 pi", _nonneg_angle, "disorder half-width"),
        "ensemble": (10, lambda v: _int(v, 1), "realizations per sweep point"),
    },
    "ingest": {
        "counts": (None, _optional_path, "CSV with columns kind,x,t,count"),
        "reference": (None, _optional_path, "optional CSV x,Q of a theoretical final distribution"),
    },
    "oracle-check": {
        "half_width": (8, lambda v: _int(v, 2), "lattice half-width for the dense oracle"),
        "steps": (3, lambda v: _int(v, 1), "steps per configuration"),
        "configurations": (10, lambda v: _int(v, 1), "random dense-oracle configurations"),
        "mc_configurations": (3, lambda v: _int(v, 0), "Monte Carlo configurations"),
        "trials": (100000, lambda v: _int(v, 1), "Monte Carlo trials per configuration"),
    },
}


@dataclass
class RunConfig:
    scenario: str
    params: dict
    seed: int = 0
    workers: int = 1
    out: str = "."
    formats: tuple = FORMATS
    raw: dict = field(default_factory=dict)

    def resolved(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "workers": self.workers,
            "formats": list(self.formats),
            **self.params,
        }


def default_output_dir() -> str:
    return os.environ.get(OUTPUT_ENV, "nuqw-output")


def parse_config(scenario: str | None = None, path=None, overrides: dict | None = None) -> RunConfig:
    """Merge defaults, an optional JSON file and explicit overrides into a validated config.

    Unknown keys raise :class:`ConfigError`; so do malformed values, with the
    offending key named.
    """
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    file_scenario = data.pop("scenario", None)
    if scenario is None:
        scenario = file_scenario
    elif file_scenario is not None and file_scenario != scenario:
        raise ConfigError(f"file is for {file_scenario!r}, not {scenario!r}", "scenario")
    if scenario not in SCHEMAS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {', '.join(SCENARIOS)}", "scenario")

    merged = dict(data)
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    schema = SCHEMAS[scenario]
    allowed = set(schema) | set(_COMMON) | {"out", "format"}
    unknown = sorted(set(merged) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} for scenario {scenario!r}", unknown[0])

    def parse(key, spec):
        default, parser, _ = spec
        value = merged.get(key, default)
        if value is None:
            return None
        try:
            return parser(value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc), key) from None

    params = {key: parse(key, spec) for key, spec in schema.items()}
    common = {key: parse(key, spec) for key, spec in _COMMON.items()}
    if scenario == "ingest" and not params["counts"]:
        raise ConfigError("a count table is required", "counts")

    formats = merged.get("format", list(FORMATS))
    formats = tuple(f.strip().lower() for f in _listify(formats))
    bad = [f for f in formats if f not in FORMATS]
    if bad or not formats:
        raise ConfigError(f"formats must be drawn from {FORMATS}, got {list(formats)}", "format")
    out = merged.get("out") or default_output_dir()
    return RunConfig(scenario, params, common["seed"], common["workers"], str(out), formats, merged)
