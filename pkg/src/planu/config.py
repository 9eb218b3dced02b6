"""Experiment configuration: parsing, schema validation, defaults.

Accepts a flat key-value text file (optionally organized with [section]
headers, which are cosmetic) or a JSON object. Validation is fail-closed:
unknown keys, duplicate keys, and out-of-range values are aggregated into
line-numbered diagnostics rather than silently ignored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import ConfigError
from .quantile import PsiOperator

ENVS = ("stock", "blocksworld", "overcooked")
VARIANTS = ("full", "no_dist", "no_ucc", "deterministic_baseline")
RECIPES = ("tomato_salad", "tomato_lettuce_salad", "full_salad")
PSI_OPERATORS = tuple(op.value for op in PsiOperator)


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def _is_num(x):
    return _is_int(x) or isinstance(x, float)


@dataclass(frozen=True)
class _Key:
    check: callable
    describe: str


def _int_range(lo, hi=None):
    def check(x):
        return _is_int(x) and x >= lo and (hi is None or x <= hi)

    return check


def _float_range(lo, hi=None, lo_open=False):
    def check(x):
        if not _is_num(x):
            return False
        if lo_open and not x > lo:
            return False
        if not lo_open and not x >= lo:
            return False
        return hi is None or x <= hi

    return check


def _choice(options):
    return lambda x: x in options


def _int_list(x):
    return isinstance(x, list) and len(x) > 0 and all(_is_int(v) for v in x)


def _rate_or_list(x):
    if _is_num(x):
        return 0.0 <= x <= 1.0
    return isinstance(x, list) and len(x) > 0 and all(_is_num(v) and 0.0 <= v <= 1.0 for v in x)


SCHEMA: dict[str, _Key] = {
    "env": _Key(_choice(ENVS), f"one of {ENVS}"),
    "seeds": _Key(_int_list, "nonempty list of integers"),
    "variants": _Key(
        lambda x: isinstance(x, list) and len(x) > 0 and all(v in VARIANTS for v in x),
        f"nonempty list drawn from {VARIANTS}",
    ),
    "iterations": _Key(_int_range(1), "integer >= 1"),
    "depth_limit": _Key(_int_range(1), "integer >= 1"),
    "n_q": _Key(_int_range(1), "integer >= 1"),
    "c1": _Key(_float_range(0.0), "real >= 0"),
    "gamma": _Key(_float_range(0.0, 1.0, lo_open=True), "real in (0, 1]"),
    "qr_step": _Key(_float_range(0.0, lo_open=True), "positive real"),
    "qr_step_decay": _Key(_float_range(0.0, 1.0, lo_open=True), "real in (0, 1]"),
    "kappa": _Key(_float_range(0.0, lo_open=True), "positive real"),
    "psi_operator": _Key(_choice(PSI_OPERATORS), f"one of {PSI_OPERATORS}"),
    "failure_rate": _Key(_rate_or_list, "rate in [0, 1] or a nonempty list of rates"),
    "n_steps": _Key(lambda x: _is_int(x) and x >= 2 and x % 2 == 0, "even integer >= 2"),
    "n_blocks": _Key(_int_range(3), "integer >= 3"),
    "instances": _Key(_int_range(1), "integer >= 1"),
    "instance_file": _Key(lambda x: isinstance(x, str) and x, "nonempty path"),
    "recipe": _Key(_choice(RECIPES), f"one of {RECIPES}"),
    "chop_failure_rate": _Key(_float_range(0.0, 1.0), "rate in [0, 1]"),
    "deterministicize_k": _Key(
        lambda x: _is_int(x) and x >= 1 and x % 2 == 1, "positive odd integer"
    ),
    "identity": _Key(_choice(("digest", "similar")), "one of ('digest', 'similar')"),
    "similarity_threshold": _Key(_float_range(0.0, 1.0), "real in [0, 1]"),
    "rnd_output_gain": _Key(
        lambda x: x is None or (_is_num(x) and x > 0.0),
        "positive real (null selects a per-task default)",
    ),
    "intrinsic_reward_weight": _Key(_float_range(0.0), "real >= 0"),
    "out_dir": _Key(lambda x: isinstance(x, str) and x, "nonempty path"),
    "parallelism": _Key(_int_range(0), "integer >= 0 (0 = auto)"),
    "offline": _Key(lambda x: isinstance(x, bool), "boolean"),
}

DEFAULTS: dict = {
    "env": "stock",
    "seeds": [0],
    "variants": ["full"],
    "iterations": 200,
    "depth_limit": 10,
    "n_q": 51,
    "c1": 0.25,
    "gamma": 0.95,
    "qr_step": 2.0,
    "qr_step_decay": 0.75,
    "kappa": 0.05,
    "psi_operator": "mean",
    "failure_rate": 0.2,
    "n_steps": 4,
    "n_blocks": 4,
    "instances": 1,
    "recipe": "tomato_salad",
    "chop_failure_rate": 0.2,
    "deterministicize_k": 5,
    "identity": "digest",
    "similarity_threshold": 0.95,
    "rnd_output_gain": None,
    "intrinsic_reward_weight": 0.01,
    "out_dir": "runs",
    "parallelism": 0,
    "offline": False,
}


def _parse_value(raw: str):
    raw = raw.strip()
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        pass
    if "," in raw:
        return [_parse_value(part) for part in raw.split(",")]
    return raw


def parse_text_config(text: str) -> tuple[dict, dict[str, int], list[str]]:
    """Parse the key-value format; returns (values, key line numbers, errors)."""
    values: dict = {}
    lines_of: dict[str, int] = {}
    errors: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or (line.startswith("[") and line.endswith("]")):
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, _, rest = line.partition(sep)
                break
        else:
            errors.append(f"line {lineno}: expected 'key = value', got {line!r}")
            continue
        key = key.strip()
        if key in values:
            errors.append(f"line {lineno}: duplicate key {key!r} (first at line {lines_of[key]})")
            continue
        values[key] = _parse_value(rest)
        lines_of[key] = lineno
    return values, lines_of, errors


def _json_pairs_hook(pairs):
    seen = {}
    for key, value in pairs:
        if key in seen:
            raise ConfigError([f"duplicate key {key!r} in JSON config"])
        seen[key] = value
    return seen


def parse_config_file(path: str) -> tuple[dict, dict[str, int], list[str]]:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if path.endswith(".json") or stripped.startswith("{"):
        try:
            values = json.loads(text, object_pairs_hook=_json_pairs_hook)
        except json.JSONDecodeError as exc:
            return {}, {}, [f"line {exc.lineno}: invalid JSON: {exc.msg}"]
        if not isinstance(values, dict):
            return {}, {}, ["line 1: JSON config must be an object"]
        return values, {}, []
    return parse_text_config(text)


def validate_config(path: str, overrides: dict | None = None) -> dict:
    """Load, validate, and normalize a config file.

    Overrides (CLI flags) take precedence over file values, which take
    precedence over defaults. Raises ConfigError with one diagnostic per
    problem; unknown keys are errors.
    """
    values, lines_of, errors = parse_config_file(path)
    diagnostics = list(errors)
    # a bare scalar is shorthand for a one-element list on the sweep axes
    for key in ("seeds", "variants"):
        if key in values and not isinstance(values[key], list):
            values[key] = [values[key]]

    def where(key):
        return f"line {lines_of[key]}: " if key in lines_of else ""

    for key, value in values.items():
        if key not in SCHEMA:
            diagnostics.append(f"{where(key)}unknown key {key!r}")
        elif not SCHEMA[key].check(value):
            diagnostics.append(
                f"{where(key)}key {key!r}: expected {SCHEMA[key].describe}, got {value!r}"
            )
    merged = {**DEFAULTS, **{k: v for k, v in values.items() if k in SCHEMA}}
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in SCHEMA:
            diagnostics.append(f"override: unknown key {key!r}")
        elif not SCHEMA[key].check(value):
            diagnostics.append(
                f"override: key {key!r}: expected {SCHEMA[key].describe}, got {value!r}"
            )
        else:
            merged[key] = value
    if diagnostics:
        raise ConfigError(diagnostics)
    if isinstance(merged["failure_rate"], list):
        merged["failure_rate"] = [float(v) for v in merged["failure_rate"]]
    return merged
