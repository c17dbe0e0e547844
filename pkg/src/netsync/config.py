"""Line-oriented scenario configuration.

Each non-blank line is ``section.key = value``; ``#`` starts a comment.
Values are Python-style literals (numbers, ``[...]`` lists, quoted or bare
strings, ``true``/``false``). Unknown keys are rejected.
"""

from __future__ import annotations

import ast
from pathlib import Path

from .errors import ConfigError

_REQUIRED = object()

# key -> default (None means "absent unless given")
SCHEMA = {
    "scenario.name": "custom",
    "scenario.seed": 0,
    "network.kind": "global",
    "network.size": _REQUIRED,
    "network.weight": 1.0,
    "network.edges": None,
    "system.kind": "lorenz",
    "system.params": [10.0, 28.0, 8.0 / 3.0],
    "coupling.H": None,
    "mismatch.fraction": 0.05,
    "mismatch.envelope": None,
    "mismatch.seed": None,
    "initial.kind": "box",
    "initial.states": None,
    "initial.seed": None,
    "integrate.h": 1e-3,
    "integrate.t_end": 50.0,
    "integrate.observe_every": 10,
    "control.enabled": False,
    "control.c": 1.0,
    "control.k": 10.0,
    "control.s0": None,
    "control.gamma_hat0": 0.0,
    "certificate.preset": "derived",
    "certificate.box": [20.0, 25.0, 50.0],
    "certificate.alpha": None,
    "certificate.beta": None,
    "certificate.F": None,
    "certificate.Gamma": None,
    "certificate.samples": 100_000,
    "certificate.seed": None,
    "certificate.epsilon": 0.0,
    "output.csv": "metrics.csv",
    "output.estimates": None,
    "output.estimate_nodes": [0],
}

_BARE = {"true": True, "false": False, "none": None}


def parse_value(text: str):
    text = text.strip()
    if text.lower() in _BARE:
        return _BARE[text.lower()]
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def parse_config(text: str, source: str = "<config>") -> dict:
    """Parse config text into a ``{key: value}`` dict of explicitly set keys."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}", f"expected 'section.key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(key, "unknown configuration key")
        if key in out:
            raise ConfigError(key, "key given twice")
        out[key] = parse_value(value)
    return out


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc}") from exc
    return parse_config(text, str(path))


def resolve(overrides: dict) -> dict:
    """Fill defaults; reject unknown or missing required keys."""
    for key in overrides:
        if key not in SCHEMA:
            raise ConfigError(key, "unknown configuration key")
    cfg = {key: overrides.get(key, default) for key, default in SCHEMA.items()}
    for key, value in cfg.items():
        if value is _REQUIRED:
            if key == "network.size" and cfg.get("network.kind") == "custom" and cfg.get("network.edges"):
                continue
            raise ConfigError(key, "required key missing")
    return cfg


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    return repr(value)


def dump_config(cfg: dict) -> str:
    return "".join(f"{key} = {format_value(value)}\n" for key, value in cfg.items() if value is not None)


_FIGURE_BASE = {
    "network.kind": "global",
    "network.size": 100,
    "system.kind": "lorenz",
    "mismatch.fraction": 0.05,
    "integrate.h": 1e-3,
    "integrate.t_end": 50.0,
    "integrate.observe_every": 10,
    "certificate.preset": "paper-figures",
    "certificate.box": [20.0, 25.0, 50.0],
    "certificate.alpha": 0.957,
    "certificate.beta": 3.091,
    "scenario.seed": 1,
}

PRESETS = {
    "fig1": {**_FIGURE_BASE, "scenario.name": "fig1", "output.csv": "fig1.csv"},
    "fig2": {
        **_FIGURE_BASE,
        "scenario.name": "fig2",
        "control.enabled": True,
        "control.c": 1.0,
        "control.k": 10.0,
        "output.csv": "fig2.csv",
    },
    "fig3": {
        **_FIGURE_BASE,
        "scenario.name": "fig3",
        "control.enabled": True,
        "control.c": 1.0,
        "control.k": 10.0,
        "output.csv": "fig3.csv",
        "output.estimates": "fig3_estimates.csv",
        "output.estimate_nodes": [0, 1, 2],
    },
}


def preset(name: str) -> dict:
    try:
        return dict(PRESETS[name])
    except KeyError:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
