"""Scenario configuration: flat ``section.key = value`` text files.

Example::

    # blow-up run
    grid.n_points = 4096
    grid.r_max = 30
    initial_data.preset = scaled_Q
    initial_data.a = 1.1
    evolution.t_max = 2

Blank lines and ``#`` comments are ignored.  Every key is checked against
the schema below and every value against the preconditions of the module
that will consume it, so a bad file fails before any computation starts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from .evolution import EvolutionConfig
from .grid import MIN_POINTS
from .virial import VirialConfig, build_cutoff


class ConfigError(ValueError):
    """Invalid or unknown configuration entry; ``key`` names the culprit."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


PRESETS = {
    "scaled_Q": {"a": 1.0},
    "gaussian": {"amplitude": 1.0, "width": 1.0},
    "phase_gaussian": {"amplitude": 1.0, "width": 1.0, "chirp": 0.0},
}


@dataclass(frozen=True)
class GridSection:
    n_points: int = 4096
    r_max: float = 30.0


@dataclass(frozen=True)
class GroundStateSection:
    tol: float = 1e-8
    max_iters: int = 500
    cache_dir: str = ".hartree5d_cache"


@dataclass(frozen=True)
class InitialData:
    preset: str = "scaled_Q"
    params: dict = field(default_factory=lambda: dict(PRESETS["scaled_Q"]))


@dataclass(frozen=True)
class CutoffSection:
    s_out: float = 2.5
    d: float = 0.2
    e: float = 0.05


@dataclass(frozen=True)
class Outputs:
    directory: str = "out"
    formats: tuple = ("csv", "json")
    checkpoint_every: int = 0


@dataclass(frozen=True)
class ScenarioConfig:
    grid: GridSection = GridSection()
    ground_state: GroundStateSection = GroundStateSection()
    initial_data: InitialData = InitialData()
    evolution: EvolutionConfig = EvolutionConfig()
    virial: VirialConfig = VirialConfig()
    cutoff: CutoffSection = CutoffSection()
    outputs: Outputs = Outputs()
    lam: Optional[float] = None
    resume_from: Optional[str] = None


def _to_bool(key: str, text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(key, f"expected a boolean, got {text!r}")


def _to_int(key: str, text: str) -> int:
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {text!r}") from None
    if not v.is_integer():
        raise ConfigError(key, f"expected an integer, got {text!r}")
    return int(v)


def _to_float(key: str, text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(key, f"expected a number, got {text!r}") from None
    if not math.isfinite(v):
        raise ConfigError(key, f"must be finite, got {text!r}")
    return v


def _convert(key: str, text: str, proto):
    if isinstance(proto, bool):
        return _to_bool(key, text)
    if isinstance(proto, int):
        return _to_int(key, text)
    if isinstance(proto, float):
        return _to_float(key, text)
    if isinstance(proto, tuple):
        return tuple(p.strip() for p in text.split(",") if p.strip())
    return text.strip()


def parse_lines(lines) -> dict[str, str]:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if key in raw:
            raise ConfigError(key, f"duplicate key on line {lineno}")
        raw[key] = value
    return raw


_SECTIONS = {
    "grid": "grid",
    "ground_state": "ground_state",
    "evolution": "evolution",
    "virial": "virial",
    "cutoff": "cutoff",
    "outputs": "outputs",
}


def build_config(raw: dict[str, str]) -> ScenarioConfig:
    cfg = ScenarioConfig()
    updates: dict[str, dict] = {k: {} for k in _SECTIONS}
    preset = raw.get("initial_data.preset", cfg.initial_data.preset)
    if preset not in PRESETS:
        raise ConfigError("initial_data.preset",
                          f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    params = dict(PRESETS[preset])
    top = {}

    for key, text in raw.items():
        section, _, name = key.partition(".")
        if key in ("virial.lambda", "lambda"):
            top["lam"] = _to_float(key, text)
        elif section == "initial_data":
            if name == "preset":
                continue
            if name not in params:
                raise ConfigError(key, f"preset {preset!r} takes {sorted(params)}")
            params[name] = _to_float(key, text)
        elif section in _SECTIONS and name:
            current = getattr(cfg, _SECTIONS[section])
            names = {f.name for f in fields(current)}
            if name not in names:
                raise ConfigError(key, f"unknown key; section {section!r} takes {sorted(names)}")
            updates[section][name] = _convert(key, text, getattr(current, name))
        elif key == "resume_from":
            top["resume_from"] = text
        else:
            raise ConfigError(key, "unknown key")

    _validate_preset(preset, params)
    built = {}
    for section, upd in updates.items():
        current = getattr(cfg, _SECTIONS[section])
        try:
            built[_SECTIONS[section]] = replace(current, **upd)
        except ValueError as exc:
            raise ConfigError(section, str(exc)) from None
    out = replace(cfg, initial_data=InitialData(preset, params), **built, **top)
    _validate(out)
    return out


def _validate_preset(preset: str, p: dict) -> None:
    if "width" in p and not p["width"] > 0:
        raise ConfigError("initial_data.width", "must be positive")


def _validate(cfg: ScenarioConfig) -> None:
    g = cfg.grid
    if g.n_points < MIN_POINTS:
        raise ConfigError("grid.n_points", f"must be >= {MIN_POINTS}, got {g.n_points}")
    if not g.r_max > 0:
        raise ConfigError("grid.r_max", f"must be positive, got {g.r_max}")
    if not 0 < cfg.ground_state.tol < 1:
        raise ConfigError("ground_state.tol", "must lie in (0, 1)")
    if cfg.ground_state.max_iters < 1:
        raise ConfigError("ground_state.max_iters", "must be positive")
    if not cfg.virial.R <= g.r_max:
        raise ConfigError("virial.R", f"must not exceed grid.r_max={g.r_max}")
    if cfg.lam is not None:
        if not cfg.lam > 1:
            raise ConfigError("virial.lambda", f"must exceed 1, got {cfg.lam}")
        hi = min(cfg.lam - 1, 1.0)
        if not cfg.virial.gamma < hi:
            raise ConfigError("virial.gamma", f"must lie in (0, {hi:.6g}) for lambda={cfg.lam}")
    c = cfg.cutoff
    try:
        build_cutoff(c.s_out, c.d, c.e)
    except ValueError as exc:
        raise ConfigError("cutoff", str(exc)) from None
    if cfg.outputs.checkpoint_every < 0:
        raise ConfigError("outputs.checkpoint_every", "must be >= 0")
    bad = set(cfg.outputs.formats) - {"csv", "json"}
    if bad:
        raise ConfigError("outputs.formats", f"unsupported formats {sorted(bad)}")


def load_config(path: Optional[str | Path]) -> ScenarioConfig:
    """Read a config file; ``None`` gives the defaults."""
    if path is None:
        return build_config({})
    with open(path, encoding="utf-8") as fh:
        return build_config(parse_lines(fh))
