"""Run configuration: strict ``key = value`` files.

Lines hold one ``key = value`` pair; ``#`` starts a comment; keys are
fail-closed (unknown or duplicate keys are errors, with line numbers).
Numeric ranges are validated here, before any computation, by constructing
the actual model and phantom objects.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from pathlib import Path

from patrev import dispersion
from patrev.errors import CapabilityError, ParameterError
from patrev.forward import Ball, Gaussian, Phantom
from patrev.models import KSB, NSW, AttenuationModel, ThermoViscous, has_attenuation


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""


_MODEL_KEYS = {
    "ksb": {"alpha0", "tau0", "gamma"},
    "nsw": {"tau", "tau_tilde"},
    "thermoviscous": {"a"},
}

_SCALAR_KEYS = {
    "model": str,
    "alpha0": float,
    "tau0": float,
    "gamma": float,
    "a": float,
    "sensor_count": int,
    "sensor_radius": float,
    "final_time": float,
    "time_samples": int,
    "grid_rho": float,
    "freq_samples": int,
    "rho": float,
    "order": int,
    "eval_mode": str,
    "eval_points": int,
    "eval_half_length": float,
    "eval_axis": str,
    "seed": int,
    "diameter": float,
    "dataset_file": str,
}

_LIST_KEYS = {"tau", "tau_tilde", "rho_list", "eval_center"}


@dataclass
class RunConfig:
    """Typed view of one configuration file."""

    model: AttenuationModel
    phantom: Phantom | None
    sensor_count: int = 256
    sensor_radius: float = 2.0
    final_time: float | None = None
    time_samples: int = 1025
    grid_rho: float | None = None
    freq_samples: int = 512
    rho: float | None = None
    order: int = 0
    eval_mode: str = "line"
    eval_points: int = 64
    eval_half_length: float | None = None
    eval_axis: int = 0
    eval_center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    rho_list: tuple[float, ...] = ()
    seed: int = 0
    diameter: float | None = None
    dataset_file: str = "dataset.csv"
    source_hash: str = ""

    def resolved_rho(self) -> float:
        """Configured cutoff, defaulting to the model's stability threshold."""
        if self.rho is not None:
            return self.rho
        if not has_attenuation(self.model):
            raise ConfigError("rho is required when the model does not attenuate")
        try:
            value = dispersion.rho_threshold(self.model, 2.0 * self.sensor_radius)
        except CapabilityError as exc:
            raise ConfigError(f"rho is required: {exc}") from exc
        if not math.isfinite(value):
            raise ConfigError("rho is required: the stability threshold is unbounded")
        return value

    def resolved_grid_rho(self) -> float:
        if self.grid_rho is not None:
            return self.grid_rho
        if self.rho_list:
            return max(max(self.rho_list), self.rho or 0.0)
        return self.resolved_rho()


def _err(path: Path, lineno: int, message: str) -> ConfigError:
    return ConfigError(f"{path}:{lineno}: {message}")


def _parse_value(path: Path, lineno: int, key: str, raw: str):
    kind = _SCALAR_KEYS[key]
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw.strip().lower()
    except ValueError as exc:
        raise _err(path, lineno, f"{key}: cannot parse {raw!r} as {kind.__name__}") from exc


def _parse_phantom_component(path: Path, lineno: int, raw: str):
    tokens = raw.split()
    if not tokens:
        raise _err(path, lineno, "empty phantom component")
    kind, args = tokens[0].lower(), tokens[1:]
    if len(args) != 5:
        raise _err(
            path, lineno,
            f"phantom component needs 5 numbers (cx cy cz size amplitude), got {len(args)}",
        )
    try:
        cx, cy, cz, size, amp = (float(v) for v in args)
    except ValueError as exc:
        raise _err(path, lineno, f"phantom component: bad number in {raw!r}") from exc
    try:
        if kind == "ball":
            return Ball((cx, cy, cz), size, amp)
        if kind == "gaussian":
            return Gaussian((cx, cy, cz), size, amp)
    except ParameterError as exc:
        raise _err(path, lineno, str(exc)) from exc
    raise _err(path, lineno, f"unknown phantom component type {kind!r}")


def parse_config(path: str | Path) -> RunConfig:
    """Read and validate a configuration file (fail-closed)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_bytes()
    source_hash = hashlib.sha256(text).hexdigest()

    scalars: dict[str, object] = {}
    lists: dict[str, list[float]] = {}
    components: dict[int, object] = {}
    lines_seen: dict[str, int] = {}

    for lineno, line in enumerate(text.decode("utf-8").splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise _err(path, lineno, f"expected 'key = value', got {line.strip()!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key in lines_seen:
            raise _err(path, lineno, f"duplicate key {key!r} (first set on line {lines_seen[key]})")
        lines_seen[key] = lineno
        if key.startswith("phantom."):
            try:
                index = int(key.split(".", 1)[1])
            except ValueError as exc:
                raise _err(path, lineno, f"bad phantom index in {key!r}") from exc
            components[index] = _parse_phantom_component(path, lineno, raw)
        elif key in _LIST_KEYS:
            try:
                lists[key] = [float(tok) for tok in raw.split()]
            except ValueError as exc:
                raise _err(path, lineno, f"{key}: bad number list {raw!r}") from exc
        elif key in _SCALAR_KEYS:
            scalars[key] = _parse_value(path, lineno, key, raw)
        else:
            raise _err(path, lineno, f"unknown key {key!r}")

    return _build(path, scalars, lists, components, lines_seen, source_hash)


def _build(path, scalars, lists, components, lines_seen, source_hash) -> RunConfig:
    def where(key: str) -> int:
        return lines_seen.get(key, 0)

    model_name = scalars.pop("model", None)
    if model_name is None:
        raise ConfigError(f"{path}: missing required key 'model'")
    if model_name not in _MODEL_KEYS:
        raise _err(path, where("model"), f"unknown model {model_name!r} (ksb, nsw, thermoviscous)")

    try:
        if model_name == "ksb":
            model: AttenuationModel = KSB(
                scalars.pop("alpha0", 0.0),
                scalars.pop("tau0", 1.0),
                scalars.pop("gamma", 2.0),
            )
        elif model_name == "thermoviscous":
            model = ThermoViscous(scalars.pop("a", 0.0))
        else:
            taus = lists.pop("tau", None)
            tildes = lists.pop("tau_tilde", None)
            if taus is None or tildes is None:
                raise ConfigError(f"{path}: nsw model needs 'tau' and 'tau_tilde'")
            if len(taus) != len(tildes):
                raise _err(path, where("tau"), "tau and tau_tilde must have the same length")
            model = NSW(tuple(zip(taus, tildes)))
    except ParameterError as exc:
        raise _err(path, where(_first_model_key(model_name, lines_seen)), str(exc)) from exc

    for key in ("alpha0", "tau0", "gamma", "a"):
        if key in scalars:
            raise _err(path, where(key), f"{key!r} does not apply to model {model_name!r}")
    for key in ("tau", "tau_tilde"):
        if key in lists:
            raise _err(path, where(key), f"{key!r} does not apply to model {model_name!r}")

    phantom = None
    if components:
        order = sorted(components)
        try:
            phantom = Phantom(tuple(components[i] for i in order))
        except ParameterError as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    eval_axis = {"x": 0, "y": 1, "z": 2}.get(str(scalars.pop("eval_axis", "x")))
    if eval_axis is None:
        raise _err(path, where("eval_axis"), "eval_axis must be x, y, or z")
    eval_mode = str(scalars.pop("eval_mode", "line"))
    if eval_mode not in ("line", "grid"):
        raise _err(path, where("eval_mode"), "eval_mode must be 'line' or 'grid'")
    center = lists.pop("eval_center", [0.0, 0.0, 0.0])
    if len(center) != 3:
        raise _err(path, where("eval_center"), "eval_center needs 3 numbers")

    cfg = RunConfig(
        model=model,
        phantom=phantom,
        eval_axis=eval_axis,
        eval_mode=eval_mode,
        eval_center=tuple(center),
        rho_list=tuple(lists.pop("rho_list", ())),
        source_hash=source_hash,
        **scalars,
    )
    _validate(path, cfg, where)
    return cfg


def _first_model_key(model_name: str, lines_seen: dict[str, int]) -> str:
    for key in sorted(_MODEL_KEYS[model_name], key=lambda k: lines_seen.get(k, 10**9)):
        if key in lines_seen:
            return key
    return "model"


def _validate(path, cfg: RunConfig, where) -> None:
    checks = [
        (cfg.sensor_count >= 1, "sensor_count", "must be >= 1"),
        (cfg.sensor_radius > 0, "sensor_radius", "must be > 0"),
        (cfg.time_samples >= 2, "time_samples", "must be >= 2"),
        (cfg.freq_samples >= 1, "freq_samples", "must be >= 1"),
        (cfg.final_time is None or cfg.final_time > 0, "final_time", "must be > 0"),
        (cfg.rho is None or cfg.rho > 0, "rho", "must be > 0"),
        (cfg.grid_rho is None or cfg.grid_rho > 0, "grid_rho", "must be > 0"),
        (cfg.order in (0, 1, 2), "order", "must be 0, 1, or 2"),
        (cfg.eval_points >= 1, "eval_points", "must be >= 1"),
        (
            cfg.eval_half_length is None or cfg.eval_half_length > 0,
            "eval_half_length",
            "must be > 0",
        ),
        (all(r > 0 for r in cfg.rho_list), "rho_list", "entries must be > 0"),
        (cfg.diameter is None or cfg.diameter > 0, "diameter", "must be > 0"),
        (cfg.seed >= 0, "seed", "must be >= 0"),
    ]
    for ok, key, msg in checks:
        if not ok:
            raise _err(path, where(key), f"{key} {msg}")
    if cfg.phantom is not None and cfg.phantom.support_radius >= cfg.sensor_radius:
        raise ConfigError(
            f"{path}: phantom support radius {cfg.phantom.support_radius:.6g} must be "
            f"strictly inside the sensor sphere radius {cfg.sensor_radius:.6g}"
        )
