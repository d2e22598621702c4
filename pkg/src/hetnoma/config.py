"""Scenario configuration files (JSON) for the command-line interface.

A config mirrors NetworkParams plus sweep and runtime knobs.  Parsing is
strict: unknown keys are rejected, and every error names the offending
field.  parse -> serialize -> parse is the identity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .coverage import NetworkParams, TierParams
from .geometry import Window
from .simulate import SCHEMES
from .sweeps import SWEEP_VARIABLES, default_user_intensity_grid

KERNEL_MODES = ("appendix", "theorem")

_TOP_KEYS = {
    "tiers", "user_intensity", "pathloss_exponent", "sir_threshold", "beta",
    "schemes", "sweep", "seed", "n_trials", "window", "kernel_mode",
    "max_cells_per_tier", "n_jobs", "output",
}
_TIER_KEYS = {"power_watts", "intensity"}
_WINDOW_KEYS = {"half_width", "margin"}
_SWEEP_KEYS = {"variable", "grid"}


class ConfigError(ValueError):
    """Invalid scenario config; `field` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"config field '{field}': {message}")
        self.field = field


@dataclass(frozen=True)
class ScenarioConfig:
    params: NetworkParams
    schemes: tuple = SCHEMES
    sweep_variable: str = "user_intensity"
    sweep_grid: tuple = None
    seed: int = 1
    n_trials: int = 20
    window: Window = None
    kernel_mode: str = "appendix"
    max_cells_per_tier: int = None
    n_jobs: int = 1
    output: str = None

    def __post_init__(self):
        if self.sweep_grid is None:
            object.__setattr__(self, "sweep_grid", default_user_intensity_grid())


def _reject_unknown(mapping, allowed, where):
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"{where}{key}", "unknown key")


def _require(mapping, key, where=""):
    if key not in mapping:
        raise ConfigError(f"{where}{key}", "missing required key")
    return mapping[key]


def _number(value, field, minimum=None, strict=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(field, f"expected a finite number, got {value!r}")
    value = float(value)
    if minimum is not None and (value <= minimum if strict else value < minimum):
        bound = "greater than" if strict else "at least"
        raise ConfigError(field, f"must be {bound} {minimum}")
    return value


def _integer(value, field, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(field, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(field, f"must be at least {minimum}")
    return value


def parse_config(data):
    """Build a ScenarioConfig from a decoded JSON object."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    _reject_unknown(data, _TOP_KEYS, "")

    raw_tiers = _require(data, "tiers")
    if not isinstance(raw_tiers, list) or not raw_tiers:
        raise ConfigError("tiers", "expected a nonempty array of tier objects")
    tiers = []
    for i, entry in enumerate(raw_tiers):
        where = f"tiers[{i}]."
        if not isinstance(entry, dict):
            raise ConfigError(f"tiers[{i}]", "expected an object")
        _reject_unknown(entry, _TIER_KEYS, where)
        tiers.append(
            TierParams(
                power_watts=_number(_require(entry, "power_watts", where),
                                    where + "power_watts", 0.0, strict=True),
                intensity=_number(_require(entry, "intensity", where),
                                  where + "intensity", 0.0, strict=True),
            )
        )

    raw_beta = data.get("beta", 0.75)
    if isinstance(raw_beta, list):
        if len(raw_beta) != len(tiers):
            raise ConfigError("beta", "must have one entry per tier")
        beta = tuple(_number(b, f"beta[{i}]", 0.0) for i, b in enumerate(raw_beta))
    else:
        beta = (_number(raw_beta, "beta", 0.0),) * len(tiers)
    if any(b > 1.0 for b in beta):
        raise ConfigError("beta", "entries must lie in [0, 1]")

    try:
        params = NetworkParams(
            tiers=tuple(tiers),
            user_intensity=_number(_require(data, "user_intensity"), "user_intensity", 0.0),
            pathloss_exponent=_number(data.get("pathloss_exponent", 4.0),
                                      "pathloss_exponent", 2.0, strict=True),
            sir_threshold=_number(data.get("sir_threshold", 1.0),
                                  "sir_threshold", 0.0, strict=True),
            beta=beta,
        )
    except ValueError as exc:
        raise ConfigError("<params>", str(exc)) from exc

    schemes = data.get("schemes", list(SCHEMES))
    if not isinstance(schemes, list) or not schemes:
        raise ConfigError("schemes", "expected a nonempty array")
    for s in schemes:
        if s not in SCHEMES:
            raise ConfigError("schemes", f"unknown scheme {s!r} (choose from {list(SCHEMES)})")

    sweep_variable = "user_intensity"
    sweep_grid = None
    if "sweep" in data:
        sweep = data["sweep"]
        if not isinstance(sweep, dict):
            raise ConfigError("sweep", "expected an object")
        _reject_unknown(sweep, _SWEEP_KEYS, "sweep.")
        sweep_variable = sweep.get("variable", "user_intensity")
        if sweep_variable not in SWEEP_VARIABLES:
            raise ConfigError("sweep.variable",
                              f"unknown variable {sweep_variable!r} (choose from {list(SWEEP_VARIABLES)})")
        if "grid" in sweep:
            raw = sweep["grid"]
            if not isinstance(raw, list) or not raw:
                raise ConfigError("sweep.grid", "expected a nonempty array of numbers")
            sweep_grid = tuple(_number(v, f"sweep.grid[{i}]") for i, v in enumerate(raw))
            if any(lo >= hi for lo, hi in zip(sweep_grid, sweep_grid[1:])):
                raise ConfigError("sweep.grid", "must be strictly increasing")

    window = None
    if "window" in data:
        raw = data["window"]
        if not isinstance(raw, dict):
            raise ConfigError("window", "expected an object")
        _reject_unknown(raw, _WINDOW_KEYS, "window.")
        try:
            window = Window(
                half_width=_number(_require(raw, "half_width", "window."),
                                   "window.half_width", 0.0, strict=True),
                margin=_number(_require(raw, "margin", "window."),
                               "window.margin", 0.0, strict=True),
            )
        except ValueError as exc:
            raise ConfigError("window", str(exc)) from exc

    kernel_mode = data.get("kernel_mode", "appendix")
    if kernel_mode not in KERNEL_MODES:
        raise ConfigError("kernel_mode",
                          f"unknown mode {kernel_mode!r} (choose from {list(KERNEL_MODES)})")

    max_cells = data.get("max_cells_per_tier")
    if max_cells is not None:
        max_cells = _integer(max_cells, "max_cells_per_tier", 1)

    output = data.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError("output", "expected a string path")

    return ScenarioConfig(
        params=params,
        schemes=tuple(schemes),
        sweep_variable=sweep_variable,
        sweep_grid=sweep_grid,
        seed=_integer(data.get("seed", 1), "seed", 0),
        n_trials=_integer(data.get("n_trials", 20), "n_trials", 1),
        window=window,
        kernel_mode=kernel_mode,
        max_cells_per_tier=max_cells,
        n_jobs=_integer(data.get("n_jobs", 1), "n_jobs", 1),
        output=output,
    )


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON in {path}: {exc}") from exc
    return parse_config(data)


def config_to_dict(cfg):
    data = {
        "tiers": [
            {"power_watts": t.power_watts, "intensity": t.intensity}
            for t in cfg.params.tiers
        ],
        "user_intensity": cfg.params.user_intensity,
        "pathloss_exponent": cfg.params.pathloss_exponent,
        "sir_threshold": cfg.params.sir_threshold,
        "beta": list(cfg.params.beta),
        "schemes": list(cfg.schemes),
        "sweep": {"variable": cfg.sweep_variable, "grid": list(cfg.sweep_grid)},
        "seed": cfg.seed,
        "n_trials": cfg.n_trials,
        "kernel_mode": cfg.kernel_mode,
        "n_jobs": cfg.n_jobs,
    }
    if cfg.window is not None:
        data["window"] = {"half_width": cfg.window.half_width, "margin": cfg.window.margin}
    if cfg.max_cells_per_tier is not None:
        data["max_cells_per_tier"] = cfg.max_cells_per_tier
    if cfg.output is not None:
        data["output"] = cfg.output
    return data


def dump_config(cfg):
    """Serialize to JSON text; floats round-trip exactly."""
    return json.dumps(config_to_dict(cfg), indent=2) + "\n"
