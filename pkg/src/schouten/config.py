"""Run configuration: YAML file -> validated, fully resolved settings.

Every key has a default; a config file only lists what it changes. The
resolved mapping (defaults merged with the file) is what reports embed.
"""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .continuation import NewtonOptions, PathOptions, PsiSchedule
from .manifold import GridChart, MetricRecipe, build_metric, warped_chart
from .symfuncs import SymFuncSpec

OUTPUT_ENV = "SCHOUTEN_OUTPUT_DIR"

DEFAULTS = {
    "seed": 0,
    "manifold": {
        "backend": "warped",
        "n": 4,
        "resolution": 128,
        "recipe": "hemisphere_warped",
        "base": None,
        "amplitude": 0.0,
        "mode": 1,
        "length": 1.0,
        "r_max": None,
    },
    "function": {"family": "sigma_k_root", "k": 2},
    "f": {"value": 1.0, "profile": "constant", "amplitude": 0.0, "frequency": 1.0, "axis": 0},
    "schedule": {"t_full": 0.5},
    "solver": {
        "tol": 1e-9,
        "max_iter": 30,
        "safeguard": 1e-8,
        "dt_initial": 0.05,
        "dt_min": 1e-4,
        "dt_max": 0.1,
        "blowup_threshold": -12.0,
        "max_steps": 2000,
    },
    "outputs": {"directory": "out", "keep_states": 12, "dump_fields": True},
    "verify": {"samples": 1000},
    "curvature_check": {"resolutions": [64, 128], "order_min": 1.8, "flat_tol": 1e-10},
    "blowup": {"level": -8.0, "radius": None},
}

F_PROFILES = ("constant", "cosine")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if key not in base:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {path + key!r} must be a mapping")
            out[key] = _merge(base[key], value, path + key + ".")
        else:
            out[key] = value
    return out


@dataclass
class RunConfig:
    """Resolved configuration with builders for the objects it describes."""

    data: dict

    @classmethod
    def from_dict(cls, raw: dict | None) -> "RunConfig":
        cfg = cls(_merge(DEFAULTS, raw or {}))
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
        if raw is not None and not isinstance(raw, dict):
            raise ConfigError("config file must hold a mapping at top level")
        return cls.from_dict(raw)

    def resolved(self) -> dict:
        return copy.deepcopy(self.data)

    def __getitem__(self, key):
        return self.data[key]

    # validation ----------------------------------------------------------

    def validate(self) -> None:
        m, fn, f, s = self["manifold"], self["function"], self["f"], self["solver"]
        if int(m["n"]) < 3:
            raise ConfigError("manifold.n must be >= 3")
        if m["backend"] not in ("torus", "slab", "warped"):
            raise ConfigError(f"unknown backend {m['backend']!r}")
        try:
            self.recipe()
            self.func()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        recipe = self.recipe()
        if recipe.is_warped and m["backend"] != "warped":
            raise ConfigError(f"recipe {recipe.root} needs a warped chart, got backend {m['backend']!r}")
        if m["backend"] != "warped" and recipe.root != "flat":
            raise ConfigError(f"recipe {recipe.root} is not available on a {m['backend']} chart")
        if fn["family"] == "sigma_k_root" and fn.get("k") is None:
            raise ConfigError("function.k is required for sigma_k_root")
        if f["profile"] not in F_PROFILES:
            raise ConfigError(f"f.profile must be one of {F_PROFILES}")
        if f["value"] <= 0 or (f["profile"] == "cosine" and abs(f["amplitude"]) >= 1):
            raise ConfigError("f must be strictly positive (value > 0, |amplitude| < 1)")
        for key in ("tol", "safeguard", "dt_initial", "dt_min", "dt_max"):
            if not s[key] > 0:
                raise ConfigError(f"solver.{key} must be positive")
        if s["dt_min"] > s["dt_initial"]:
            raise ConfigError("solver.dt_min exceeds solver.dt_initial")

    # builders ------------------------------------------------------------

    def recipe(self) -> MetricRecipe:
        m = self["manifold"]
        return MetricRecipe(m["recipe"], base=m["base"], amplitude=float(m["amplitude"]), mode=int(m["mode"]),
                            r_max=m["r_max"])

    def chart(self, resolution: int | None = None) -> GridChart:
        m = self["manifold"]
        res = int(resolution or m["resolution"])
        if m["backend"] == "warped":
            return warped_chart(self.recipe(), int(m["n"]), res)
        if m["backend"] == "torus":
            return GridChart.torus(int(m["n"]), res, float(m["length"]))
        return GridChart.slab(int(m["n"]), res, float(m["length"]))

    def metric(self, resolution: int | None = None):
        return build_metric(self.chart(resolution), self.recipe())

    def func(self) -> SymFuncSpec:
        fn = self["function"]
        return SymFuncSpec(fn["family"], int(self["manifold"]["n"]), fn.get("k"))

    def f_values(self, chart: GridChart) -> np.ndarray:
        f = self["f"]
        if f["profile"] == "constant":
            return np.full(chart.shape, float(f["value"]))
        x = chart.coordinates()[int(f["axis"])]
        return float(f["value"]) * (1.0 + float(f["amplitude"]) * np.cos(float(f["frequency"]) * x))

    def schedule(self) -> PsiSchedule:
        return PsiSchedule(float(self["schedule"]["t_full"]))

    def path_options(self) -> PathOptions:
        s = self["solver"]
        newton = NewtonOptions(tol=float(s["tol"]), max_iter=int(s["max_iter"]))
        return PathOptions(newton=newton, dt_initial=float(s["dt_initial"]), dt_min=float(s["dt_min"]),
                           dt_max=float(s["dt_max"]), blowup_threshold=float(s["blowup_threshold"]),
                           max_steps=int(s["max_steps"]), keep_states=int(self["outputs"]["keep_states"]))

    def output_dir(self, override=None) -> Path:
        """CLI override, then the environment variable, then the config."""
        chosen = override or os.environ.get(OUTPUT_ENV) or self["outputs"]["directory"]
        path = Path(chosen)
        path.mkdir(parents=True, exist_ok=True)
        return path
