"""Run configuration: a strict TOML schema mapped onto the model objects.

Unknown keys are rejected with their full path; every run is a single
config file, no interactive mode.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .spectral import (
    GaussianBand,
    SpectralModel,
    SystemModel,
    TableBand,
    THERMAL_H1,
    THERMAL_H1PRIME,
)

_MODEL_KEYS = {"beta", "omega0", "thermal_h", "quad_rel_tol", "band0", "band1"}
_BAND_KEYS = {"kind", "amplitude", "center", "width", "support",
              "energies", "values"}
_SYSTEM_KEYS = {"dim", "d_matrix", "levels"}
_RUN_SECTIONS = {"gamma", "decay", "derive", "prelimit", "scatter", "check"}
_RUN_KEYS = {
    "gamma": {"energies"},
    "decay": {"times"},
    "derive": {"energies"},
    "prelimit": {"lambdas", "f", "g", "phi", "psi", "eps_left", "eps_right"},
    "scatter": {"grid_points", "abel_eta", "tmax_factor", "dt",
                "refinement_grids"},
    "check": {"trials", "random_models", "prelimit_lambdas", "grid_points",
              "abel_eta", "energies"},
}
_GRID_KEYS = {"start", "stop", "count"}
_PROFILE_KEYS = {"center", "width", "amplitude"}
_WINDOW_KEYS = {"amplitude", "center", "width", "support"}
_TOP_KEYS = {"model", "system", "run", "tolerances", "threads"}
_TOL_KEYS = {"quad_rel": float}


def _reject_unknown(mapping: dict, allowed: set, path: str):
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"unknown key {path}.{key}")


def _band_from(table: dict, path: str):
    _reject_unknown(table, _BAND_KEYS, path)
    kind = table.get("kind")
    if kind == "gaussian":
        try:
            return GaussianBand(
                amplitude=float(table["amplitude"]),
                center=float(table["center"]),
                width=float(table["width"]),
                support=tuple(float(x) for x in table["support"]),
            )
        except KeyError as exc:
            raise ConfigError(f"{path} missing key {exc.args[0]}") from exc
    if kind == "table":
        try:
            return TableBand(tuple(float(x) for x in table["energies"]),
                             tuple(float(x) for x in table["values"]))
        except KeyError as exc:
            raise ConfigError(f"{path} missing key {exc.args[0]}") from exc
    raise ConfigError(f"{path}.kind must be 'gaussian' or 'table', got {kind!r}")


def _grid_from(table: dict, path: str) -> np.ndarray:
    if isinstance(table, list):
        return np.asarray([float(x) for x in table], float)
    _reject_unknown(table, _GRID_KEYS, path)
    try:
        return np.linspace(float(table["start"]), float(table["stop"]),
                           int(table["count"]))
    except KeyError as exc:
        raise ConfigError(f"{path} missing key {exc.args[0]}") from exc


@dataclass
class RunConfig:
    model: SpectralModel
    system: SystemModel
    run: dict = field(default_factory=dict)
    threads: int = 1
    digest: str = ""

    @staticmethod
    def from_file(path) -> "RunConfig":
        raw = Path(path).read_bytes()
        try:
            data = tomllib.loads(raw.decode("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config parse error: {exc}") from exc
        return RunConfig.from_dict(data, digest=hashlib.sha256(raw).hexdigest())

    @staticmethod
    def from_dict(data: dict, digest: str = "") -> "RunConfig":
        _reject_unknown(data, _TOP_KEYS, "<root>")
        if "model" not in data or "system" not in data:
            raise ConfigError("config requires [model] and [system] sections")
        mt = data["model"]
        _reject_unknown(mt, _MODEL_KEYS, "model")
        for band in ("band0", "band1"):
            if band not in mt:
                raise ConfigError(f"model.{band} is required")
        tol = data.get("tolerances", {})
        _reject_unknown(tol, set(_TOL_KEYS), "tolerances")
        try:
            model = SpectralModel(
                band0=_band_from(mt["band0"], "model.band0"),
                band1=_band_from(mt["band1"], "model.band1"),
                beta=float(mt.get("beta", 1.0)),
                omega0=float(mt.get("omega0", 0.0)),
                thermal_h=mt.get("thermal_h", THERMAL_H1),
                quad_rel_tol=float(tol.get("quad_rel", 1e-8)),
            )
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"model: {exc}") from exc

        st = data["system"]
        _reject_unknown(st, _SYSTEM_KEYS, "system")
        try:
            dim = int(st["dim"])
            pairs = st["d_matrix"]
            if len(pairs) != dim * dim:
                raise ConfigError(
                    f"system.d_matrix needs {dim * dim} [re, im] pairs")
            flat = [complex(float(p[0]), float(p[1])) for p in pairs]
            d = np.array(flat, complex).reshape(dim, dim)
            levels = tuple(float(x) for x in st["levels"]) if "levels" in st else None
            system = SystemModel(dim, d, levels=levels)
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"system: {exc}") from exc

        run = data.get("run", {})
        _reject_unknown(run, _RUN_SECTIONS, "run")
        for section, table in run.items():
            _reject_unknown(table, _RUN_KEYS[section], f"run.{section}")

        threads = int(data.get("threads", 1))
        if not digest:
            digest = hashlib.sha256(
                json.dumps(data, sort_keys=True, default=str).encode()
            ).hexdigest()
        return RunConfig(model=model, system=system, run=run,
                         threads=threads, digest=digest)

    def grid(self, section: str, key: str, default) -> np.ndarray:
        table = self.run.get(section, {})
        if key not in table:
            return np.asarray(default, float)
        return _grid_from(table[key], f"run.{section}.{key}")

    def value(self, section: str, key: str, default):
        return self.run.get(section, {}).get(key, default)


M1_TOML = """\
[model]
beta = 1.0
omega0 = 1.0
thermal_h = "h1"

[model.band0]
kind = "gaussian"
amplitude = 0.5
center = 2.0
width = 0.3
support = [1.0, 3.0]

[model.band1]
kind = "gaussian"
amplitude = 0.5
center = 5.0
width = 0.3
support = [4.0, 6.0]

[system]
dim = 2
d_matrix = [[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]
levels = [0.0, 1.0]
"""
