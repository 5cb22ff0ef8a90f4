"""Scenario files: YAML documents validated against a JSON schema.

A run-up scenario looks like::

    name: pulse
    problem: runup
    bay: {preset: plane-beach}
    initial:
      eta: {family: gaussian, amplitude: 0.01, center: 5.0, width: 1.0}
      u: {family: proportional, factor: -0.45}
    domain: {x_min: -1.0, x_max: 30.0, points: 3001}
    numerics: {p: 6, eps: 1.0e-12, solver: spectral, dtau: 0.01}
    output:
      times: [0.0, 1.0, 2.0]
      shoreline: {t_min: 0.0, t_max: 10.0, count: 201}

Exactly one of ``numerics.j`` and ``numerics.eps`` must be given.  Tabulated
inputs (``bay.table``, ``initial.table``) are CSV files with a header row,
resolved relative to the scenario file.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from .core import Grid
from .errors import ScenarioError
from .hankel import KGrid
from .hodograph import BayProfile, PhysicalIC, plane_beach, tabulated_profile
from .pipeline import PipelineConfig

PROBLEMS = ("runup", "advection", "bessel-mode")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}

_PROFILE = {
    "type": "object",
    "required": ["family"],
    "properties": {
        "family": {"enum": ["zero", "gaussian", "n-wave", "linear", "riemann-incoming",
                            "proportional"]},
        "amplitude": _num, "center": _num, "width": _pos, "factor": _num, "slope": _num,
    },
    "additionalProperties": False,
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "run-up scenario",
    "type": "object",
    "required": ["problem"],
    "properties": {
        "name": {"type": "string"},
        "problem": {"enum": list(PROBLEMS)},
        "bay": {
            "type": "object",
            "properties": {
                "preset": {"enum": ["plane-beach"]},
                "table": {"type": "string"},
                "sigma": {"type": "array", "items": _num, "minItems": 2},
                "c": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 2},
            },
            "additionalProperties": False,
        },
        "initial": {
            "type": "object",
            "properties": {
                "eta": _PROFILE,
                "u": _PROFILE,
                "table": {"type": "string"},
                "scale": _num,
            },
            "additionalProperties": False,
        },
        "advection": {
            "type": "object",
            "properties": {
                "beta": {"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 1},
                "profile": _PROFILE,
            },
            "additionalProperties": False,
        },
        "mode": {
            "type": "object",
            "properties": {"k": _pos, "tau": {"type": "array", "items": _num, "minItems": 1}},
            "additionalProperties": False,
        },
        "domain": {
            "type": "object",
            "required": ["x_max", "points"],
            "properties": {
                "x_min": _num,
                "x_max": _num,
                "points": {"type": "integer", "minimum": 11, "maximum": 200001},
                "sigma_points": {"type": "integer", "minimum": 11, "maximum": 200001},
            },
            "additionalProperties": False,
        },
        "numerics": {
            "type": "object",
            "properties": {
                "p": {"enum": [2, 4, 6]},
                "j": {"type": "integer", "minimum": 0, "maximum": 20},
                "eps": _pos,
                "j_max": {"type": "integer", "minimum": 0, "maximum": 20},
                "solver": {"enum": ["fd", "spectral", "both"]},
                "fd_order": {"enum": [2, 4]},
                "dtau": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "k_modes": {"type": "integer", "minimum": 8, "maximum": 8192},
                "k_pad": {"type": "number", "minimum": 1},
                "k_grid": {"enum": ["fourier-bessel", "gauss-legendre"]},
                "extend": {"type": "boolean"},
                "margin_tol": _pos,
            },
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {
                "times": {"type": "array", "items": _num},
                "shoreline": {
                    "type": "object",
                    "required": ["t_min", "t_max", "count"],
                    "properties": {"t_min": _num, "t_max": _num,
                                   "count": {"type": "integer", "minimum": 1, "maximum": 100000}},
                    "additionalProperties": False,
                },
                "tau_stride": {"type": "integer", "minimum": 1},
                "sigma_stride": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


@dataclass
class Scenario:
    raw: dict
    base_dir: Path

    @property
    def name(self) -> str:
        return self.raw.get("name", "scenario")

    @property
    def problem(self) -> str:
        return self.raw["problem"]

    def section(self, key: str) -> dict:
        return self.raw.get(key, {})

    def resolved_json(self) -> str:
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    # {{{ builders

    def x_grid(self) -> Grid:
        d = self.section("domain")
        if not d:
            raise ScenarioError("scenario needs a 'domain' section")
        default_min = -1.0 if self.problem == "runup" else 0.0
        try:
            return Grid(float(d.get("x_min", default_min)), float(d["x_max"]), int(d["points"]))
        except ValueError as exc:
            raise ScenarioError(f"domain: {exc}") from exc

    def bay(self) -> BayProfile:
        b = self.section("bay")
        if not b or b.get("preset") == "plane-beach":
            if len(b) > 1:
                raise ScenarioError("bay: give either a preset or a table, not both")
            return plane_beach()
        try:
            if "table" in b:
                data = _read_table(self.base_dir / b["table"], ("sigma", "c"))
                return tabulated_profile(data["sigma"], data["c"])
            if "sigma" in b and "c" in b:
                return tabulated_profile(b["sigma"], b["c"])
        except ValueError as exc:
            raise ScenarioError(f"bay: {exc}") from exc
        raise ScenarioError("bay: need 'preset', 'table', or both 'sigma' and 'c'")

    def physical_ic(self) -> PhysicalIC:
        grid = self.x_grid()
        ini = self.section("initial")
        scale = float(ini.get("scale", 1.0))
        c = self.bay()
        if "table" in ini:
            if "eta" in ini or "u" in ini:
                raise ScenarioError("initial: give either a table or profile families, not both")
            data = _read_table(self.base_dir / ini["table"], ("x", "eta", "u"))
            x = grid.nodes
            eta = np.interp(x, data["x"], data["eta"])
            u = scale * np.interp(x, data["x"], data["u"])
            return PhysicalIC(grid, eta, u, c)
        eta = profile_function(ini.get("eta", {"family": "zero"}), None, "initial.eta")
        u_raw = profile_function(ini.get("u", {"family": "zero"}), eta, "initial.u")
        return PhysicalIC(grid, eta, lambda x: scale * u_raw(x), c)

    def pipeline_config(self) -> PipelineConfig:
        n = self.section("numerics")
        has_j, has_eps = "j" in n, "eps" in n
        if has_j == has_eps:
            raise ScenarioError("numerics: exactly one of 'j' and 'eps' must be given")
        out = self.section("output")
        shore = out.get("shoreline")
        shore_t = None
        if shore is not None:
            if shore["t_max"] < shore["t_min"]:
                raise ScenarioError("output.shoreline: t_max must not be below t_min")
            shore_t = tuple(np.linspace(shore["t_min"], shore["t_max"], shore["count"]))
        kg = KGrid(kind=n.get("k_grid", "fourier-bessel"), n=int(n.get("k_modes", 256)),
                   pad=float(n.get("k_pad", 3.0)))
        d = self.section("domain")
        return PipelineConfig(
            sigma_points=d.get("sigma_points"),
            p=int(n.get("p", 4)),
            j=n.get("j"),
            eps=n.get("eps"),
            j_max=int(n.get("j_max", 8)),
            solver=n.get("solver"),
            fd_order=int(n.get("fd_order", 4)),
            times=tuple(out.get("times", [0.0])),
            shoreline_times=shore_t,
            dtau=float(n.get("dtau", 0.05)),
            k_grid=kg,
            margin_tol=float(n.get("margin_tol", 1e-6)),
            extend=bool(n.get("extend", True)),
        )

    # }}}


def profile_function(spec: dict, eta=None, where: str = "profile"):
    """Vectorised callable for a named analytic family.

    ``riemann-incoming`` and ``proportional`` are velocity families tied to the
    elevation ``eta``: ``-2 (sqrt(x + eta) - sqrt(x))`` (dry side set to zero)
    and ``factor * eta``.
    """
    fam = spec["family"]
    A = float(spec.get("amplitude", 0.0))
    x0 = float(spec.get("center", 0.0))
    w = float(spec.get("width", 1.0))
    if fam == "zero":
        return lambda x: np.zeros_like(np.asarray(x, dtype=float))
    if fam == "gaussian":
        return lambda x: A * np.exp(-((np.asarray(x, dtype=float) - x0) / w) ** 2)
    if fam == "n-wave":
        # antisymmetric pulse, extrema +-A at x0 -+ w / sqrt(2)
        k = A * np.sqrt(2.0 * np.e)
        return lambda x: -k * ((np.asarray(x, dtype=float) - x0) / w) * np.exp(
            -((np.asarray(x, dtype=float) - x0) / w) ** 2)
    if fam == "linear":
        slope = float(spec.get("slope", 1.0))
        return lambda x: slope * np.asarray(x, dtype=float)
    if eta is None:
        raise ScenarioError(f"{where}: family '{fam}' is only valid for the velocity")
    if fam == "riemann-incoming":
        def u(x):
            x = np.asarray(x, dtype=float)
            return -2.0 * (np.sqrt(np.maximum(x + eta(x), 0.0)) - np.sqrt(np.maximum(x, 0.0)))
        return u
    if fam == "proportional":
        f = float(spec.get("factor", 1.0))
        return lambda x: f * eta(x)
    raise ScenarioError(f"{where}: unknown family '{fam}'")


def _read_table(path: Path, columns) -> dict:
    if not path.is_file():
        raise ScenarioError(f"referenced file not found: {path}")
    try:
        data = np.genfromtxt(path, delimiter=",", names=True, comments="#")
    except ValueError as exc:
        raise ScenarioError(f"cannot read table {path}: {exc}") from exc
    names = data.dtype.names or ()
    missing = [c for c in columns if c not in names]
    if missing:
        raise ScenarioError(f"table {path} lacks column(s) {missing}")
    return {c: np.atleast_1d(np.asarray(data[c], dtype=float)) for c in columns}


def validate_scenario(raw) -> None:
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a mapping")
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        loc = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"scenario invalid at {loc}: {exc.message}") from exc
    n = raw.get("numerics", {})
    if raw["problem"] in ("runup", "advection") and ("j" in n) == ("eps" in n):
        raise ScenarioError("numerics: exactly one of 'j' and 'eps' must be given")


def load_scenario(path) -> Scenario:
    path = Path(path)
    if not path.is_file():
        raise ScenarioError(f"scenario file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ScenarioError(f"cannot parse {path}: {exc}") from exc
    validate_scenario(raw)
    sc = Scenario(copy.deepcopy(raw), path.parent)
    # resolve referenced files eagerly so missing files fail at load time
    for sect in ("bay", "initial"):
        ref = sc.section(sect).get("table")
        if ref is not None and not (sc.base_dir / ref).is_file():
            raise ScenarioError(f"{sect}.table: referenced file not found: {sc.base_dir / ref}")
    return sc
