"""Experiment configuration (one JSON file per experiment)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigInvalid
from .lattice import EuclideanLattice
from .polytope import LatticePolytope
from .weights import (
    Canonical,
    RadialMeasure,
    Shifted,
    ToricWeight,
    ma_measure,
    measure_from_json,
    weight_from_json,
)

DEFAULT_TOLERANCES = {"quadrature": 1e-12, "theta": 1e-13}


@dataclass(frozen=True, eq=False)
class Model:
    polytope: LatticePolytope
    weight: ToricWeight
    measure: RadialMeasure


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    model: Model
    k_list: tuple = tuple(range(1, 61))
    t_list: tuple = (0.5, 1.0, 2.0, 4.0)
    u_grid: np.ndarray = field(default_factory=lambda: np.linspace(-4.0, 4.0, 41))
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    out_dir: str | None = None
    seed: int = 7
    lattices: tuple = ()
    random_lattices: dict = field(default_factory=lambda: {"count": 20, "max_rank": 6})
    small_sections_shift: Any = None


def default_model() -> Model:
    P = LatticePolytope.segment(0, 1)
    return Model(P, Canonical(P), RadialMeasure.haar(1))


def _model(obj: dict) -> Model:
    try:
        P = LatticePolytope.from_json(obj["polytope"])
        w = weight_from_json(obj.get("weight", {"kind": "canonical"}), obj["polytope"])
        mobj = dict(obj.get("measure", {"kind": "haar"}))
        if mobj.get("kind") == "monge_ampere" and "weight" not in mobj:
            mu = ma_measure(w)
        else:
            mobj.setdefault("dim", P.dim)
            mu = measure_from_json(mobj, obj["polytope"])
    except ConfigInvalid:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(f"invalid model: {exc}") from exc
    if w.polytope != P:
        raise ConfigInvalid("weight polytope differs from the model polytope")
    if mu.dim != P.dim:
        raise ConfigInvalid("measure dimension differs from the polytope dimension")
    return Model(P, w, mu)


def _u_grid(obj) -> np.ndarray:
    if isinstance(obj, dict):
        return np.linspace(float(obj["start"]), float(obj["stop"]), int(obj["num"]))
    return np.asarray(obj, dtype=float)


def parse_config(obj: dict) -> ExperimentConfig:
    if not isinstance(obj, dict):
        raise ConfigInvalid("configuration must be a JSON object")
    model = _model(obj["model"]) if "model" in obj else default_model()
    scan = obj.get("scan", {})
    try:
        k_list = tuple(int(k) for k in scan.get("k_list", range(1, 61)))
        t_list = tuple(float(t) for t in scan.get("t_list", (0.5, 1.0, 2.0, 4.0)))
        u_grid = _u_grid(scan["u_grid"]) if "u_grid" in scan else np.linspace(-4.0, 4.0, 41)
        tol = dict(DEFAULT_TOLERANCES)
        tol.update({k: float(v) for k, v in obj.get("tolerances", {}).items()})
        seed = int(obj.get("seed", 7))
        lattices = tuple(EuclideanLattice.from_json(x) for x in obj.get("lattices", []))
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigInvalid(f"invalid configuration: {exc}") from exc
    if not k_list or any(k < 1 for k in k_list) or any(b <= a for a, b in zip(k_list, k_list[1:])):
        raise ConfigInvalid("k_list must be a nonempty increasing list of positive integers")
    if any(not t > 0 for t in t_list):
        raise ConfigInvalid("t_list entries must be positive")
    if any(not (v > 0 and math.isfinite(v)) for v in tol.values()):
        raise ConfigInvalid("tolerances must be positive")
    if u_grid.ndim != 1 or len(u_grid) == 0 or not np.all(np.isfinite(u_grid)):
        raise ConfigInvalid("u_grid must be a nonempty list of finite reals")
    rl = {"count": 20, "max_rank": 6}
    rl.update(obj.get("random_lattices", {}))
    shift = obj.get("small_sections_shift")
    if shift is not None and shift != "auto" and not isinstance(shift, (int, float)):
        raise ConfigInvalid("small_sections_shift must be null, 'auto' or a number")
    out = obj.get("output", {}).get("dir")
    return ExperimentConfig(model, k_list, t_list, u_grid, tol, out, seed, lattices, rl, shift)


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return parse_config({})
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigInvalid(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{path} is not valid JSON: {exc}") from exc
    return parse_config(obj)


def apply_shift(cfg: ExperimentConfig) -> Model:
    """The model weight, shifted when ``small_sections_shift`` is set."""
    from .equilibrium import small_sections_shift

    m = cfg.model
    c = cfg.small_sections_shift
    if c is None:
        return m
    if c == "auto":
        c = small_sections_shift(m.weight)
    if c == 0:
        return m
    return Model(m.polytope, Shifted(m.weight, float(c)), m.measure)
