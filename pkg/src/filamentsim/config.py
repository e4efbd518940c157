"""Simulation configuration: schema-validated JSON documents.

Unknown fields are rejected with the offending path so typos never pass
silently; values outside soft guidance ranges only warn.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .curves import CurveSet, scene_preset
from .errors import SchemaError
from .grid import GridSpec

__all__ = ["Emitter", "SimConfig", "parse_config", "serialize_config", "load_config"]

ABLATIONS = ("none", "naive_bs", "nearest_point", "no_redistance", "twisted")
VELOCITY_MODELS = ("rosenhead_moore", "curve_shortening")


@dataclass
class Emitter:
    period: int
    radius: float = 0.4
    center: tuple = (0.0, 0.0, 0.0)
    axis: tuple = (0.0, 0.0, 1.0)
    count: int = 256

    def __post_init__(self):
        if self.period < 1:
            raise SchemaError("emitter period must be >= 1", field="emitters.period")


@dataclass
class SimConfig:
    scene: str
    dims: tuple
    spacing: float
    scene_params: dict = field(default_factory=dict)
    origin: tuple | None = None
    gamma: float = 1.0
    core_radius: float = 0.05
    dt: float = 1.0 / 24.0
    steps: int = 0
    band_width_cells: float = 6.0
    sigma: float = 1.0
    cutoff_r0_frac: float = 0.6
    cutoff_r1_frac: float = 0.9
    redistance_interval: int = 1
    ablation: str = "none"
    twist_per_cell: float = 0.05
    velocity_model: str = "rosenhead_moore"
    shortening_shrinks: bool = True
    emitters: list = field(default_factory=list)
    marker_count: int = 0
    marker_box: tuple | None = None
    min_loop_vertices: int = 4
    min_loop_length_cells: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.dt <= 0:
            raise SchemaError("dt must be positive", field="dt")
        if self.redistance_interval < 1:
            raise SchemaError("redistance_interval must be >= 1", field="redistance_interval")
        if self.ablation not in ABLATIONS:
            raise SchemaError(f"ablation must be one of {ABLATIONS}", field="ablation")
        if self.velocity_model not in VELOCITY_MODELS:
            raise SchemaError(
                f"velocity_model must be one of {VELOCITY_MODELS}", field="velocity_model"
            )
        if not (0.1 <= self.sigma <= 10.0):
            warnings.warn(
                f"sigma={self.sigma} outside the stable guidance range [0.1, 10]",
                stacklevel=2,
            )
        if self.marker_count > 0 and self.marker_box is None:
            raise SchemaError("marker_box required when marker_count > 0", field="marker_box")

    @property
    def band_width(self) -> float:
        return self.band_width_cells * self.spacing

    def initial_curves(self) -> CurveSet:
        params = dict(self.scene_params)
        params.setdefault("gamma", self.gamma)
        params.setdefault("core_radius", self.core_radius)
        return scene_preset(self.scene, params)

    def grid_spec(self, curves: CurveSet | None = None) -> GridSpec:
        if self.origin is not None:
            return GridSpec(tuple(self.dims), np.asarray(self.origin), self.spacing)
        if curves is None or curves.is_empty():
            raise SchemaError("origin required when the scene has no initial curves", field="origin")
        lo, hi = curves.bounding_box()
        center = 0.5 * (lo + hi)
        extent = self.spacing * (np.array(self.dims, dtype=np.float64) - 1.0)
        return GridSpec(tuple(self.dims), center - 0.5 * extent, self.spacing)


_TOP_FIELDS = {
    "scene": str,
    "dims": list,
    "spacing": (int, float),
    "scene_params": dict,
    "origin": list,
    "gamma": (int, float),
    "core_radius": (int, float),
    "dt": (int, float),
    "steps": int,
    "band_width_cells": (int, float),
    "sigma": (int, float),
    "cutoff_r0_frac": (int, float),
    "cutoff_r1_frac": (int, float),
    "redistance_interval": int,
    "ablation": str,
    "twist_per_cell": (int, float),
    "velocity_model": str,
    "shortening_shrinks": bool,
    "emitters": list,
    "marker_count": int,
    "marker_box": list,
    "min_loop_vertices": int,
    "min_loop_length_cells": (int, float),
    "seed": int,
}

_EMITTER_FIELDS = {
    "period": int,
    "radius": (int, float),
    "center": list,
    "axis": list,
    "count": int,
}


def parse_config(doc) -> SimConfig:
    """Validate a configuration document (dict or JSON text)."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("configuration must be a JSON object")

    for key, value in doc.items():
        if key not in _TOP_FIELDS:
            raise SchemaError(f"unknown configuration field {key!r}", field=key)
        expected = _TOP_FIELDS[key]
        if value is not None and not isinstance(value, expected):
            raise SchemaError(f"field {key!r} has wrong type {type(value).__name__}", field=key)
    for required in ("scene", "dims", "spacing"):
        if required not in doc:
            raise SchemaError(f"missing required field {required!r}", field=required)
    if len(doc["dims"]) != 3:
        raise SchemaError("dims must have three entries", field="dims")

    emitters = []
    for n, e in enumerate(doc.get("emitters") or []):
        if not isinstance(e, dict):
            raise SchemaError(f"emitters[{n}] must be an object", field=f"emitters[{n}]")
        for key, value in e.items():
            if key not in _EMITTER_FIELDS:
                raise SchemaError(
                    f"unknown emitter field {key!r}", field=f"emitters[{n}].{key}"
                )
            if not isinstance(value, _EMITTER_FIELDS[key]):
                raise SchemaError(
                    f"emitter field {key!r} has wrong type", field=f"emitters[{n}].{key}"
                )
        if "period" not in e:
            raise SchemaError("emitter needs a period", field=f"emitters[{n}].period")
        kw = dict(e)
        for tup in ("center", "axis"):
            if tup in kw:
                kw[tup] = tuple(kw[tup])
        emitters.append(Emitter(**kw))

    kwargs = dict(doc)
    kwargs["dims"] = tuple(doc["dims"])
    for tup in ("origin", "marker_box"):
        if kwargs.get(tup) is not None:
            kwargs[tup] = tuple(
                tuple(v) if isinstance(v, list) else v for v in kwargs[tup]
            )
    kwargs["emitters"] = emitters
    return SimConfig(**kwargs)


def load_config(path) -> SimConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def serialize_config(config: SimConfig) -> dict:
    """Canonical plain-dict form; parse(serialize(c)) == serialize-stable."""
    out = {
        "scene": config.scene,
        "dims": list(config.dims),
        "spacing": config.spacing,
        "scene_params": dict(config.scene_params),
        "gamma": config.gamma,
        "core_radius": config.core_radius,
        "dt": config.dt,
        "steps": config.steps,
        "band_width_cells": config.band_width_cells,
        "sigma": config.sigma,
        "cutoff_r0_frac": config.cutoff_r0_frac,
        "cutoff_r1_frac": config.cutoff_r1_frac,
        "redistance_interval": config.redistance_interval,
        "ablation": config.ablation,
        "twist_per_cell": config.twist_per_cell,
        "velocity_model": config.velocity_model,
        "shortening_shrinks": config.shortening_shrinks,
        "emitters": [
            {
                "period": e.period,
                "radius": e.radius,
                "center": list(e.center),
                "axis": list(e.axis),
                "count": e.count,
            }
            for e in config.emitters
        ],
        "marker_count": config.marker_count,
        "min_loop_vertices": config.min_loop_vertices,
        "min_loop_length_cells": config.min_loop_length_cells,
        "seed": config.seed,
    }
    if config.origin is not None:
        out["origin"] = list(config.origin)
    if config.marker_box is not None:
        out["marker_box"] = [list(v) for v in config.marker_box]
    return out
