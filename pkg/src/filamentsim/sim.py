"""Main time integration: velocity evaluation, advection, extraction, redistancing.

Each step runs the four phases in order and accumulates their wall time
under the names used by the timing table.  Redistancing (rebuilding the
field from the freshly extracted curves) happens every
``redistance_interval`` frames unless the matching ablation disables it;
emitted rings join the curve set right before redistancing so the new
loop enters the field immediately.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import io
from .config import Emitter, SimConfig, serialize_config
from .curves import CurveSet, make_ring
from .dynamics import ExtensionParams, VelocityModel, curve_velocities, extend_velocity, velocity_field_rm
from .errors import CurveOutsideGrid, EmptyCurves, FilamentError
from .grid import ComplexField, GridSpec, VectorField, build_narrow_band
from .levelset import advect_maccormack, extract_curves
from .solidangle import construct_psi, perturb_twist

__all__ = ["SimState", "init", "init_from_config", "step", "emit", "advect_markers", "run"]


@dataclass
class SimState:
    psi: ComplexField
    curves: CurveSet
    band: object
    markers: np.ndarray
    markers_active: np.ndarray
    frame: int
    timings: list = field(default_factory=list)


def _check_clearance(curves: CurveSet, spec: GridSpec, width: float):
    if curves.is_empty():
        return
    lo, hi = curves.bounding_box()
    if np.any(lo - width < spec.origin) or np.any(hi + width > spec.upper):
        raise CurveOutsideGrid(
            f"curves with band clearance {width:.3g} exceed the grid box "
            f"[{spec.origin.tolist()}, {spec.upper.tolist()}]"
        )


def _velocity_model(config: SimConfig) -> VelocityModel:
    return VelocityModel(
        kind=config.velocity_model,
        gamma=config.gamma,
        core_radius=config.core_radius,
        shrinks=config.shortening_shrinks,
    )


def _extension_params(config: SimConfig) -> ExtensionParams:
    mode = "nonswirling"
    if config.ablation == "naive_bs":
        mode = "biot_savart_field"
    elif config.ablation == "nearest_point":
        mode = "nearest_point"
    width = config.band_width
    return ExtensionParams(
        sigma=config.sigma,
        r0=config.cutoff_r0_frac * width,
        r1=config.cutoff_r1_frac * width,
        mode=mode,
    )


def _build_field(curves: CurveSet, spec: GridSpec, config: SimConfig):
    band = build_narrow_band(curves, spec, config.band_width)
    psi = construct_psi(curves, spec, band)
    if config.ablation == "twisted":
        psi = perturb_twist(psi, band, config.twist_per_cell / spec.spacing)
    return band, psi


def init(curves: CurveSet, config: SimConfig, spec: GridSpec | None = None) -> SimState:
    """Build the initial state: band, field, markers, frame 0."""
    for em in config.emitters:
        curves = _append_ring(curves, em, config)
    if curves.is_empty():
        raise EmptyCurves("no initial curves and no emitters")
    spec = config.grid_spec(curves) if spec is None else spec
    _check_clearance(curves, spec, config.band_width)
    band, psi = _build_field(curves, spec, config)

    if config.marker_count > 0:
        rng = np.random.default_rng(config.seed)
        lo, hi = (np.asarray(v, dtype=np.float64) for v in config.marker_box)
        markers = rng.uniform(lo, hi, size=(config.marker_count, 3))
    else:
        markers = np.zeros((0, 3))
    return SimState(
        psi=psi,
        curves=curves,
        band=band,
        markers=markers,
        markers_active=np.ones(len(markers), dtype=bool),
        frame=0,
    )


def init_from_config(config: SimConfig) -> SimState:
    return init(config.initial_curves(), config)


def _append_ring(curves: CurveSet, emitter: Emitter, config: SimConfig) -> CurveSet:
    ring = make_ring(emitter.radius, emitter.center, emitter.axis, emitter.count)
    if curves.is_empty():
        return CurveSet(ring, [(0, len(ring))], config.gamma, config.core_radius)
    verts = np.concatenate([curves.vertices, ring])
    loops = list(curves.loops) + [(len(curves.vertices), len(ring))]
    return CurveSet(verts, loops, curves.gamma, curves.core_radius)


def emit(state: SimState, emitter: Emitter, config: SimConfig) -> SimState:
    """Append an emitter ring; the field absorbs it at the next redistance."""
    curves = _append_ring(state.curves, emitter, config)
    _check_clearance(curves, state.psi.spec, config.band_width)
    return replace(state, curves=curves)


def advect_markers(markers, curves: CurveSet, gamma, core_radius, dt) -> np.ndarray:
    """One RK4 step of passive markers through the regularized kernel field."""
    if len(markers) == 0 or curves.is_empty() or gamma == 0.0:
        return np.asarray(markers, dtype=np.float64).copy()
    x = np.asarray(markers, dtype=np.float64)
    vel = lambda p: velocity_field_rm(curves, p, gamma, core_radius)
    k1 = vel(x)
    k2 = vel(x + 0.5 * dt * k1)
    k3 = vel(x + 0.5 * dt * k2)
    k4 = vel(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step(state: SimState, config: SimConfig) -> SimState:
    """Advance one frame; returns the new state with timing appended."""
    spec = state.psi.spec
    dx = spec.spacing
    frame = state.frame + 1
    t_start = time.perf_counter()
    timing = {"frame": frame}

    # evaluate the filament velocity and extend it over the band
    t0 = time.perf_counter()
    if state.curves.is_empty():
        v = VectorField(spec, np.zeros(spec.dims + (3,)))
    else:
        params = _extension_params(config)
        if params.mode == "biot_savart_field":
            vertex_v = np.zeros_like(state.curves.vertices)
        else:
            vertex_v = curve_velocities(state.curves, _velocity_model(config))
        v = extend_velocity(state.curves, vertex_v, spec, state.band, params)
    timing["evaluate_v"] = time.perf_counter() - t0

    # transport the level set
    t0 = time.perf_counter()
    if state.curves.is_empty():
        psi_adv = state.psi
    else:
        psi_adv = advect_maccormack(state.psi, v, config.dt, state.band)
    timing["advect_psi"] = time.perf_counter() - t0

    # extract the zero curves
    t0 = time.perf_counter()
    if state.curves.is_empty():
        curves = state.curves
    else:
        curves = extract_curves(
            psi_adv,
            state.band,
            min_vertices=config.min_loop_vertices,
            min_length=config.min_loop_length_cells * dx,
            gamma=config.gamma,
            core_radius=config.core_radius,
        )
    timing["construct_gamma"] = time.perf_counter() - t0

    for em in config.emitters:
        if frame % em.period == 0:
            curves = _append_ring(curves, em, config)

    # rebuild band and redistance the field
    t0 = time.perf_counter()
    band = state.band
    psi = psi_adv
    if not curves.is_empty():
        _check_clearance(curves, spec, config.band_width)
        band = build_narrow_band(curves, spec, config.band_width)
        due = frame % config.redistance_interval == 0
        if config.ablation == "no_redistance":
            due = False
        if due:
            psi = construct_psi(curves, spec, band)
            if config.ablation == "twisted":
                psi = perturb_twist(psi, band, config.twist_per_cell / dx)
    timing["construct_psi"] = time.perf_counter() - t0

    markers = state.markers
    markers_active = state.markers_active
    if len(markers) and config.velocity_model == "rosenhead_moore":
        moved = advect_markers(
            markers[markers_active], curves, config.gamma, config.core_radius, config.dt
        )
        markers = markers.copy()
        markers[markers_active] = moved
        markers_active = markers_active & np.asarray(
            [bool(c) for c in spec.contains(markers)]
        )

    named = sum(timing[k] for k in ("evaluate_v", "advect_psi", "construct_gamma", "construct_psi"))
    timing["other"] = max(time.perf_counter() - t_start - named, 0.0)

    return SimState(
        psi=psi,
        curves=curves,
        band=band,
        markers=markers,
        markers_active=markers_active,
        frame=frame,
        timings=state.timings + [timing],
    )


def run(config: SimConfig, out_dir, export_grid: bool = False) -> dict:
    """Run ``config.steps`` frames, exporting artifacts per frame.

    Returns the manifest (config echo, file paths, timing rows); also
    written to ``manifest.json``.  Errors are re-raised annotated with the
    frame at which they occurred.
    """
    os.makedirs(out_dir, exist_ok=True)
    state = init_from_config(config)
    manifest = {"config": serialize_config(config), "frames": [], "timings_csv": None}

    def export_frame(st):
        entry = {"frame": st.frame}
        path = os.path.join(out_dir, f"curves_{st.frame:04d}.obj")
        io.export_curves_obj(st.curves, path)
        entry["curves"] = path
        if export_grid:
            path = os.path.join(out_dir, f"psi_{st.frame:04d}.vti")
            io.export_grid_vti(st.psi, path)
            entry["psi"] = path
        if len(st.markers):
            path = os.path.join(out_dir, f"markers_{st.frame:04d}.csv")
            io.export_markers_csv(st.markers, st.markers_active, path)
            entry["markers"] = path
        manifest["frames"].append(entry)

    export_frame(state)
    for _ in range(config.steps):
        try:
            state = step(state, config)
        except FilamentError as exc:
            exc.frame = state.frame + 1
            raise
        export_frame(state)
        if state.curves.is_empty() and not config.emitters:
            break

    csv_path = os.path.join(out_dir, "timings.csv")
    io.export_timings_csv(state.timings, csv_path)
    manifest["timings_csv"] = csv_path
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest
