"""Curve velocity models and their extension to grid vector fields.

The regularized filament kernel is discretized with one midpoint sample per
segment; the off-curve extension is a distance-weighted average of the
per-vertex velocities with a smooth cutoff, so the advecting field matches
the filament velocity on the curve and vanishes at the band edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curves import CurveSet, curvature_vectors
from .errors import SingularEvaluation
from .grid import GridSpec, NarrowBand, VectorField

__all__ = [
    "VelocityModel",
    "ExtensionParams",
    "velocity_field_rm",
    "curve_velocities",
    "extend_velocity",
]

# core smoothing factor of the regularized kernel
_CORE_FACTOR = math.exp(-1.5)


@dataclass(frozen=True)
class VelocityModel:
    """Filament velocity law.

    ``kind`` is one of ``rosenhead_moore`` (regularized self-induction,
    needs ``core_radius > 0``), ``biot_savart`` (singular kernel, off-curve
    field queries only), or ``curve_shortening`` (second arclength
    derivative; ``shrinks=True`` points the velocity toward the center of
    curvature so circles contract).
    """

    kind: str = "rosenhead_moore"
    gamma: float = 1.0
    core_radius: float = 0.05
    shrinks: bool = True

    def __post_init__(self):
        if self.kind not in ("rosenhead_moore", "biot_savart", "curve_shortening"):
            raise ValueError(f"unknown velocity model {self.kind!r}")


@dataclass(frozen=True)
class ExtensionParams:
    """Off-curve extension of the filament velocity.

    ``sigma`` scales the Gaussian weight (in units of the grid spacing);
    the smooth cutoff falls from 1 at ``r0`` to 0 at ``r1``.  ``mode`` is
    ``nonswirling`` (weighted average), ``nearest_point`` (constant
    extrapolation), or ``biot_savart_field`` (raw kernel field).
    """

    sigma: float = 1.0
    r0: float = 0.0
    r1: float = 0.0
    mode: str = "nonswirling"

    def __post_init__(self):
        if self.mode not in ("nonswirling", "nearest_point", "biot_savart_field"):
            raise ValueError(f"unknown extension mode {self.mode!r}")
        if self.r1 < self.r0:
            raise ValueError("cutoff radii must satisfy r0 <= r1")

    @staticmethod
    def for_band(width: float, sigma: float = 1.0, mode: str = "nonswirling"):
        return ExtensionParams(sigma=sigma, r0=0.6 * width, r1=0.9 * width, mode=mode)


def velocity_field_rm(
    curves: CurveSet, points, gamma=None, core_radius=None, chunk: int = 2048
) -> np.ndarray:
    """Induced velocity of the regularized filament kernel at ``points``.

    Midpoint-rule sum over segments; ``core_radius = 0`` recovers the
    singular kernel and is only valid away from the curve.
    """
    gamma = curves.gamma if gamma is None else float(gamma)
    a = curves.core_radius if core_radius is None else float(core_radius)
    if a < 0:
        raise ValueError("core radius must be nonnegative")
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    sa, sb = curves.segment_arrays()
    mid = 0.5 * (sa + sb)
    edge = sb - sa
    a2 = _CORE_FACTOR * a * a
    out = np.empty((len(pts), 3))
    for s in range(0, len(pts), chunk):
        e = min(s + chunk, len(pts))
        r = pts[s:e, None, :] - mid[None, :, :]
        r2 = (r * r).sum(axis=2)
        if a == 0.0 and r2.size and r2.min() < 1e-12:
            raise SingularEvaluation(
                "singular kernel evaluated on the curve; use a positive core radius"
            )
        w = (a2 + r2) ** -1.5
        out[s:e] = (np.cross(edge[None, :, :], r) * w[:, :, None]).sum(axis=1)
    return out * (gamma / (4.0 * math.pi))


def curve_velocities(curves: CurveSet, model: VelocityModel) -> np.ndarray:
    """Velocity at every curve vertex under the given model."""
    if model.kind == "curve_shortening":
        kv = curvature_vectors(curves)
        return kv if model.shrinks else -kv
    if model.kind == "biot_savart" or model.core_radius <= 0.0:
        raise SingularEvaluation(
            "on-curve evaluation requires the regularized kernel with core_radius > 0"
        )
    return velocity_field_rm(curves, curves.vertices, model.gamma, model.core_radius)


def _smooth_cutoff(dist: np.ndarray, r0: float, r1: float) -> np.ndarray:
    """1 below r0, 0 above r1, smoothstep in between."""
    if r1 <= r0:
        return (dist <= r0).astype(np.float64)
    t = np.clip((dist - r0) / (r1 - r0), 0.0, 1.0)
    return 1.0 - t * t * (3.0 - 2.0 * t)


def extend_velocity(
    curves: CurveSet,
    vertex_velocities: np.ndarray,
    spec: GridSpec,
    band: NarrowBand,
    params: ExtensionParams,
    chunk: int = 2048,
) -> VectorField:
    """Extend per-vertex velocities to a grid vector field on the band.

    The weighted average uses Gaussian weights whose variance shrinks with
    the distance to the curve, so the field converges to the filament
    velocity on the curve; exponents are max-shifted before exponentiation
    to stay finite as that variance collapses.
    """
    V = np.asarray(vertex_velocities, dtype=np.float64)
    if V.shape != curves.vertices.shape:
        raise ValueError("vertex velocities must align with curve vertices")

    values = np.zeros(spec.dims + (3,))
    idx = np.nonzero(band.active & (band.dist <= params.r1))
    if len(idx[0]) == 0:
        return VectorField(spec, values)
    pts = spec.origin + spec.spacing * np.stack(idx, axis=1).astype(np.float64)
    dist = band.dist[idx]
    cut = _smooth_cutoff(dist, params.r0, params.r1)

    sa, sb = curves.segment_arrays()
    if params.mode == "biot_savart_field":
        vel = velocity_field_rm(curves, pts)
    elif params.mode == "nearest_point":
        seg = band.nearest[idx]
        u = sb[seg] - sa[seg]
        uu = (u * u).sum(axis=1)
        t = np.clip(((pts - sa[seg]) * u).sum(axis=1) / np.where(uu > 0, uu, 1.0), 0.0, 1.0)
        Va, Vb = _segment_endpoint_velocities(curves, V)
        vel = (1.0 - t)[:, None] * Va[seg] + t[:, None] * Vb[seg]
    else:
        mid = 0.5 * (sa + sb)
        seg_len = np.linalg.norm(sb - sa, axis=1)
        Va, Vb = _segment_endpoint_velocities(curves, V)
        Vmid = 0.5 * (Va + Vb)
        sig2 = (params.sigma * spec.spacing) ** 2
        vel = np.empty_like(pts)
        for s in range(0, len(pts), chunk):
            e = min(s + chunk, len(pts))
            r2 = ((pts[s:e, None, :] - mid[None, :, :]) ** 2).sum(axis=2)
            expo = -r2 / (sig2 * np.maximum(dist[s:e, None], 1e-300))
            expo -= expo.max(axis=1, keepdims=True)
            w = np.exp(expo) * seg_len[None, :]
            wsum = w.sum(axis=1)
            vel[s:e] = (w[:, :, None] * Vmid[None, :, :]).sum(axis=1) / wsum[:, None]

    values[idx] = vel * cut[:, None]
    return VectorField(spec, values)


def _segment_endpoint_velocities(curves: CurveSet, V: np.ndarray):
    """Velocities at segment start/end points in flat segment order."""
    starts, ends = [], []
    for s, c in curves.loops:
        block = V[s : s + c]
        starts.append(block)
        ends.append(np.roll(block, -1, axis=0))
    return np.concatenate(starts), np.concatenate(ends)
