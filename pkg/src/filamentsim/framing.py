"""Framing, twist, and conditioning diagnostics of the complex level set.

The field induces a normal framing of its zero curve: the direction in the
normal plane that the differential maps to the positive real axis.  Total
twist is measured by accumulating the rotation of that framing relative to
discrete parallel transport of the tangent along each loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curves import CurveSet, orthonormal_frame, vertex_tangents
from .errors import SingularJacobian
from .grid import ComplexField, sample_points

__all__ = ["FrameSample", "ConditioningReport", "frame_and_twist", "conditioning_report"]

_DET_TOL = 1e-9


@dataclass
class FrameSample:
    """Framing normal and twist density at one curve vertex."""

    vertex: int
    normal: np.ndarray
    omega: float


@dataclass
class ConditioningReport:
    """Singular values of the normal-plane Jacobian at each vertex."""

    singular_values: np.ndarray  # (N, 2), descending per row

    def summary(self) -> dict:
        sv = self.singular_values
        within = np.all((sv >= 0.8) & (sv <= 1.2), axis=1)
        return {
            "count": int(len(sv)),
            "min": float(sv.min()),
            "max": float(sv.max()),
            "mean": float(sv.mean()),
            "fraction_within_0.8_1.2": float(within.mean()),
        }


def _normal_plane_jacobians(psi: ComplexField, curves: CurveSet, h: float):
    """Finite-difference 2x2 Jacobians of psi restricted to each normal plane.

    Returns (J, tangents, e1, e2) where J has shape (N, 2, 2) and maps
    normal-plane displacements to (Re psi, Im psi).
    """
    dx = psi.spec.spacing
    if not (0.5 * dx <= h <= 2.0 * dx):
        raise ValueError(f"probe offset {h} outside [0.5, 2] spacings")
    tang = vertex_tangents(curves)
    e1, e2 = orthonormal_frame(tang)
    x = curves.vertices
    d1 = (sample_points(psi, x + h * e1) - sample_points(psi, x - h * e1)) / (2.0 * h)
    d2 = (sample_points(psi, x + h * e2) - sample_points(psi, x - h * e2)) / (2.0 * h)
    J = np.empty((len(x), 2, 2))
    J[:, 0, 0], J[:, 0, 1] = d1.real, d2.real
    J[:, 1, 0], J[:, 1, 1] = d1.imag, d2.imag
    return J, tang, e1, e2


def frame_and_twist(
    psi: ComplexField, curves: CurveSet, h: float | None = None
) -> tuple[list[FrameSample], float]:
    """Per-vertex framing normals and the total twist summed over loops.

    The normal at each vertex is the preimage of the positive real axis
    under the probed Jacobian; the twist is its rotation rate relative to
    parallel transport (rotation taking one tangent to the next about
    their common normal), integrated once around each loop.
    """
    h = psi.spec.spacing if h is None else float(h)
    J, tang, e1, e2 = _normal_plane_jacobians(psi, curves, h)
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    if np.any(np.abs(det) < _DET_TOL):
        k = int(np.argmin(np.abs(det)))
        raise SingularJacobian(f"normal-plane Jacobian singular at vertex {k}")
    u1 = J[:, 1, 1] / det
    u2 = -J[:, 1, 0] / det
    normals = u1[:, None] * e1 + u2[:, None] * e2
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)

    samples: list[FrameSample] = []
    total = 0.0
    for s, c in curves.loops:
        T = tang[s : s + c]
        U = normals[s : s + c]
        Tn = np.roll(T, -1, axis=0)
        Un = np.roll(U, -1, axis=0)
        # rotate U_i about the axis taking T_i to T_{i+1}
        axis = np.cross(T, Tn)
        sin_a = np.linalg.norm(axis, axis=1)
        cos_a = np.einsum("ij,ij->i", T, Tn)
        safe = np.where(sin_a > 1e-15, sin_a, 1.0)
        k = axis / safe[:, None]
        rotated = (
            U * cos_a[:, None]
            + np.cross(k, U) * sin_a[:, None]
            + k * np.einsum("ij,ij->i", k, U)[:, None] * (1.0 - cos_a)[:, None]
        )
        rotated = np.where(sin_a[:, None] > 1e-15, rotated, U)
        ang = np.arctan2(
            np.einsum("ij,ij->i", np.cross(rotated, Un), Tn),
            np.einsum("ij,ij->i", rotated, Un),
        )
        edge = np.linalg.norm(
            np.roll(curves.vertices[s : s + c], -1, axis=0) - curves.vertices[s : s + c],
            axis=1,
        )
        total += float(ang.sum()) / (2.0 * math.pi)
        for i in range(c):
            samples.append(FrameSample(vertex=s + i, normal=normals[s + i], omega=float(ang[i] / edge[i])))
    return samples, total


def conditioning_report(
    psi: ComplexField, curves: CurveSet, h: float | None = None
) -> ConditioningReport:
    """Singular values of the probed normal-plane Jacobian at every vertex."""
    h = psi.spec.spacing if h is None else float(h)
    J, _, _, _ = _normal_plane_jacobians(psi, curves, h)
    sv = np.linalg.svd(J, compute_uv=False)
    return ConditioningReport(singular_values=sv)


def twist_density_direct(psi: ComplexField, curves: CurveSet, h: float | None = None) -> np.ndarray:
    """Cross-check twist density from the tangential derivative of the field.

    Evaluated at points offset by ``h`` along the framing normal, where the
    field is nonzero; on the curve itself the expression is singular.
    """
    h = psi.spec.spacing if h is None else float(h)
    samples, _ = frame_and_twist(psi, curves, h)
    normals = np.stack([s.normal for s in samples])
    tang = vertex_tangents(curves)
    probe = curves.vertices + h * normals
    val = sample_points(psi, probe)
    dpsi_t = (sample_points(psi, probe + 0.5 * h * tang) - sample_points(psi, probe - 0.5 * h * tang)) / h
    return -np.real(dpsi_t / (1j * val))
