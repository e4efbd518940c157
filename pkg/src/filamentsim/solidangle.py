"""Solid-angle distance construction of the complex level set function.

The field is ``psi(x) = dist(curves, x) * exp(i * theta(x))`` where
``theta`` is half the signed solid angle subtended by the curves at ``x``.
The solid angle is accumulated as a fan of spherical triangles anchored at
the fixed pole Z = (1, 0, 0); observation points whose projected polygon
grazes the pole (or its antipode) are nudged off the degenerate
configuration before evaluation.
"""

from __future__ import annotations

import math

import numpy as np

from .curves import CurveSet, distance_and_nearest
from .errors import EmptyCurves, OnCurve
from .grid import ComplexField, GridSpec, NarrowBand

__all__ = [
    "spherical_triangle_area",
    "signed_spherical_area",
    "solid_angle",
    "construct_psi",
    "perturb_twist",
]

POLE = np.array([1.0, 0.0, 0.0])

_TINY_ARC = 1e-12
_POLE_TOL = 1e-9
# fixed axis-skewed nudge direction for degenerate observers
_NUDGE_DIR = np.array([0.7155417527999327, 0.5183691762556559, 0.4682678842685296])


def spherical_triangle_area(q1, q2, q3) -> float:
    """Unsigned area of the spherical triangle (q1, q2, q3) in steradians.

    Inputs must be unit vectors.  Triangles with two vertices closer than
    1e-12 in angle return 0 by convention.
    """
    q = np.stack([np.asarray(v, dtype=np.float64) for v in (q1, q2, q3)])
    if np.any(np.abs(np.linalg.norm(q, axis=1) - 1.0) > 1e-9):
        raise ValueError("spherical triangle vertices must be unit vectors")
    for a, b in ((0, 1), (1, 2), (2, 0)):
        if np.linalg.norm(q[a] - q[b]) < _TINY_ARC:
            return 0.0
    total = -math.pi
    for i in range(3):
        u = np.cross(q[(i - 1) % 3], q[i])
        v = np.cross(q[i], q[(i + 1) % 3])
        nu, nv = np.linalg.norm(u), np.linalg.norm(v)
        if nu < _TINY_ARC or nv < _TINY_ARC:
            return 0.0
        total += math.acos(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))
    return float(total)


def _fan_signed_area(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Signed area of spherical polygons via a triangle fan from (1, 0, 0).

    ``points``: (M, V, 3) unit vectors, one closed polygon per row (cyclic
    indexing).  Returns ``(area, grazing)`` where ``grazing`` flags rows
    whose boundary passes within ~1e-9 of the pole or its antipode; those
    rows drop a full-sphere wrap and must be re-evaluated from a nudged
    observer.  Edges subtending < 1e-12 rad contribute zero.

    With the pole pinned to the x axis, cross products against it reduce
    to component swaps, so everything is plain elementwise arithmetic.
    """
    px, py, pz = points[..., 0], points[..., 1], points[..., 2]
    qx, qy, qz = (np.roll(v, -1, axis=1) for v in (px, py, pz))

    # |p x pole| = hypot(p_z, p_y) since the pole is the x axis
    norm_cp = np.hypot(py, pz)
    norm_cq = np.hypot(qy, qz)

    nx = py * qz - pz * qy
    ny = pz * qx - px * qz
    nz = px * qy - py * qx
    norm_n = np.sqrt(nx * nx + ny * ny + nz * nz)

    ok = (norm_n > _TINY_ARC) & (norm_cp > _TINY_ARC) & (norm_cq > _TINY_ARC)
    safe_n = np.where(norm_n > _TINY_ARC, norm_n, 1.0)

    # Oriented area of each fan triangle (pole, p, q), branch-safe: the
    # half-angle arctangent form never mistakes a triangle for its
    # complement, unlike summing unsigned corner angles.
    den = 1.0 + (px * qx + py * qy + pz * qz) + px + qx
    area = np.where(ok, 2.0 * np.arctan2(-nx, den), 0.0).sum(axis=1)

    # An arc grazes +-pole when its great-circle plane contains the x axis
    # and the axis pierces it between the endpoints.  A projected vertex
    # sitting on the axis silently degenerates its two fan triangles, so
    # it is flagged as well.
    suspect = ok & (np.abs(nx) < _POLE_TOL * safe_n)
    grazing = (norm_cp < _POLE_TOL).any(axis=1)
    if suspect.any():
        rows, cols = np.nonzero(suspect)
        cpn = pz[rows, cols] * ny[rows, cols] - py[rows, cols] * nz[rows, cols]
        cqn = qz[rows, cols] * ny[rows, cols] - qy[rows, cols] * nz[rows, cols]
        tol = _POLE_TOL * safe_n[rows, cols]
        hit = ((cpn >= -tol) & (-cqn >= -tol)) | ((-cpn >= -tol) & (cqn >= -tol))
        grazing[rows[hit]] = True
    return area, grazing


def signed_spherical_area(points, pole=POLE) -> float:
    """Signed spherical area enclosed by one polygon of unit vectors.

    A pole other than (1, 0, 0) is handled by rotating the polygon so the
    pole lands on the x axis; the area is rotation invariant.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 3:
        raise ValueError("need at least 3 unit vectors of dimension 3")
    if np.any(np.abs(np.linalg.norm(pts, axis=1) - 1.0) > 1e-9):
        raise ValueError("polygon vertices must be unit vectors")
    pole = np.asarray(pole, dtype=np.float64)
    pole = pole / np.linalg.norm(pole)
    if not np.allclose(pole, POLE, atol=1e-15):
        pts = pts @ _rotation_to_x(pole).T
    area, _ = _fan_signed_area(pts[None])
    return float(area[0])


def _rotation_to_x(pole: np.ndarray) -> np.ndarray:
    """Rotation matrix taking unit ``pole`` to (1, 0, 0)."""
    c = float(pole[0])
    if c < -1.0 + 1e-15:
        return np.diag([-1.0, -1.0, 1.0])
    axis = np.cross(pole, POLE)
    s = np.linalg.norm(axis)
    if s < 1e-15:
        return np.eye(3)
    k = axis / s
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + s * K + (1.0 - c) * (K @ K)


def _project(curve_pts: np.ndarray, obs: np.ndarray) -> np.ndarray:
    """Project loop vertices onto unit spheres centered at each observer."""
    d = curve_pts[None, :, :] - obs[:, None, :]
    r = np.linalg.norm(d, axis=2, keepdims=True)
    return d / np.where(r > 0.0, r, 1.0)


def solid_angle_batch(
    curves: CurveSet,
    points: np.ndarray,
    nudge_scale: float,
    chunk: int = 2048,
) -> np.ndarray:
    """Solid angle subtended by all loops at each observation point.

    Observers on a pole-degenerate configuration are retried from nudged
    positions (irrelevant at the level of theta mod 2pi, which is the only
    consumer).  ``nudge_scale`` sets the retry displacement.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    out = np.zeros(len(points))
    for s in range(0, len(points), chunk):
        e = min(s + chunk, len(points))
        obs = points[s:e]
        total = np.zeros(e - s)
        for li in range(curves.loop_count):
            pts = curves.loop_vertices(li)
            area, bad = _fan_signed_area(_project(pts, obs))
            for attempt in range(1, 4):
                if not bad.any():
                    break
                moved = obs[bad] + attempt * nudge_scale * _NUDGE_DIR
                area_b, still = _fan_signed_area(_project(pts, moved))
                area[bad] = area_b
                nxt = np.zeros_like(bad)
                nxt[bad] = still
                bad = nxt
            if bad.any():
                raise OnCurve("solid angle evaluation degenerate even after nudging")
            total += area
        out[s:e] = total
    return out


def solid_angle(curves: CurveSet, x) -> float:
    """Signed solid angle (steradians, not reduced mod 4pi) at point ``x``."""
    if curves.is_empty():
        raise EmptyCurves("solid angle of empty curve set")
    x = np.asarray(x, dtype=np.float64).reshape(3)
    lo, hi = curves.bounding_box()
    scale = max(float(np.linalg.norm(hi - lo)), 1.0)
    dist, _, _ = distance_and_nearest(x, curves)
    if dist < 1e-9 * scale:
        raise OnCurve(f"observation point lies on the curve (dist={dist:g})")
    return float(solid_angle_batch(curves, x[None], nudge_scale=1e-7 * scale)[0])


def phase_from_solid_angle(omega: np.ndarray) -> np.ndarray:
    """theta = (omega / 2) mod 2pi, mapped to (-pi, pi]."""
    th = np.remainder(0.5 * np.asarray(omega), 2.0 * math.pi)
    return np.where(th > math.pi, th - 2.0 * math.pi, th)


def construct_psi(curves: CurveSet, spec: GridSpec, band: NarrowBand) -> ComplexField:
    """Build ``psi = dist * exp(i * theta)`` on the active band.

    Inactive nodes carry the sentinel ``width * exp(0j)``; extraction never
    reads them (cells touching the band edge are excluded there).
    Nodes lying on the curve have their phase evaluated from a point nudged
    along the grid axis least aligned with the local tangent.
    """
    if curves.is_empty():
        raise EmptyCurves("cannot construct the level set of an empty curve set")
    dx = spec.spacing
    values = np.full(spec.dims, band.width + 0.0j, dtype=np.complex128)

    idx = np.nonzero(band.active)
    pts = spec.origin + dx * np.stack(idx, axis=1).astype(np.float64)
    dist = band.dist[idx]

    on_curve = dist < 1e-6 * dx
    if on_curve.any():
        a, b = curves.segment_arrays()
        seg = band.nearest[idx][on_curve]
        tang = b[seg] - a[seg]
        tang /= np.linalg.norm(tang, axis=1, keepdims=True)
        axis = np.argmin(np.abs(tang), axis=1)
        shift = np.zeros((on_curve.sum(), 3))
        shift[np.arange(len(axis)), axis] = 1e-3 * dx
        pts = pts.copy()
        pts[on_curve] += shift

    omega = solid_angle_batch(curves, pts, nudge_scale=1e-7 * dx)
    theta = phase_from_solid_angle(omega)
    values[idx] = dist * np.exp(1j * theta)
    return ComplexField(spec, values)


def perturb_twist(psi: ComplexField, band: NarrowBand, c: float) -> ComplexField:
    """Multiply the field by ``exp(i * c * dist)`` on active nodes.

    The zero set is unchanged; only the phase acquires a radial ramp.
    """
    values = psi.values.copy()
    idx = band.active
    values[idx] = values[idx] * np.exp(1j * c * band.dist[idx])
    return ComplexField(psi.spec, values)
