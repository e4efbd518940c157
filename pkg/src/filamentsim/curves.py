"""Oriented closed polyline loops: storage, measures, queries, and scene presets.

A :class:`CurveSet` stores one or more closed loops in a flat vertex array.
Every loop is implicitly closed from its last vertex back to its first, and
all loops share one circulation strength and one core thickness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSegment, EmptyCurves, UnknownScene

__all__ = [
    "CurveSet",
    "distance_and_nearest",
    "writhe",
    "curvature_vectors",
    "scene_preset",
    "orthonormal_frame",
]

_MIN_EDGE = 1e-12


@dataclass
class CurveSet:
    """Closed polyline loops with circulation ``gamma`` and core radius ``core_radius``."""

    vertices: np.ndarray
    loops: list[tuple[int, int]]
    gamma: float = 1.0
    core_radius: float = 0.05

    _segments: tuple[np.ndarray, np.ndarray] | None = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.loops = [(int(s), int(c)) for s, c in self.loops]
        for s, c in self.loops:
            if c < 3:
                raise ValueError(f"loop at {s} has {c} vertices; need at least 3")
            if s < 0 or s + c > len(self.vertices):
                raise ValueError(f"loop ({s}, {c}) exceeds vertex array")

    def is_empty(self) -> bool:
        return len(self.loops) == 0

    @property
    def loop_count(self) -> int:
        return len(self.loops)

    def loop_vertices(self, i: int) -> np.ndarray:
        s, c = self.loops[i]
        return self.vertices[s : s + c]

    def segment_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Start and end points of every segment, all loops concatenated."""
        if self._segments is None:
            starts, ends = [], []
            for s, c in self.loops:
                pts = self.vertices[s : s + c]
                starts.append(pts)
                ends.append(np.roll(pts, -1, axis=0))
            if starts:
                self._segments = (np.concatenate(starts), np.concatenate(ends))
            else:
                self._segments = (np.zeros((0, 3)), np.zeros((0, 3)))
        return self._segments

    def segment_loop_ids(self) -> np.ndarray:
        ids = np.empty(sum(c for _, c in self.loops), dtype=np.int64)
        ofs = 0
        for li, (_, c) in enumerate(self.loops):
            ids[ofs : ofs + c] = li
            ofs += c
        return ids

    def segment_lengths(self) -> np.ndarray:
        a, b = self.segment_arrays()
        return np.linalg.norm(b - a, axis=1)

    def total_length(self) -> float:
        return float(self.segment_lengths().sum())

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.is_empty():
            raise EmptyCurves("empty curve set has no bounding box")
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def transformed(self, rotation=None, translation=None, scale=1.0) -> "CurveSet":
        v = self.vertices * scale
        if rotation is not None:
            v = v @ np.asarray(rotation).T
        if translation is not None:
            v = v + np.asarray(translation)
        return CurveSet(v, list(self.loops), self.gamma, self.core_radius)


def distance_and_nearest(x, curves: CurveSet):
    """Global minimum distance from ``x`` to the curves.

    Returns ``(dist, point, segment)`` where ``point`` lies on the
    minimizing segment with flat index ``segment``.
    """
    if curves.is_empty():
        raise EmptyCurves("distance query on empty curve set")
    x = np.asarray(x, dtype=np.float64).reshape(3)
    a, b = curves.segment_arrays()
    u = b - a
    uu = (u * u).sum(axis=1)
    uu = np.where(uu > 0.0, uu, 1.0)
    t = np.clip(((x - a) * u).sum(axis=1) / uu, 0.0, 1.0)
    closest = a + t[:, None] * u
    d2 = ((x - closest) ** 2).sum(axis=1)
    j = int(np.argmin(d2))
    return float(np.sqrt(d2[j])), closest[j], j


def _pair_solid_angles(a1, b1, a2, b2):
    """Signed solid angle of each segment pair (Klenin & Langowski, method 1a).

    Inputs are (M, 3) arrays: pair m is segment (a1[m], b1[m]) against
    segment (a2[m], b2[m]).  Degenerate pairs contribute zero.
    """
    r12 = b1 - a1
    r34 = b2 - a2
    r13 = a2 - a1
    r14 = b2 - a1
    r23 = a2 - b1
    r24 = b2 - b1

    def unit(v):
        n = np.linalg.norm(v, axis=1, keepdims=True)
        ok = n[:, 0] > _MIN_EDGE
        return np.where(ok[:, None], v / np.where(ok[:, None], n, 1.0), 0.0), ok

    n1, ok1 = unit(np.cross(r13, r14))
    n2, ok2 = unit(np.cross(r14, r24))
    n3, ok3 = unit(np.cross(r24, r23))
    n4, ok4 = unit(np.cross(r23, r13))
    ok = ok1 & ok2 & ok3 & ok4

    def asin_dot(u, v):
        return np.arcsin(np.clip((u * v).sum(axis=1), -1.0, 1.0))

    omega = asin_dot(n1, n2) + asin_dot(n2, n3) + asin_dot(n3, n4) + asin_dot(n4, n1)
    sign = np.sign(np.einsum("ij,ij->i", np.cross(r34, r12), r13))
    return np.where(ok, omega * sign, 0.0)


def writhe(curves: CurveSet) -> float:
    """Discrete Gauss double integral over non-adjacent segment pairs.

    Multi-loop sets return the sum of per-loop self-writhes only; the
    inter-loop (linking) terms are excluded.
    """
    if curves.is_empty():
        raise EmptyCurves("writhe of empty curve set")
    if np.any(curves.segment_lengths() < _MIN_EDGE):
        raise DegenerateSegment("segment shorter than 1e-12")

    total = 0.0
    for li in range(curves.loop_count):
        pts = curves.loop_vertices(li)
        n = len(pts)
        a = pts
        b = np.roll(pts, -1, axis=0)
        ii, jj = np.triu_indices(n, k=2)
        # (0, n-1) are adjacent through the closure edge
        keep = ~((ii == 0) & (jj == n - 1))
        ii, jj = ii[keep], jj[keep]
        omega = _pair_solid_angles(a[ii], b[ii], a[jj], b[jj])
        total += float(omega.sum()) / (2.0 * math.pi)
    return total


def curvature_vectors(curves: CurveSet) -> np.ndarray:
    """Second arclength derivative at each vertex (three-point formula).

    For a circle the vectors point toward the center with magnitude 1/R.
    Returns an array aligned with ``curves.vertices``.
    """
    if curves.is_empty():
        raise EmptyCurves("curvature of empty curve set")
    out = np.zeros_like(curves.vertices)
    for s, c in curves.loops:
        pts = curves.vertices[s : s + c]
        fwd = np.roll(pts, -1, axis=0) - pts
        bwd = pts - np.roll(pts, 1, axis=0)
        lf = np.linalg.norm(fwd, axis=1)
        lb = np.linalg.norm(bwd, axis=1)
        if np.any(lf < _MIN_EDGE):
            raise DegenerateSegment("segment shorter than 1e-12")
        out[s : s + c] = 2.0 * (fwd / lf[:, None] - bwd / lb[:, None]) / (lf + lb)[:, None]
    return out


def vertex_tangents(curves: CurveSet) -> np.ndarray:
    """Unit tangent at each vertex from the central difference of neighbors."""
    out = np.zeros_like(curves.vertices)
    for s, c in curves.loops:
        pts = curves.vertices[s : s + c]
        t = np.roll(pts, -1, axis=0) - np.roll(pts, 1, axis=0)
        n = np.linalg.norm(t, axis=1, keepdims=True)
        out[s : s + c] = t / np.where(n > _MIN_EDGE, n, 1.0)
    return out


def orthonormal_frame(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic right-handed basis of the plane normal to unit ``n``.

    Branchless construction (Frisvad-style); accepts (..., 3) input.
    """
    n = np.asarray(n, dtype=np.float64)
    s = np.copysign(1.0, n[..., 2])
    a = -1.0 / (s + n[..., 2])
    b = n[..., 0] * n[..., 1] * a
    e1 = np.stack(
        [1.0 + s * n[..., 0] ** 2 * a, s * b, -s * n[..., 0]], axis=-1
    )
    e2 = np.stack([b, s + n[..., 1] ** 2 * a, -n[..., 1]], axis=-1)
    return e1, e2


def make_ring(radius, center=(0.0, 0.0, 0.0), axis=(0.0, 0.0, 1.0), count=256):
    """Circle oriented counterclockwise about ``axis`` (travels toward +axis)."""
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    e1, e2 = orthonormal_frame(axis)
    t = 2.0 * np.pi * np.arange(count) / count
    pts = (
        np.asarray(center, dtype=np.float64)
        + radius * np.cos(t)[:, None] * e1
        + radius * np.sin(t)[:, None] * e2
    )
    return pts


def _trefoil_points(count, scale=1.0, center=(0.0, 0.0, 0.0)):
    s = 2.0 * np.pi * np.arange(count) / count
    pts = np.stack(
        [
            np.sin(s) + 2.0 * np.sin(2.0 * s),
            np.cos(s) - 2.0 * np.cos(2.0 * s),
            -np.sin(3.0 * s),
        ],
        axis=1,
    )
    return pts * scale + np.asarray(center, dtype=np.float64)


def _torus_knot_points(count, p=5, q=8, scale=1.0, center=(0.0, 0.0, 0.0)):
    s = 2.0 * np.pi * np.arange(count) / count
    r = np.cos(q * s) + 2.0
    pts = np.stack([r * np.cos(p * s), r * np.sin(p * s), -np.sin(q * s)], axis=1)
    return pts * scale + np.asarray(center, dtype=np.float64)


def scene_preset(name: str, params: dict | None = None) -> CurveSet:
    """Build the initial curves of a named scene.

    Known names: ring, leapfrog, linked_rings, oblique_rings, trefoil,
    torus_knot_pq, jet_seed.  ``params`` overrides per-scene geometry and
    always accepts ``count`` (vertices per loop, default 256), ``gamma``
    and ``core_radius``.
    """
    p = dict(params or {})
    count = int(p.pop("count", 256))
    gamma = float(p.pop("gamma", 1.0))
    core = float(p.pop("core_radius", 0.05))
    center = np.asarray(p.pop("center", (0.0, 0.0, 0.0)), dtype=np.float64)

    def pack(point_lists):
        loops = []
        ofs = 0
        for pts in point_lists:
            loops.append((ofs, len(pts)))
            ofs += len(pts)
        return CurveSet(np.concatenate(point_lists), loops, gamma, core)

    if name == "ring":
        radius = float(p.pop("radius", 0.5))
        axis = p.pop("axis", (0.0, 0.0, 1.0))
        _reject_extra(name, p)
        return pack([make_ring(radius, center, axis, count)])

    if name == "leapfrog":
        # Two coplanar coaxial rings; the inner one has half the radius.
        radius = float(p.pop("radius", 0.5))
        ratio = float(p.pop("ratio", 0.5))
        axis = p.pop("axis", (0.0, 0.0, 1.0))
        _reject_extra(name, p)
        return pack(
            [
                make_ring(radius, center, axis, count),
                make_ring(radius * ratio, center, axis, count),
            ]
        )

    if name == "linked_rings":
        radius = float(p.pop("radius", 0.5))
        offset = float(p.pop("offset", 0.2))
        _reject_extra(name, p)
        c1 = center + np.array([-offset, 0.0, 0.0])
        c2 = center + np.array([offset, 0.0, 0.0])
        return pack(
            [
                make_ring(radius, c1, (0.0, 0.0, 1.0), count),
                make_ring(radius, c2, (0.0, 1.0, 0.0), count),
            ]
        )

    if name == "oblique_rings":
        # Two rings aimed at right angles, colliding near the box center.
        radius = float(p.pop("radius", 0.5))
        separation = float(p.pop("separation", 1.0))
        _reject_extra(name, p)
        c1 = center + np.array([-separation, 0.0, 0.0])
        c2 = center + np.array([0.0, -separation, 0.0])
        return pack(
            [
                make_ring(radius, c1, (1.0, 0.0, 0.0), count),
                make_ring(radius, c2, (0.0, 1.0, 0.0), count),
            ]
        )

    if name == "trefoil":
        scale = float(p.pop("scale", 1.0))
        _reject_extra(name, p)
        return pack([_trefoil_points(count, scale, center)])

    if name == "torus_knot_pq":
        pp = int(p.pop("p", 5))
        qq = int(p.pop("q", 8))
        scale = float(p.pop("scale", 1.0))
        _reject_extra(name, p)
        return pack([_torus_knot_points(count, pp, qq, scale, center)])

    if name == "jet_seed":
        radius = float(p.pop("radius", 0.4))
        axis = p.pop("axis", (0.0, 0.0, 1.0))
        _reject_extra(name, p)
        return pack([make_ring(radius, center, axis, count)])

    raise UnknownScene(f"unknown scene preset {name!r}")


def _reject_extra(name, leftover):
    if leftover:
        raise UnknownScene(f"scene {name!r} got unknown parameters {sorted(leftover)}")
