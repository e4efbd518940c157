"""Regular-lattice field storage, trilinear interpolation, and narrow-band bookkeeping.

All fields are node-collocated on a uniform lattice: node (i, j, k) sits at
``origin + spacing * (i, j, k)``.  Interpolation and band construction are
vectorized over flat point arrays; the scalar entry points validate their
inputs and delegate to the batched kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCurves, OutOfDomain

__all__ = [
    "GridSpec",
    "ComplexField",
    "VectorField",
    "NarrowBand",
    "trilinear_sample",
    "sample_points",
    "build_narrow_band",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform node lattice: ``dims`` nodes per axis, spacing ``spacing``."""

    dims: tuple[int, int, int]
    origin: np.ndarray
    spacing: float

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if any(d < 2 for d in dims):
            raise ValueError(f"grid needs at least 2 nodes per axis, got {dims}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(
            self, "origin", np.asarray(self.origin, dtype=np.float64).reshape(3)
        )
        object.__setattr__(self, "spacing", float(self.spacing))

    @property
    def upper(self) -> np.ndarray:
        """Position of the last node on each axis."""
        return self.origin + self.spacing * (np.array(self.dims) - 1)

    def node_positions(self) -> np.ndarray:
        """All node positions, shape (nx, ny, nz, 3)."""
        ax = [self.origin[a] + self.spacing * np.arange(self.dims[a]) for a in range(3)]
        gx, gy, gz = np.meshgrid(*ax, indexing="ij")
        return np.stack([gx, gy, gz], axis=-1)

    def to_index(self, points: np.ndarray) -> np.ndarray:
        """Map world coordinates to (fractional) index coordinates."""
        return (np.asarray(points, dtype=np.float64) - self.origin) / self.spacing

    def contains(self, points: np.ndarray) -> np.ndarray:
        idx = self.to_index(np.atleast_2d(points))
        hi = np.array(self.dims) - 1
        return np.all((idx >= 0.0) & (idx <= hi), axis=-1)


@dataclass
class ComplexField:
    """Complex level set values sampled on the nodes of ``spec``."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != self.spec.dims:
            raise ValueError(
                f"value shape {self.values.shape} does not match dims {self.spec.dims}"
            )

    def copy(self) -> "ComplexField":
        return ComplexField(self.spec, self.values.copy())


@dataclass
class VectorField:
    """Node-sampled 3-vector field."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.spec.dims + (3,):
            raise ValueError(
                f"value shape {self.values.shape} does not match dims {self.spec.dims}"
            )

    def max_norm(self) -> float:
        return float(np.sqrt((self.values**2).sum(axis=-1).max()))


@dataclass
class NarrowBand:
    """Active-node mask with distance and nearest-segment index per node.

    ``dist`` holds the exact point-to-segment distance on active nodes and
    +inf elsewhere; ``nearest`` holds the index of the minimizing segment
    (flat segment numbering of the curve set) or -1.
    """

    spec: GridSpec
    active: np.ndarray
    dist: np.ndarray
    nearest: np.ndarray
    width: float

    node_count: int = field(init=False)

    def __post_init__(self):
        self.node_count = int(self.active.sum())


def blend_values(values: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Trilinear blend at fractional index coordinates ``idx`` (M, 3).

    ``values`` may carry trailing component axes.  Base indices are clamped
    so the 8-node stencil stays inside the array; callers are responsible
    for range checks.  Exact at nodes: zero fractional offsets select the
    base corner bit-exactly.
    """
    nx, ny, nz = values.shape[:3]
    i = np.floor(idx).astype(np.int64)
    i[:, 0] = np.clip(i[:, 0], 0, nx - 2)
    i[:, 1] = np.clip(i[:, 1], 0, ny - 2)
    i[:, 2] = np.clip(i[:, 2], 0, nz - 2)
    t = idx - i
    np.clip(t, 0.0, 1.0, out=t)

    ix, iy, iz = i[:, 0], i[:, 1], i[:, 2]
    tx, ty, tz = (t[:, a].reshape((-1,) + (1,) * (values.ndim - 3)) for a in range(3))

    c000 = values[ix, iy, iz]
    c100 = values[ix + 1, iy, iz]
    c010 = values[ix, iy + 1, iz]
    c110 = values[ix + 1, iy + 1, iz]
    c001 = values[ix, iy, iz + 1]
    c101 = values[ix + 1, iy, iz + 1]
    c011 = values[ix, iy + 1, iz + 1]
    c111 = values[ix + 1, iy + 1, iz + 1]

    c00 = c000 * (1 - tx) + c100 * tx
    c10 = c010 * (1 - tx) + c110 * tx
    c01 = c001 * (1 - tx) + c101 * tx
    c11 = c011 * (1 - tx) + c111 * tx
    c0 = c00 * (1 - ty) + c10 * ty
    c1 = c01 * (1 - ty) + c11 * ty
    return c0 * (1 - tz) + c1 * tz


def sample_points(field_like, points: np.ndarray) -> np.ndarray:
    """Batched trilinear sampling at world-coordinate ``points`` (M, 3).

    Points outside the box are clamped to it; use :func:`trilinear_sample`
    for the checked single-point contract.
    """
    idx = field_like.spec.to_index(np.atleast_2d(points))
    return blend_values(field_like.values, idx)


def trilinear_sample(field_like, x):
    """Sample a complex or vector field at one point ``x``.

    Raises OutOfDomain if ``x`` lies outside the grid bounding box.
    """
    x = np.asarray(x, dtype=np.float64).reshape(3)
    if not bool(field_like.spec.contains(x)[0]):
        raise OutOfDomain(f"point {x.tolist()} outside grid bounding box")
    out = sample_points(field_like, x[None, :])[0]
    return out


def _segment_distance_block(
    points: np.ndarray, seg_a: np.ndarray, seg_b: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Exact point-to-segment distances for a block of points.

    Returns (min distance, argmin index into the segment arrays), both (M,).
    """
    u = seg_b - seg_a
    uu = (u * u).sum(axis=1)
    uu = np.where(uu > 0.0, uu, 1.0)
    d = points[:, None, :] - seg_a[None, :, :]
    t = np.einsum("msk,sk->ms", d, u) / uu
    np.clip(t, 0.0, 1.0, out=t)
    closest = seg_a[None, :, :] + t[:, :, None] * u[None, :, :]
    d2 = ((points[:, None, :] - closest) ** 2).sum(axis=2)
    j = np.argmin(d2, axis=1)
    return np.sqrt(d2[np.arange(len(points)), j]), j


def distance_to_segments(
    points: np.ndarray, seg_a: np.ndarray, seg_b: np.ndarray, chunk: int = 4096
) -> tuple[np.ndarray, np.ndarray]:
    """Chunked exhaustive point-to-segment scan over all segments."""
    points = np.atleast_2d(points)
    dist = np.empty(len(points))
    near = np.empty(len(points), dtype=np.int64)
    for s in range(0, len(points), chunk):
        e = min(s + chunk, len(points))
        dist[s:e], near[s:e] = _segment_distance_block(points[s:e], seg_a, seg_b)
    return dist, near


def build_narrow_band(curves, spec: GridSpec, width: float) -> NarrowBand:
    """Mark every node within ``width`` of the curves with its exact distance.

    Uses a per-block AABB prefilter: the node lattice is swept in blocks and
    each block only tests segments whose padded bounding box overlaps it.
    """
    if curves.is_empty():
        raise EmptyCurves("cannot build a narrow band around an empty curve set")
    if width < 3.0 * spec.spacing * (1.0 - 1e-12):
        raise ValueError(
            f"band width {width} must be at least 3 spacings ({3 * spec.spacing})"
        )

    seg_a, seg_b = curves.segment_arrays()
    nx, ny, nz = spec.dims
    dist = np.full(spec.dims, np.inf)
    nearest = np.full(spec.dims, -1, dtype=np.int64)

    # Node-index window covering the curves plus the band width.
    pad = width + spec.spacing
    lo_w = np.minimum(seg_a.min(axis=0), seg_b.min(axis=0)) - pad
    hi_w = np.maximum(seg_a.max(axis=0), seg_b.max(axis=0)) + pad
    lo = np.maximum(np.floor(spec.to_index(lo_w)).astype(int), 0)
    hi = np.minimum(np.ceil(spec.to_index(hi_w)).astype(int), np.array(spec.dims) - 1)

    seg_lo = np.minimum(seg_a, seg_b) - width
    seg_hi = np.maximum(seg_a, seg_b) + width

    block = 8
    for bi in range(lo[0], hi[0] + 1, block):
        for bj in range(lo[1], hi[1] + 1, block):
            for bk in range(lo[2], hi[2] + 1, block):
                ei = min(bi + block, hi[0] + 1)
                ej = min(bj + block, hi[1] + 1)
                ek = min(bk + block, hi[2] + 1)
                blo = spec.origin + spec.spacing * np.array([bi, bj, bk])
                bhi = spec.origin + spec.spacing * np.array([ei - 1, ej - 1, ek - 1])
                cand = np.nonzero(
                    np.all(seg_lo <= bhi, axis=1) & np.all(seg_hi >= blo, axis=1)
                )[0]
                if cand.size == 0:
                    continue
                ax = [
                    spec.origin[a] + spec.spacing * np.arange([bi, bj, bk][a], [ei, ej, ek][a])
                    for a in range(3)
                ]
                gx, gy, gz = np.meshgrid(*ax, indexing="ij")
                pts = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)
                d, j = _segment_distance_block(pts, seg_a[cand], seg_b[cand])
                shape = (ei - bi, ej - bj, ek - bk)
                dist[bi:ei, bj:ej, bk:ek] = d.reshape(shape)
                nearest[bi:ei, bj:ej, bk:ek] = cand[j].reshape(shape)

    active = dist <= width
    nearest[~active] = -1
    return NarrowBand(spec=spec, active=active, dist=dist, nearest=nearest, width=float(width))
