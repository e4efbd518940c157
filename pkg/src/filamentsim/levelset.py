"""Zero-curve extraction and advection of the complex level set.

Extraction counts signed crossings per cell face by the winding of the
four corner values around the origin, locates each crossing as the zero of
the bilinear interpolant, and stitches crossings into oriented closed
loops cell by cell.  Advection is a modified MacCormack step (forward and
backward semi-Lagrangian passes with error compensation) with fourth-order
Runge-Kutta backtracing and a stencil-hull clamp.

Orientation convention: the phase of the solid-angle field rotates by -2pi
per positive traversal of the curve tangent, so a face with incidence n
carries a crossing directed along ``-n`` times the face normal.
"""

from __future__ import annotations

import math

import numpy as np

from .curves import CurveSet
from .errors import CflViolation, NoRootInFace, OpenChain, ZeroOnCorner
from .grid import ComplexField, NarrowBand, VectorField, blend_values

__all__ = [
    "face_incidence",
    "bilinear_zero",
    "extract_curves",
    "advect_maccormack",
    "rk4_trace",
]

_CORNER_TOL = 1e-15
_TWO_PI = 2.0 * math.pi

# face span axes (u, v) for each face normal axis, cyclic
_SPANS = {0: (1, 2), 1: (2, 0), 2: (0, 1)}


def face_incidence(psi_i, psi_j, psi_k, psi_l) -> int:
    """Signed crossing count of one oriented face from its corner values.

    The corners are cyclic around the face boundary.  Raises ZeroOnCorner
    for exactly-zero corners; the caller perturbs those first.
    """
    c = np.array([psi_i, psi_j, psi_k, psi_l], dtype=np.complex128)
    if np.any(np.abs(c) <= _CORNER_TOL):
        raise ZeroOnCorner("face corner value is zero; perturb before counting")
    w = 0.0
    for t in range(4):
        w += np.angle(c[(t + 1) % 4] * np.conj(c[t]))
    return int(np.rint(w / _TWO_PI))


def _incidence_batch(c0, c1, c2, c3):
    w = (
        np.angle(c1 * np.conj(c0))
        + np.angle(c2 * np.conj(c1))
        + np.angle(c3 * np.conj(c2))
        + np.angle(c0 * np.conj(c3))
    )
    return np.rint(w / _TWO_PI).astype(np.int8)


def _bilinear_coeffs(c00, c10, c01, c11):
    A = c00
    B = c10 - c00
    C = c01 - c00
    D = c11 - c10 - c01 + c00
    return A, B, C, D


def _psi_f(A, B, C, D, x, y):
    return A + B * x + C * y + D * x * y


def bilinear_zero(corners) -> tuple[float, float]:
    """Zero of the bilinear interpolant inside the unit face.

    ``corners`` are the values at (0,0), (1,0), (0,1), (1,1).  Only valid
    on faces whose incidence is +-1; raises NoRootInFace otherwise.
    """
    out = _bilinear_zeros_batch(*(np.array([c], dtype=np.complex128) for c in corners))
    x, y, ok = out
    if not ok[0]:
        raise NoRootInFace("no bilinear zero found inside the face")
    return float(x[0]), float(y[0])


def _bilinear_zeros_batch(c00, c10, c01, c11):
    """Vectorized bilinear zero solve; returns (x, y, ok)."""
    A, B, C, D = _bilinear_coeffs(c00, c10, c01, c11)
    a2 = B.imag * D.real - B.real * D.imag
    a1 = A.imag * D.real + B.imag * C.real - A.real * D.imag - B.real * C.imag
    a0 = A.imag * C.real - A.real * C.imag

    scale = np.maximum.reduce([np.abs(c00), np.abs(c10), np.abs(c01), np.abs(c11)])
    scale = np.where(scale > 0, scale, 1.0)
    n = len(A)
    best_x = np.full(n, 0.5)
    best_y = np.full(n, 0.5)
    best_r = np.full(n, np.inf)

    quad = np.abs(a2) > 1e-300
    disc = a1 * a1 - 4.0 * a2 * a0
    sq = np.sqrt(np.maximum(disc, 0.0))
    # stable quadratic roots; fall back to the linear root when a2 ~ 0
    q = -0.5 * (a1 + np.copysign(sq, np.where(a1 != 0, a1, 1.0)))
    with np.errstate(divide="ignore", invalid="ignore"):
        roots = [
            np.where(quad, q / np.where(np.abs(a2) > 0, a2, 1.0), -a0 / np.where(np.abs(a1) > 0, a1, 1.0)),
            np.where(quad & (np.abs(q) > 0), a0 / np.where(np.abs(q) > 0, q, 1.0), np.nan),
        ]
        for x in roots:
            valid = np.isfinite(x) & (x > -1e-9) & (x < 1.0 + 1e-9) & (disc >= 0)
            den_r = C.real + D.real * x
            den_i = C.imag + D.imag * x
            num_r = -(A.real + B.real * x)
            num_i = -(A.imag + B.imag * x)
            y = np.where(
                np.abs(den_r) >= np.abs(den_i),
                num_r / np.where(np.abs(den_r) > 0, den_r, 1.0),
                num_i / np.where(np.abs(den_i) > 0, den_i, 1.0),
            )
            valid &= (y > -1e-9) & (y < 1.0 + 1e-9)
            r = np.abs(_psi_f(A, B, C, D, x, y)) / scale
            take = valid & (r < best_r)
            best_x = np.where(take, x, best_x)
            best_y = np.where(take, y, best_y)
            best_r = np.where(take, r, best_r)

    # Newton fallback from the face center for unresolved faces
    need = best_r > 1e-9
    if need.any():
        xi = np.full(need.sum(), 0.5)
        yi = np.full(need.sum(), 0.5)
        An, Bn, Cn, Dn = (v[need] for v in (A, B, C, D))
        for _ in range(20):
            f = _psi_f(An, Bn, Cn, Dn, xi, yi)
            j00 = (Bn + Dn * yi).real
            j01 = (Cn + Dn * xi).real
            j10 = (Bn + Dn * yi).imag
            j11 = (Cn + Dn * xi).imag
            det = j00 * j11 - j01 * j10
            det = np.where(np.abs(det) > 1e-300, det, 1.0)
            xi = xi - (j11 * f.real - j01 * f.imag) / det
            yi = yi - (-j10 * f.real + j00 * f.imag) / det
        ri = np.abs(_psi_f(An, Bn, Cn, Dn, xi, yi)) / scale[need]
        better = ri < best_r[need]
        inside = (xi > -1e-9) & (xi < 1 + 1e-9) & (yi > -1e-9) & (yi < 1 + 1e-9)
        sel = np.zeros_like(need)
        sel[need] = better & inside
        best_x[sel] = xi[better & inside]
        best_y[sel] = yi[better & inside]
        best_r[sel] = ri[better & inside]

    ok = best_r < 1e-9
    return np.clip(best_x, 0.0, 1.0), np.clip(best_y, 0.0, 1.0), ok


def _perturb_zero_corners(values):
    """Replace exactly-zero corner values with a tiny phase-consistent value."""
    mask = np.abs(values) <= _CORNER_TOL
    if not mask.any():
        return values
    values = values.copy()
    acc = np.zeros_like(values)
    cnt = np.zeros(values.shape)
    for axis in range(3):
        for shift in (1, -1):
            rolled = np.roll(values, shift, axis=axis)
            acc += rolled
            cnt += 1
    mean = acc / cnt
    phase = np.where(np.abs(mean) > 0, mean / np.where(np.abs(mean) > 0, np.abs(mean), 1), 1.0)
    values[mask] = 1e-12 * phase[mask]
    return values


def _eligible_cells(psi: ComplexField, band: NarrowBand | None):
    nx, ny, nz = psi.spec.dims
    if band is None:
        return np.ones((nx - 1, ny - 1, nz - 1), dtype=bool)
    good = band.dist < (band.width - psi.spec.spacing)
    return (
        good[:-1, :-1, :-1]
        & good[1:, :-1, :-1]
        & good[:-1, 1:, :-1]
        & good[1:, 1:, :-1]
        & good[:-1, :-1, 1:]
        & good[1:, :-1, 1:]
        & good[:-1, 1:, 1:]
        & good[1:, 1:, 1:]
    )


def _face_corner_indices(axis, base):
    """Cyclic corner offsets of a face with normal ``axis`` at ``base`` nodes."""
    u, v = _SPANS[axis]
    o0 = np.zeros((len(base), 3), dtype=np.int64)
    o1 = o0.copy()
    o1[:, u] = 1
    o2 = o1.copy()
    o2[:, v] = 1
    o3 = o0.copy()
    o3[:, v] = 1
    return base + o0, base + o1, base + o2, base + o3


def extract_curves(
    psi: ComplexField,
    band: NarrowBand | None,
    min_vertices: int = 4,
    min_length: float | None = None,
    gamma: float = 1.0,
    core_radius: float = 0.05,
) -> CurveSet:
    """Extract the oriented zero curves of the field as closed polyline loops.

    Only cells whose eight nodes sit strictly inside the band (one spacing
    away from its edge) are traversed, so the sentinel phase seam outside
    the band can never generate geometry.  Loops shorter than
    ``min_vertices`` vertices or ``min_length`` are discarded.
    """
    spec = psi.spec
    dx = spec.spacing
    if min_length is None:
        min_length = 3.0 * dx

    elig = _eligible_cells(psi, band)
    if not elig.any():
        return CurveSet(np.zeros((0, 3)), [], gamma, core_radius)

    cells = np.argwhere(elig)
    lo = cells.min(axis=0)
    hi = cells.max(axis=0)

    values = _perturb_zero_corners(psi.values)

    # Collect crossing faces per orientation within the eligible sub-box.
    crossings = {}  # (axis, i, j, k) -> (crossing_id, direction)
    positions = []
    for axis in range(3):
        u, v = _SPANS[axis]
        flo, fhi = lo.copy(), hi.copy()
        fhi[axis] += 1  # faces bound cells on both sides along the normal
        ii, jj, kk = np.meshgrid(
            np.arange(flo[0], fhi[0] + 1),
            np.arange(flo[1], fhi[1] + 1),
            np.arange(flo[2], fhi[2] + 1),
            indexing="ij",
        )
        base = np.stack([ii.ravel(), jj.ravel(), kk.ravel()], axis=1)
        i0, i1, i2, i3 = _face_corner_indices(axis, base)
        c0 = values[i0[:, 0], i0[:, 1], i0[:, 2]]
        c1 = values[i1[:, 0], i1[:, 1], i1[:, 2]]
        c2 = values[i2[:, 0], i2[:, 1], i2[:, 2]]
        c3 = values[i3[:, 0], i3[:, 1], i3[:, 2]]
        nf = _incidence_batch(c0, c1, c2, c3)
        hit = np.nonzero(nf != 0)[0]
        if hit.size == 0:
            continue
        # bilinear corner order is (00, 10, 01, 11) = cyclic (0, 1, 3, 2)
        bx, by, ok = _bilinear_zeros_batch(c0[hit], c1[hit], c3[hit], c2[hit])
        if not ok.all():
            k = hit[np.nonzero(~ok)[0][0]]
            raise NoRootInFace(f"face {(axis, *base[k])} reported a crossing without a root")
        for m, f in enumerate(hit):
            b = base[f]
            pos = spec.origin + dx * b.astype(np.float64)
            pos = pos.copy()
            pos[u] += dx * bx[m]
            pos[v] += dx * by[m]
            # phase winds -1 around the forward tangent
            direction = -int(nf[f])
            crossings[(axis, int(b[0]), int(b[1]), int(b[2]))] = (len(positions), direction)
            positions.append(pos)

    if not positions:
        return CurveSet(np.zeros((0, 3)), [], gamma, core_radius)
    positions = np.asarray(positions)

    # Group crossings by the cell the curve leaves and the cell it enters.
    nxc, nyc, nzc = elig.shape
    inflows: dict[tuple, list] = {}
    outflows: dict[tuple, list] = {}
    for key, (cid, direction) in crossings.items():
        axis, i, j, k = key
        cell_neg = [i, j, k]
        cell_neg[axis] -= 1
        cell_pos = (i, j, k)
        into = tuple(cell_pos) if direction > 0 else tuple(cell_neg)
        from_ = tuple(cell_neg) if direction > 0 else tuple(cell_pos)
        for cell, table in ((into, inflows), (from_, outflows)):
            if (
                0 <= cell[0] < nxc
                and 0 <= cell[1] < nyc
                and 0 <= cell[2] < nzc
                and elig[cell]
            ):
                table.setdefault(cell, []).append((key, cid))

    successor: dict[int, int] = {}
    for cell, ins in inflows.items():
        outs = outflows.get(cell, [])
        if len(ins) != len(outs):
            raise OpenChain(
                f"cell {cell} has {len(ins)} inflows but {len(outs)} outflows", cell=cell
            )
        ins = sorted(ins, key=lambda t: t[0])
        outs = sorted(outs, key=lambda t: t[0])
        if len(ins) == 1:
            successor[ins[0][1]] = outs[0][1]
        elif len(ins) == 2:
            # two orientation-consistent pairings; pick the shorter one,
            # ties resolved toward the lowest face id
            d = lambda a, b: np.linalg.norm(positions[a[1]] - positions[b[1]])
            straight = d(ins[0], outs[0]) + d(ins[1], outs[1])
            crossed = d(ins[0], outs[1]) + d(ins[1], outs[0])
            if straight <= crossed:
                successor[ins[0][1]] = outs[0][1]
                successor[ins[1][1]] = outs[1][1]
            else:
                successor[ins[0][1]] = outs[1][1]
                successor[ins[1][1]] = outs[0][1]
        else:
            remaining = list(outs)
            for key_i, cid_i in ins:
                best = min(
                    range(len(remaining)),
                    key=lambda m: (
                        np.linalg.norm(positions[cid_i] - positions[remaining[m][1]]),
                        remaining[m][0],
                    ),
                )
                successor[cid_i] = remaining[best][1]
                remaining.pop(best)

    # Walk successor cycles into loops.
    visited = set()
    verts = []
    loops = []
    offset = 0
    for start in range(len(positions)):
        if start in visited or start not in successor:
            continue
        chain = []
        cur = start
        while True:
            if cur in visited:
                raise OpenChain(f"chain through crossing {cur} re-entered a used crossing")
            visited.add(cur)
            chain.append(cur)
            if cur not in successor:
                raise OpenChain(f"chain ended at crossing {cur}; band truncated")
            cur = successor[cur]
            if cur == start:
                break
        pts = positions[chain]
        length = float(np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1).sum())
        if len(pts) >= min_vertices and length >= min_length:
            loops.append((offset, len(pts)))
            verts.append(pts)
            offset += len(pts)

    if not verts:
        return CurveSet(np.zeros((0, 3)), [], gamma, core_radius)
    return CurveSet(np.concatenate(verts), loops, gamma, core_radius)


def rk4_trace(v: VectorField, points: np.ndarray, dt: float) -> np.ndarray:
    """Fourth-order Runge-Kutta displacement through the static field.

    ``points`` are world coordinates; returns the displacement after time
    ``dt`` (negative ``dt`` backtraces).
    """
    spec = v.spec

    def vel(p):
        return blend_values(v.values, spec.to_index(p))

    k1 = vel(points)
    k2 = vel(points + 0.5 * dt * k1)
    k3 = vel(points + 0.5 * dt * k2)
    k4 = vel(points + dt * k3)
    return (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _stencil_ok(active: np.ndarray, idx_pts: np.ndarray) -> np.ndarray:
    """True where all 8 stencil nodes of each sample point are active."""
    dims = active.shape
    inside = np.all((idx_pts >= 0.0) & (idx_pts <= np.array(dims) - 1), axis=1)
    i = np.floor(idx_pts).astype(np.int64)
    for a in range(3):
        i[:, a] = np.clip(i[:, a], 0, dims[a] - 2)
    ok = np.ones(len(idx_pts), dtype=bool)
    for da in (0, 1):
        for db in (0, 1):
            for dc in (0, 1):
                ok &= active[i[:, 0] + da, i[:, 1] + db, i[:, 2] + dc]
    return ok & inside


def _stencil_hull(values: np.ndarray, idx_pts: np.ndarray):
    """Componentwise min/max of the 8 stencil values at each sample point."""
    dims = values.shape
    i = np.floor(idx_pts).astype(np.int64)
    for a in range(3):
        i[:, a] = np.clip(i[:, a], 0, dims[a] - 2)
    re_lo = np.full(len(idx_pts), np.inf)
    re_hi = np.full(len(idx_pts), -np.inf)
    im_lo = np.full(len(idx_pts), np.inf)
    im_hi = np.full(len(idx_pts), -np.inf)
    for da in (0, 1):
        for db in (0, 1):
            for dc in (0, 1):
                c = values[i[:, 0] + da, i[:, 1] + db, i[:, 2] + dc]
                np.minimum(re_lo, c.real, out=re_lo)
                np.maximum(re_hi, c.real, out=re_hi)
                np.minimum(im_lo, c.imag, out=im_lo)
                np.maximum(im_hi, c.imag, out=im_hi)
    return re_lo, re_hi, im_lo, im_hi


def advect_maccormack(
    psi: ComplexField, v: VectorField, dt: float, band: NarrowBand
) -> ComplexField:
    """One advection step of the level set along ``v``.

    Forward semi-Lagrangian sample at the RK4-backtraced position, a
    backward pass for error compensation, then a componentwise clamp to
    the hull of the backtrace stencil.  Nodes whose traces leave the band
    keep the plain semi-Lagrangian value.
    """
    if dt <= 0:
        raise ValueError("time step must be positive")
    spec = psi.spec
    dx = spec.spacing
    margin = band.width - 2.0 * dx
    vmax = v.max_norm()
    if vmax * dt > margin:
        raise CflViolation(
            f"max displacement {vmax * dt:.4g} exceeds band margin {margin:.4g}"
        )

    idx = np.nonzero(band.active)
    pts = spec.origin + dx * np.stack(idx, axis=1).astype(np.float64)

    disp_b = rk4_trace(v, pts, -dt)
    back = pts + disp_b
    back_idx = spec.to_index(back)
    psi_hat = blend_values(psi.values, back_idx)

    hat_grid = psi.values.copy()
    hat_grid[idx] = psi_hat

    disp_f = rk4_trace(v, pts, dt)
    fwd = pts + disp_f
    fwd_idx = spec.to_index(fwd)
    psi_tilde = blend_values(hat_grid, fwd_idx)

    corrected = psi_hat + 0.5 * (psi.values[idx] - psi_tilde)
    ok = _stencil_ok(band.active, back_idx) & _stencil_ok(band.active, fwd_idx)
    new = np.where(ok, corrected, psi_hat)

    re_lo, re_hi, im_lo, im_hi = _stencil_hull(psi.values, back_idx)
    new = np.clip(new.real, re_lo, re_hi) + 1j * np.clip(new.imag, im_lo, im_hi)

    out = psi.values.copy()
    out[idx] = new
    return ComplexField(spec, out)
