import numpy as np
import pytest

from filamentsim.curves import CurveSet, scene_preset
from filamentsim.errors import EmptyCurves, OutOfDomain
from filamentsim.grid import (
    ComplexField,
    GridSpec,
    VectorField,
    build_narrow_band,
    sample_points,
    trilinear_sample,
)


def unit_grid(n=8, spacing=1.0, origin=(0.0, 0.0, 0.0)):
    return GridSpec((n, n, n), np.asarray(origin), spacing)


def trilinear_poly(coeffs, pts):
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    out = np.zeros(len(pts), dtype=complex)
    for (i, j, k), c in coeffs.items():
        out += c * x**i * y**j * z**k
    return out


class TestTrilinearSample:
    def test_constant_field(self):
        spec = unit_grid()
        f = ComplexField(spec, np.full(spec.dims, 2.5 + 1j))
        assert trilinear_sample(f, (0.37, 3.1, 6.9)) == 2.5 + 1j

    def test_linear_reproduction(self):
        spec = unit_grid()
        f = ComplexField(spec, spec.node_positions()[..., 0].astype(complex))
        assert trilinear_sample(f, (0.37, 0.5, 0.5)) == pytest.approx(0.37, abs=1e-14)

    def test_random_trilinear_polynomial(self):
        # oracle: direct polynomial evaluation
        rng = np.random.default_rng(7)
        spec = unit_grid()
        coeffs = {
            (i, j, k): complex(rng.standard_normal(), rng.standard_normal())
            for i in (0, 1)
            for j in (0, 1)
            for k in (0, 1)
        }
        nodes = spec.node_positions().reshape(-1, 3)
        f = ComplexField(spec, trilinear_poly(coeffs, nodes).reshape(spec.dims))
        pts = rng.uniform(0.0, 7.0, size=(100, 3))
        got = sample_points(f, pts)
        want = trilinear_poly(coeffs, pts)
        assert np.max(np.abs(got - want)) < 1e-12 * max(1.0, np.abs(want).max())

    def test_vector_field_sampling(self):
        spec = unit_grid()
        vals = np.zeros(spec.dims + (3,))
        vals[..., 1] = spec.node_positions()[..., 2]
        v = VectorField(spec, vals)
        got = trilinear_sample(v, (1.0, 2.0, 3.25))
        assert got == pytest.approx([0.0, 3.25, 0.0])

    def test_out_of_domain(self):
        spec = unit_grid()
        f = ComplexField(spec, np.zeros(spec.dims))
        with pytest.raises(OutOfDomain):
            trilinear_sample(f, (-0.1, 0.0, 0.0))
        with pytest.raises(OutOfDomain):
            trilinear_sample(f, (0.0, 7.5, 0.0))

    def test_node_sampling_is_bit_exact(self):
        from filamentsim.grid import blend_values

        rng = np.random.default_rng(3)
        spec = GridSpec((6, 6, 6), np.array([-0.77, 0.13, 2.4]), 0.031)
        vals = rng.standard_normal(spec.dims) + 1j * rng.standard_normal(spec.dims)
        idx = np.array([[2, 3, 4], [0, 0, 0], [5, 5, 5]], dtype=float)
        got = blend_values(vals, idx)
        assert got[0] == vals[2, 3, 4]
        assert got[1] == vals[0, 0, 0]
        assert got[2] == vals[5, 5, 5]


class TestNarrowBand:
    def test_planar_distance(self):
        ring = scene_preset("ring", {"radius": 1.0, "count": 512})
        spec = GridSpec((5, 5, 5), np.array([0.0, -2.0, -2.0]), 1.0)
        band = build_narrow_band(ring, spec, 3.0)
        # node index (2,2,2) sits at world (2, 0, 0), one radius outside
        assert band.active[2, 2, 2]
        assert band.dist[2, 2, 2] == pytest.approx(1.0, abs=5e-5)

    def test_center_node(self):
        ring = scene_preset("ring", {"radius": 1.0, "count": 512})
        spec = GridSpec((5, 5, 5), np.array([-2.0, -2.0, -2.0]), 1.0)
        band = build_narrow_band(ring, spec, 3.0)
        assert band.active[2, 2, 2]
        assert band.dist[2, 2, 2] == pytest.approx(1.0, abs=5e-5)

    def test_brute_force_oracle(self):
        # oracle: exhaustive point-to-segment scan over every node
        rng = np.random.default_rng(11)
        pts = rng.standard_normal((40, 3))
        loops = [(0, 20), (20, 20)]
        curves = CurveSet(pts, loops)
        spec = GridSpec((10, 10, 10), np.array([-2.5, -2.5, -2.5]), 0.5)
        band = build_narrow_band(curves, spec, 1.6)

        a, b = curves.segment_arrays()
        nodes = spec.node_positions().reshape(-1, 3)
        u = b - a
        uu = (u * u).sum(axis=1)
        t = np.clip(
            np.einsum("mk,sk->ms", nodes, u) - (a * u).sum(axis=1), 0.0, uu
        ) / uu
        closest = a[None] + t[:, :, None] * u[None]
        d = np.sqrt(((nodes[:, None] - closest) ** 2).sum(axis=2).min(axis=1))
        d = d.reshape(spec.dims)
        active = d <= 1.6
        assert np.array_equal(band.active, active)
        assert np.allclose(band.dist[active], d[active], atol=1e-12)

    def test_nearest_segment_minimizes(self):
        curves = scene_preset("ring", {"radius": 0.7, "count": 64})
        spec = GridSpec((12, 12, 12), np.array([-1.1, -1.1, -1.1]), 0.2)
        band = build_narrow_band(curves, spec, 0.6)
        a, b = curves.segment_arrays()
        ii = np.argwhere(band.active)[::17]
        for i in ii:
            x = spec.origin + spec.spacing * i
            u = b - a
            uu = (u * u).sum(axis=1)
            t = np.clip(((x - a) * u).sum(axis=1) / uu, 0, 1)
            d = np.linalg.norm(x - (a + t[:, None] * u), axis=1)
            best = band.nearest[tuple(i)]
            assert d[best] == pytest.approx(d.min(), abs=1e-12)

    def test_rigid_motion_symmetry(self):
        # rotating curves and grid origin together permutes node distances
        curves = scene_preset("ring", {"radius": 0.6, "count": 96})
        spec = GridSpec((8, 8, 8), np.array([-0.9, -0.9, -0.9]), 0.25)
        band = build_narrow_band(curves, spec, 0.8)
        shift = np.array([3.0, -1.0, 2.0])
        curves2 = curves.transformed(translation=shift)
        spec2 = GridSpec((8, 8, 8), spec.origin + shift, 0.25)
        band2 = build_narrow_band(curves2, spec2, 0.8)
        assert np.array_equal(band.active, band2.active)
        assert np.allclose(band.dist[band.active], band2.dist[band2.active], atol=1e-9)

    def test_empty_curves(self):
        spec = unit_grid()
        with pytest.raises(EmptyCurves):
            build_narrow_band(CurveSet(np.zeros((0, 3)), []), spec, 3.0)

    def test_width_floor(self):
        ring = scene_preset("ring", {"radius": 1.0})
        spec = unit_grid(spacing=0.5)
        with pytest.raises(ValueError):
            build_narrow_band(ring, spec, 1.0)
