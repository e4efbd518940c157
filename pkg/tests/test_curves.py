import math

import numpy as np
import pytest

from filamentsim.curves import (
    CurveSet,
    curvature_vectors,
    distance_and_nearest,
    make_ring,
    scene_preset,
    writhe,
)
from filamentsim.errors import EmptyCurves, UnknownScene


def rotation_matrix(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis /= np.linalg.norm(axis)
    K = np.array(
        [[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]]
    )
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * (K @ K)


class TestDistance:
    def test_axis_point(self):
        ring = scene_preset("ring", {"radius": 1.0, "count": 1024})
        d, point, _ = distance_and_nearest((0.0, 0.0, 1.0), ring)
        assert d == pytest.approx(math.sqrt(2.0), abs=1e-5)
        d, point, _ = distance_and_nearest((0.0, 0.0, 0.0), ring)
        assert d == pytest.approx(1.0, abs=1e-5)

    def test_vertex_coincident(self):
        ring = scene_preset("ring", {"radius": 1.0, "count": 64})
        v0 = ring.vertices[5]
        d, point, seg = distance_and_nearest(v0, ring)
        assert d == pytest.approx(0.0, abs=1e-14)
        assert np.allclose(point, v0)

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(5)
        curves = CurveSet(rng.standard_normal((30, 3)), [(0, 15), (15, 15)])
        a, b = curves.segment_arrays()
        for x in rng.uniform(-2, 2, size=(1000, 3)):
            d, point, seg = distance_and_nearest(x, curves)
            # independent scan
            best = math.inf
            for j in range(len(a)):
                u = b[j] - a[j]
                t = float(np.clip(np.dot(x - a[j], u) / np.dot(u, u), 0, 1))
                best = min(best, float(np.linalg.norm(x - (a[j] + t * u))))
            assert d == pytest.approx(best, abs=1e-12)

    def test_empty(self):
        with pytest.raises(EmptyCurves):
            distance_and_nearest((0, 0, 0), CurveSet(np.zeros((0, 3)), []))


class TestWrithe:
    def test_planar_circle(self):
        for n in (16, 64, 256):
            assert abs(writhe(scene_preset("ring", {"count": n}))) < 1e-10

    def test_planar_polygon(self):
        rng = np.random.default_rng(1)
        r = rng.uniform(0.5, 2.0, size=12)
        t = np.sort(rng.uniform(0, 2 * np.pi, size=12))
        pts = np.stack([r * np.cos(t), r * np.sin(t), np.zeros(12)], axis=1)
        assert abs(writhe(CurveSet(pts, [(0, 12)]))) < 1e-10

    def test_trefoil_vs_quadrature_oracle(self):
        # frozen from a dense trapezoid double quadrature of the Gauss
        # integral over the smooth parametrization (N=1600, converged)
        oracle = -3.354126
        tre = scene_preset("trefoil", {"count": 512})
        assert writhe(tre) == pytest.approx(oracle, abs=1e-3)

    def test_rigid_motion_and_scale_invariance(self):
        tre = scene_preset("trefoil", {"count": 128})
        w0 = writhe(tre)
        R = rotation_matrix([1, 2, 3], 1.1)
        moved = tre.transformed(rotation=R, translation=[4, -5, 6], scale=2.7)
        assert writhe(moved) == pytest.approx(w0, abs=1e-9)

    def test_orientation_reversal_invariance(self):
        tre = scene_preset("trefoil", {"count": 128})
        rev = CurveSet(tre.vertices[::-1].copy(), [(0, len(tre.vertices))])
        assert writhe(rev) == pytest.approx(writhe(tre), abs=1e-9)


class TestCurvature:
    def test_circle_radius_two(self):
        circ = scene_preset("ring", {"radius": 2.0, "count": 256})
        k = curvature_vectors(circ)
        mags = np.linalg.norm(k, axis=1)
        assert np.allclose(mags, 0.5, atol=1e-3)
        inward = -circ.vertices / np.linalg.norm(circ.vertices, axis=1, keepdims=True)
        assert np.all(np.einsum("ij,ij->i", k, inward) > 0)

    def test_straight_run_is_flat(self):
        # rectangle with subdivided long edges: interior vertices collinear
        xs = np.linspace(0.0, 4.0, 9)
        top = np.stack([xs, np.ones_like(xs), np.zeros_like(xs)], axis=1)
        bottom = np.stack([xs[::-1], -np.ones_like(xs), np.zeros_like(xs)], axis=1)
        pts = np.concatenate([top, bottom])
        k = curvature_vectors(CurveSet(pts, [(0, len(pts))]))
        assert np.linalg.norm(k[4]) < 1e-12

    def test_second_order_convergence(self):
        # ellipse sampled uniformly in parameter; oracle is the analytic
        # second arclength derivative
        def ellipse_error(n):
            t = 2 * np.pi * np.arange(n) / n
            a, b = 1.3, 0.7
            pts = np.stack([a * np.cos(t), b * np.sin(t), np.zeros(n)], axis=1)
            d1 = np.stack([-a * np.sin(t), b * np.cos(t), np.zeros(n)], axis=1)
            d2 = np.stack([-a * np.cos(t), -b * np.sin(t), np.zeros(n)], axis=1)
            sp2 = (d1 * d1).sum(axis=1)
            want = (d2 * sp2[:, None] - d1 * (d1 * d2).sum(axis=1)[:, None]) / sp2[
                :, None
            ] ** 2
            got = curvature_vectors(CurveSet(pts, [(0, n)]))
            return np.abs(got - want).max()

        assert ellipse_error(128) / ellipse_error(512) >= 4.0

    def test_circle_is_exact(self):
        circ = scene_preset("ring", {"radius": 1.0, "count": 64})
        k = curvature_vectors(circ)
        assert np.allclose(np.linalg.norm(k, axis=1), 1.0, atol=1e-12)


class TestScenes:
    def test_trefoil_start_point(self):
        tre = scene_preset("trefoil", {"count": 256})
        assert np.allclose(tre.vertices[0], [0.0, -1.0, 0.0], atol=1e-14)

    def test_torus_knot_start_point(self):
        knot = scene_preset("torus_knot_pq", {"p": 5, "q": 8, "count": 512})
        assert np.allclose(knot.vertices[0], [3.0, 0.0, 0.0], atol=1e-14)

    def test_ring_square(self):
        ring = scene_preset("ring", {"radius": 2.0, "count": 4})
        assert len(ring.vertices) == 4
        assert np.allclose(np.linalg.norm(ring.vertices, axis=1), 2.0, atol=1e-14)
        side = np.linalg.norm(ring.vertices[1] - ring.vertices[0])
        assert side == pytest.approx(2.0 * math.sqrt(2.0), abs=1e-12)

    def test_leapfrog_two_coplanar_rings(self):
        lf = scene_preset("leapfrog", {"radius": 0.5, "count": 64})
        assert lf.loop_count == 2
        r1 = np.linalg.norm(lf.loop_vertices(0)[:, :2], axis=1).mean()
        r2 = np.linalg.norm(lf.loop_vertices(1)[:, :2], axis=1).mean()
        assert r1 == pytest.approx(2.0 * r2, rel=1e-6)
        assert np.allclose(lf.vertices[:, 2], 0.0)

    def test_linked_rings_are_linked(self):
        # Gauss linking number of the two loops via the pair integral
        from filamentsim.curves import _pair_solid_angles

        lr = scene_preset("linked_rings", {"count": 128})
        a0, b0 = lr.loop_vertices(0), np.roll(lr.loop_vertices(0), -1, axis=0)
        a1, b1 = lr.loop_vertices(1), np.roll(lr.loop_vertices(1), -1, axis=0)
        ii, jj = np.meshgrid(np.arange(128), np.arange(128), indexing="ij")
        omega = _pair_solid_angles(
            a0[ii.ravel()], b0[ii.ravel()], a1[jj.ravel()], b1[jj.ravel()]
        )
        link = omega.sum() / (4 * np.pi)
        assert abs(abs(link) - 1.0) < 1e-6

    def test_unknown_scene(self):
        with pytest.raises(UnknownScene):
            scene_preset("mobius")
        with pytest.raises(UnknownScene):
            scene_preset("ring", {"radius": 1.0, "bogus": 2})

    def test_jet_seed_and_oblique(self):
        jet = scene_preset("jet_seed", {"radius": 0.3, "center": (0, 0, -1)})
        assert jet.loop_count == 1
        obl = scene_preset("oblique_rings", {})
        assert obl.loop_count == 2
