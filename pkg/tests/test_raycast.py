"""Transfer curve, geodesic marching, renders, and camera motion."""
import math
from dataclasses import replace
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypray import cohomology as coh
from hypray import geometry as geo
from hypray import raycast as rc


def unit_directions(camera, n, seed):
    """n unit tangents at the eye, uniform over the gaze sphere."""
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((n, 3))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    return (camera.frame[:, 1:] @ raw.T).T


def base_params(scene, **overrides):
    gen = coh.h1_basis(scene.triangulation).generators[0]
    kwargs = dict(width=8, height=8, weights=gen, radius=4.0, max_steps=512)
    kwargs.update(overrides)
    return rc.RenderParams(**kwargs)


class TestTransfer:
    @pytest.mark.parametrize("x,y", [
        (0, 0.5), (1, 0.75), (-1, 0.25), (3, 0.875), (-3, 0.125),
    ])
    def test_dyadic_pins_are_exact(self, x, y):
        assert rc.transfer(x) == y

    def test_non_dyadic_pin(self):
        assert abs(rc.transfer(2) - 5.0 / 6.0) < 1e-15

    @given(st.integers(0, 10 ** 6))
    def test_symmetric_about_one_half(self, x):
        assert rc.transfer(x) + rc.transfer(-x) == 1.0

    def test_strictly_increasing_on_integers(self):
        xs = np.arange(-100, 101)
        ys = rc.transfer(xs)
        assert np.all(np.diff(ys) > 0)
        assert np.all((ys > 0) & (ys < 1))

    def test_array_agrees_with_scalar(self):
        xs = np.array([-7, 0, 1, 42])
        np.testing.assert_array_equal(
            rc.transfer(xs), [rc.transfer(int(x)) for x in xs]
        )

    def test_saturates_toward_the_ends(self):
        assert rc.transfer(10 ** 9) > 0.999999
        assert rc.transfer(-(10 ** 9)) < 0.000001


class TestColormap:
    @pytest.mark.parametrize("v,rgb", [
        (0.0, (0, 0, 0)),
        (0.25, (32, 48, 160)),
        (0.5, (64, 160, 176)),
        (0.75, (224, 224, 128)),
        (1.0, (255, 255, 255)),
    ])
    def test_stop_pins(self, v, rgb):
        assert rc.colormap(v) == rgb

    def test_linear_between_stops(self):
        assert rc.colormap(0.125) == (16, 24, 80)

    def test_clips_out_of_range(self):
        assert rc.colormap(-3.0) == rc.colormap(0.0)
        assert rc.colormap(7.0) == rc.colormap(1.0)

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError, match="colormap"):
            rc.colormap(0.5, name="viridis")


class TestGeodesic:
    def test_zero_length_is_identity(self):
        p = np.array([1.0, 0.0, 0.0, 0.0])
        v = np.array([0.0, 1.0, 0.0, 0.0])
        q, w = rc.geodesic_point(p, v, 0.0)
        np.testing.assert_array_equal(q, p)
        np.testing.assert_array_equal(w, v)

    def test_log_two_from_origin(self):
        p = np.array([1.0, 0.0, 0.0, 0.0])
        v = np.array([0.0, 1.0, 0.0, 0.0])
        q, w = rc.geodesic_point(p, v, math.log(2.0))
        # cosh(log 2) = 5/4, sinh(log 2) = 3/4
        np.testing.assert_allclose(q, [1.25, 0.75, 0.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(w, [0.75, 1.25, 0.0, 0.0], atol=1e-15)
        assert abs(geo.minkowski_inner(q, q) + 1.0) < 1e-15

    @given(st.floats(-3.0, 3.0), st.floats(-3.0, 3.0))
    def test_stays_on_hyperboloid(self, t, tilt):
        p = np.array([1.0, 0.0, 0.0, 0.0])
        v = np.array([0.0, math.cos(tilt), math.sin(tilt), 0.0])
        q, w = rc.geodesic_point(p, v, t)
        assert abs(geo.minkowski_inner(q, q) + 1.0) < 1e-9
        assert abs(geo.minkowski_inner(w, w) - 1.0) < 1e-9
        assert abs(geo.minkowski_inner(q, w)) < 1e-9


class TestPixelDirections:
    def test_center_sample_is_forward(self, m004_scene):
        cam = rc.default_camera(m004_scene)
        params = base_params(m004_scene, width=16, height=16)
        d = rc.pixel_to_direction(7.5, 7.5, params, cam)
        np.testing.assert_allclose(d, cam.frame[:, 3], atol=1e-15)

    def test_right_edge_at_ninety_degrees(self, m004_scene):
        # half-width tan(45) = 1: the rightmost half-sample direction is
        # the normalized forward + right diagonal
        cam = rc.default_camera(m004_scene)
        params = base_params(m004_scene, width=16, height=16, fov=90.0)
        d = rc.pixel_to_direction(15.5, 7.5, params, cam)
        diag = cam.frame[:, 3] + cam.frame[:, 1]
        diag = diag / math.sqrt(geo.minkowski_inner(diag, diag))
        np.testing.assert_allclose(d, diag, atol=1e-14)

    @given(st.floats(0.0, 15.0), st.floats(0.0, 15.0))
    def test_directions_are_unit_tangents(self, m004_scene, px, py):
        cam = rc.default_camera(m004_scene)
        params = base_params(m004_scene, width=16, height=16)
        d = rc.pixel_to_direction(px, py, params, cam)
        assert abs(geo.minkowski_inner(d, d) - 1.0) < 1e-12
        assert abs(geo.minkowski_inner(d, cam.eye)) < 1e-12

    def test_vertical_span_scales_with_aspect(self, m004_scene):
        cam = rc.default_camera(m004_scene)
        wide = base_params(m004_scene, width=32, height=16)
        up_w = rc.pixel_to_direction(15.5, -0.5, wide, cam)
        square = base_params(m004_scene, width=16, height=16)
        up_s = rc.pixel_to_direction(7.5, -0.5, square, cam)
        # halving the relative height halves the vertical tangent reach
        comp_w = geo.minkowski_inner(up_w, cam.frame[:, 2])
        comp_s = geo.minkowski_inner(up_s, cam.frame[:, 2])
        assert comp_w > 0 and comp_s > 0
        assert comp_w < comp_s


class TestNextCrossing:
    def test_exit_point_lies_on_the_face(self, m004_scene):
        cam = rc.default_camera(m004_scene)
        for d in unit_directions(cam, 25, seed=3):
            state = rc.RayState(tet=cam.tet, point=cam.eye, direction=d)
            face, t = rc.next_crossing(state, m004_scene)
            assert t > 0
            q, _ = rc.geodesic_point(state.point, state.direction, t)
            n = m004_scene.normals[cam.tet, face]
            assert abs(geo.minkowski_inner(n, q)) < 1e-9 * q[0]
            # no other face was pierced strictly earlier
            for f in range(4):
                if f == face:
                    continue
                mid, _ = rc.geodesic_point(state.point, state.direction, t / 2)
                assert geo.minkowski_inner(m004_scene.normals[cam.tet, f], mid) < 0

    def test_on_edge_tie_resolves_to_smallest_face(self, m004_scene):
        sc = m004_scene
        fa, fb = 1, 3
        others = [v for v in range(4) if v not in (fa, fb)]
        m = sc.vertices[0, others[0]] + sc.vertices[0, others[1]]
        p = m / math.sqrt(-geo.minkowski_inner(m, m))
        w = sc.normals[0, fa] + sc.normals[0, fb]
        w = w + geo.minkowski_inner(w, p) * p
        w = w / math.sqrt(geo.minkowski_inner(w, w))
        state = rc.RayState(tet=0, point=p, direction=w)
        face, t = rc.next_crossing(state, sc)
        assert face == fa
        assert 0.0 <= t < 1e-12

    def test_entry_face_is_excluded(self, m004_scene):
        sc = m004_scene
        fa, fb = 1, 3
        others = [v for v in range(4) if v not in (fa, fb)]
        m = sc.vertices[0, others[0]] + sc.vertices[0, others[1]]
        p = m / math.sqrt(-geo.minkowski_inner(m, m))
        w = sc.normals[0, fa] + sc.normals[0, fb]
        w = w + geo.minkowski_inner(w, p) * p
        w = w / math.sqrt(geo.minkowski_inner(w, w))
        state = rc.RayState(tet=0, point=p, direction=w)
        face, _ = rc.next_crossing(state, sc, entry_face=fa)
        assert face == fb

    def test_no_forward_crossing_raises(self):
        # four walls at distance 0.5 whose outward normals point along the
        # regular tetrahedron directions; backing away from wall 0 keeps
        # every <v, n> below tanh(0.5), so no forward root exists
        u = np.array([
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ]) / math.sqrt(3.0)
        r = 0.5
        normals = np.concatenate(
            [np.full((4, 1), math.sinh(r)), math.cosh(r) * u], axis=1
        )
        cell = SimpleNamespace(normals=normals[np.newaxis, :, :])
        state = rc.RayState(
            tet=0,
            point=np.array([1.0, 0.0, 0.0, 0.0]),
            direction=np.concatenate([[0.0], -u[0]]),
        )
        with pytest.raises(rc.TraversalError, match="no forward"):
            rc.next_crossing(state, cell)


class TestTraceInvariants:
    def test_minkowski_invariants_survive_transport(self, m004_scene):
        cam = rc.default_camera(m004_scene)
        params = base_params(m004_scene, radius=8.0, max_steps=4096)
        total = 0
        for d in unit_directions(cam, 100, seed=11):
            res = rc.trace_ray(cam, d, params, m004_scene)
            e = res.end_state
            assert abs(geo.minkowski_inner(e.point, e.point) + 1.0) < 1e-9
            assert abs(geo.minkowski_inner(e.direction, e.direction) - 1.0) < 1e-9
            assert abs(geo.minkowski_inner(e.point, e.direction)) < 1e-9
            total += res.steps
        assert total >= 1000

    def test_running_sums_are_cumulative(self, m004_scene):
        cam = rc.default_camera(m004_scene)
        params = base_params(m004_scene, radius=6.0, max_steps=2048)
        gen = params.weights
        for d in unit_directions(cam, 20, seed=5):
            res = rc.trace_ray(cam, d, params, m004_scene)
            assert res.steps == len(res.crossings)
            dist = 0.0
            weight = 0
            for step, fc, sign, t_exit, run_w, run_d in res.crossings:
                dist += t_exit
                weight += sign * gen[fc]
                assert run_w == weight
                assert run_d == dist
            assert res.weight == weight
            assert res.distance == dist

    def test_reversal_retraces_and_cancels(self, m004_scene):
        cam = rc.default_camera(m004_scene)
        params = base_params(m004_scene, radius=5.0, max_steps=2048)
        for d in unit_directions(cam, 20, seed=7):
            res = rc.trace_ray(cam, d, params, m004_scene)
            if res.steps == 0:
                continue
            back_params = replace(params, radius=1e9, max_steps=res.steps)
            start = rc.RayState(
                tet=res.end_state.tet,
                point=res.end_state.point,
                direction=-res.end_state.direction,
            )
            back = rc.trace_state(start, back_params, m004_scene)
            assert back.weight == -res.weight
            fwd = [(fc, s) for _, fc, s, _, _, _ in res.crossings]
            rev = [(fc, -s) for _, fc, s, _, _, _ in back.crossings]
            assert rev == fwd[::-1]
            # after res.steps crossings the backward ray sits at the first
            # forward crossing, one segment short of the eye
            t_first = res.crossings[0][3]
            assert abs(back.distance - (res.distance - t_first)) < 1e-9
            q, w = rc.geodesic_point(
                back.end_state.point, back.end_state.direction, t_first
            )
            assert np.max(np.abs(q - cam.eye)) < 1e-8
            assert np.max(np.abs(w + d)) < 1e-8

    def test_coboundary_weights_telescope(self, m004_scene):
        t = m004_scene.triangulation
        f = (3, -2)
        w = coh.coboundary(t, f)
        params = base_params(m004_scene, weights=w, radius=5.0, max_steps=2048)
        cam = rc.default_camera(m004_scene)
        for d in unit_directions(cam, 30, seed=13):
            res = rc.trace_ray(cam, d, params, m004_scene)
            assert res.weight == f[cam.tet] - f[res.end_state.tet]

    def test_weight_length_checked(self, m004_scene):
        cam = rc.default_camera(m004_scene)
        params = base_params(m004_scene)
        bad = coh.FaceWeights((1, 0, 0))
        with pytest.raises(ValueError, match="face classes"):
            rc.trace_ray(cam, cam.frame[:, 3], params, m004_scene, weights=bad)

    def test_max_steps_cap_is_reported(self, m004_scene):
        cam = rc.default_camera(m004_scene)
        params = base_params(m004_scene, radius=50.0, max_steps=5)
        res = rc.trace_ray(cam, cam.frame[:, 3], params, m004_scene)
        assert res.hit_cap
        assert res.steps == 5


class TestRender:
    def test_short_radius_renders_the_midpoint_color(self, m004_scene):
        cam = rc.default_camera(m004_scene)
        state = rc.RayState(tet=cam.tet, point=cam.eye, direction=cam.frame[:, 3])
        _, t_first = rc.next_crossing(state, m004_scene)
        params = base_params(
            m004_scene, width=1, height=1, radius=0.9 * t_first
        )
        out = rc.render(m004_scene, cam, params)
        assert out.errors == ()
        assert tuple(out.image.pixels[0, 0]) == (64, 160, 176)

    def test_pixels_match_single_ray_traces(self, m004_scene):
        cam = rc.default_camera(m004_scene)
        params = base_params(m004_scene, width=3, height=3)
        out = rc.render(m004_scene, cam, params)
        for py in range(3):
            for px in range(3):
                d = rc.pixel_to_direction(px, py, params, cam)
                res = rc.trace_ray(cam, d, params, m004_scene)
                expect = rc.colormap(rc.transfer(res.weight))
                assert tuple(out.image.pixels[py, px]) == expect

    def test_deterministic_across_worker_counts(self, m004_scene):
        cam = rc.default_camera(m004_scene)
        params = base_params(m004_scene, width=24, height=16)
        base = rc.render(m004_scene, cam, params, workers=1).image.to_ppm()
        for workers in (1, 4, 8):
            again = rc.render(m004_scene, cam, params, workers=workers)
            assert again.image.to_ppm() == base
        assert base.startswith(b"P6\n24 16\n255\n")
        assert len(base) == len(b"P6\n24 16\n255\n") + 24 * 16 * 3

    def test_supersampling_averages_subsamples(self, m004_scene):
        cam = rc.default_camera(m004_scene)
        fine = base_params(m004_scene, width=12, height=12, supersample=2)
        out = rc.render(m004_scene, cam, fine)
        assert out.image.pixels.shape == (12, 12, 3)
        assert out.errors == ()
        again = rc.render(m004_scene, cam, fine, workers=4)
        assert again.image.to_ppm() == out.image.to_ppm()

    def test_camera_outside_tet_rejected(self, m004_scene):
        cam = rc.default_camera(m004_scene)
        far = rc.move_camera(cam, (0.0, 0.0, 2.0), (0.0, 0.0, 0.0), m004_scene)
        bad = rc.Camera(tet=cam.tet, frame=far.frame)
        params = base_params(m004_scene, width=2, height=2)
        if not bad.is_inside(m004_scene):
            with pytest.raises(rc.TraversalError, match="inside"):
                rc.render(m004_scene, bad, params)

    @pytest.mark.parametrize("kwargs,msg", [
        (dict(width=0), "dimensions"),
        (dict(height=-3), "dimensions"),
        (dict(fov=5.0), "fov"),
        (dict(fov=171.0), "fov"),
        (dict(radius=0.0), "radius"),
        (dict(radius=-1.0), "radius"),
        (dict(max_steps=0), "max_steps"),
        (dict(supersample=3), "supersample"),
        (dict(colormap="nope"), "colormap"),
    ])
    def test_param_validation(self, m004_scene, kwargs, msg):
        with pytest.raises(ValueError, match=msg):
            base_params(m004_scene, **kwargs)


class TestCamera:
    def test_default_camera_sits_at_the_basepoint(self, m004_scene):
        for tet in range(2):
            cam = rc.default_camera(m004_scene, tet=tet)
            assert cam.tet == tet
            np.testing.assert_allclose(
                cam.eye, m004_scene.basepoint(tet), atol=1e-12
            )
            assert geo.isometry_defect(cam.frame) < 1e-12
            assert cam.is_inside(m004_scene)

    def test_non_isometric_frame_rejected(self):
        with pytest.raises(ValueError, match="form"):
            rc.Camera(tet=0, frame=np.eye(4) * 2.0)
        with pytest.raises(ValueError, match="4x4"):
            rc.Camera(tet=0, frame=np.eye(3))

    def test_zero_move_is_identity(self, m004_scene):
        cam = rc.default_camera(m004_scene)
        out = rc.move_camera(cam, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0), m004_scene)
        assert out.tet == cam.tet
        np.testing.assert_allclose(out.frame, cam.frame, atol=1e-12)

    def test_pure_rotation_keeps_the_eye(self, m004_scene):
        cam = rc.default_camera(m004_scene)
        out = rc.move_camera(
            cam, (0.0, 0.0, 0.0), (0.0, 0.7, 0.0), m004_scene
        )
        assert out.tet == cam.tet
        np.testing.assert_allclose(out.eye, cam.eye, atol=1e-12)
        assert geo.isometry_defect(out.frame) < 1e-12

    def test_forward_then_back_returns(self, m004_scene):
        cam = rc.default_camera(m004_scene)
        fwd = rc.move_camera(cam, (0.0, 0.0, 0.4), (0.0, 0.0, 0.0), m004_scene)
        back = rc.move_camera(fwd, (0.0, 0.0, -0.4), (0.0, 0.0, 0.0), m004_scene)
        assert back.tet == cam.tet
        np.testing.assert_allclose(back.frame, cam.frame, atol=1e-9)

    def test_long_walk_stays_normalized(self, m004_scene):
        cam = rc.default_camera(m004_scene)
        for _ in range(100):
            cam = rc.move_camera(cam, (0.0, 0.0, 0.1), (0.0, 0.0, 0.0), m004_scene)
        assert geo.isometry_defect(cam.frame) < 1e-10
        assert cam.is_inside(m004_scene, tol=geo.GEOMETRIC_TOL)

    def test_random_walk_stays_contained(self, m004_scene):
        rng = np.random.default_rng(23)
        cam = rc.default_camera(m004_scene)
        for _ in range(300):
            cam = rc.move_camera(
                cam, rng.uniform(-0.2, 0.2, 3), rng.uniform(-0.3, 0.3, 3),
                m004_scene,
            )
            assert cam.is_inside(m004_scene, tol=geo.GEOMETRIC_TOL)
        assert geo.isometry_defect(cam.frame) < 1e-10
