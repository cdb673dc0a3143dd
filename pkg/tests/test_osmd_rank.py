"""Mirror-descent learner: regularizer, projection, peeling, updates."""

import math

import numpy as np
import pytest

from permbandit import osmd_rank as om

from helpers import random_polytope_point, random_vertex, scaled_vertex_values


class TestParams:
    def test_defaults_pinned(self):
        p = om.default_params(4, 100)
        assert p.eta == pytest.approx(0.4)
        assert p.gamma == pytest.approx(0.1)

    def test_gamma_caps_at_one(self):
        assert om.default_params(3, 1).gamma == 1.0

    def test_constant_knobs(self):
        p = om.default_params(4, 100, c_eta=0.5, c_gamma=2.0)
        assert p.eta == pytest.approx(0.2)
        assert p.gamma == pytest.approx(0.2)

    def test_validation(self):
        with pytest.raises(ValueError):
            om.default_params(1, 100)
        with pytest.raises(ValueError):
            om.default_params(3, 0)
        with pytest.raises(ValueError):
            om.OsmdParams(eta=0.0, gamma=0.5)
        with pytest.raises(ValueError):
            om.OsmdParams(eta=0.1, gamma=1.5)


class TestRegularizer:
    def test_pinned_value(self):
        assert om.regularizer_F([0.5]) == pytest.approx(0.13081203594113694, abs=1e-15)

    def test_zero_and_faces(self):
        assert om.regularizer_F(np.zeros(4)) == 0.0
        assert om.regularizer_F([1.0]) == pytest.approx(math.log(2.0))
        assert om.regularizer_F([1.0, -1.0]) == pytest.approx(2.0 * math.log(2.0))

    def test_domain_check(self):
        with pytest.raises(ValueError):
            om.regularizer_F([1.0001])

    def test_symmetric_and_convex_along_lines(self):
        rng = np.random.default_rng(40)
        for _ in range(20):
            x = rng.uniform(-0.99, 0.99, size=5)
            assert om.regularizer_F(x) == pytest.approx(om.regularizer_F(-x), abs=1e-12)
            y = rng.uniform(-0.99, 0.99, size=5)
            mid = om.regularizer_F((x + y) / 2)
            assert mid <= (om.regularizer_F(x) + om.regularizer_F(y)) / 2 + 1e-12


class TestLink:
    def test_pinned_value(self):
        np.testing.assert_allclose(om.link([0.5]), [0.5 * math.log(3.0)])

    def test_round_trip(self):
        rng = np.random.default_rng(41)
        x = rng.uniform(-0.999, 0.999, size=50)
        np.testing.assert_allclose(om.link_inv(om.link(x)), x, atol=1e-12)

    def test_inverse_clamps_into_open_cube(self):
        out = om.link_inv(np.array([1e6, -1e6]))
        assert out[0] == 1.0 - om.INTERIOR_EPS
        assert out[1] == -1.0 + om.INTERIOR_EPS

    def test_link_rejects_boundary(self):
        with pytest.raises(ValueError):
            om.link([1.0])


class TestBregman:
    def test_zero_iff_equal(self):
        rng = np.random.default_rng(42)
        q = rng.uniform(-0.9, 0.9, size=4)
        assert om.bregman_divergence(q, q) == pytest.approx(0.0, abs=1e-14)
        p = q + 0.05
        assert om.bregman_divergence(p, q) > 1e-5

    def test_nonnegative(self):
        rng = np.random.default_rng(43)
        for _ in range(50):
            p = rng.uniform(-1.0, 1.0, size=4)
            q = rng.uniform(-0.95, 0.95, size=4)
            assert om.bregman_divergence(p, q) >= -1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            om.bregman_divergence([0.1, 0.2], [0.1])


class TestPrefixBounds:
    def test_pinned_values(self):
        np.testing.assert_allclose(om.prefix_bounds(3), [1.0, 1.0, 0.0])
        np.testing.assert_allclose(om.prefix_bounds(5), [1.0, 1.5, 1.5, 1.0, 0.0])

    def test_vertex_prefixes_are_tight(self):
        for n in (2, 4, 7):
            pref = np.cumsum(scaled_vertex_values(n))
            np.testing.assert_allclose(pref, om.prefix_bounds(n), atol=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            om.prefix_bounds(1)


class TestMembership:
    def test_vertices_and_mixtures_inside(self):
        rng = np.random.default_rng(44)
        for n in (2, 3, 5, 8):
            assert om.is_in_polytope(random_vertex(n, rng))
            assert om.is_in_polytope(random_polytope_point(n, rng))

    def test_outside_points(self):
        assert not om.is_in_polytope([0.5, 0.5])  # violates zero sum
        assert not om.is_in_polytope([1.5, -1.5])  # violates prefix bound
        assert om.is_in_polytope([0.5, -0.5])


class TestDeltaSolve:
    def test_pinned_value(self):
        assert om.delta_solve((0.5,), 0.0) == pytest.approx(0.5 * math.log(3.0))

    def test_solves_the_block_equation(self):
        rng = np.random.default_rng(45)
        for _ in range(30):
            q = rng.uniform(-0.9, 0.9, size=4)
            target = float(rng.uniform(-3.5, 3.5))
            d = om.delta_solve(q, target)
            got = float(np.sum(np.tanh(np.arctanh(q) - d)))
            assert got == pytest.approx(target, abs=1e-9)

    def test_unreachable_target(self):
        with pytest.raises(ValueError):
            om.delta_solve([0.5, 0.5], 2.5)

    def test_boundary_input_rejected(self):
        with pytest.raises(ValueError):
            om.delta_solve([1.0], 0.0)


class TestProjection:
    def test_pinned_symmetric_pair(self):
        np.testing.assert_allclose(om.project([0.5, 0.5]), [0.0, 0.0], atol=1e-12)

    def test_members_are_fixed_points(self):
        rng = np.random.default_rng(46)
        for n in (2, 3, 5, 8):
            for _ in range(10):
                y = np.clip(random_polytope_point(n, rng), -0.999, 0.999)
                y -= y.mean()  # clip can break the zero sum; restore it
                if not om.is_in_polytope(y, tol=1e-12):
                    continue
                np.testing.assert_allclose(om.project(y), y, atol=1e-8)

    def test_output_feasible_and_order_preserving(self):
        rng = np.random.default_rng(47)
        for _ in range(100):
            n = int(rng.integers(2, 9))
            q = rng.uniform(-0.999, 0.999, size=n)
            p = om.project(q)
            assert om.is_in_polytope(p, tol=1e-9)
            order = np.argsort(-q, kind="mergesort")
            diffs = np.diff(p[order])
            assert np.all(diffs <= 1e-12)

    def test_certificate_reconstructs_projection(self):
        # each block solves its tight prefix target with the reported delta
        rng = np.random.default_rng(48)
        bnd_cache = {}
        for _ in range(50):
            n = int(rng.integers(2, 8))
            if n not in bnd_cache:
                bnd_cache[n] = om.prefix_bounds(n)
            bnd = bnd_cache[n]
            q = rng.uniform(-0.99, 0.99, size=n)
            p, deltas, ends = om.project_with_info(q)
            assert np.all(np.diff(deltas) > 0.0)
            order = np.argsort(-q, kind="mergesort")
            q_sorted = q[order]
            p_sorted = p[order]
            start = 0
            for k, end in enumerate(ends):
                block = q_sorted[start:end]
                np.testing.assert_allclose(
                    p_sorted[start:end],
                    np.tanh(np.arctanh(block) + deltas[k]),
                    atol=1e-9,
                )
                target = bnd[end - 1] - (bnd[start - 1] if start > 0 else 0.0)
                assert om.delta_solve(block, target) == pytest.approx(
                    -deltas[k], abs=1e-8
                )
                start = end
            assert start == n

    def test_minimizes_divergence(self):
        # projection beats every sampled feasible point, pythagorean-style
        rng = np.random.default_rng(49)
        for _ in range(30):
            n = int(rng.integers(2, 6))
            q = rng.uniform(-0.95, 0.95, size=n)
            p = om.project(q)
            d_p = om.bregman_divergence(p, q)
            for _ in range(10):
                # mixtures can stick out of the cube by an ulp; clip them back
                z = np.clip(random_polytope_point(n, rng), -1.0, 1.0)
                d_z = om.bregman_divergence(z, q)
                assert d_z >= d_p - 1e-10
                # generalized pythagorean inequality
                assert d_z - d_p - om.bregman_divergence(z, np.clip(
                    p, -1.0 + om.INTERIOR_EPS, 1.0 - om.INTERIOR_EPS
                )) >= -1e-7

    def test_rejects_boundary_input(self):
        with pytest.raises(ValueError):
            om.project([1.0, -1.0])


class TestDecompose:
    def test_pinned_center_of_segment(self):
        comb = om.decompose(np.zeros(2))
        assert comb.vertices.shape == (2, 2)
        np.testing.assert_allclose(np.sort(comb.weights), [0.5, 0.5], atol=1e-12)
        np.testing.assert_allclose(comb.weights @ comb.vertices, [0.0, 0.0], atol=1e-12)

    def test_single_vertex_passthrough(self):
        rng = np.random.default_rng(50)
        v = random_vertex(5, rng)
        comb = om.decompose(v)
        assert comb.vertices.shape[0] == 1
        np.testing.assert_allclose(comb.vertices[0], v, atol=1e-12)
        np.testing.assert_allclose(comb.weights, [1.0], atol=1e-12)

    def test_contract_on_random_points(self):
        rng = np.random.default_rng(51)
        for _ in range(200):
            n = int(rng.integers(2, 9))
            y = random_polytope_point(n, rng)
            comb = om.decompose(y)
            assert comb.vertices.shape[0] <= n
            assert np.all(comb.weights >= -1e-12)
            assert float(comb.weights.sum()) == pytest.approx(1.0, abs=1e-9)
            np.testing.assert_allclose(comb.weights @ comb.vertices, y, atol=1e-9)
            svals = scaled_vertex_values(n)
            for row in comb.vertices:
                np.testing.assert_allclose(np.sort(row)[::-1], svals, atol=1e-12)
            # merged output never repeats a vertex
            keys = {row.tobytes() for row in comb.vertices}
            assert len(keys) == comb.vertices.shape[0]

    def test_projection_chain(self):
        # the learner's actual per-round input: project then shrink
        rng = np.random.default_rng(52)
        for _ in range(50):
            n = int(rng.integers(2, 9))
            q = rng.uniform(-0.999, 0.999, size=n)
            x = om.project(q)
            y = (1.0 - 0.1) * x
            comb = om.decompose(y)
            np.testing.assert_allclose(comb.weights @ comb.vertices, y, atol=1e-9)

    def test_rejects_outside_point(self):
        with pytest.raises(ValueError):
            om.decompose([0.5, 0.5])
        with pytest.raises(ValueError):
            om.decompose([0.5])


class TestConvexCombination:
    def test_sampling_matches_weights(self):
        comb = om.ConvexCombination(
            vertices=np.eye(3), weights=np.array([0.6, 0.3, 0.1])
        )
        rng = np.random.default_rng(53)
        m = 6000
        counts = np.bincount(
            [comb.sample_index(rng) for _ in range(m)], minlength=3
        )
        np.testing.assert_allclose(counts / m, comb.weights, atol=4 * np.sqrt(0.25 / m))

    def test_zero_weight_never_sampled(self):
        comb = om.ConvexCombination(
            vertices=np.eye(2), weights=np.array([0.0, 1.0])
        )
        rng = np.random.default_rng(54)
        assert all(comb.sample_index(rng) == 1 for _ in range(100))

    def test_degenerate_weights_rejected(self):
        comb = om.ConvexCombination(vertices=np.eye(2), weights=np.zeros(2))
        with pytest.raises(ValueError):
            comb.sample_index(np.random.default_rng(0))


class TestEstimatorCovariance:
    def test_pinned_at_center(self):
        got = om.estimator_covariance(np.zeros(4), 0.2)
        np.testing.assert_allclose(got, (0.8 + 0.05) * np.eye(4), atol=1e-14)

    def test_closed_form(self):
        rng = np.random.default_rng(55)
        x = rng.uniform(-0.9, 0.9, size=5)
        gamma = 0.3
        expected = gamma / 5 * np.eye(5) + (1 - gamma) * (
            np.outer(x, x) + np.diag(1 - x * x)
        )
        np.testing.assert_allclose(om.estimator_covariance(x, gamma), expected, atol=1e-12)

    def test_positive_definite_inside_cube(self):
        rng = np.random.default_rng(56)
        for _ in range(30):
            x = rng.uniform(-0.99, 0.99, size=4)
            gamma = float(rng.uniform(0.0, 1.0))
            vals = np.linalg.eigvalsh(om.estimator_covariance(x, gamma))
            assert vals.min() > 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            om.estimator_covariance(np.zeros(3), -0.1)
        with pytest.raises(ValueError):
            om.estimator_covariance([1.5, 0.0], 0.5)


class TestUpdates:
    def test_apply_update_moves_against_loss(self):
        params = om.OsmdParams(eta=0.1, gamma=0.1)
        state = om.init_state(3, params)
        action = np.array([-1.0, 0.0, 1.0])
        om.apply_update(state, action, 1.0)
        assert state.t == 1
        assert om.is_in_polytope(state.x, tol=1e-9)
        # positive loss on this action pushes x away from it
        assert float(state.x @ action) < 0.0

    def test_apply_update_rejects_large_loss(self):
        state = om.init_state(3, om.OsmdParams(eta=0.1, gamma=0.1))
        with pytest.raises(ValueError):
            om.apply_update(state, np.array([-1.0, 0.0, 1.0]), 1.01)

    def test_apply_update_shape_check(self):
        state = om.init_state(3, om.OsmdParams(eta=0.1, gamma=0.1))
        with pytest.raises(ValueError):
            om.apply_update(state, np.array([-1.0, 1.0]), 0.5)

    def test_osmd_step_defers_mutation(self):
        state = om.init_state(4, om.OsmdParams(eta=0.2, gamma=0.1))
        rng = np.random.default_rng(57)
        action, update = om.osmd_step(state, rng)
        np.testing.assert_array_equal(state.x, np.zeros(4))
        assert state.t == 0
        update(0.5)
        assert state.t == 1
        assert not np.array_equal(state.x, np.zeros(4))

    def test_actions_are_scaled_vertices(self):
        state = om.init_state(5, om.OsmdParams(eta=0.3, gamma=0.1))
        rng = np.random.default_rng(58)
        svals = scaled_vertex_values(5)
        for _ in range(200):
            action, update = om.osmd_step(state, rng)
            np.testing.assert_allclose(np.sort(action)[::-1], svals, atol=1e-12)
            update(float(rng.uniform(-1.0, 1.0)))

    def test_state_stays_interior_under_pressure(self):
        # feed the worst-case loss signal for many rounds
        params = om.default_params(4, 200)
        state = om.init_state(4, params)
        rng = np.random.default_rng(59)
        for _ in range(200):
            action, update = om.osmd_step(state, rng)
            update(float(np.sign(action[0] - action[-1])))
            assert np.max(np.abs(state.x)) < 1.0
            assert om.is_in_polytope(state.x, tol=1e-9)


class TestLearner:
    def test_protocol_guards(self):
        learner = om.OsmdRankLearner(4, om.default_params(4, 100))
        rng = np.random.default_rng(60)
        with pytest.raises(RuntimeError):
            learner.observe(0.0)
        learner.propose(rng)
        with pytest.raises(RuntimeError):
            learner.propose(rng)
        learner.observe(0.3)
        learner.propose(rng)

    def test_long_run_health(self):
        learner = om.OsmdRankLearner(6, om.default_params(6, 500))
        rng = np.random.default_rng(61)
        s = np.array([0.3, -0.2, 0.1, 0.0, -0.1, -0.1])
        for _ in range(500):
            action = learner.propose(rng)
            learner.observe(float(action @ s))
        assert learner.state.t == 500
        assert learner.clip_events == 0
        assert om.is_in_polytope(learner.state.x, tol=1e-9)
