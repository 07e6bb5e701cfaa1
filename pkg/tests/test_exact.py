import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delaypower.exact import (InfeasibleConstraintError, InfeasiblePolicyError, NoConvergenceError,
                              TradeoffPoint, constraint_solve, count_monotone_policies,
                              distance_to_frontier, enumerate_monotone_policies, evaluate_policy,
                              frontier_energy, h_operator, policy_chain, policy_points,
                              relative_value_iteration, solve, stationary_distribution,
                              sweep_lambda, tradeoff_frontier)
from delaypower.mdp import QueueParams, build_transition_model, feasible_actions

CFG_A = QueueParams(10, 5, 4, 0.4, 1.0)
CFG_B = QueueParams(12, 5, 5, 0.4, 1.0)
SMALL = QueueParams(6, 3, 3, 0.5, 1.0)
TINY = QueueParams(3, 3, 3, 0.4, 1.0)


def power_stationary(P, start=0, squarings=60):
    """Oracle: long-run law from ``start`` via powers of the lazy chain (I+P)/2."""
    L = 0.5 * (np.eye(len(P)) + P)
    for _ in range(squarings):
        L = L @ L
        L /= L.sum(axis=1, keepdims=True)
    return L[start]


def oracle_eval(p, pi):
    model = build_transition_model(p)
    P = model.kernel[np.arange(p.n_states), list(pi)]
    stat = power_stationary(P)
    D = stat @ np.arange(p.n_states) / (p.alpha * p.M)
    E = stat @ np.asarray(pi, float) ** 2
    return D, E, -(D + p.lam * E)


def all_policies(p):
    return itertools.product(*(feasible_actions(p, q) for q in range(p.n_states)))


class TestRVI:
    def test_tiny_closed_form(self):
        res = solve(TINY)
        assert res.policy == (0, 1, 2, 3)
        assert res.gain == pytest.approx(-(1 + 9 * 0.4), abs=1e-9)

    def test_second_configuration_published_value(self):
        # published long-run value for this configuration is -7.64
        assert solve(CFG_B).gain == pytest.approx(-7.64, abs=0.1)

    def test_first_configuration_exhaustive_oracle(self):
        # the optimum over every feasible deterministic policy, evaluated by the oracle
        gains = [oracle_eval(CFG_A, pi)[2] for pi in all_policies(CFG_A)]
        assert len(gains) == 14_400
        res = solve(CFG_A)
        assert res.gain == pytest.approx(max(gains), abs=1e-8)
        assert res.gain == pytest.approx(-7.370526315789475, abs=1e-9)

    @pytest.mark.parametrize("lam", [0.0, 0.25, 0.5, 1.0, 2.0, 5.0])
    def test_small_exhaustive(self, lam):
        p = SMALL.with_lambda(lam)
        best = max(oracle_eval(p, pi)[2] for pi in all_policies(p))
        assert solve(p).gain == pytest.approx(best, abs=1e-9)

    @pytest.mark.parametrize("p", [CFG_A, CFG_B, SMALL, TINY])
    def test_gain_consistency(self, p):
        model = build_transition_model(p)
        res = relative_value_iteration(model)
        assert res.residual <= 1e-10
        assert evaluate_policy(model, res.policy).gain == pytest.approx(res.gain, abs=1e-8)

    def test_reference_state_does_not_change_gain(self):
        model = build_transition_model(CFG_A)
        assert relative_value_iteration(model, ref_state=3).gain == pytest.approx(
            relative_value_iteration(model).gain, abs=1e-8)

    def test_no_convergence(self):
        with pytest.raises(NoConvergenceError) as err:
            relative_value_iteration(build_transition_model(CFG_A), max_iter=3)
        assert err.value.residual > 1e-10

    def test_bad_arguments(self):
        model = build_transition_model(CFG_A)
        with pytest.raises(ValueError):
            relative_value_iteration(model, ref_state=11)
        with pytest.raises(ValueError):
            relative_value_iteration(model, tol=0.0)

    def test_deterministic(self):
        a, b = solve(CFG_A), solve(CFG_A)
        assert a.policy == b.policy and a.bias.tobytes() == b.bias.tobytes()


class TestChain:
    def test_tiny_rows(self):
        P = policy_chain(build_transition_model(TINY), (0, 1, 2, 3))
        assert P[0] == pytest.approx([0.6, 0, 0, 0.4])
        assert P[3] == pytest.approx([0.6, 0, 0, 0.4])
        assert P.sum(axis=1) == pytest.approx(np.ones(4))

    def test_tiny_rows_match_simulation(self):
        from delaypower.mdp import next_state
        rng = np.random.default_rng(1)
        counts = np.zeros((4, 4))
        q = 0
        for u in rng.random(100_000):
            nxt, _ = next_state(TINY, q, q, int(u < TINY.alpha))
            counts[q, nxt] += 1
            q = nxt
        freq = counts[[0, 3]] / counts[[0, 3]].sum(axis=1, keepdims=True)
        P = policy_chain(build_transition_model(TINY), (0, 1, 2, 3))
        assert np.max(np.abs(freq - P[[0, 3]])) < 0.01

    def test_infeasible_policy(self):
        with pytest.raises(InfeasiblePolicyError):
            policy_chain(build_transition_model(CFG_A), (0,) * 11)
        with pytest.raises(InfeasiblePolicyError):
            policy_chain(build_transition_model(CFG_A), (0, 1))

    def test_two_state_stationary(self):
        P = np.zeros((4, 4))
        P[:, 0], P[:, 3] = 0.6, 0.4
        assert stationary_distribution(P) == pytest.approx([0.6, 0, 0, 0.4], abs=1e-12)

    def test_identity(self):
        assert stationary_distribution(np.eye(5)) == pytest.approx([1, 0, 0, 0, 0])

    def test_transient_start_mixture(self):
        # 0 -> {1 (absorbing), 2<->3}; Cesaro limit from 0
        P = np.array([[0.0, 0.25, 0.75, 0.0],
                      [0.0, 1.0, 0.0, 0.0],
                      [0.0, 0.0, 0.0, 1.0],
                      [0.0, 0.0, 1.0, 0.0]])
        got = stationary_distribution(P)
        assert got == pytest.approx([0, 0.25, 0.375, 0.375], abs=1e-12)
        assert got == pytest.approx(power_stationary(P), abs=1e-9)

    def test_rejects_non_stochastic(self):
        with pytest.raises(ValueError):
            stationary_distribution(np.ones((3, 3)))

    @given(st.integers(2, 8), st.integers(0, 2**32 - 1))
    @settings(max_examples=60)
    def test_matches_power_oracle(self, n, seed):
        rng = np.random.default_rng(seed)
        P = rng.random((n, n)) * (rng.random((n, n)) < 0.5)
        P[np.arange(n), rng.integers(0, n, n)] += 0.1
        P /= P.sum(axis=1, keepdims=True)
        got = stationary_distribution(P)
        assert got.sum() == pytest.approx(1.0, abs=1e-10)
        assert np.all(got >= 0)
        assert got == pytest.approx(power_stationary(P), abs=1e-8)


class TestEvaluate:
    def test_tiny(self):
        ev = evaluate_policy(build_transition_model(TINY), (0, 1, 2, 3))
        assert (ev.D, ev.E, ev.gain) == pytest.approx((1.0, 3.6, -4.6))

    @pytest.mark.parametrize("alpha", [0.05, 0.1, 0.2])
    def test_energy_linear_in_alpha(self, alpha):
        ev = evaluate_policy(build_transition_model(TINY.with_alpha(alpha)), (0, 1, 2, 3))
        assert ev.E == pytest.approx(9 * alpha)

    def test_matches_oracle(self):
        rng = np.random.default_rng(7)
        policies = enumerate_monotone_policies(CFG_A)
        model = build_transition_model(CFG_A)
        for i in rng.choice(len(policies), 20, replace=False):
            ev = evaluate_policy(model, policies[i])
            D, E, g = oracle_eval(CFG_A, policies[i])
            assert (ev.D, ev.E, ev.gain) == pytest.approx((D, E, g), abs=1e-9)


class TestEnumeration:
    def test_small_count(self):
        pols = enumerate_monotone_policies(SMALL)
        brute = [pi for pi in all_policies(SMALL) if all(a <= b for a, b in zip(pi, pi[1:]))]
        assert len(pols) == 40 == count_monotone_policies(SMALL)
        assert pols == sorted(brute)

    def test_tiny_forced(self):
        assert enumerate_monotone_policies(TINY) == [(0, 1, 2, 3)]

    @pytest.mark.parametrize("p", [CFG_A, CFG_B, QueueParams(8, 3, 4, 0.5)])
    def test_count_matches_enumeration(self, p):
        pols = enumerate_monotone_policies(p)
        assert len(pols) == count_monotone_policies(p) == len(set(pols))
        for pi in pols:
            assert all(a <= b for a, b in zip(pi, pi[1:]))
            assert all(c in feasible_actions(p, q) for q, c in enumerate(pi))


def P(D, E, i):
    return TradeoffPoint(D, E, i)


def brute_lower_hull_ok(frontier, points, tol=1e-9):
    for pt in points:
        if pt.D < frontier[0].D - tol:
            return False
        if pt.E < frontier_energy(frontier, pt.D) - tol:
            return False
    return True


class TestFrontier:
    def test_example(self):
        pts = [P(1, 9, 0), P(2, 4, 1), P(2.5, 8, 2), P(3, 1, 3)]
        assert [t.policy_id for t in tradeoff_frontier(pts)] == [0, 1, 3]

    def test_single(self):
        assert tradeoff_frontier([P(2, 2, 5)]) == [P(2, 2, 5)]

    def test_collinear(self):
        pts = [P(1, 3, 0), P(2, 2, 1), P(3, 1, 2)]
        assert [t.policy_id for t in tradeoff_frontier(pts)] == [0, 2]

    def test_coincident_smallest_id(self):
        pts = [P(1, 3, 4), P(1, 3, 2), P(3, 1, 9)]
        assert [t.policy_id for t in tradeoff_frontier(pts)] == [2, 9]

    def test_dominated_tail_dropped(self):
        pts = [P(1, 5, 0), P(2, 1, 1), P(3, 1, 2), P(4, 2, 3)]
        assert [t.policy_id for t in tradeoff_frontier(pts)] == [0, 1]

    def test_empty(self):
        with pytest.raises(ValueError):
            tradeoff_frontier([])

    @given(st.lists(st.tuples(st.floats(0.1, 10), st.floats(0, 10)), min_size=1, max_size=40))
    def test_convex_decreasing_and_below_all(self, raw):
        pts = [P(d, e, i) for i, (d, e) in enumerate(raw)]
        fr = tradeoff_frontier(pts)
        assert all(a.D < b.D and a.E > b.E for a, b in zip(fr, fr[1:]))
        slopes = [(b.E - a.E) / (b.D - a.D) for a, b in zip(fr, fr[1:])]
        assert all(s1 < s2 for s1, s2 in zip(slopes, slopes[1:]))
        assert brute_lower_hull_ok(fr, pts)

    def test_small_instance_vertices(self):
        _, _, pts = policy_points(SMALL)
        fr = tradeoff_frontier(pts)
        assert [v.policy_id for v in fr] == [13, 34, 37, 36, 32]
        assert (fr[0].D, fr[0].E) == pytest.approx((1.0, 4.5))
        assert (fr[-1].D, fr[-1].E) == pytest.approx((16 / 9, 3.0))

    def test_distance(self):
        fr = [P(1, 9, 0), P(2, 4, 1), P(3, 1, 2)]
        assert distance_to_frontier(fr, 2, 4) == 0.0
        assert distance_to_frontier(fr, 3, 2) == pytest.approx(0.1 ** 0.5)
        assert distance_to_frontier(fr, 4, 1) == pytest.approx(1.0)
        assert distance_to_frontier([P(0, 0, 0)], 3, 4) == pytest.approx(5.0)


class TestSweep:
    def test_lambda_zero_min_delay(self):
        p = SMALL
        out = sweep_lambda(p, [0.0])
        _, evals, _ = policy_points(p)
        assert out[0].evaluation.D == pytest.approx(min(ev.D for ev in evals), abs=1e-12)

    def test_monotone_trend_and_on_frontier(self):
        lams = [0.0, 0.5, 1.0, 2.0, 5.0]
        out = sweep_lambda(SMALL, lams)
        assert [s.lam for s in out] == lams
        Ds = [s.evaluation.D for s in out]
        Es = [s.evaluation.E for s in out]
        assert all(a <= b + 1e-12 for a, b in zip(Ds, Ds[1:]))
        assert all(a >= b - 1e-12 for a, b in zip(Es, Es[1:]))
        _, _, pts = policy_points(SMALL)
        fr = tradeoff_frontier(pts)
        for D, E in zip(Ds, Es):
            assert distance_to_frontier(fr, D, E) <= 1e-9

    def test_errors(self):
        with pytest.raises(ValueError):
            sweep_lambda(SMALL, [])
        with pytest.raises(ValueError):
            sweep_lambda(SMALL, [-1.0])

    def test_lambda_one_consistent_with_solve(self):
        assert sweep_lambda(CFG_A, [1.0])[0].result.gain == pytest.approx(solve(CFG_A).gain, abs=1e-12)


class TestConstraint:
    FR = [P(1, 9, 0), P(2, 4, 1), P(3, 1, 2)]

    def test_slack(self):
        m = constraint_solve(self.FR, 10)
        assert m.weights == {0: 1.0} and (m.D, m.E) == (1, 9)

    def test_interpolate(self):
        m = constraint_solve(self.FR, 6.5)
        assert m.weights == pytest.approx({0: 0.5, 1: 0.5})
        assert m.D == pytest.approx(1.5) and m.E == pytest.approx(6.5)

    def test_vertex_hit(self):
        assert constraint_solve(self.FR, 4).weights == {1: 1.0}

    def test_infeasible(self):
        with pytest.raises(InfeasibleConstraintError):
            constraint_solve(self.FR, 0.5)

    @given(st.floats(1.0, 9.0))
    def test_on_frontier(self, e_th):
        m = constraint_solve(self.FR, e_th)
        assert sum(m.weights.values()) == pytest.approx(1.0)
        assert m.E == pytest.approx(e_th)
        assert m.E == pytest.approx(frontier_energy(self.FR, m.D))


class TestHOperator:
    MODEL = build_transition_model(CFG_A)

    def random_q(self, rng):
        return np.where(self.MODEL.feasible, rng.normal(0, 10, self.MODEL.rewards.shape), 0.0)

    def test_zero_model(self):
        m = build_transition_model(CFG_A.with_lambda(0.0))
        # zero-reward test model: replace rewards by zeros via a shifted copy
        zero_r = type(m)(m.params, m.kernel, np.zeros_like(m.rewards), m.feasible, m.lo, m.hi, m.fallback)
        assert np.all(h_operator(zero_r, np.zeros_like(m.rewards)) == 0.0)

    def test_matches_definition(self):
        rng = np.random.default_rng(0)
        Q, b = self.random_q(rng), rng.random(self.MODEL.rewards.shape)
        got = h_operator(self.MODEL, Q, b)
        for s in range(11):
            for a in self.MODEL.actions(s):
                want = sum(pr * (self.MODEL.rewards[s, a] + Q[s2, feasible_actions(CFG_A, s2)].max() + b[s, a])
                           for s2, pr in enumerate(self.MODEL.kernel[s, a]) if pr > 0)
                assert got[s, a] == pytest.approx(want, abs=1e-12)

    def test_shift_equivariance(self):
        rng = np.random.default_rng(1)
        F = self.MODEL.feasible
        for _ in range(100):
            Q = self.random_q(rng)
            lhs = h_operator(self.MODEL, Q + 2.5)
            rhs = h_operator(self.MODEL, Q) + 2.5
            assert np.max(np.abs(lhs[F] - rhs[F])) <= 1e-12

    def test_non_expansive(self):
        rng = np.random.default_rng(2)
        F = self.MODEL.feasible
        for _ in range(1000):
            Q1, Q2 = self.random_q(rng), self.random_q(rng)
            d_out = np.max(np.abs(h_operator(self.MODEL, Q1) - h_operator(self.MODEL, Q2))[F])
            assert d_out <= np.max(np.abs(Q1 - Q2)[F]) + 1e-12
