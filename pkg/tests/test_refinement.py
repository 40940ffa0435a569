from fractions import Fraction
import math

import numpy as np
from numpy.testing import assert_allclose
import pytest

from aeqipm import (LOProblem, OracleConfig, QLSOracle, RefinementState, RoundingFailedError,
                    construct_refining, dual_start, generate_centered_instance,
                    generate_integer_instance, project_dual, round_to_optimal, run_ir)
from aeqipm.refinement import outer_iteration_count, system_condition

from lp_oracles import enumerate_optimal_bases, support


class TestState:
    def test_nabla_bookkeeping(self):
        st = RefinementState(1e-8, 1e-2)
        assert st.nabla == 1
        for k in range(1, 4):
            assert not st.done
            assert st.advance() == pytest.approx(1e-2 ** -k, rel=1e-15)
        # four solves, at nabla = 1, 1e2, 1e4, 1e6
        assert st.done

    def test_validation(self):
        with pytest.raises(ValueError):
            RefinementState(1e-8, 1.5)
        with pytest.raises(ValueError):
            RefinementState(1e-1, 1e-2)

    @pytest.mark.parametrize("zeta, zt, count", [
        (1e-2, 1e-2, 1), (1e-8, 1e-2, 4), (1e-12, 1e-2, 6), (1e-12, 1e-4, 3), (1e-9, 1e-2, 5),
    ])
    def test_count(self, zeta, zt, count):
        assert outer_iteration_count(zeta, zt) == count
        assert count == math.ceil(round(math.log(zeta) / math.log(zt), 9))


class TestProjection:
    def test_fixed_point(self):
        p, start = generate_centered_instance(8, 3, seed=0)
        out = project_dual(p, start.s)
        assert_allclose(out.y, start.y, rtol=1e-10)
        assert_allclose(p.A.T @ out.y + out.s, p.c, atol=1e-14 * np.linalg.norm(p.c))

    def test_hand(self, hand_lp):
        out = project_dual(hand_lp, np.array([0.6, 1.4]))
        assert_allclose(out.y, [0.5], rtol=1e-12)
        assert_allclose(out.s, [0.5, 1.5], rtol=1e-12)

    def test_may_leave_orthant(self, hand_lp):
        out = project_dual(hand_lp, np.array([3.0, -2.0]))
        assert not out.interior
        with pytest.raises(ValueError):
            out.iterate(1.0)

    def test_weighted_with_hint(self):
        p, start = generate_centered_instance(10, 4, seed=1)
        rng = np.random.default_rng(1)
        s_k = start.s + 1e-6 * rng.standard_normal(10)
        out = project_dual(p, s_k, y_hint=start.y, weights=1 / s_k**2)
        assert_allclose(p.A.T @ out.y + out.s, p.c, atol=1e-13 * np.linalg.norm(p.c))
        # the weighted projection is the W-orthogonal one
        W = np.diag(1 / s_k**2)
        y_ref = np.linalg.solve(p.A @ W @ p.A.T, p.A @ W @ (p.c - s_k))
        assert_allclose(out.y, y_ref, rtol=1e-9)

    def test_trace_counts_ops(self, hand_lp):
        out, ops = project_dual(hand_lp, np.array([0.6, 1.4]), return_trace=True)
        assert ops > 0


class TestRefining:
    def test_identity(self, hand_lp):
        q = construct_refining(hand_lp, np.zeros(1), 1)
        assert_allclose(q.c, hand_lp.c)
        assert_allclose(q.A, hand_lp.A)
        assert_allclose(q.b, hand_lp.b)

    def test_hand(self, hand_lp):
        q = construct_refining(hand_lp, np.array([0.99]), 100)
        assert_allclose(q.c, [1, 101], rtol=1e-13)

    def test_feasibility_transfers(self):
        p, start = generate_centered_instance(8, 4, seed=2)
        q = construct_refining(p, start.y, 1e4)
        assert np.all(q.c > 0)
        assert_allclose(q.c, 1e4 * start.s, rtol=1e-12)

    def test_nabla_below_one(self, hand_lp):
        with pytest.raises(ValueError):
            construct_refining(hand_lp, np.zeros(1), 0.5)


class TestRunIR:
    def test_zeta_equals_zeta_tilde(self, hand_lp):
        _, trace = run_ir(hand_lp, 1e-2, 1e-2)
        assert trace.outer_iterations == 1

    def test_outer_count(self):
        p, start = generate_centered_instance(10, 5, seed=3)
        _, trace = run_ir(p, 1e-8, 1e-2, start=start)
        assert trace.outer_iterations == 4
        assert [r.nabla for r in trace.rows] == pytest.approx([1, 1e2, 1e4, 1e6])

    def test_hand_lp_perturbed(self, hand_lp):
        it, trace = run_ir(hand_lp, 1e-12, 1e-2, oracle=OracleConfig(backend="perturbed", seed=1))
        assert abs(float(hand_lp.b @ it.y) - 1.0) <= 1e-11
        assert trace.gap <= 2e-12

    def test_geometric_certificate(self):
        for seed in range(20):
            p, start = generate_centered_instance(12, 6, seed=seed)
            _, trace = run_ir(p, 1e-10, 1e-2, start=start,
                              oracle=OracleConfig(backend="perturbed", seed=seed))
            gaps = np.array([r.gap for r in trace.rows])
            C0 = gaps[0] / 1e-2
            assert np.all(gaps <= C0 * 1e-2 ** np.arange(1, len(gaps) + 1) * 1.5)

    def test_dual_feasible_after_projection(self):
        p, start = generate_centered_instance(12, 6, seed=4)
        it, trace = run_ir(p, 1e-10, 1e-2, start=start)
        cn = np.linalg.norm(p.c)
        assert np.linalg.norm(p.A.T @ it.y + it.s - p.c) <= 1e-13 * (1 + cn)
        assert all(r.dual_residual <= 1e-13 * (1 + cn) for r in trace.rows)
        assert np.all(it.s > 0)

    def test_condition_bounded(self):
        p, start = generate_centered_instance(16, 8, seed=5)
        _, trace = run_ir(p, 1e-10, 1e-2, start=start)
        assert max(r.kappa_final for r in trace.rows) <= 10 * trace.kappa0

    def test_queries_cumulative(self):
        p, start = generate_centered_instance(8, 4, seed=6)
        oracle = QLSOracle(OracleConfig(backend="perturbed", seed=6))
        _, trace = run_ir(p, 1e-8, 1e-2, oracle=oracle, start=start)
        q = [r.queries for r in trace.rows]
        assert q == sorted(q)
        assert trace.total_queries == oracle.total_queries == sum(oracle.query_log)

    def test_system_condition_matches_eig(self):
        p, start = generate_centered_instance(6, 3, seed=7)
        from aeqipm import build_augmented, equilibrate
        from lp_oracles import eig_condition
        sysm = build_augmented(p, start.s, start.mu)
        assert system_condition(p, start.s, start.mu, precondition=False) == \
            pytest.approx(eig_condition(sysm.matrix), rel=1e-8)
        assert system_condition(p, start.s, start.mu) == \
            pytest.approx(eig_condition(equilibrate(sysm)[0].matrix), rel=1e-8)


class TestRounding:
    def test_hand(self, hand_lp):
        x, y, s, part = round_to_optimal(hand_lp, np.array([0.9999]), np.array([1e-4, 1.0001]),
                                         threshold=0.01)
        assert part.B == {0} and part.N == {1}
        assert list(x) == [Fraction(1), Fraction(0)]
        assert list(y) == [1]
        assert list(s) == [0, 1]

    def test_float_path(self, hand_lp):
        x, y, s, part = round_to_optimal(hand_lp, np.array([0.9999]), np.array([1e-4, 1.0001]),
                                         threshold=0.01, exact=False)
        assert_allclose(np.asarray(x, float), [1, 0], atol=1e-14)
        assert_allclose(np.asarray(y, float), [1], atol=1e-14)

    def test_exact_input_fixed_point(self, hand_lp):
        x, y, s, _ = round_to_optimal(hand_lp, np.array([1.0]), np.array([0.0, 1.0]),
                                      threshold=0.5)
        assert list(y) == [1] and list(s) == [0, 1] and list(x) == [1, 0]

    def test_bad_threshold_fails_with_partition(self, hand_lp):
        with pytest.raises(RoundingFailedError) as info:
            round_to_optimal(hand_lp, np.array([0.5]), np.array([0.5, 1.5]), threshold=0.1)
        assert info.value.partition is not None

    def test_matches_enumeration(self):
        for seed in range(12):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(3, 8))
            m = int(rng.integers(1, min(3, n - 1) + 1))
            p, y0 = generate_integer_instance(n, m, seed)
            it, _ = run_ir(p, 1e-10, 1e-2, start=dual_start(p, y0))
            x, y, s, part = round_to_optimal(p, it.y, it.s, mu=it.mu)
            best, sols = enumerate_optimal_bases(p.A, p.b, p.c)
            obj = sum(int(ci) * xi for ci, xi in zip(p.c, x))
            assert obj == best
            allowed = frozenset().union(*(support(v) for v in sols))
            assert support(x) <= allowed
            if len(sols) == 1:
                assert list(x) == sols[0]
            A = p.A.astype(int)
            assert all(sum(int(a) * xi for a, xi in zip(row, x)) == bi
                       for row, bi in zip(A, p.b.astype(int)))
            assert all(v >= 0 for v in x) and all(v >= 0 for v in s)
            assert sum(xi * si for xi, si in zip(x, s)) == 0
