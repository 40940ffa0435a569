import math

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
import pytest
from hypothesis import given, settings, strategies as st

from aeqipm import (DegenerateSystemError, OracleConfig, QLSOracle, ZeroRHSError,
                    build_augmented, condition_estimate, estimate_direction, query_cost)
from aeqipm.oracle import POLYLOG_FORM, _iterative_extreme_singular_values

from lp_oracles import eig_condition


def _spd(rng, p, kappa=10.0):
    Q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    return (Q * np.geomspace(1, kappa, p)) @ Q.T


def _saddle(rng, n, m):
    A = rng.standard_normal((m, n))
    M = np.zeros((n + m, n + m))
    M[:n, :n] = np.diag(rng.uniform(0.5, 2, n))
    M[:n, n:] = A.T
    M[n:, :n] = A
    return M


class TestConfig:
    def test_defaults(self):
        cfg = OracleConfig()
        assert cfg.epsilon_direction == 1e-2
        assert cfg.epsilon_norm == 1e-2
        assert cfg.backend == "exact"

    def test_aliases_and_validation(self):
        assert OracleConfig(backend="cg").backend == "truncated-iterative"
        with pytest.raises(ValueError):
            OracleConfig(backend="qpu")
        with pytest.raises(ValueError):
            OracleConfig(epsilon_direction=1.0)
        with pytest.raises(ValueError):
            OracleConfig(epsilon_norm=-0.1)


class TestEstimateDirection:
    def test_identity(self):
        est = estimate_direction(np.eye(2), np.array([3.0, 0.0]))
        assert_allclose(est.unit_dir, [1, 0])
        assert est.norm_solution == 3
        assert est.norm_rhs == 3

    def test_diagonal(self):
        est = estimate_direction(np.diag([1.0, 2.0]), np.array([0.0, 2.0]))
        assert_allclose(est.unit_dir, [0, 1])
        assert est.norm_solution == 1

    def test_perturbed_magnitude(self):
        cfg = OracleConfig(backend="perturbed", epsilon_direction=1e-2, seed=5)
        est = estimate_direction(np.eye(2), np.array([1.0, 0.0]), cfg)
        assert abs(np.linalg.norm(est.unit_dir - [1, 0]) - 1e-2) <= 1e-12
        assert abs(np.linalg.norm(est.unit_dir) - 1) <= 1e-12

    def test_errors(self):
        with pytest.raises(ZeroRHSError):
            estimate_direction(np.eye(2), np.zeros(2))
        with pytest.raises(DegenerateSystemError):
            estimate_direction(np.array([[1.0, 1.0], [1.0, 1.0]]), np.ones(2))

    def test_exact_rescaled_matches_factorization(self):
        rng = np.random.default_rng(1)
        for k in range(100):
            p = int(rng.integers(2, 65))
            M = _spd(rng, p) if k % 2 else _saddle(rng, max(p - p // 3, 1), max(p // 3, 1))
            r = rng.standard_normal(M.shape[0])
            est = estimate_direction(M, r)
            x = np.linalg.solve(M, r)
            assert_allclose(est.norm_solution * est.unit_dir, x,
                            atol=1e-12 * np.linalg.norm(x) * eig_condition(M))
            assert_allclose(est.norm_solution * est.unit_dir, x, rtol=0,
                            atol=1e-10 * np.linalg.norm(x))

    def test_injected_error_is_exact_and_logged(self):
        rng = np.random.default_rng(2)
        oracle = QLSOracle(OracleConfig(backend="perturbed", epsilon_direction=0.05,
                                        instrumented=True, seed=3))
        for _ in range(50):
            M = _spd(rng, 6)
            oracle.estimate_direction(M, rng.standard_normal(6))
        errs = np.array([rec.injected_error for rec in oracle.records])
        assert_allclose(errs, 0.05, atol=1e-12)
        for rec in oracle.records:
            assert abs(np.linalg.norm(rec.unit_dir - rec.true_dir) - 0.05) <= 1e-12

    def test_norm_estimates_within_band(self):
        rng = np.random.default_rng(3)
        cfg = OracleConfig(backend="perturbed", epsilon_norm=0.05, seed=8)
        oracle = QLSOracle(cfg)
        for _ in range(30):
            M = _spd(rng, 5)
            r = rng.standard_normal(5)
            est = oracle.estimate_direction(M, r)
            true = np.linalg.norm(np.linalg.solve(M, r))
            assert 0.95 * true <= est.norm_solution <= 1.05 * true
            assert 0.95 * np.linalg.norm(r) <= est.norm_rhs <= 1.05 * np.linalg.norm(r)

    def test_seed_determinism(self):
        rng = np.random.default_rng(4)
        M, r = _spd(rng, 8), rng.standard_normal(8)
        cfg = OracleConfig(backend="perturbed", seed=42)
        a = estimate_direction(M, r, cfg)
        b = estimate_direction(M, r, cfg)
        assert_array_equal(a.unit_dir, b.unit_dir)
        assert a.norm_solution == b.norm_solution

    def test_truncated_iterative_direction(self):
        rng = np.random.default_rng(5)
        cfg = OracleConfig(backend="cg", epsilon_direction=1e-3, instrumented=True)
        oracle = QLSOracle(cfg)
        for _ in range(20):
            M = _spd(rng, 12, kappa=30)
            oracle.estimate_direction(M, rng.standard_normal(12))
        assert max(rec.injected_error for rec in oracle.records) <= 1e-3

    def test_ledger(self):
        oracle = QLSOracle()
        M = np.diag([1.0, 4.0])
        for _ in range(3):
            oracle.estimate_direction(M, np.ones(2))
        q = query_cost(2, 4.0, math.sqrt(17), 1e-2)
        assert oracle.calls == 3
        assert oracle.query_log == [q] * 3
        assert oracle.total_queries == 3 * q
        assert oracle.records == []


class TestQueryCost:
    def test_values(self):
        assert query_cost(2, 1, math.sqrt(2), 0.5) == 6
        assert query_cost(4, 10, 4, 1e-2) == 3360

    def test_halving_eps(self):
        assert query_cost(3, 2, 5, 1e-3 / 2) >= query_cost(3, 2, 5, 1e-3)

    @settings(max_examples=200)
    @given(p=st.integers(1, 500), kappa=st.floats(1, 1e6), frob=st.floats(0, 1e4),
           eps=st.floats(1e-12, 0.99), grow=st.floats(1, 10))
    def test_monotone(self, p, kappa, frob, eps, grow):
        base = query_cost(p, kappa, frob, eps)
        assert query_cost(p + 1, kappa, frob, eps) >= base
        assert query_cost(p, kappa * grow, frob, eps) >= base
        assert query_cost(p, kappa, frob * grow, eps) >= base
        assert query_cost(p, kappa, frob, eps / grow) >= base

    def test_invalid(self):
        with pytest.raises(ValueError):
            query_cost(2, 0.5, 1, 0.1)
        with pytest.raises(ValueError):
            query_cost(2, 1, 1, 1.0)

    def test_form_recorded(self):
        oracle = QLSOracle()
        model = oracle.cost_model(np.eye(3))
        assert model.polylog_form == POLYLOG_FORM
        assert model.queries == query_cost(3, 1.0, math.sqrt(3), 1e-2)


class TestConditionEstimate:
    def test_identity_and_diagonal(self):
        assert condition_estimate(np.eye(5)) == pytest.approx(1)
        assert condition_estimate(np.diag([1.0, 100.0])) == pytest.approx(100)

    def test_hand_augmented(self, hand_lp):
        # [[1,0,1],[0,1,1],[1,1,0]] has eigenvalues 2, 1, -1
        M = build_augmented(hand_lp, np.ones(2), 1.0).matrix
        assert_allclose(np.sort(np.linalg.eigvals(M).real), [-1, 1, 2], atol=1e-14)
        assert condition_estimate(M) == pytest.approx(2.0, rel=1e-12)

    def test_singular(self):
        with pytest.raises(DegenerateSystemError):
            condition_estimate(np.array([[1.0, 2.0], [2.0, 4.0]]))

    def test_nonsymmetric_matches_svd(self):
        rng = np.random.default_rng(6)
        M = rng.standard_normal((7, 7))
        sv = np.linalg.svd(M, compute_uv=False)
        assert condition_estimate(M) == pytest.approx(sv[0] / sv[-1], rel=1e-10)

    def test_iterative_branch(self):
        rng = np.random.default_rng(7)
        Q, _ = np.linalg.qr(rng.standard_normal((60, 60)))
        M = (Q * np.geomspace(1, 50, 60)) @ Q.T
        smax, smin = _iterative_extreme_singular_values(M)
        assert smax / smin == pytest.approx(50, rel=1e-5)
