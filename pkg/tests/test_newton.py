import math

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
import pytest
from hypothesis import given, settings, strategies as st

from aeqipm import (LOProblem, RankDeficientError, build_augmented, build_nes, build_oss,
                    equilibrate, exact_dual_newton_step, generate_centered_instance,
                    nullspace_basis, recover_dual_step, recover_oss_directions)
from aeqipm.newton import NESystem


def _interior(seed, n=None, m=None):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(3, 33))
    m = m or int(rng.integers(1, n))
    p, start = generate_centered_instance(n, m, seed=seed)
    x = start.mu / start.s * rng.uniform(0.3, 3, n)
    s = start.s * rng.uniform(0.3, 3, n)
    return p, x, s, float(rng.uniform(0.1, 5)), rng


class TestAugmented:
    def test_hand(self, hand_lp):
        sysm = build_augmented(hand_lp, np.ones(2), 1.0)
        assert_array_equal(sysm.matrix, [[1, 0, 1], [0, 1, 1], [1, 1, 0]])
        assert_array_equal(sysm.rhs, [0, 0, -1])

    def test_centered_rhs_vanishes(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((2, 5))
        s = rng.uniform(0.5, 2, 5)
        p = LOProblem(A, A @ (1 / s), np.ones(5))
        assert_allclose(build_augmented(p, s, 1.0).rhs, 0, atol=1e-14)

    def test_blocks_symmetry_inertia(self):
        for seed in range(20):
            p, _, s, mu, _ = _interior(seed, n=8)
            M = build_augmented(p, s, mu).matrix
            n, m = p.n, p.m
            assert_array_equal(M, M.T)
            assert_array_equal(np.diag(M)[:n], s**2)
            assert_array_equal(M[n:, n:], 0)
            w = np.linalg.eigvalsh(M)
            assert (w > 0).sum() == n and (w < 0).sum() == m

    def test_rejects_nonpositive(self, hand_lp):
        with pytest.raises(ValueError):
            build_augmented(hand_lp, np.array([1.0, 0.0]), 1.0)
        with pytest.raises(ValueError):
            build_augmented(hand_lp, np.ones(2), 0.0)


class TestNES:
    def test_identity_scaling(self, hand_lp):
        assert_array_equal(build_nes(hand_lp, np.ones(2), np.ones(2), 1.0, 0.5).matrix, [[2]])

    def test_hand(self, hand_lp):
        nes = build_nes(hand_lp, np.array([2.0, 1.0]), np.ones(2), 1.5, 0.9)
        assert_allclose(nes.matrix, [[3.0]])
        assert_allclose(nes.rhs, [0.3])

    def test_positive_definite(self):
        for seed in range(100):
            p, x, s, mu, _ = _interior(seed)
            assert np.linalg.eigvalsh(build_nes(p, x, s, mu, 0.5).matrix).min() > 0

    def test_beta_range(self, hand_lp):
        with pytest.raises(ValueError):
            build_nes(hand_lp, np.ones(2), np.ones(2), 1.0, 1.0)

    def test_agrees_with_full_kkt(self):
        # at a primal feasible x the NES is the eliminated form of the
        # primal-dual Newton system; solve the unreduced system densely
        for seed in range(50):
            p, x, s, mu, _ = _interior(seed)
            p = LOProblem(p.A, p.A @ x, p.c, check_rank=False)
            beta = 0.7
            n, m = p.n, p.m
            K = np.zeros((2 * n + m, 2 * n + m))
            K[:m, :n] = p.A
            K[m:m + n, n:n + m] = p.A.T
            K[m:m + n, n + m:] = np.eye(n)
            K[m + n:, :n] = np.diag(s)
            K[m + n:, n + m:] = np.diag(x)
            rhs = np.concatenate([np.zeros(m + n), beta * mu - x * s])
            dy_kkt = np.linalg.solve(K, rhs)[n:n + m]
            nes = build_nes(p, x, s, mu, beta)
            dy = np.linalg.solve(nes.matrix, nes.rhs)
            assert_allclose(dy, dy_kkt, rtol=1e-10, atol=1e-10 * np.linalg.norm(dy_kkt))

    def test_reduces_to_dual_step_with_central_weights(self):
        # x = mu S^-1 e with b = A x: beta = 1 gives the dual barrier step
        for seed in range(20):
            p, _, s, mu, _ = _interior(seed)
            x = mu / s
            q = LOProblem(p.A, p.A @ x + 0.3 * p.A @ np.ones(p.n), p.c, check_rank=False)
            H = (q.A / s**2) @ q.A.T
            nes = NESystem(mu * H, q.b - mu * (q.A @ (1 / s)), 1.0)
            dy_aug, _ = exact_dual_newton_step(q, s, mu)
            assert_allclose(np.linalg.solve(nes.matrix, nes.rhs), dy_aug, rtol=1e-9)


class TestNullBasis:
    def test_single_row(self, hand_lp):
        V = nullspace_basis(hand_lp.A).V
        assert_allclose(V[:, 0], [1 / math.sqrt(2), -1 / math.sqrt(2)], rtol=1e-14)

    def test_coordinate(self):
        A = np.hstack([np.eye(2), np.zeros((2, 3))])
        V = nullspace_basis(A).V
        assert_allclose(V[:2], 0, atol=1e-15)
        assert_allclose(V[2:].T @ V[2:], np.eye(3), atol=1e-14)

    def test_orthonormal_and_annihilated(self):
        for seed in range(100):
            p, *_ = _interior(seed)
            V = nullspace_basis(p.A).V
            assert V.shape == (p.n, p.n - p.m)
            assert np.abs(p.A @ V).max() <= 1e-12 * np.linalg.norm(p.A)
            assert_allclose(V.T @ V, np.eye(p.n - p.m), atol=1e-12)
            first = V[np.argmax(np.abs(V) > 1e-12, axis=0), np.arange(V.shape[1])]
            assert np.all(first > 0)

    def test_deterministic(self):
        p, *_ = _interior(3)
        assert_array_equal(nullspace_basis(p.A).V, nullspace_basis(p.A).V)

    def test_rank_deficient(self):
        with pytest.raises(RankDeficientError):
            nullspace_basis(np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0]]))


class TestOSS:
    def test_centered_zero_rhs(self, hand_lp):
        sysm = build_oss(hand_lp, np.ones(2), np.ones(2), 1.0, 1.0, nullspace_basis(hand_lp.A))
        assert_array_equal(sysm.rhs, 0)

    def test_hand_solve_and_recovery(self, hand_lp):
        basis = nullspace_basis(hand_lp.A)
        sysm = build_oss(hand_lp, np.array([2.0, 1.0]), np.ones(2), 1.5, 0.9, basis)
        assert_allclose(sysm.rhs, [-0.65, 0.35])
        dy, lam = sysm.split(np.linalg.solve(sysm.matrix, sysm.rhs))
        assert_allclose(dy, [0.1])
        assert_allclose(lam, [-0.45 * math.sqrt(2)])
        dx, ds = recover_oss_directions(dy, lam, basis, hand_lp.A)
        assert_allclose(dx, [-0.45, 0.45])
        assert_allclose(ds, [-0.1, -0.1])

    def test_square(self):
        for seed in range(10):
            p, x, s, mu, _ = _interior(seed)
            sysm = build_oss(p, x, s, mu, 0.5, nullspace_basis(p.A))
            assert sysm.matrix.shape == (p.n, p.n)

    def test_basis_mismatch(self, hand_lp):
        with pytest.raises(ValueError):
            build_oss(hand_lp, np.ones(2), np.ones(2), 1.0, 0.5,
                      nullspace_basis(np.array([[1.0, 1.0, 1.0]])))

    def test_zero_direction(self, hand_lp):
        dx, ds = recover_oss_directions(np.zeros(1), np.zeros(1), nullspace_basis(hand_lp.A),
                                        hand_lp.A)
        assert_array_equal(dx, 0)
        assert_array_equal(ds, 0)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_random_directions_are_feasible(self, seed):
        p, *_ , rng = _interior(seed % 5000)
        basis = nullspace_basis(p.A)
        dy = rng.standard_normal(p.m) * 10.0 ** rng.uniform(-3, 3)
        lam = rng.standard_normal(p.n - p.m) * 10.0 ** rng.uniform(-3, 3)
        dx, ds = recover_oss_directions(dy, lam, basis, p.A)
        scale = 1 + np.linalg.norm(p.A) * (np.linalg.norm(dy) + np.linalg.norm(lam))
        assert np.linalg.norm(p.A @ dx) <= 1e-12 * scale
        assert np.linalg.norm(p.A.T @ dy + ds) <= 1e-12 * scale


class TestDualStepAndScaling:
    def test_recover_dual_step(self):
        assert_array_equal(recover_dual_step(np.array([-0.5, -0.5]), np.ones(2)), [-0.5, -0.5])
        assert_array_equal(recover_dual_step(np.array([1.0, 0.0]), np.array([2.0, 1.0])), [4, 0])

    @given(st.lists(st.floats(0.01, 100), min_size=1, max_size=10))
    def test_round_trip(self, vals):
        s = np.array(vals)
        v = np.linspace(-1, 1, len(s))
        assert_allclose(recover_dual_step(v / s**2, s), v, rtol=1e-14, atol=1e-14)

    def test_equilibrate_diagonal(self):
        sysm = NESystem(np.diag([1.0, 1e4]), np.array([1.0, 1.0]), 0.5)
        scaled, rec = equilibrate(sysm)
        assert_allclose(scaled.matrix, np.eye(2))
        assert rec.kappa_before == pytest.approx(1e4)
        assert rec.kappa_after == pytest.approx(1.0)

    def test_equilibrate_identity(self):
        sysm = NESystem(np.eye(3), np.ones(3), 0.5)
        scaled, _ = equilibrate(sysm)
        assert_array_equal(scaled.matrix, np.eye(3))
        assert_array_equal(scaled.rhs, np.ones(3))

    def test_unscale_round_trip(self):
        for seed in range(100):
            p, _, s, mu, _ = _interior(seed)
            sysm = build_augmented(p, s, mu)
            rhs = np.random.default_rng(seed).standard_normal(p.n + p.m)
            sysm = type(sysm)(sysm.matrix, rhs, sysm.scaling_s)
            scaled, rec = equilibrate(sysm)
            z = rec.unscale(np.linalg.solve(scaled.matrix, scaled.rhs))
            ref = np.linalg.solve(sysm.matrix, sysm.rhs)
            assert_allclose(z, ref, rtol=0, atol=1e-12 * np.linalg.norm(ref))
