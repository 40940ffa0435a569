"""
Builders for the Newton-system reformulations used by the solvers.

* augmented  ``[[S^2, A'], [A, 0]] [ds_hat; dy] = [0; b/mu - A S^{-1} e]``
* normal equations  ``A D^2 A' dy = A x - beta mu A S^{-1} e``
* orthogonal subspaces  ``[-X A' | S V] [dy; lam] = beta mu e - X s``

plus null-space bases, direction recovery and Jacobi equilibration.
"""
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import RankDeficientError
from .problem import RANK_RTOL
from .scalar import F64

__all__ = [
    "AugmentedSystem",
    "NESystem",
    "OSSSystem",
    "NullBasis",
    "EquilibrationRecord",
    "problem_arrays",
    "build_augmented",
    "build_nes",
    "nullspace_basis",
    "build_oss",
    "recover_oss_directions",
    "recover_dual_step",
    "equilibrate",
]


@dataclass(frozen=True)
class AugmentedSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    scaling_s: np.ndarray

    @property
    def n(self):
        return len(self.scaling_s)

    def split(self, z):
        """Split a solution vector into ``(ds_hat, dy)``."""
        return z[:self.n], z[self.n:]


@dataclass(frozen=True)
class NESystem:
    matrix: np.ndarray
    rhs: np.ndarray
    beta: float


@dataclass(frozen=True)
class NullBasis:
    V: np.ndarray


@dataclass(frozen=True)
class OSSSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    basis: NullBasis

    @property
    def m(self):
        return self.matrix.shape[1] - self.basis.V.shape[1]

    def split(self, z):
        """Split a solution vector into ``(dy, lam)``."""
        return z[:self.m], z[self.m:]


_ARRAY_CACHE = {}


def problem_arrays(problem, bk=F64):
    """``(A, b, c)`` of ``problem`` converted to the scalar type of ``bk``."""
    if bk is F64:
        return problem.A, problem.b, problem.c
    key = (id(problem), id(bk))
    hit = _ARRAY_CACHE.get(key)
    if hit is None or hit[0] is not problem:
        if len(_ARRAY_CACHE) > 64:
            _ARRAY_CACHE.clear()
        hit = (problem, (bk.asarray(problem.A), bk.asarray(problem.b), bk.asarray(problem.c)))
        _ARRAY_CACHE[key] = hit
    return hit[1]


def _check_positive(v, name):
    if not np.all(np.asarray(v) > 0):
        raise ValueError(f"{name} must be strictly positive")


def _zeros(shape, bk):
    if bk is F64:
        return np.zeros(shape)
    return np.full(shape, bk.scalar(0), dtype=object)


def build_augmented(problem, s, mu, bk=F64):
    """Augmented Newton system of the dual log-barrier method at ``(s, mu)``.

    The solution ``(u, v)`` of this system is the negated Newton step:
    ``dy = -v`` and ``ds = -S^2 u``; see ``exact_dual_newton_step``.
    """
    _check_positive(s, "s")
    if not mu > 0:
        raise ValueError("mu must be positive")
    A, b, _ = problem_arrays(problem, bk)
    s = bk.asarray(s)
    mu = bk.scalar(mu)
    m, n = A.shape
    M = _zeros((n + m, n + m), bk)
    M[np.arange(n), np.arange(n)] = s * s
    M[:n, n:] = A.T
    M[n:, :n] = A
    rhs = _zeros(n + m, bk)
    rhs[n:] = b / mu - A @ (1 / s)
    return AugmentedSystem(M, rhs, s)


def build_nes(problem, x, s, mu, beta):
    _check_positive(x, "x")
    _check_positive(s, "s")
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    A = problem.A
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    d2 = x / s
    matrix = (A * d2) @ A.T
    rhs = A @ x - beta * mu * (A @ (1.0 / s))
    return NESystem(matrix, rhs, beta)


def nullspace_basis(A):
    """Orthonormal basis of ``null(A)`` from a pivoted QR of ``A'``.

    Columns are sign-normalized so their first nonzero entry is positive.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    Q, R, _ = scipy.linalg.qr(A.T, mode="full", pivoting=True)
    diag = np.abs(np.diag(R)) if m else np.array([])
    if m and (len(diag) < m or diag[-1] <= RANK_RTOL * diag[0]):
        raise RankDeficientError("null-space basis requested for rank-deficient A")
    V = Q[:, m:].copy()
    tol = 1e-12
    for j in range(V.shape[1]):
        nz = np.flatnonzero(np.abs(V[:, j]) > tol)
        if nz.size and V[nz[0], j] < 0:
            V[:, j] = -V[:, j]
    return NullBasis(V)


def build_oss(problem, x, s, mu, beta, basis):
    _check_positive(x, "x")
    _check_positive(s, "s")
    A = problem.A
    V = basis.V
    n = problem.n
    if V.shape != (n, n - problem.m):
        raise ValueError(f"basis shape {V.shape} does not match problem ({n}, {n - problem.m})")
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    matrix = np.hstack([-(x[:, None] * A.T), s[:, None] * V])
    rhs = beta * mu * np.ones(n) - x * s
    return OSSSystem(matrix, rhs, basis)


def recover_oss_directions(dy, lam, basis, A):
    """Primal and dual directions from an (inexact) OSS solution.

    ``A dx = 0`` and ``A' dy + ds = 0`` hold by construction whatever the
    accuracy of ``(dy, lam)``.
    """
    dx = basis.V @ lam
    ds = -(A.T @ dy)
    return dx, ds


def recover_dual_step(ds_hat, s):
    return s * s * ds_hat


@dataclass(frozen=True)
class EquilibrationRecord:
    d: np.ndarray
    original: np.ndarray
    scaled: np.ndarray

    def unscale(self, z):
        return self.d * z

    @cached_property
    def kappa_before(self):
        from .oracle import condition_estimate
        return condition_estimate(self.original)

    @cached_property
    def kappa_after(self):
        from .oracle import condition_estimate
        return condition_estimate(self.scaled)


def equilibrate(system, floor=1.0):
    """Symmetric Jacobi scaling ``D M D`` with ``D_ii = 1/sqrt(max(|M_ii|, floor))``.

    Returns the scaled system (same type as ``system``) and a record whose
    ``unscale`` maps a solution of the scaled system back.  The condition
    number is reported by the record, not guaranteed to drop.
    """
    M = system.matrix
    diag = np.abs(np.diag(M))
    d = 1 / np.sqrt(np.maximum(diag, floor))
    scaled = (d[:, None] * M) * d[None, :]
    record = EquilibrationRecord(d, M, scaled)
    return replace(system, matrix=scaled, rhs=d * system.rhs), record
