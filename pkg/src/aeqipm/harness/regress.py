"""
Least-squares regression through the normal equations, and l-infinity
(minimax) regression as a linear program.
"""
from dataclasses import dataclass

import numpy as np

from ..centering import dual_start
from ..errors import RankDeficientError
from ..icqlsa import solve_normal_system
from ..oracle import OracleConfig, QLSOracle
from ..problem import LOProblem, check_full_row_rank
from ..refinement import round_to_optimal, run_ir

__all__ = ["RegressionResult", "least_squares", "linf_problem", "linf_regression",
           "LinfResult"]


@dataclass
class RegressionResult:
    beta: np.ndarray
    residual_norm: float
    iterations: int
    queries: int

    def to_dict(self):
        return {"beta": self.beta.tolist(), "residual_norm": self.residual_norm,
                "iterations": self.iterations, "queries": self.queries}


def _check_design(X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < X.shape[1]:
        raise RankDeficientError("design has fewer rows than columns")
    check_full_row_rank(X.T)
    return X


def least_squares(X, y, eps=1e-12, oracle=None):
    """Solve ``(X'X) beta = X'y`` with the refined oracle solver.

    Raises
    ------
    RankDeficientError
        If ``X`` does not have full column rank.
    """
    X = _check_design(X)
    y = np.asarray(y, dtype=float)
    if not isinstance(oracle, QLSOracle):
        oracle = QLSOracle(oracle or OracleConfig())
    beta, trace = solve_normal_system(X.T, X.T @ y, eps, oracle, return_trace=True)
    beta = np.asarray(beta, dtype=float)
    return RegressionResult(beta, float(np.linalg.norm(X @ beta - y)),
                            trace.total_iterations, trace.total_queries)


def linf_problem(X, y):
    """Minimax regression ``min_beta max_i |y_i - x_i'beta|`` as a standard-form LO.

    The fitting problem is written directly as the dual
    ``max b'w  s.t.  A'w <= c`` with ``w = (beta, t)``, ``b = (0, -1)`` and
    the rows ``x_i'beta - t <= y_i`` and ``-x_i'beta - t <= -y_i``.  The free
    ``beta`` then needs no splitting, and any ``t`` above the current maximal
    residual gives a strictly feasible dual point.  The LO optimum equals
    ``-max residual``.
    """
    X = _check_design(X)
    y = np.asarray(y, dtype=float)
    N, d = X.shape
    A = np.zeros((d + 1, 2 * N))
    A[:d, :N] = X.T
    A[:d, N:] = -X.T
    A[d, :] = -1.0
    b = np.zeros(d + 1)
    b[d] = -1.0
    c = np.concatenate([y, -y])
    return LOProblem(A, b, c, name="linf-regression")


@dataclass
class LinfResult:
    beta: np.ndarray
    max_residual: float
    objective: object
    outer_iterations: int
    queries: int
    certified: bool

    def to_dict(self):
        return {"beta": [float(v) for v in self.beta], "max_residual": float(self.max_residual),
                "objective": str(self.objective), "outer_iterations": self.outer_iterations,
                "queries": self.queries, "certified": self.certified}


def linf_regression(X, y, zeta=1e-10, zeta_tilde=1e-2, oracle=None):
    """Fit by minimax regression through the refinement pipeline.

    A start with ``beta`` from least squares and ``t`` twice its maximal
    residual (plus one) is recentered and handed to ``run_ir``.  Integer data
    are rounded and certified exactly.
    """
    problem = linf_problem(X, y)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if not isinstance(oracle, QLSOracle):
        oracle = QLSOracle(oracle or OracleConfig())
    beta0 = np.linalg.lstsq(X, y, rcond=None)[0]
    t0 = 2 * np.max(np.abs(y - X @ beta0)) + 1
    start = dual_start(problem, np.append(beta0, t0))
    it, trace = run_ir(problem, zeta, zeta_tilde, oracle=oracle, start=start)
    w = np.asarray(it.y, dtype=float)
    certified = False
    objective = float(problem.b @ w)
    if problem.is_integer_data:
        _, w_exact, _, _ = round_to_optimal(problem, it.y, it.s, mu=it.mu)
        w = w_exact
        objective = -w_exact[-1]
        certified = True
    beta = w[:-1]
    beta_f = np.asarray([float(v) for v in beta])
    return LinfResult(beta, float(np.max(np.abs(y - X @ beta_f))), objective,
                      trace.outer_iterations, oracle.total_queries, certified)
