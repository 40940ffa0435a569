"""
Exact dual Newton steps, the proximity measure and start-point helpers.

These are the dense reference computations: the solvers never call them
inside their main loop except for instrumentation.
"""
import numpy as np

from .errors import InfeasibleStartError
from .newton import build_augmented, equilibrate, problem_arrays
from .problem import DualIterate
from .scalar import F64

__all__ = [
    "exact_dual_newton_step",
    "proximity",
    "centering_mu",
    "center_dual",
    "primal_estimate",
    "dual_start",
]


def exact_dual_newton_step(problem, s, mu, bk=F64):
    """Exact Newton step ``(dy, ds)`` of the dual log-barrier at ``(s, mu)``.

    Solves the augmented system by dense factorization.  The system's
    solution is the negated step (see ``build_augmented``); the returned
    pair satisfies ``A' dy + ds = 0`` and
    ``A S^{-2} A' dy = b/mu - A S^{-1} e``.

    Raises
    ------
    DegenerateSystemError
        If the factorization fails (rank-deficient ``A``).
    """
    system = build_augmented(problem, s, mu, bk)
    if bk is F64:
        # Jacobi scaling removes the spread of s**2 before factorizing
        scaled, rec = equilibrate(system)
        z = rec.unscale(bk.solve(scaled.matrix, scaled.rhs))
    else:
        z = bk.solve(system.matrix, system.rhs)
    u, v = system.split(z)
    dy = -v
    ds = -(system.scaling_s ** 2) * u
    return dy, ds


def proximity(problem, s, mu, bk=F64):
    """Proximity ``||S^{-1} ds||_2`` of ``s`` to the ``mu``-center."""
    _, ds = exact_dual_newton_step(problem, s, mu, bk)
    return bk.norm(ds / bk.asarray(s))


def _projected_pieces(problem, s):
    A, b = problem.A, problem.b
    sinv = 1.0 / np.asarray(s, dtype=float)
    As = A * sinv
    H = As @ As.T
    u = As.T @ np.linalg.solve(H, b)
    w = As.T @ np.linalg.solve(H, As @ np.ones(len(s)))
    return u, w


def centering_mu(problem, s):
    """The ``mu > 0`` minimizing ``proximity(problem, s, mu)``, or ``None``.

    With ``t = 1/mu`` the scaled step is ``S^{-1} ds = w - t u`` for two
    fixed vectors, so the minimizer is ``t = u'w / u'u``.
    """
    u, w = _projected_pieces(problem, s)
    uu = u @ u
    if uu == 0:
        return None
    t = (u @ w) / uu
    if not t > 0:
        return None
    return 1.0 / t


def center_dual(problem, y, s, mu, target=0.25, max_iter=200, bk=F64):
    """Damped Newton centering at fixed ``mu`` until proximity < ``target``.

    Uses step ``1/(1+delta)`` while ``delta >= 1/2`` and full steps after,
    which keeps ``s`` strictly positive.
    """
    A, _, c = problem_arrays(problem, bk)
    y = bk.asarray(y)
    s = bk.asarray(s)
    for _ in range(max_iter):
        dy, ds = exact_dual_newton_step(problem, s, mu, bk)
        delta = bk.norm(ds / s)
        if delta < target:
            return y, s
        alpha = 1 if delta < 0.5 else 1 / (1 + delta)
        y = y + alpha * dy
        s = c - A.T @ y
        if not np.all(s > 0):
            raise InfeasibleStartError("centering lost dual positivity")
    raise InfeasibleStartError(f"centering did not reach proximity {target} in {max_iter} steps")


def primal_estimate(problem, s, mu, bk=F64):
    """Primal point ``mu S^{-1} (e - S^{-1} ds)``.

    It satisfies ``A x = b`` exactly and equals ``mu S^{-1} e`` on the
    central path; it is positive whenever the proximity is below one.
    """
    s = bk.asarray(s)
    _, ds = exact_dual_newton_step(problem, s, mu, bk)
    return bk.scalar(mu) * (1 / s) * (1 - ds / s)


def _interior_dual_point(problem):
    # max t  s.t.  A'y + t e <= c,  t <= 1
    from scipy.optimize import linprog

    m, n = problem.m, problem.n
    obj = np.zeros(m + 1)
    obj[-1] = -1.0
    A_ub = np.hstack([problem.A.T, np.ones((n, 1))])
    bounds = [(None, None)] * m + [(None, 1.0)]
    res = linprog(obj, A_ub=A_ub, b_ub=problem.c, bounds=bounds, method="highs")
    if res.status != 0 or res.x[-1] <= 1e-9:
        raise InfeasibleStartError("dual feasible region has empty interior")
    return res.x[:m]


def dual_start(problem, y0=None, mu0=None, bk=F64):
    """A strictly feasible dual start ``(y, s, mu)`` with proximity < 1/2.

    With no ``y0``: uses ``y = 0`` when ``c > 0`` and otherwise an interior
    point of ``{y : A'y < c}``.  ``mu0`` defaults to the proximity-minimizing
    value; the point is recentered at ``mu0`` if it is still too far away.
    """
    A, _, c = problem_arrays(problem, bk)
    if y0 is None:
        y0 = np.zeros(problem.m) if np.all(problem.c > 0) else _interior_dual_point(problem)
    y = bk.asarray(y0)
    s = c - A.T @ y
    if not np.all(s > 0):
        raise InfeasibleStartError("y0 is not strictly dual feasible")
    if mu0 is None:
        mu0 = centering_mu(problem, bk.to_float(s))
        if mu0 is None:
            mu0 = float(np.mean(bk.to_float(s)))
    mu0 = bk.scalar(mu0)
    if proximity(problem, s, mu0, bk) >= 0.5:
        y, s = center_dual(problem, y, s, mu0, bk=bk)
    return DualIterate(y, s, mu0)
