"""
Iterative classical-quantum linear solver.

Classical residual refinement around the low-precision oracle: each sweep
asks the oracle for the direction and length of ``M^{-1} r`` for the
current residual ``r = sigma - M z`` and adds that correction to ``z``.
Every sweep shrinks the residual by roughly
``eps_norm + eps_direction * kappa(M)``.
"""
from dataclasses import dataclass, field
import math
import warnings

import numpy as np

from .errors import NonConvergenceError
from .oracle import OracleConfig, QLSOracle

__all__ = ["RefineTrace", "refine_solve", "solve_normal_system", "default_max_iter"]

STAGNATION_PATIENCE = 5


@dataclass
class RefineTrace:
    residual_norms: list = field(default_factory=list)
    step_norms: list = field(default_factory=list)
    queries: list = field(default_factory=list)
    converged: bool = False
    final_residual: float = 0.0
    kappa: float = 1.0
    classical_ops: int = 0

    @property
    def total_iterations(self):
        return len(self.queries)

    @property
    def total_queries(self):
        return sum(self.queries)

    def to_dict(self):
        return {
            "residual_norms": [float(v) for v in self.residual_norms],
            "step_norms": [float(v) for v in self.step_norms],
            "queries": list(self.queries),
            "total_iterations": self.total_iterations,
            "total_queries": self.total_queries,
            "converged": self.converged,
            "final_residual": float(self.final_residual),
            "kappa": self.kappa,
            "classical_ops": self.classical_ops,
        }


def default_max_iter(eps_target):
    return 4 * math.ceil(math.log(1.0 / float(eps_target))) + 20


def _as_oracle(oracle):
    if isinstance(oracle, QLSOracle):
        return oracle
    return QLSOracle(oracle if isinstance(oracle, OracleConfig) else OracleConfig())


def refine_solve(M, sigma, eps_target, oracle=None, max_iter=None, warn=True):
    """Solve ``M z = sigma`` to relative residual ``eps_target``.

    Parameters
    ----------
    M : (p, p) array
        Nonsingular system matrix (symmetric in all uses by the dual solver).
    sigma : (p,) array
    eps_target : float
        Stop once ``||sigma - M z|| <= eps_target * max(1, ||sigma||)``.
    oracle : QLSOracle or OracleConfig, optional
        Passing an oracle instance accumulates its query ledger.
    max_iter : int, optional
        Defaults to ``4 * ceil(ln(1/eps_target)) + 20``.
    warn : bool
        Emit a ``RuntimeWarning`` when the worst-case contraction bound
        ``eps_direction * kappa + eps_norm`` reaches one.  Random rotations
        rarely realize that bound, so loops that call this many times turn
        it off and rely on the convergence check instead.

    Returns
    -------
    z : (p,) array
    trace : RefineTrace

    Raises
    ------
    NonConvergenceError
        When ``max_iter`` sweeps or a residual stall do not reach the target.
    """
    if not eps_target > 0:
        raise ValueError("eps_target must be positive")
    oracle = _as_oracle(oracle)
    bk = oracle.bk
    if max_iter is None:
        max_iter = default_max_iter(eps_target)
    sigma = bk.asarray(sigma)
    p = len(sigma)
    z = bk.zeros(p)
    trace = RefineTrace()
    norm_sigma = bk.norm(sigma)
    if norm_sigma == 0:
        trace.converged = True
        return z, trace

    tol = bk.scalar(eps_target) * max(1, norm_sigma)
    cost = oracle.cost_model(M)
    trace.kappa = cost.kappa_est
    cfg = oracle.config
    if warn and cfg.backend == "perturbed" and cfg.epsilon_direction * cost.kappa_est + cfg.epsilon_norm >= 1:
        warnings.warn(
            f"contraction bound eps*kappa + eps_norm = "
            f"{cfg.epsilon_direction * cost.kappa_est + cfg.epsilon_norm:.3g} >= 1; "
            "refinement may not converge", RuntimeWarning, stacklevel=2)

    best = None
    stalled = 0
    r = sigma
    for _ in range(max_iter):
        rn = bk.norm(r)
        if rn <= tol:
            trace.converged = True
            trace.final_residual = float(rn / max(1, norm_sigma))
            return z, trace
        if best is None or rn < best:
            best, stalled = rn, 0
        else:
            stalled += 1
            if stalled >= STAGNATION_PATIENCE:
                break
        est = oracle.estimate_direction(M, r, cost=cost)
        step = est.norm_solution * est.unit_dir
        z = z + step
        step_norm = bk.norm(step)
        trace.residual_norms.append(float(rn))
        trace.step_norms.append(float(step_norm))
        trace.queries.append(est.queries_charged)
        r = sigma - M @ z
        trace.classical_ops += p * p
        # successive-change guard: the correction is below what the arithmetic
        # resolves, so further sweeps cannot move z
        if step_norm <= min(bk.scalar(eps_target), bk.solve_floor) * bk.norm(z) and bk.norm(r) > tol:
            stalled = STAGNATION_PATIENCE
            break
    rn = bk.norm(r)
    trace.final_residual = float(rn / max(1, norm_sigma))
    if rn <= tol:
        trace.converged = True
        return z, trace
    raise NonConvergenceError(
        f"refinement stopped after {trace.total_iterations} sweeps at relative residual "
        f"{trace.final_residual:.3e} > {float(eps_target):.3e}"
        + (" (stalled)" if stalled >= STAGNATION_PATIENCE else ""), trace)


def solve_normal_system(A, rhs, eps_target, oracle=None, return_trace=False, warn=True):
    """Solve ``A A' y = rhs`` by refinement on the explicit normal matrix.

    The trace's ``classical_ops`` include the ``m^2 n`` multiply-adds of
    forming ``A A'``.
    """
    oracle = _as_oracle(oracle)
    bk = oracle.bk
    A = bk.asarray(A)
    N = A @ A.T
    y, trace = refine_solve(N, bk.asarray(rhs), eps_target, oracle, warn=warn)
    trace.classical_ops += A.shape[0] ** 2 * A.shape[1]
    if return_trace:
        return y, trace
    return y
