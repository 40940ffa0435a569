"""
Short-step dual log-barrier IPM driven by the emulated quantum solver, and
a feasible primal-dual variant built on the orthogonal-subspaces system.
"""
from dataclasses import dataclass, field, replace
import math
import time
import warnings

import numpy as np

from .centering import primal_estimate, proximity
from .errors import DegenerateSystemError, InfeasibleStartError, PositivityLossError
from .icqlsa import refine_solve
from .newton import (build_augmented, build_oss, equilibrate, nullspace_basis,
                     problem_arrays, recover_oss_directions)
from .oracle import QLSOracle
from .problem import (DualIterate, PrimalDualIterate, binary_length,
                      complementarity_mu, synthetic_binary_length)
from .scalar import F64

__all__ = [
    "IPMConfig",
    "IterRecord",
    "Trajectory",
    "PerturbationLedger",
    "run_dual",
    "run_ifqipm_oss",
    "check_error_conditions",
]

CONDITION_BOUND = 0.033


@dataclass(frozen=True)
class IPMConfig:
    """Parameters of the dual and OSS interior point loops.

    ``L`` (or ``eps``, mapped to a synthetic ``L``) sets the defaults
    ``mu_stop = 2**(-2L)``, ``solve_eps = 2**(-tL)`` (clipped at the scalar
    backend's floor) and ``skip_eps = 2**(-4L)``.  Integer-data problems fall
    back to their binary length.
    """

    theta: float = None
    t: int = 4
    mu_stop: float = None
    beta: float = 0.9
    max_outer: int = None
    L: float = None
    eps: float = None
    solve_eps: float = None
    skip_eps: float = None
    tau: float = 0.9
    oss_solve_eps: float = 1e-6
    precondition: bool = False
    strict_start: bool = False
    instrument: bool = False

    def __post_init__(self):
        if self.theta is not None and not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if self.mu_stop is not None and not self.mu_stop > 0:
            raise ValueError("mu_stop must be positive")
        if not 1 <= self.t <= 10:
            raise ValueError("t must lie in [1, 10]")
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")

    def binary_length(self, problem):
        if self.L is not None:
            return self.L
        if self.eps is not None:
            return synthetic_binary_length(self.eps)
        return binary_length(problem)

    def resolve(self, problem, mu0, bk=F64):
        """Concrete loop parameters for ``problem`` in backend ``bk``."""
        n = problem.n
        theta = self.theta if self.theta is not None else 1 / (4 * math.sqrt(n))
        need_L = self.mu_stop is None or self.solve_eps is None or self.skip_eps is None
        L = self.binary_length(problem) if need_L else self.L
        mu_stop = bk.scalar(self.mu_stop) if self.mu_stop is not None else bk.pow2(-2 * L)
        if self.solve_eps is not None:
            solve_eps = bk.scalar(self.solve_eps)
        else:
            solve_eps = max(bk.pow2(-self.t * L), bk.solve_floor)
        skip_eps = bk.scalar(self.skip_eps) if self.skip_eps is not None else bk.pow2(-4 * L)
        if self.max_outer is not None:
            max_outer = self.max_outer
        else:
            ratio = float(bk.log(bk.scalar(mu0) / mu_stop)) if mu0 > mu_stop else 0.0
            max_outer = math.ceil(ratio / -math.log1p(-theta)) + 5
        return _Resolved(theta, L, mu_stop, solve_eps, skip_eps, max_outer)


@dataclass(frozen=True)
class _Resolved:
    theta: float
    L: float
    mu_stop: object
    solve_eps: object
    skip_eps: object
    max_outer: int


@dataclass
class IterRecord:
    k: int
    mu: object
    delta_est: float = None
    delta_exact: float = None
    kappa: float = None
    queries: int = 0
    oracle_calls: int = 0
    classical_ops: int = 0
    skipped: bool = False
    rhs_norm: float = 0.0
    wall_time: float = 0.0
    step: float = 1.0
    primal_residual: float = None
    dual_residual: float = None

    def to_dict(self):
        d = {k: v for k, v in self.__dict__.items()}
        d["mu"] = None if self.mu is None else float(self.mu)
        return d


@dataclass
class Trajectory:
    problem: object = field(repr=False)
    mu0: object = None
    theta: float = None
    rows: list = field(default_factory=list)
    snapshots: list = field(default_factory=list, repr=False)
    converged: bool = False
    gap_certificate: float = None
    primal_estimate: np.ndarray = field(default=None, repr=False)

    @property
    def iterations(self):
        return len(self.rows)

    @property
    def total_queries(self):
        return sum(r.queries for r in self.rows)

    @property
    def oracle_calls(self):
        return sum(r.oracle_calls for r in self.rows)

    @property
    def classical_ops(self):
        return sum(r.classical_ops for r in self.rows)

    @property
    def mus(self):
        return [r.mu for r in self.rows]


@dataclass
class PerturbationLedger:
    """Measured dual-feasibility drift ``r^k = A'y^k + s^k - c``.

    ``r`` holds the running sum of per-step defects ``xi = A'dy + ds`` on top
    of the measured defect of the start point.
    """

    r0: np.ndarray = field(repr=False)
    xis: list = field(default_factory=list, repr=False)
    running: list = field(default_factory=list, repr=False)
    xi_norms: list = field(default_factory=list)
    solve_residuals: list = field(default_factory=list)
    skips: list = field(default_factory=list)

    @property
    def r(self):
        return self.running[-1] if self.running else self.r0

    def r_at(self, k):
        """Running perturbation after ``k`` iterations (``r_at(0)`` is the start defect)."""
        return self.r0 if k == 0 else self.running[k - 1]

    def record(self, xi, solve_residual, skipped, bk):
        self.xis.append(xi)
        self.running.append(self.r + xi)
        self.xi_norms.append(float(bk.norm(xi)))
        self.solve_residuals.append(solve_residual)
        if skipped:
            self.skips.append(len(self.xis) - 1)


def _check_start(problem, s0, mu0, cfg, bk):
    delta = float(proximity(problem, s0, mu0, bk))
    if delta >= 0.5:
        msg = f"start proximity {delta:.3f} >= 1/2; short-step guarantees do not apply"
        if cfg.strict_start:
            raise InfeasibleStartError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=3)
    return delta


def run_dual(problem, y0, s0, mu0, config=None, oracle=None, bk=None):
    """Almost-exact dual log-barrier IPM.

    Each iteration builds the augmented Newton system at ``(s, mu)``, skips
    the solve when its right-hand side norm is at most ``skip_eps``, and
    otherwise solves it by oracle-driven refinement to ``solve_eps``; a full
    Newton step is taken and ``mu`` shrinks by ``1 - theta``.

    Parameters
    ----------
    problem : LOProblem
    y0, s0 : arrays
        Strictly feasible dual start with ``s0 > 0``.
    mu0 : float
    config : IPMConfig
    oracle : QLSOracle or OracleConfig
    bk : scalar backend, optional
        Defaults to the oracle's backend.

    Returns
    -------
    iterate : DualIterate
    trajectory : Trajectory
    ledger : PerturbationLedger

    Raises
    ------
    PositivityLossError
        If a full step leaves the positive orthant.
    """
    config = config or IPMConfig()
    if not isinstance(oracle, QLSOracle):
        oracle = QLSOracle(oracle, bk or F64)
    bk = oracle.bk
    A, _, c = problem_arrays(problem, bk)
    y = bk.asarray(y0)
    s = bk.asarray(s0)
    if not np.all(s > 0):
        raise InfeasibleStartError("s0 must be strictly positive")
    mu0 = bk.scalar(mu0)
    cfg = config.resolve(problem, mu0, bk)
    _check_start(problem, s, mu0, config, bk)
    one_minus_theta = 1 - bk.scalar(cfg.theta)

    traj = Trajectory(problem, mu0, cfg.theta)
    ledger = PerturbationLedger(A.T @ y + s - c)
    traj.snapshots.append((y, s, mu0))
    mu = mu0
    k = 0
    while mu > cfg.mu_stop and k < cfg.max_outer:
        t0 = time.perf_counter()
        system = build_augmented(problem, s, mu, bk)
        rhs_norm = bk.norm(system.rhs)
        # forming A S^{-1} e is the only matrix-vector product outside the solve
        row = IterRecord(k + 1, mu, rhs_norm=float(rhs_norm),
                         classical_ops=problem.m * problem.n)
        if rhs_norm <= cfg.skip_eps:
            row.skipped = True
            ledger.record(bk.zeros(problem.n), 0.0, True, bk)
        else:
            calls_before = oracle.calls
            if config.precondition:
                scaled, rec = equilibrate(system)
                z, tr = refine_solve(scaled.matrix, scaled.rhs, cfg.solve_eps, oracle, warn=False)
                z = rec.unscale(z)
            else:
                z, tr = refine_solve(system.matrix, system.rhs, cfg.solve_eps, oracle, warn=False)
            u, v = system.split(z)
            dy = -v
            ds = -(s * s) * u
            row.delta_est = float(bk.norm(ds / s))
            row.kappa = tr.kappa
            row.queries = tr.total_queries
            row.oracle_calls = oracle.calls - calls_before
            row.classical_ops += tr.classical_ops
            s_new = s + ds
            if not np.all(s_new > 0):
                traj.rows.append(row)
                raise PositivityLossError(
                    f"dual slack left the positive orthant at iteration {k + 1}",
                    k + 1, traj, ledger)
            y = y + dy
            s = s_new
            ledger.record(A.T @ dy + ds, tr.final_residual, False, bk)
        k += 1
        mu = mu0 * one_minus_theta ** k
        row.mu = mu
        if config.instrument:
            row.delta_exact = float(proximity(problem, s, mu, bk))
        row.wall_time = time.perf_counter() - t0
        traj.rows.append(row)
        traj.snapshots.append((y, s, mu))

    traj.converged = bool(mu <= cfg.mu_stop)
    traj.gap_certificate = float(mu) * problem.n
    try:
        traj.primal_estimate = primal_estimate(problem, s, mu, bk)
    except DegenerateSystemError:
        traj.primal_estimate = None
    return DualIterate(y, s, mu), traj, ledger


def _step_to_boundary(v, dv, tau):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return min(1.0, float(tau * np.min(-v[neg] / dv[neg])))


def run_ifqipm_oss(problem, x0, y0, s0, config=None, oracle=None):
    """Inexact feasible primal-dual IPM on the orthogonal-subspaces system.

    Directions recovered from OSS solutions keep ``A x = b`` and
    ``A'y + s = c`` intact however inexact the solve, so the iterates stay
    feasible; steps are damped to keep ``x, s >= (1 - tau)`` times their
    current values.

    Returns
    -------
    iterate : PrimalDualIterate
    trajectory : Trajectory
    """
    config = config or IPMConfig()
    if not isinstance(oracle, QLSOracle):
        oracle = QLSOracle(oracle)
    A, b, c = problem.A, problem.b, problem.c
    x = np.asarray(x0, dtype=float)
    y = np.asarray(y0, dtype=float)
    s = np.asarray(s0, dtype=float)
    if not (np.all(x > 0) and np.all(s > 0)):
        raise InfeasibleStartError("OSS start must be interior")
    if np.linalg.norm(A @ x - b) > 1e-10 * (1 + np.linalg.norm(b)) or \
            np.linalg.norm(A.T @ y + s - c) > 1e-10 * (1 + np.linalg.norm(c)):
        raise InfeasibleStartError("OSS start must satisfy A x = b and A'y + s = c")

    mu = complementarity_mu(x, s)
    cfg = config.resolve(problem, mu)
    if config.max_outer is None:
        # mu shrinks by about (1 - beta) * alpha per step rather than by theta
        ratio = math.log(mu / cfg.mu_stop) if mu > cfg.mu_stop else 0.0
        cfg = replace(cfg, max_outer=math.ceil(2 * ratio / max(1 - config.beta, 1e-3)) + 20)
    basis = nullspace_basis(A)
    traj = Trajectory(problem, mu, None)
    traj.snapshots.append((x, y, s, mu))
    k = 0
    while mu > cfg.mu_stop and k < cfg.max_outer:
        t0 = time.perf_counter()
        system = build_oss(problem, x, s, mu, config.beta, basis)
        rhs_norm = np.linalg.norm(system.rhs)
        row = IterRecord(k + 1, mu, rhs_norm=float(rhs_norm))
        # beta mu e - X s is formed in floating point, so "zero" means zero up
        # to the rounding of the product x s
        if rhs_norm <= max(cfg.skip_eps, 16 * np.finfo(float).eps * np.linalg.norm(x * s)):
            # the current point is the target center; nothing left to do
            row.skipped = True
            row.step = 0.0
            row.primal_residual = float(np.linalg.norm(A @ x - b))
            row.dual_residual = float(np.linalg.norm(A.T @ y + s - c))
            traj.rows.append(row)
            break
        calls_before = oracle.calls
        # solve for the unit right-hand side so the tolerance stays relative
        # as the centering residual shrinks with mu
        z, tr = refine_solve(system.matrix, system.rhs / rhs_norm, config.oss_solve_eps, oracle,
                             warn=False)
        z = z * rhs_norm
        dy, lam = system.split(z)
        dx, ds = recover_oss_directions(dy, lam, basis, A)
        alpha = min(_step_to_boundary(x, dx, config.tau), _step_to_boundary(s, ds, config.tau))
        x = x + alpha * dx
        y = y + alpha * dy
        s = s + alpha * ds
        mu = complementarity_mu(x, s)
        k += 1
        row.mu = mu
        row.step = alpha
        row.kappa = tr.kappa
        row.queries = tr.total_queries
        row.oracle_calls = oracle.calls - calls_before
        # dx = V lam and ds = -A'dy on top of the refinement residuals
        row.classical_ops = tr.classical_ops + problem.n * (problem.n - problem.m) + problem.m * problem.n
        row.primal_residual = float(np.linalg.norm(A @ x - b))
        row.dual_residual = float(np.linalg.norm(A.T @ y + s - c))
        row.wall_time = time.perf_counter() - t0
        traj.rows.append(row)
        traj.snapshots.append((x, y, s, mu))
    traj.converged = bool(mu <= cfg.mu_stop)
    traj.gap_certificate = float(x @ s)
    traj.primal_estimate = x
    return PrimalDualIterate(x, y, s), traj


def check_error_conditions(ledger, trajectory, config=None):
    """Evaluate the three inexact-step conditions at every solved iteration.

    For iteration ``k`` (iterate ``s^k`` at ``mu^k``, producing defect
    ``xi^{k+1}``) with ``s~ = s^k + r^k`` and ``delta~`` the proximity of
    ``s~``:

    * ``||S S~^{-1} (I - S S~^{-1})|| <= 0.033 delta~``
    * ``||I - (S S~^{-1})^2|| <= 0.033``
    * ``||S~^{-1} xi^{k+1}|| <= 0.033 delta~``

    Diagnostic only: returns a report dict and never raises.
    """
    problem = trajectory.problem
    bound = CONDITION_BOUND if config is None else getattr(config, "condition_bound", CONDITION_BOUND)
    rows = []
    for k, xi in enumerate(ledger.xis):
        if k in ledger.skips:
            continue
        _, s, mu = trajectory.snapshots[k]
        s = np.asarray(s, dtype=float)
        r = np.asarray(ledger.r_at(k), dtype=float)
        xi = np.asarray(xi, dtype=float)
        s_tilde = s + r
        if np.all(s_tilde > 0):
            try:
                delta = float(proximity(problem, s_tilde, float(mu)))
            except DegenerateSystemError:
                delta = float("nan")
            q = s / s_tilde
            lhs = (float(np.max(np.abs(q * (1 - q)))),
                   float(np.max(np.abs(1 - q * q))),
                   float(np.linalg.norm(xi / s_tilde)))
        else:
            delta = float("nan")
            lhs = (float("inf"),) * 3
        rhs = (bound * delta, bound, bound * delta)
        ok = tuple(bool(l <= r_) for l, r_ in zip(lhs, rhs))
        rows.append({"k": k + 1, "delta_tilde": delta, "lhs": lhs, "rhs": rhs, "ok": ok})
    violations = sum(1 for row in rows if not all(row["ok"]))
    return {"rows": rows, "violations": violations, "all_ok": violations == 0,
            "checked": len(rows)}
