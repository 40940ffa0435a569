"""
Iterative refinement around the almost-exact dual IPM, and rounding of a
high-accuracy dual iterate to an exact optimal basis solution.

Each refinement round rescales the current dual slack by ``nabla`` into a
new cost vector, solves that refining problem to the fixed low accuracy
``zeta_tilde`` and folds the correction back with weight ``1/nabla``.
Because the refined start and target sit at unit scale, every inner solve
runs over the same ``mu`` range.
"""
from dataclasses import dataclass, field, replace
from fractions import Fraction
import math
import warnings

import numpy as np
import sympy

from .centering import center_dual, centering_mu, dual_start, proximity
from .dual_ipm import IPMConfig, run_dual
from .errors import (DegenerateSystemError, PositivityLossError, QIPMError,
                     RoundingFailedError)
from .icqlsa import solve_normal_system
from .newton import build_augmented, equilibrate
from .oracle import QLSOracle, condition_estimate
from .problem import DualIterate, Partition, binary_length, synthetic_binary_length
from .scalar import F64, ExtendedBackend

__all__ = [
    "RefinementState",
    "ProjectedDual",
    "OuterRecord",
    "OuterTrace",
    "outer_iteration_count",
    "project_dual",
    "construct_refining",
    "run_ir",
    "round_to_optimal",
    "system_condition",
]

PROJECTION_EPS = 1e-12
# inside run_ir the projection solves for a small defect, so a looser
# relative target still moves each slack by a negligible amount
IR_PROJECTION_EPS = 1e-10
ACCUMULATION_DPS = 34


@dataclass
class RefinementState:
    """Scale bookkeeping: ``nabla = zeta_tilde ** -outer_iter``."""

    zeta: float
    zeta_tilde: float = 1e-2
    outer_iter: int = 0

    def __post_init__(self):
        if not 0 < self.zeta_tilde < 1:
            raise ValueError("zeta_tilde must lie in (0, 1)")
        if not 0 < self.zeta <= self.zeta_tilde:
            raise ValueError("need 0 < zeta <= zeta_tilde")

    @property
    def nabla(self):
        return self.zeta_tilde ** (-self.outer_iter)

    @property
    def done(self):
        """A solve at the current scale reaches ``zeta``: ``zeta_tilde / nabla <= zeta``."""
        # relative slack absorbs the rounding of the repeated power
        return self.zeta_tilde / self.nabla <= (1 + 1e-9) * self.zeta

    def advance(self):
        self.outer_iter += 1
        return self.nabla


def outer_iteration_count(zeta, zeta_tilde):
    """``ceil(log(1/zeta) / log(1/zeta_tilde))``, robust to float round-off."""
    ratio = math.log(1 / zeta) / math.log(1 / zeta_tilde)
    return max(1, math.ceil(ratio - 1e-9))


@dataclass(frozen=True)
class ProjectedDual:
    """Dual pair with ``A'y + s = c`` by construction; ``s`` may have nonpositive entries."""

    y: np.ndarray
    s: np.ndarray

    @property
    def interior(self):
        return bool(np.all(self.s > 0))

    def iterate(self, mu):
        return DualIterate(self.y, self.s, mu)


def project_dual(problem, s_k, oracle=None, eps=PROJECTION_EPS, return_trace=False,
                 y_hint=None, weights=None, warn=True):
    """Restore exact dual feasibility for a slack vector from a perturbed solve.

    Solves ``A A' y = A (c - s_k)`` and sets ``s = c - A'y``, i.e. moves
    ``s_k`` to the nearest point of the dual affine space.  Positivity of
    ``s`` is reported through ``ProjectedDual.interior``, not enforced.

    Parameters
    ----------
    y_hint : array, optional
        The ``y`` paired with ``s_k`` by the solver.  Only the correction for
        the measured defect ``r = A'y_hint + s_k - c`` is then solved for, so
        the relative solve precision applies to the small defect instead of
        to ``c``.
    weights : array, optional
        Positive weights ``w``: the projection minimizes
        ``sum(w * (s - s_k)**2)`` and solves ``A W A' y = A W (c - s_k)``.
        ``w = 1/s_k**2`` bounds the relative change of every slack, which
        keeps tiny slacks positive when other entries are huge.
    """
    if not isinstance(oracle, QLSOracle):
        oracle = QLSOracle(oracle)
    bk = oracle.bk
    A = bk.asarray(problem.A)
    c = bk.asarray(problem.c)
    s_k = bk.asarray(s_k)
    m, n = problem.m, problem.n
    base = bk.zeros(m) if y_hint is None else bk.asarray(y_hint)
    target = c - s_k - A.T @ base
    ops = 2 * m * n
    if weights is not None:
        d = bk.sqrt(bk.asarray(weights))
        A_w = A * d
        target = target * d
        ops += m * n
    else:
        A_w = A
    rhs = A_w @ target
    eps = max(eps, float(bk.solve_floor))
    if bk.norm(rhs) == 0:
        y = base
    else:
        dy, tr = solve_normal_system(A_w, rhs, eps, oracle, return_trace=True, warn=warn)
        y = base + dy
        ops += tr.classical_ops
    s = c - A.T @ y
    out = ProjectedDual(y, s)
    return (out, ops) if return_trace else out


def construct_refining(problem, y, nabla):
    """Refining problem with cost ``nabla * (c - A'y)`` and the same ``A``, ``b``."""
    if not nabla >= 1:
        raise ValueError("nabla must be >= 1")
    c_hat = nabla * (problem.c - problem.A.T @ np.asarray(y, dtype=float))
    return problem.with_cost(c_hat, name=f"{problem.name or 'lo'}-refine")


def system_condition(problem, s, mu, precondition=True, bk=F64):
    """Condition number of the augmented Newton matrix at ``(s, mu)``.

    With ``precondition`` the diagonally equilibrated matrix is measured,
    which is the matrix the oracle receives when the IPM equilibrates.
    """
    system = build_augmented(problem, s, mu, bk)
    if precondition:
        system, _ = equilibrate(system)
    return condition_estimate(bk.to_float(system.matrix))


@dataclass
class OuterRecord:
    k: int
    nabla: float
    mu: float
    gap: float
    inner_iters: int
    queries: int
    classical_ops: int
    kappa_final: float
    kappa_max: float
    dual_residual: float
    min_slack: float
    start_mu: float = None
    start_delta: float = None
    projection_calls: int = 0
    projection_queries: int = 0
    projection_ops: int = 0

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class OuterTrace:
    zeta: float
    zeta_tilde: float
    rows: list = field(default_factory=list)
    inner: list = field(default_factory=list, repr=False)

    @property
    def outer_iterations(self):
        return len(self.rows)

    @property
    def total_queries(self):
        return self.rows[-1].queries if self.rows else 0

    @property
    def classical_ops(self):
        return self.rows[-1].classical_ops if self.rows else 0

    @property
    def inner_iterations(self):
        return sum(r.inner_iters for r in self.rows)

    @property
    def kappa0(self):
        return self.rows[0].kappa_final if self.rows else None

    @property
    def gap(self):
        return self.rows[-1].gap if self.rows else None


def _inner_start(problem, s_hat, mu_hat, bk):
    # proximity is invariant under a common scaling of (s, mu, c), so the
    # scaled previous mu is normally already a good target
    delta = float(proximity(problem, s_hat, mu_hat, bk))
    if delta < 0.5:
        return s_hat, bk.zeros(problem.m), mu_hat, delta
    mu_c = centering_mu(problem, bk.to_float(s_hat))
    if mu_c is not None:
        delta_c = float(proximity(problem, s_hat, mu_c, bk))
        if delta_c < 0.5:
            return s_hat, bk.zeros(problem.m), bk.scalar(mu_c), delta_c
        mu_hat = bk.scalar(mu_c)
    y, s = center_dual(problem, bk.zeros(problem.m), s_hat, mu_hat, bk=bk)
    return s, y, mu_hat, float(proximity(problem, s, mu_hat, bk))


def run_ir(problem, zeta, zeta_tilde=1e-2, ipm_config=None, oracle=None, start=None, bk=None):
    """Iteratively refined almost-exact dual IPM.

    Parameters
    ----------
    problem : LOProblem
    zeta : float
        Final accuracy; the loop stops after the solve at the first scale
        with ``zeta_tilde / nabla <= zeta``.
    zeta_tilde : float
        Gap accuracy of every inner solve (``n mu <= zeta_tilde``).
    ipm_config : IPMConfig, optional
        Inner loop settings; ``mu_stop`` is overridden by ``zeta_tilde / n``
        so each inner solve certifies a gap of at most ``zeta_tilde``.
        Defaults to ``IPMConfig(precondition=True)``.
    oracle : QLSOracle or OracleConfig
    start : DualIterate, optional
        Strictly feasible start with proximity below 1/2; computed by
        ``dual_start`` when omitted.

    Returns
    -------
    iterate : DualIterate
        Final dual point, exactly feasible after projection.  Its ``mu`` is
        the last inner ``mu`` mapped back to the original scale.
    trace : OuterTrace
    """
    if not isinstance(oracle, QLSOracle):
        oracle = QLSOracle(oracle, bk or F64)
    bk = oracle.bk
    state = RefinementState(zeta, zeta_tilde)
    n_outer = outer_iteration_count(zeta, zeta_tilde)
    if ipm_config is None:
        ipm_config = IPMConfig(precondition=True)
    if ipm_config.L is None:
        # refined costs are not integer, so fix L once from the original data
        L = ipm_config.binary_length(problem) if (ipm_config.eps is not None or problem.is_integer_data) \
            else synthetic_binary_length(zeta_tilde)
        ipm_config = replace(ipm_config, L=L)
    # each inner solve reaches gap certificate n * mu <= zeta_tilde
    inner_cfg = replace(ipm_config, mu_stop=zeta_tilde / problem.n)

    if start is None:
        start = dual_start(problem, bk=bk)
    trace = OuterTrace(zeta, zeta_tilde)
    queries = 0
    ops = 0
    # y and c - A'y are accumulated in extended precision: the slack that
    # seeds each refined cost is far below the f64 rounding level of c
    acc = bk if bk.name != "f64" else ExtendedBackend(ACCUMULATION_DPS)
    A_acc = acc.asarray(problem.A)
    c_acc = acc.asarray(problem.c)
    y = acc.asarray(bk.to_float(start.y) if acc is not bk else start.y)
    current = problem
    s_hat, y_hat, mu_hat = bk.asarray(start.s), bk.zeros(problem.m), bk.scalar(start.mu)
    start_delta = float(proximity(problem, s_hat, mu_hat, bk))
    nabla = 1.0
    for k in range(n_outer):
        if k > 0:
            nabla = state.advance()
            current = problem.with_cost(acc.to_float(acc.scalar(nabla) * s),
                                        name=f"{problem.name or 'lo'}-refine")
            s_hat, y_hat, mu_hat, start_delta = _inner_start(
                current, bk.asarray(current.c), bk.scalar(nabla) * mu_cur, bk)
        start_mu = float(mu_hat)
        try:
            it, traj, _ = run_dual(current, y_hat, s_hat, mu_hat, inner_cfg, oracle)
        except QIPMError as exc:
            exc.args = (f"outer iteration {k}: {exc.args[0] if exc.args else exc}",) + exc.args[1:]
            raise
        queries += traj.total_queries
        ops += traj.classical_ops
        trace.inner.append(traj)
        kappas = [r.kappa for r in traj.rows if r.kappa is not None]
        try:
            kappa_final = system_condition(current, it.s, it.mu, inner_cfg.precondition, bk)
        except DegenerateSystemError:
            kappa_final = math.inf
        # restore exact feasibility in the refined problem with a relative
        # (1/s^2-weighted) projection, then fold the correction back with
        # weight 1/nabla
        calls_before, queries_before = oracle.calls, oracle.total_queries
        proj, p_ops = project_dual(current, it.s, oracle, eps=IR_PROJECTION_EPS, return_trace=True,
                                   y_hint=it.y, weights=1 / (it.s * it.s), warn=False)
        p_calls = oracle.calls - calls_before
        p_queries = oracle.total_queries - queries_before
        queries += p_queries
        ops += p_ops
        y_corr = acc.asarray(bk.to_float(proj.y) if acc is not bk else proj.y)
        y = y_corr if k == 0 else y + y_corr / acc.scalar(nabla)
        s = c_acc - A_acc.T @ y
        ops += problem.m * problem.n
        mu_cur = it.mu / bk.scalar(nabla)
        if not np.all(s > 0):
            warnings.warn(f"outer iteration {k}: projected slack lost positivity", RuntimeWarning)
        trace.rows.append(OuterRecord(
            k=k, nabla=float(nabla), mu=float(mu_cur), gap=float(mu_cur) * problem.n,
            inner_iters=traj.iterations, queries=queries, classical_ops=ops,
            kappa_final=kappa_final, kappa_max=max(kappas) if kappas else None,
            dual_residual=float(acc.norm(A_acc.T @ y + s - c_acc)),
            min_slack=float(np.min(acc.to_float(s))), start_mu=start_mu, start_delta=start_delta,
            projection_calls=p_calls, projection_queries=p_queries,
            projection_ops=p_ops + problem.m * problem.n))
    if not np.all(s > 0):
        raise PositivityLossError("final projected slack is not positive", n_outer, trace, None)
    if acc is not bk:
        y, s = acc.to_float(y), acc.to_float(s)
    return DualIterate(y, s, mu_cur), trace


def _threshold(problem, threshold, mu):
    if threshold is not None:
        return threshold
    if mu is not None:
        return math.sqrt(float(mu))
    if problem.is_integer_data:
        return 2.0 ** (-binary_length(problem))
    raise ValueError("threshold needs mu or integer data")


def _exact_guided(M, rhs, guide):
    # least-squares solution of M z = rhs closest to the guide
    return guide + M.pinv() * (rhs - M * guide)


def _rational_column(v):
    return sympy.Matrix([sympy.Rational(float(e)) for e in v])


def _exact_round(problem, Bl, x_guide, y_guide):
    A = sympy.Matrix(problem.A.astype(int).tolist())
    b = sympy.Matrix(problem.b.astype(int).tolist())
    c = sympy.Matrix(problem.c.astype(int).tolist())
    AB = A[:, Bl]
    xB = _exact_guided(AB, b, _rational_column(x_guide))
    x = sympy.zeros(problem.n, 1)
    for j, i in enumerate(Bl):
        x[i] = xB[j]
    y = _exact_guided(AB.T, c[Bl, :], _rational_column(y_guide))
    s = c - A.T * y
    ok = (A * x == b and all(v >= 0 for v in x) and all(v >= 0 for v in s)
          and all(s[i] == 0 for i in Bl) and (x.T * s)[0] == 0)
    return x, y, s, ok


def _to_fraction_array(M):
    return np.array([Fraction(int(v.p), int(v.q)) for v in M], dtype=object)


def round_to_optimal(problem, y, s, threshold=None, mu=None, exact=None, tol=1e-9):
    """Round a near-optimal dual point to an exactly optimal primal-dual pair.

    Indices with ``s_i > threshold`` form ``N`` (``x_N = 0``); the rest form
    ``B``.  ``x_B`` solves ``A_B x_B = b`` and ``y*`` solves
    ``A_B' y* = c_B`` in the least-squares sense, taking among several
    solutions the one nearest to ``mu / s_B`` (resp. the input ``y``); then
    optimality is verified.  For integer data the systems are solved and checked in exact
    rational arithmetic (``exact`` defaults to ``problem.is_integer_data``)
    and the returned arrays hold ``fractions.Fraction`` entries.

    Parameters
    ----------
    threshold : float, optional
        Defaults to ``sqrt(mu)`` when ``mu`` is given, else ``2**-L`` for
        integer data.
    tol : float
        Verification tolerance (relative to the data scale) for the
        floating-point path.

    Returns
    -------
    x, y, s : arrays
    partition : Partition

    Raises
    ------
    RoundingFailedError
        If the rounded pair is not verified optimal; carries the partition.
    """
    threshold = _threshold(problem, threshold, mu)
    s_f = np.asarray([float(v) for v in np.asarray(s).ravel()])
    N = {i for i in range(problem.n) if s_f[i] > threshold}
    B = set(range(problem.n)) - N
    part = Partition(B, N)
    if not B:
        raise RoundingFailedError("every slack exceeds the threshold", part)
    if exact is None:
        exact = bool(problem.is_integer_data)
    Bl = sorted(B)
    y_guide = np.asarray([float(v) for v in np.asarray(y).ravel()])
    # interior estimate x_B = mu / s_B picks a point inside an optimal face
    # when the basic columns are dependent
    x_guide = float(mu) / s_f[Bl] if mu is not None else np.zeros(len(Bl))
    if exact:
        x, y_s, s_s, ok = _exact_round(problem, Bl, x_guide, y_guide)
        if not ok:
            raise RoundingFailedError("exact verification failed", part)
        return _to_fraction_array(x), _to_fraction_array(y_s), _to_fraction_array(s_s), part

    A, b, c = problem.A, problem.b, problem.c
    AB = A[:, Bl]
    x = np.zeros(problem.n)
    x[Bl] = x_guide + np.linalg.lstsq(AB, b - AB @ x_guide, rcond=None)[0]
    y_star = y_guide + np.linalg.lstsq(AB.T, c[Bl] - AB.T @ y_guide, rcond=None)[0]
    s_star = c - A.T @ y_star
    scale = 1 + np.linalg.norm(b) + np.linalg.norm(c)
    t = tol * scale
    ok = (np.linalg.norm(A @ x - b) <= t and np.all(x >= -t) and np.all(s_star >= -t)
          and np.all(np.abs(s_star[Bl]) <= t) and abs(x @ s_star) <= t)
    if not ok:
        raise RoundingFailedError("rounded pair failed the optimality check", part)
    x = np.where(np.abs(x) <= t, 0.0, x)
    s_star = np.where(np.abs(s_star) <= t, 0.0, s_star)
    return x, y_star, s_star, part
