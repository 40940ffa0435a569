"""
Classical stand-in for the QLSA + tomography primitive.

An oracle call receives ``(M, r)`` and returns what the quantum subroutine
would hand back to the classical side: an approximate unit vector along
``M^{-1} r`` and estimates of ``||M^{-1} r||`` and ``||r||``.  Three
backends produce the direction:

``exact``
    dense factorized solve, no injected error.
``perturbed``
    exact solve, then a rotation by exactly ``epsilon_direction`` towards a
    uniformly random direction orthogonal to the true one.
``truncated-iterative``
    MINRES (GMRES for nonsymmetric ``M``) stopped early.

Each call is charged ``query_cost(p, kappa, ||M||_F, epsilon_direction)``
QRAM queries.
"""
from dataclasses import dataclass, field
import math

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .errors import DegenerateSystemError, ZeroRHSError
from .scalar import F64

__all__ = [
    "BACKENDS",
    "OracleConfig",
    "DirectionEstimate",
    "QueryCostModel",
    "CallRecord",
    "QLSOracle",
    "POLYLOG_FORM",
    "query_cost",
    "condition_estimate",
    "estimate_direction",
]

BACKENDS = ("exact", "perturbed", "truncated-iterative")
BACKEND_ALIASES = {"cg": "truncated-iterative", "krylov": "truncated-iterative"}

POLYLOG_FORM = "ceil(p * kappa * frob * ceil(log2(1/eps)) * ceil(log2(p+1)))"

DENSE_CONDITION_LIMIT = 512


@dataclass(frozen=True)
class OracleConfig:
    epsilon_direction: float = 1e-2
    epsilon_norm: float = 1e-2
    backend: str = "exact"
    seed: int = 0
    instrumented: bool = False

    def __post_init__(self):
        backend = BACKEND_ALIASES.get(self.backend, self.backend)
        if backend not in BACKENDS:
            raise ValueError(f"unknown oracle backend {self.backend!r}")
        object.__setattr__(self, "backend", backend)
        if not 0 < self.epsilon_direction < 1:
            raise ValueError("epsilon_direction must lie in (0, 1)")
        if not 0 <= self.epsilon_norm < 1:
            raise ValueError("epsilon_norm must lie in [0, 1)")


@dataclass(frozen=True)
class DirectionEstimate:
    unit_dir: np.ndarray
    norm_solution: float
    norm_rhs: float
    queries_charged: int


@dataclass(frozen=True)
class QueryCostModel:
    kappa_est: float
    frob_norm: float
    p: int
    eps: float
    polylog_form: str = POLYLOG_FORM

    @property
    def queries(self):
        return query_cost(self.p, self.kappa_est, self.frob_norm, self.eps)


@dataclass
class CallRecord:
    """Instrumented per-call record."""
    p: int
    kappa: float
    frob: float
    eps: float
    queries: int
    injected_error: float
    true_dir: np.ndarray = field(repr=False)
    unit_dir: np.ndarray = field(repr=False)

    def to_dict(self):
        return {"p": self.p, "kappa": self.kappa, "frob": self.frob, "eps": self.eps,
                "queries": self.queries, "injected_error": self.injected_error,
                "true_dir": [float(v) for v in self.true_dir]}


def query_cost(p, kappa, frob, eps):
    """QRAM queries for one inversion + tomography + norm-estimation call.

    ``ceil(p * kappa * frob * ceil(log2(1/eps)) * ceil(log2(p+1)))``: the
    ``kappa ||M||_F`` inversion cost, a tomography factor linear in ``p``,
    and a fixed polylog form.
    """
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    log_eps = math.ceil(math.log2(1.0 / eps))
    log_p = math.ceil(math.log2(p + 1))
    return int(math.ceil(p * kappa * frob * log_eps * log_p))


def _is_symmetric(M):
    return M.shape[0] == M.shape[1] and np.array_equal(M, M.T)


def condition_estimate(M):
    """Spectral condition number ``sigma_max / sigma_min`` of a square matrix.

    Full decomposition up to 512 rows; power iteration on ``M'M`` for the
    largest and LU-based inverse iteration for the smallest singular value
    above that.
    """
    M = np.asarray(M, dtype=float)
    p = M.shape[0]
    if M.shape != (p, p):
        raise ValueError("condition_estimate needs a square matrix")
    if p <= DENSE_CONDITION_LIMIT:
        if _is_symmetric(M):
            sv = np.abs(np.linalg.eigvalsh(M))
            smax, smin = sv.max(), sv.min()
        else:
            sv = scipy.linalg.svdvals(M, check_finite=False)
            smax, smin = sv[0], sv[-1]
    else:
        smax, smin = _iterative_extreme_singular_values(M)
    if not smin > smax * np.finfo(float).eps:
        raise DegenerateSystemError("matrix is numerically singular")
    return float(smax / smin)


def _iterative_extreme_singular_values(M, rtol=1e-6, max_iter=1000):
    rng = np.random.default_rng(0)
    p = M.shape[0]
    try:
        lu = scipy.linalg.lu_factor(M, check_finite=False)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise DegenerateSystemError(str(exc)) from exc

    def extreme(apply):
        v = rng.standard_normal(p)
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(max_iter):
            w = apply(v)
            new = np.linalg.norm(w)
            if new == 0:
                return 0.0
            v = w / new
            if abs(new - lam) <= rtol * new:
                return new
            lam = new
        return lam

    smax2 = extreme(lambda v: M.T @ (M @ v))
    inv2 = extreme(lambda v: scipy.linalg.lu_solve(lu, scipy.linalg.lu_solve(lu, v), trans=1))
    if inv2 == 0 or not np.isfinite(inv2):
        raise DegenerateSystemError("matrix is numerically singular")
    return math.sqrt(smax2), 1.0 / math.sqrt(inv2)


class QLSOracle:
    """Stateful oracle: owns a seeded generator and the query ledger.

    Not safe for concurrent calls; use one oracle per solve.

    Parameters
    ----------
    config : OracleConfig
    bk : scalar backend
        Arithmetic used for the exact solve and the returned direction.
    """

    def __init__(self, config=None, bk=F64):
        self.config = config or OracleConfig()
        self.bk = bk
        self.rng = np.random.default_rng(self.config.seed)
        self.calls = 0
        self.total_queries = 0
        self.query_log = []
        self.records = []

    def cost_model(self, M, kappa=None):
        Mf = self.bk.to_float(M)
        if kappa is None:
            kappa = condition_estimate(Mf)
        return QueryCostModel(kappa, float(np.linalg.norm(Mf)), Mf.shape[0],
                              self.config.epsilon_direction)

    def estimate_direction(self, M, r, kappa=None, cost=None):
        """Noisy unit direction of ``M^{-1} r`` plus norm estimates.

        ``kappa`` / ``cost`` may be passed by callers that issue many calls
        with the same matrix, to avoid recomputing the condition number.

        Raises
        ------
        ZeroRHSError
            For ``r = 0``; callers apply their own skip rule.
        DegenerateSystemError
            For singular ``M``.
        """
        bk = self.bk
        cfg = self.config
        r = bk.asarray(r)
        norm_r = bk.norm(r)
        if norm_r == 0:
            raise ZeroRHSError("oracle called with a zero right-hand side")
        if cost is None:
            cost = self.cost_model(M, kappa)
        queries = cost.queries

        if cfg.backend == "truncated-iterative":
            x = bk.asarray(self._krylov(bk.to_float(M), bk.to_float(r), cost.kappa_est))
        else:
            x = bk.solve(M, r)
        norm_x = bk.norm(x)
        if not norm_x > 0:
            raise DegenerateSystemError("oracle solve returned a zero vector")
        u = x / norm_x

        if cfg.backend == "perturbed":
            unit = self._rotate(u, cfg.epsilon_direction)
            norm_x_est = norm_x * (1 + bk.scalar(cfg.epsilon_norm * self.rng.uniform(-1, 1)))
            norm_r_est = norm_r * (1 + bk.scalar(cfg.epsilon_norm * self.rng.uniform(-1, 1)))
        else:
            unit = u
            norm_x_est = norm_x
            norm_r_est = norm_r

        self.calls += 1
        self.total_queries += queries
        self.query_log.append(queries)
        if cfg.instrumented:
            true_dir = bk.to_float(self._true_direction(M, r)) if cfg.backend == "truncated-iterative" \
                else bk.to_float(u)
            err = float(np.linalg.norm(bk.to_float(unit) - true_dir)) \
                if cfg.backend != "perturbed" else float(bk.norm(unit - u))
            self.records.append(CallRecord(len(u), cost.kappa_est, cost.frob_norm, cost.eps,
                                           queries, err, true_dir, bk.to_float(unit)))
        return DirectionEstimate(unit, norm_x_est, norm_r_est, queries)

    def _true_direction(self, M, r):
        x = self.bk.solve(M, r)
        return x / self.bk.norm(x)

    def _rotate(self, u, eps):
        # unit vector at distance exactly eps from u, uniformly spread around it
        bk = self.bk
        p = len(u)
        if p == 1:
            return u
        w = bk.asarray(self.rng.standard_normal(p))
        w = w - (w @ u) * u
        w = w - (w @ u) * u
        w = w / bk.norm(w)
        e = bk.scalar(eps)
        cos_phi = 1 - e * e / 2
        sin_phi = e * bk.sqrt(1 - e * e / 4)
        return cos_phi * u + sin_phi * w

    def _krylov(self, M, r, kappa):
        # relative residual eps/(2 kappa) bounds the direction error by eps
        rtol = self.config.epsilon_direction / (2 * kappa)
        maxiter = 20 * len(r)
        if _is_symmetric(M):
            x, _ = scipy.sparse.linalg.minres(M, r, rtol=rtol, maxiter=maxiter)
        else:
            x, _ = scipy.sparse.linalg.gmres(M, r, rtol=rtol, maxiter=maxiter, restart=len(r))
        return x


def estimate_direction(M, r, config=None, bk=F64):
    """One-shot oracle call with a fresh ``QLSOracle(config)``."""
    return QLSOracle(config, bk).estimate_direction(M, r)
