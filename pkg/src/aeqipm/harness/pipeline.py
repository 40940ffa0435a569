"""
One-call solve pipelines (``ae``, ``ir``, ``oss``) that return a RunReport.
"""
import math
import time

import numpy as np

from ..centering import dual_start, primal_estimate
from ..dual_ipm import IPMConfig, run_dual, run_ifqipm_oss
from ..errors import BinaryLengthUndefined, QIPMError
from ..oracle import OracleConfig, QLSOracle
from ..problem import binary_length, synthetic_binary_length
from ..refinement import round_to_optimal, run_ir
from ..scalar import get_backend
from .report import RunReport

__all__ = ["ALGOS", "solve_pipeline"]

ALGOS = ("ae", "ir", "oss")
DEFAULT_EPS = 1e-8


def _instance_meta(problem, seed, eps):
    try:
        L = binary_length(problem)
    except BinaryLengthUndefined:
        L = synthetic_binary_length(eps or DEFAULT_EPS)
    return {"name": problem.name, "n": problem.n, "m": problem.m, "L": L, "seed": seed}


def _fmt_exact(v):
    return str(v)


def solve_pipeline(problem, algo="ae", backend="exact", precision="f64", theta=None, t=4,
                   eps=None, zeta=1e-8, zeta_tilde=1e-2, seed=0, instrument=False,
                   start=None, x0=None, epsilon_direction=1e-2, instance_seed=None):
    """Run one pipeline and return its report (never raises solver errors).

    Parameters
    ----------
    algo : {"ae", "ir", "oss"}
        ``ae`` runs the dual IPM until the gap certificate ``n mu`` is at
        most ``eps``; ``ir`` runs the refinement loop to ``zeta`` (then rounds
        integer data exactly); ``oss`` runs the primal-dual OSS variant.
    eps : float, optional
        Gap target for ``ae``/``oss``.  When omitted, integer data use the
        literal ``2**(-2L)`` stopping rule and other data use 1e-8.
    start : DualIterate, optional
        Dual start; computed by ``dual_start`` when omitted.
    x0 : array, optional
        Primal start for ``oss``; defaults to the primal estimate of the
        dual start.
    """
    if algo not in ALGOS:
        raise ValueError(f"unknown algo {algo!r}")
    bk = get_backend(precision)
    oracle = QLSOracle(OracleConfig(epsilon_direction=epsilon_direction, backend=backend,
                                    seed=seed, instrumented=instrument), bk)
    literal = eps is None and problem.is_integer_data and algo != "ir"
    if eps is None and not literal:
        eps = DEFAULT_EPS
    report = RunReport(
        instance=_instance_meta(problem, seed if instance_seed is None else instance_seed, eps),
        config={"algo": algo, "backend": oracle.config.backend, "precision": bk.name,
                "theta": theta, "t": t, "eps": eps, "zeta": zeta, "zeta_tilde": zeta_tilde,
                "seed": seed, "instrument": instrument,
                "epsilon_direction": epsilon_direction})
    t0 = time.perf_counter()
    try:
        if start is None:
            start = dual_start(problem, bk=bk)
        if algo == "ae":
            cfg = IPMConfig(theta=theta, t=t, instrument=instrument) if literal else \
                IPMConfig(theta=theta, t=t, mu_stop=eps / problem.n, eps=eps, instrument=instrument)
            it, traj, ledger = run_dual(problem, start.y, start.s, start.mu, cfg, oracle)
            report.rows = [r.to_dict() for r in traj.rows]
            y = bk.to_float(it.y)
            report.summary = {"objective": float(problem.b @ y), "gap": traj.gap_certificate,
                              "mu": float(it.mu), "y": y.tolist(),
                              "max_xi": max(ledger.xi_norms, default=0.0)}
            if traj.primal_estimate is not None:
                x = bk.to_float(traj.primal_estimate)
                report.summary["primal_objective"] = float(problem.c @ x)
            converged = traj.converged
        elif algo == "oss":
            if x0 is None:
                x0 = bk.to_float(primal_estimate(problem, start.s, start.mu, bk))
            cfg = IPMConfig(theta=theta, t=t, mu_stop=eps / problem.n, eps=eps)
            it, traj = run_ifqipm_oss(problem, x0, bk.to_float(start.y), bk.to_float(start.s),
                                      cfg, oracle)
            report.rows = [r.to_dict() for r in traj.rows]
            report.summary = {"objective": float(problem.c @ it.x), "gap": traj.gap_certificate,
                              "mu": float(traj.rows[-1].mu) if traj.rows else float(start.mu),
                              "primal_residual": float(np.linalg.norm(problem.A @ it.x - problem.b)),
                              "dual_residual": float(np.linalg.norm(
                                  problem.A.T @ it.y + it.s - problem.c))}
            converged = traj.converged
        else:
            cfg = IPMConfig(theta=theta, t=t, precondition=True, instrument=instrument)
            it, trace = run_ir(problem, zeta, zeta_tilde, cfg, oracle, start=start)
            for k, inner in enumerate(trace.inner):
                report.rows += [{**r.to_dict(), "outer": k} for r in inner.rows]
            for rec in trace.rows:
                d = rec.to_dict()
                d["extra_queries"] = rec.projection_queries
                d["extra_oracle_calls"] = rec.projection_calls
                d["extra_classical_ops"] = rec.projection_ops
                report.outer_rows.append(d)
            y = bk.to_float(it.y)
            report.summary = {"objective": float(problem.b @ y), "gap": trace.gap,
                              "mu": float(it.mu), "y": y.tolist(), "kappa0": trace.kappa0,
                              "kappa_max": max(r.kappa_final for r in trace.rows)}
            converged = True
            if problem.is_integer_data:
                try:
                    x, ys, s, part = round_to_optimal(problem, it.y, it.s, mu=it.mu)
                    obj = sum(ci * xi for ci, xi in zip(problem.c.astype(int).tolist(), x))
                    report.summary["rounding"] = {
                        "status": "certified", "objective": _fmt_exact(obj),
                        "x": [_fmt_exact(v) for v in x], "B": sorted(part.B)}
                except QIPMError as exc:
                    report.summary["rounding"] = {"status": "failed", "message": str(exc)}
        report.outcome = {"status": "converged" if converged else "not_converged"}
    except QIPMError as exc:
        report.outcome = {"status": "error", "error_kind": type(exc).__name__,
                          "message": str(exc)}
        trajectory = getattr(exc, "trajectory", None)
        if trajectory is not None and hasattr(trajectory, "rows") and not report.rows:
            report.rows = [r.to_dict() for r in trajectory.rows]
    report.call_queries = list(oracle.query_log)
    report.call_records = [r.to_dict() for r in oracle.records]
    wall = time.perf_counter() - t0
    report.finalize(wall_time=wall)
    if not report.consistent():
        # rows lost to an exception: keep the call log authoritative
        report.outcome.setdefault("note", "partial rows; totals from rows only")
    if report.summary.get("gap") is not None and not math.isfinite(report.summary["gap"]):
        report.summary["gap"] = None
    return report
