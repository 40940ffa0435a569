"""
Scaling sweeps over instance size with log-log exponent fits.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..generators import generate_centered_instance
from .pipeline import solve_pipeline
from .report import write_csv

__all__ = ["FitResult", "fit_loglog", "bootstrap_fit", "run_one", "bench_scaling",
           "ScalingResult"]


@dataclass(frozen=True)
class FitResult:
    exponent: float
    ci_low: float
    ci_high: float
    intercept: float

    def to_dict(self):
        return dict(self.__dict__)


def fit_loglog(x, y):
    """Least-squares slope and intercept of ``log y`` against ``log x``.

    Returns ``None`` when fewer than two distinct ``x`` values are present.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(np.unique(x)) < 2:
        return None
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope), float(intercept)


def bootstrap_fit(sizes, values, n_boot=1000, seed=0, level=0.95):
    """Exponent of ``median(values | n)`` against ``n`` with a bootstrap interval.

    ``values[i]`` holds the per-seed measurements at ``sizes[i]``; each
    replicate resamples seeds within every size and refits the medians.
    """
    sizes = list(sizes)
    if len(set(sizes)) < 2:
        return None
    groups = [np.asarray(v, dtype=float) for v in values]
    fit = fit_loglog(sizes, [np.median(g) for g in groups])
    rng = np.random.default_rng(seed)
    slopes = np.empty(n_boot)
    for b in range(n_boot):
        meds = [np.median(rng.choice(g, size=len(g), replace=True)) for g in groups]
        slopes[b] = fit_loglog(sizes, meds)[0]
    alpha = (1 - level) / 2
    lo, hi = np.quantile(slopes, [alpha, 1 - alpha])
    return FitResult(fit[0], float(lo), float(hi), fit[1])


def run_one(n, seed, algo="ae", backend="exact", eps=1e-8, m=None, zeta=1e-8,
            zeta_tilde=1e-2, oracle_seed=0):
    """Generate the centered instance ``(n, m = n/2, seed)`` and solve it."""
    m = m or max(1, n // 2)
    problem, start = generate_centered_instance(n, m, seed=seed)
    return solve_pipeline(problem, algo=algo, backend=backend, eps=eps, zeta=zeta,
                          zeta_tilde=zeta_tilde, seed=oracle_seed, start=start,
                          x0=start.mu / start.s, instance_seed=seed)


def _run_args(args):
    return run_one(*args[:2], **args[2])


@dataclass
class ScalingResult:
    reports: list
    rows: list
    fits: dict

    def csv(self, path=None):
        return write_csv(self.rows, path)


def bench_scaling(sizes, seeds=5, algo="ae", backend="exact", eps=1e-8, jobs=1,
                  n_boot=1000, **kwargs):
    """Solve every ``(n, seed)`` pair and fit log-log exponents against ``n``.

    Fits (``iterations``, ``queries``, ``classical_ops_per_iter``) use the
    per-size medians over converged runs; failed runs stay in ``rows`` with
    their outcome and are excluded from the fits.

    Returns
    -------
    ScalingResult
        ``fits[key]`` is a ``FitResult`` or ``None`` for a single size.
    """
    tasks = [(n, s, dict(algo=algo, backend=backend, eps=eps, **kwargs))
             for n in sizes for s in range(seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_run_args, tasks))
    else:
        reports = [_run_args(t) for t in tasks]
    rows = []
    for rep in reports:
        row = rep.csv_row()
        row["status"] = rep.outcome.get("status")
        rows.append(row)
    rows.sort(key=lambda r: (r["n"], r["seed"]))

    fits = {}
    ok = [r for r in rows if r["status"] == "converged"]
    by_n = {}
    for r in ok:
        by_n.setdefault(r["n"], []).append(r)
    ns = sorted(by_n)
    metrics = {
        "iterations": lambda r: r["iters"],
        "queries": lambda r: max(r["queries"], 1),
        "classical_ops_per_iter": lambda r: r["classical_ops"] / max(r["iters"], 1),
    }
    for key, get in metrics.items():
        fits[key] = bootstrap_fit(ns, [[get(r) for r in by_n[n]] for n in ns], n_boot=n_boot)
    return ScalingResult(reports, rows, fits)
