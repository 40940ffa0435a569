"""Seeded instance generators.  All are deterministic given ``seed``."""
import numpy as np
from scipy.optimize import linprog

from .errors import QIPMError, RankDeficientError
from .problem import DualIterate, LOProblem, check_full_row_rank

__all__ = [
    "generate_centered_instance",
    "generate_degenerate_instance",
    "generate_integer_instance",
]

ENTRY_RANGE = 10
MAX_REDRAWS = 20


def _draw_full_rank(rng, m, n):
    for _ in range(MAX_REDRAWS):
        A = rng.integers(-ENTRY_RANGE, ENTRY_RANGE + 1, size=(m, n)).astype(float)
        try:
            check_full_row_rank(A)
        except RankDeficientError:
            continue
        return A
    raise RankDeficientError(f"no full-rank {m}x{n} draw in {MAX_REDRAWS} attempts")


def generate_centered_instance(n, m, mu0=1.0, seed=0):
    """Random dense instance together with its exact ``mu0``-center.

    ``A`` has integer entries in ``[-10, 10]``; ``y0`` and ``s0 > 0`` are
    drawn at random, then ``c = A'y0 + s0`` and ``b = A x0`` with
    ``x0 = mu0 / s0``, so the start has proximity zero.

    Returns
    -------
    problem : LOProblem
    start : DualIterate
    """
    if not 1 <= m < n:
        raise ValueError("need 1 <= m < n")
    if not mu0 > 0:
        raise ValueError("mu0 must be positive")
    rng = np.random.default_rng(seed)
    A = _draw_full_rank(rng, m, n)
    y0 = rng.uniform(-1.0, 1.0, size=m)
    s0 = rng.uniform(0.5, 2.0, size=n)
    x0 = mu0 / s0
    c = A.T @ y0 + s0
    b = A @ x0
    problem = LOProblem(A, b, c, name=f"centered-n{n}-m{m}-s{seed}", check_rank=False)
    return problem, DualIterate(y0, s0, mu0)


def generate_degenerate_instance(n, m, seed=0):
    """Instance whose optimal primal face is a segment.

    A random instance with ``n - 1`` columns and strictly feasible primal and
    dual sides (``c > 0`` so ``y = 0`` is a dual interior point) is solved;
    a column in the optimal support is then duplicated together with its
    cost.  Any split of that variable's value between the twins is optimal.
    """
    if n < m + 2:
        raise ValueError("need n >= m + 2")
    rng = np.random.default_rng(seed)
    for _ in range(MAX_REDRAWS):
        A0 = _draw_full_rank(rng, m, n - 1)
        x0 = rng.integers(1, 6, size=n - 1).astype(float)
        c0 = rng.integers(1, 11, size=n - 1).astype(float)
        b = A0 @ x0
        res = linprog(c0, A_eq=A0, b_eq=b, bounds=[(0, None)] * (n - 1), method="highs")
        if res.status != 0:
            raise QIPMError(f"degenerate generator: base LP not solved ({res.message})")
        # the twin must carry weight at the optimum, otherwise the face stays a point
        if np.max(res.x) > 1e-9:
            break
    else:
        raise QIPMError(f"degenerate generator: no optimum with positive support in {MAX_REDRAWS} draws")
    j = int(np.argmax(res.x))
    A = np.hstack([A0, A0[:, [j]]])
    c = np.append(c0, c0[j])
    return LOProblem(A, b, c, is_integer_data=True, name=f"degenerate-n{n}-m{m}-s{seed}")


def generate_integer_instance(n, m, seed=0):
    """Integer-data instance with a known strictly feasible primal-dual pair.

    Returns
    -------
    problem : LOProblem
    y0 : ndarray
        Integer dual point with ``c - A'y0 >= 1``.
    """
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    rng = np.random.default_rng(seed)
    A = _draw_full_rank(rng, m, n)
    x0 = rng.integers(1, 6, size=n).astype(float)
    y0 = rng.integers(-3, 4, size=m).astype(float)
    s0 = rng.integers(1, 6, size=n).astype(float)
    problem = LOProblem(A, A @ x0, A.T @ y0 + s0, is_integer_data=True,
                        name=f"integer-n{n}-m{m}-s{seed}", check_rank=False)
    return problem, y0
