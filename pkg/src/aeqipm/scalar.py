"""
Real-scalar backends.

Every solver in the package does its arithmetic through one of two backends:
``F64`` (hardware doubles, numpy/LAPACK) or ``Extended`` (mpmath numbers held
in numpy object arrays).  Elementwise arithmetic and ``@`` work on both array
kinds, so algorithm code only reaches into the backend for the handful of
operations numpy cannot do on object arrays (solves, square roots, norms).
"""
import math

import mpmath
import numpy as np
import scipy.linalg

from .errors import DegenerateSystemError

__all__ = ["F64Backend", "ExtendedBackend", "F64", "get_backend"]


class F64Backend:
    name = "f64"
    unit_roundoff = np.finfo(float).eps / 2
    # tightest relative residual a refinement loop can certify in doubles
    solve_floor = 1e-13

    def asarray(self, x):
        return np.asarray(x, dtype=float)

    def scalar(self, x):
        return float(x)

    def zeros(self, n):
        return np.zeros(n)

    def ones(self, n):
        return np.ones(n)

    def to_float(self, x):
        return np.asarray(x, dtype=float)

    def pow2(self, k):
        return 2.0 ** float(k)

    def sqrt(self, x):
        return np.sqrt(x)

    def log(self, x):
        return math.log(x)

    def norm(self, v):
        return float(np.linalg.norm(v))

    def solve(self, M, r):
        try:
            return scipy.linalg.solve(M, r, check_finite=False)
        except (scipy.linalg.LinAlgError, ValueError) as exc:
            raise DegenerateSystemError(f"dense solve failed: {exc}") from exc

    def lstsq(self, M, r):
        return scipy.linalg.lstsq(M, r, check_finite=False)[0]

    def __repr__(self):
        return "F64Backend()"


class ExtendedBackend:
    """mpmath backend with ``dps`` significant decimal digits.

    Each instance owns a private mpmath context, so several precisions can
    coexist without touching ``mpmath.mp``.
    """

    name = "extended"

    def __init__(self, dps=100):
        if dps < 30:
            raise ValueError("extended backend needs at least 30 digits")
        self.dps = dps
        self.ctx = mpmath.MPContext()
        self.ctx.dps = dps
        self.unit_roundoff = self.ctx.mpf(2) ** (-self.ctx.prec)
        self.solve_floor = self.ctx.mpf(10) ** (-(dps - 10))

    def _mpf(self, v):
        if isinstance(v, mpmath.mpf) and v.context is self.ctx:
            return v
        if isinstance(v, (np.integer, int)):
            return self.ctx.mpf(int(v))
        return self.ctx.mpf(v)

    def asarray(self, x):
        arr = np.asarray(x)
        out = np.empty(arr.shape, dtype=object)
        flat_in = arr.reshape(-1)
        flat_out = out.reshape(-1)
        for i, v in enumerate(flat_in):
            flat_out[i] = self._mpf(v)
        return out

    def scalar(self, x):
        return self._mpf(x)

    def zeros(self, n):
        return self.asarray(np.zeros(n, dtype=int))

    def ones(self, n):
        return self.asarray(np.ones(n, dtype=int))

    def to_float(self, x):
        return np.asarray(x, dtype=float)

    def pow2(self, k):
        return self.ctx.mpf(2) ** self._mpf(k)

    def sqrt(self, x):
        if np.ndim(x) == 0:
            return self.ctx.sqrt(x)
        return np.array([self.ctx.sqrt(v) for v in np.asarray(x).reshape(-1)],
                        dtype=object).reshape(np.shape(x))

    def log(self, x):
        return self.ctx.log(x)

    def norm(self, v):
        v = np.asarray(v).reshape(-1)
        return self.ctx.sqrt(self.ctx.fsum(a * a for a in v))

    def solve(self, M, r):
        try:
            sol = self.ctx.lu_solve(self.ctx.matrix(M.tolist()),
                                    self.ctx.matrix(list(r)))
        except ZeroDivisionError as exc:
            raise DegenerateSystemError("extended-precision solve hit a zero pivot") from exc
        return np.array([sol[i] for i in range(sol.rows)], dtype=object)

    def lstsq(self, M, r):
        M = np.asarray(M)
        if M.shape[0] == M.shape[1]:
            return self.solve(M, r)
        # normal equations are adequate at 100 digits for the small systems we see
        if M.shape[0] > M.shape[1]:
            return self.solve(M.T @ M, M.T @ r)
        return M.T @ self.solve(M @ M.T, r)

    def __repr__(self):
        return f"ExtendedBackend(dps={self.dps})"


F64 = F64Backend()


def get_backend(precision="f64", dps=100):
    """Return a backend by CLI name: ``"f64"`` or ``"extended"``."""
    if precision in ("f64", None):
        return F64
    if precision == "extended":
        return ExtendedBackend(dps)
    raise ValueError(f"unknown precision backend {precision!r}")
