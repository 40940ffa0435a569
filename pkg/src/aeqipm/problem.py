"""
Standard-form linear optimization instances and iterate containers.

The primal problem is ``min c'x  s.t.  Ax = b, x >= 0`` and its dual is
``max b'y  s.t.  A'y + s = c, s >= 0``.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import BinaryLengthUndefined, RankDeficientError

__all__ = [
    "LOProblem",
    "InstanceMetadata",
    "DualIterate",
    "PrimalDualIterate",
    "Partition",
    "binary_length",
    "synthetic_binary_length",
    "complementarity_mu",
    "check_full_row_rank",
]

RANK_RTOL = 1e-10


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def check_full_row_rank(A, rtol=RANK_RTOL):
    """Raise ``RankDeficientError`` unless ``sigma_min(A) > rtol * sigma_max(A)``."""
    A = np.asarray(A, dtype=float)
    m = A.shape[0]
    if m == 0:
        return
    sv = np.linalg.svd(A, compute_uv=False)
    if len(sv) < m or sv[-1] <= rtol * sv[0]:
        smin = sv[-1] if len(sv) == m else 0.0
        raise RankDeficientError(
            f"A is rank deficient: sigma_min={smin:.3e}, sigma_max={sv[0]:.3e}")


@dataclass(frozen=True)
class LOProblem:
    """Standard-form LO instance ``(A, b, c)``.

    Parameters
    ----------
    A : (m, n) array_like
        Constraint matrix with full row rank and ``m <= n``.
    b : (m,) array_like
    c : (n,) array_like
    is_integer_data : bool, optional
        Whether every entry of ``A, b, c`` is an integer.  Detected from the
        data when omitted.
    name : str
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    is_integer_data: bool = None
    name: str = "lo"
    check_rank: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        A = _frozen(np.atleast_2d(self.A))
        b = _frozen(np.atleast_1d(self.b))
        c = _frozen(np.atleast_1d(self.c))
        m, n = A.shape
        if b.shape != (m,) or c.shape != (n,):
            raise ValueError(f"shape mismatch: A {A.shape}, b {b.shape}, c {c.shape}")
        if m > n:
            raise ValueError(f"need m <= n, got m={m}, n={n}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("problem data must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        if self.is_integer_data is None:
            integral = all(np.all(v == np.round(v)) for v in (A, b, c))
            object.__setattr__(self, "is_integer_data", bool(integral))
        if self.check_rank:
            check_full_row_rank(A)

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]

    def metadata(self, t=4, L=None):
        """Instance metadata; ``L`` must be given for real-valued data."""
        if L is None:
            L = binary_length(self)
        return InstanceMetadata(L=L, t=t, frob_norm_A=float(np.linalg.norm(self.A)))

    def with_cost(self, c, name=None):
        return LOProblem(self.A, self.b, c, name=name or self.name, check_rank=False)


@dataclass(frozen=True)
class InstanceMetadata:
    L: float
    t: int = 4
    frob_norm_A: float = 0.0

    def __post_init__(self):
        if self.L < 0:
            raise ValueError("L must be nonnegative")
        if not 1 <= self.t <= 10:
            raise ValueError("precision multiplier t must lie in [1, 10]")


@dataclass(frozen=True)
class DualIterate:
    y: np.ndarray
    s: np.ndarray
    mu: float

    def __post_init__(self):
        if not np.all(np.asarray(self.s) > 0):
            raise ValueError("dual slack must be strictly positive")
        if not self.mu > 0:
            raise ValueError("mu must be positive")


@dataclass(frozen=True)
class PrimalDualIterate:
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray

    @property
    def interior(self):
        return bool(np.all(np.asarray(self.x) > 0) and np.all(np.asarray(self.s) > 0))


@dataclass(frozen=True)
class Partition:
    B: frozenset
    N: frozenset

    def __post_init__(self):
        object.__setattr__(self, "B", frozenset(int(i) for i in self.B))
        object.__setattr__(self, "N", frozenset(int(i) for i in self.N))
        if self.B & self.N:
            raise ValueError("B and N must be disjoint")

    def validate(self, n):
        if any(i < 0 or i >= n for i in self.B | self.N):
            raise ValueError("partition index out of range")


def _bits(v):
    # ceil(log2(|v| + 1)) for an integer v
    return abs(int(v)).bit_length()


def binary_length(problem):
    """Binary input length ``L`` of an integer-data instance.

    ``L = mn + m + n + sum ceil(log2(|a_ij|+1)) + sum ceil(log2(|c_j|+1))
    + sum ceil(log2(|b_i|+1))``.
    """
    if not problem.is_integer_data:
        raise BinaryLengthUndefined("L undefined for real data; pass a synthetic L")
    m, n = problem.m, problem.n
    L = m * n + m + n
    L += sum(_bits(a) for a in problem.A.ravel())
    L += sum(_bits(v) for v in problem.c)
    L += sum(_bits(v) for v in problem.b)
    return L


def synthetic_binary_length(eps):
    """Synthetic L for real data, chosen so that ``2**(-2L) <= eps``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    return math.ceil(math.log2(1.0 / eps)) / 2


def complementarity_mu(x, s):
    """Complementarity measure ``x's / n``."""
    x = np.asarray(x)
    s = np.asarray(s)
    if x.shape != s.shape or x.ndim != 1 or x.size == 0:
        raise ValueError(f"length mismatch: {x.shape} vs {s.shape}")
    return (x @ s) / x.size
