"""Dense LU factorisation with partial pivoting.

Everything in the package that needs a linear solve goes through
:func:`lu_factor` / :func:`lu_solve`. Systems here are a handful of buses, so
storage is dense; a sparse backend would slot in behind the same two calls.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._jit import njit

#: Pivot magnitude (relative to the original row scale) below which a matrix
#: is declared singular.
PIVOT_TOL = 1e-12


class SingularMatrix(ArithmeticError):
    """Raised when elimination meets a (numerically) zero pivot."""

    def __init__(self, message: str, column: int | None = None):
        super().__init__(message)
        self.column = column


class DimensionMismatch(ValueError):
    pass


@njit
def _lu_kernel(a, row_scale, tol):
    """In-place Doolittle LU with row swaps; returns (perm, failed_column)."""
    n = a.shape[0]
    perm = np.arange(n)
    for k in range(n):
        p = k
        best = abs(a[k, k])
        for i in range(k + 1, n):
            v = abs(a[i, k])
            if v > best:
                best = v
                p = i
        if best <= tol * row_scale[perm[p]]:
            return perm, k
        if p != k:
            for j in range(n):
                tmp = a[k, j]
                a[k, j] = a[p, j]
                a[p, j] = tmp
            t = perm[k]
            perm[k] = perm[p]
            perm[p] = t
        pivot = a[k, k]
        for i in range(k + 1, n):
            f = a[i, k] / pivot
            a[i, k] = f
            if f != 0:
                for j in range(k + 1, n):
                    a[i, j] -= f * a[k, j]
    return perm, -1


@njit
def _lu_solve_kernel(lu, perm, b):
    n = lu.shape[0]
    x = np.empty(n, dtype=lu.dtype)
    for i in range(n):
        x[i] = b[perm[i]]
    for i in range(n):
        s = x[i]
        for j in range(i):
            s -= lu[i, j] * x[j]
        x[i] = s
    for i in range(n - 1, -1, -1):
        s = x[i]
        for j in range(i + 1, n):
            s -= lu[i, j] * x[j]
        x[i] = s / lu[i, i]
    return x


@dataclass(frozen=True)
class LUFactors:
    """Packed factors: unit-lower L below the diagonal, U on and above it.

    ``perm[i]`` is the original row that ended up in position ``i``, so
    ``A[perm] == L @ U``.
    """

    lu: np.ndarray
    perm: np.ndarray

    @property
    def n(self) -> int:
        return self.lu.shape[0]

    @property
    def L(self) -> np.ndarray:
        return np.tril(self.lu, -1) + np.eye(self.n, dtype=self.lu.dtype)

    @property
    def U(self) -> np.ndarray:
        return np.triu(self.lu)

    @property
    def P(self) -> np.ndarray:
        """Permutation matrix with ``P @ A == L @ U``."""
        p = np.zeros((self.n, self.n))
        p[np.arange(self.n), self.perm] = 1.0
        return p


def _as_dense(m) -> np.ndarray:
    a = np.asarray(m)
    dtype = np.complex128 if np.iscomplexobj(a) else np.float64
    return np.array(a, dtype=dtype, order="C", copy=True)


def lu_factor(m) -> LUFactors:
    """Factor a square real or complex matrix.

    Raises :class:`SingularMatrix` when a pivot falls below ``PIVOT_TOL``
    times the largest magnitude in its original row.
    """
    a = _as_dense(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    n = a.shape[0]
    if n == 0:
        return LUFactors(a, np.zeros(0, dtype=np.int64))
    row_scale = np.abs(a).max(axis=1)
    zero_rows = np.flatnonzero(row_scale == 0.0)
    if zero_rows.size:
        raise SingularMatrix(f"row {zero_rows[0]} is identically zero", int(zero_rows[0]))
    perm, failed = _lu_kernel(a, row_scale, PIVOT_TOL)
    if failed >= 0:
        raise SingularMatrix(f"zero pivot in column {failed}", int(failed))
    return LUFactors(a, perm.astype(np.int64))


def lu_solve(factors: LUFactors, rhs) -> np.ndarray:
    b = np.asarray(rhs)
    if b.ndim != 1 or b.shape[0] != factors.n:
        raise DimensionMismatch(f"rhs of shape {b.shape} does not match {factors.n}x{factors.n} factors")
    dtype = np.result_type(factors.lu.dtype, b.dtype, np.float64)
    lu = factors.lu if factors.lu.dtype == dtype else factors.lu.astype(dtype)
    return _lu_solve_kernel(lu, factors.perm, b.astype(dtype))


def solve(m, rhs) -> np.ndarray:
    """Factor-and-solve convenience wrapper."""
    return lu_solve(lu_factor(m), rhs)
