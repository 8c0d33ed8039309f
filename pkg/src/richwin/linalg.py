"""Dense kernels and the two direct baselines.

Matrices and vectors are plain float64 numpy arrays; ``as_matrix`` and
``as_vector`` do the validation a wrapper type would otherwise carry.

The LDL path deliberately does no pivoting and no regularisation: tiny
pivots are divided through as-is so that the benchmark harness can observe
the resulting loss of accuracy.  Only pivots below ``PIVOT_FLOOR`` abort.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotConverged, NotSymmetric, SingularPivot

PIVOT_FLOOR = 1e-300
SYMMETRY_RTOL = 1e-12


def as_matrix(A, spd_expected: bool = False, sym_rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    if spd_expected:
        check_symmetric(A, sym_rtol)
    return A


def as_vector(v, n: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise ValueError(f"vector has length {v.shape[0]}, expected {n}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def check_symmetric(A: np.ndarray, rtol: float = SYMMETRY_RTOL) -> None:
    scale = np.max(np.abs(A))
    gap = np.max(np.abs(A - A.T))
    if gap > rtol * scale:
        raise NotSymmetric(f"asymmetry {gap:.3e} exceeds {rtol:g} x max|a_ij| = {rtol * scale:.3e}")


@dataclass(frozen=True)
class LdlFactors:
    L: np.ndarray  # unit lower triangular
    D: np.ndarray  # diagonal as a vector

    def reconstruct(self) -> np.ndarray:
        return (self.L * self.D) @ self.L.T


def ldl_decompose(A, pivot_floor: float = PIVOT_FLOOR) -> LdlFactors:
    """Unpivoted LDL^T factorisation of a symmetric matrix.

    Raises SingularPivot when |d_j| < pivot_floor.  Negative or tiny pivots
    above the floor are kept.
    """
    A = as_matrix(A, spd_expected=True)
    n = A.shape[0]
    L = np.eye(n)
    D = np.zeros(n)
    for j in range(n):
        Lj = L[j, :j]
        d = A[j, j] - (Lj * Lj) @ D[:j]
        if abs(d) < pivot_floor:
            raise SingularPivot(j, d)
        D[j] = d
        if j + 1 < n:
            L[j + 1:, j] = (A[j + 1:, j] - L[j + 1:, :j] @ (Lj * D[:j])) / d
    return LdlFactors(L, D)


def _forward_unit(L: np.ndarray, B: np.ndarray) -> np.ndarray:
    # L Y = B, unit diagonal, B may hold several right-hand sides as columns
    Y = np.array(B, dtype=float)
    for i in range(1, L.shape[0]):
        Y[i] -= L[i, :i] @ Y[:i]
    return Y


def _backward_unit_transpose(L: np.ndarray, B: np.ndarray) -> np.ndarray:
    # L^T X = B
    X = np.array(B, dtype=float)
    n = L.shape[0]
    for i in range(n - 2, -1, -1):
        X[i] -= L[i + 1:, i] @ X[i + 1:]
    return X


def ldl_solve(f: LdlFactors, b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    y = _forward_unit(f.L, b)
    y = (y.T / f.D).T
    return _backward_unit_transpose(f.L, y)


def invert_via_ldl(A, pivot_floor: float = PIVOT_FLOOR) -> np.ndarray:
    """Inverse from the LDL factors, one triangular solve pair per identity column."""
    f = ldl_decompose(A, pivot_floor)
    n = f.L.shape[0]
    return ldl_solve(f, np.eye(n))


def gauss_solve(A, b, pivot_floor: float = PIVOT_FLOOR) -> np.ndarray:
    """Solve A x = b by Gaussian elimination with partial (row) pivoting.

    ``b`` may also be an n x r matrix of right-hand sides, solved in one sweep.
    """
    A = as_matrix(A)
    n = A.shape[0]
    B = np.asarray(b, dtype=float)
    if B.ndim == 2 and B.shape[0] == n:
        rhs = B
    else:
        rhs = as_vector(B, n)[:, None]
    M = np.hstack([A, rhs])
    for j in range(n):
        p = j + int(np.argmax(np.abs(M[j:, j])))
        if abs(M[p, j]) < pivot_floor:
            raise SingularPivot(j, M[p, j])
        if p != j:
            M[[j, p]] = M[[p, j]]
        if j + 1 < n:
            factors = M[j + 1:, j] / M[j, j]
            M[j + 1:, j:] -= np.outer(factors, M[j, j:])
    X = np.zeros((n, M.shape[1] - n))
    for i in range(n - 1, -1, -1):
        X[i] = (M[i, n:] - M[i, i + 1:n] @ X[i + 1:]) / M[i, i]
    return X if B.ndim == 2 else X[:, 0]


def max_row_sum_norm(A) -> float:
    """||A||_inf, the largest absolute row sum."""
    A = np.asarray(A, dtype=float)
    return float(np.max(np.sum(np.abs(A), axis=1)))


def frobenius_norm(A) -> float:
    A = np.asarray(A, dtype=float)
    return float(np.sqrt(np.sum(A * A)))


def condition_estimate(A, cfg=None, method: str = "shifted", accept_best: bool = False) -> float:
    """Estimate lambda_max / lambda_min of a symmetric positive definite matrix.

    Both ends come from power iterations in :mod:`richwin.eigen`, so this is an
    estimate.  ``method="shifted"`` gets lambda_min from the dominant
    eigenvalue of (beta I - A); it stalls once the small eigenvalues crowd
    together relative to lambda_max, which is the usual situation for short
    harmonic windows.  ``method="inverse"`` runs the power iteration on A^-1
    and stays cheap there.

    Raises NotConverged if either iteration exceeds its cap, unless
    ``accept_best`` is set, in which case the last iterate of a stalled
    iteration is used.  Numerically singular matrices (condition beyond
    1/eps) typically stall.
    """
    from . import eigen

    A = as_matrix(A, spd_expected=True)
    cfg = cfg if cfg is not None else eigen.PowerConfig()

    def run(fn, *args):
        try:
            return fn(*args)
        except NotConverged as exc:
            if accept_best and exc.best is not None:
                return exc.best
            raise

    top = run(eigen.power_iterate, A, cfg)
    if method == "shifted":
        low = run(eigen.min_eigen_shifted, A, top.value, eigen.DEFAULT_SHIFT_FRACTION * top.value, cfg)
    elif method == "inverse":
        low = run(eigen.min_eigen_inverse, A, cfg)
    else:
        raise ValueError(f"unknown method {method!r}")
    if low.value <= 0.0:
        return float("inf")
    return top.value / low.value
