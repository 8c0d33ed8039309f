"""Power iteration for the extreme eigenvalues of symmetric matrices.

The dominant eigenpair is found with the normalised iteration
x_k = A x_{k-1} / ||A x_{k-1}|| and the stopping test
``|| x_k ||A x_k|| - A x_k || < tol``.  The smallest eigenvalue comes either
from the same iteration on the shifted matrix (beta I - A) with
beta = lambda_max_hat + eps, or from the iteration on A^-1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NotConverged, ShiftTooSmall, ZeroVector
from .linalg import as_matrix, gauss_solve

DEFAULT_TOL = 0.01
DEFAULT_SHIFT_FRACTION = 1e-3
ITERS_PER_DIM = 100


@dataclass(frozen=True)
class PowerConfig:
    tol: float = DEFAULT_TOL
    max_iters: int | None = None  # None means ITERS_PER_DIM * n
    seed: int = 0
    # "norm" reads the eigenvalue as ||A x||; "rayleigh" as x.A x
    readout: str = "norm"
    # compare the residual against tol * ||A x|| instead of tol
    relative: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.readout not in ("norm", "rayleigh"):
            raise ValueError(f"unknown readout {self.readout!r}")

    def cap(self, n: int) -> int:
        return self.max_iters if self.max_iters is not None else ITERS_PER_DIM * n


@dataclass
class EigenEstimate:
    value: float
    vector: np.ndarray
    iterations: int
    residual: float
    history: list = field(default_factory=list, repr=False)


def start_vector(n: int, seed: int) -> np.ndarray:
    x = np.random.default_rng(seed).standard_normal(n)
    return x / np.linalg.norm(x)


def _iterate(apply: Callable[[np.ndarray], np.ndarray], n: int, cfg: PowerConfig) -> EigenEstimate:
    x = start_vector(n, cfg.seed)
    y = apply(x)
    ny = float(np.linalg.norm(y))
    if ny == 0.0:
        raise ZeroVector("operator annihilates the start vector")
    history = []
    est = None
    for it in range(1, cfg.cap(n) + 1):
        x = y / ny
        y = apply(x)
        ny = float(np.linalg.norm(y))
        if ny == 0.0:
            raise ZeroVector(f"operator annihilated the iterate at step {it}")
        residual = float(np.linalg.norm(x * ny - y))
        value = ny if cfg.readout == "norm" else float(x @ y)
        history.append(value)
        est = EigenEstimate(value, x, it, residual, history)
        if residual < (cfg.tol * ny if cfg.relative else cfg.tol):
            return est
    raise NotConverged(f"power iteration did not reach tol={cfg.tol:g} in {cfg.cap(n)} steps", best=est)


def power_iterate(A, cfg: PowerConfig | None = None) -> EigenEstimate:
    """Dominant eigenpair of a symmetric matrix.

    ``iterations`` counts normalisations, so an exact eigenvector as start
    vector terminates after one step.
    """
    A = as_matrix(A, spd_expected=True)
    cfg = cfg or PowerConfig()
    return _iterate(lambda v: A @ v, A.shape[0], cfg)


def min_eigen_shifted(A, lam_max_hat: float, eps: float | None = None,
                      cfg: PowerConfig | None = None) -> EigenEstimate:
    """Smallest eigenvalue of SPD ``A`` from the dominant one of (beta I - A).

    beta = lam_max_hat + eps.  If lam_max_hat underestimates lambda_max the
    shifted matrix is indefinite and the iteration can lock onto the wrong
    end; that case raises ShiftTooSmall.
    """
    A = as_matrix(A, spd_expected=True)
    cfg = cfg or PowerConfig()
    if not lam_max_hat > 0:
        raise ValueError("lam_max_hat must be positive")
    if eps is None:
        eps = DEFAULT_SHIFT_FRACTION * lam_max_hat
    if not eps > 0:
        raise ValueError("eps must be positive")
    beta = lam_max_hat + eps
    B = beta * np.eye(A.shape[0]) - A
    if np.min(np.diag(B)) < 0.0:
        raise ShiftTooSmall(f"beta={beta:.6g} is below a diagonal entry of A")
    try:
        est = _iterate(lambda v: B @ v, A.shape[0], cfg)
    except NotConverged as exc:
        best = exc.best
        if best is not None:
            best = EigenEstimate(beta - best.value, best.vector, best.iterations, best.residual,
                                 [beta - h for h in best.history])
        raise NotConverged(str(exc), best=best) from None
    if float(est.vector @ B @ est.vector) < 0.0:
        raise ShiftTooSmall(f"beta={beta:.6g} leaves a negative eigenvalue in beta*I - A")
    return EigenEstimate(beta - est.value, est.vector, est.iterations, est.residual,
                         [beta - h for h in est.history])


def min_eigen_inverse(A, cfg: PowerConfig | None = None) -> EigenEstimate:
    """Smallest eigenvalue of SPD ``A`` by power iteration on A^-1.

    A^-1 is formed once by Gaussian elimination against the identity
    columns; the iteration itself is matrix-vector products.  The
    tolerance is applied relative to the current ||A^-1 x||, since the
    absolute scale of A^-1 is unknown up front.
    """
    A = as_matrix(A, spd_expected=True)
    cfg = cfg or PowerConfig()
    rel = PowerConfig(tol=cfg.tol, max_iters=cfg.max_iters, seed=cfg.seed,
                      readout=cfg.readout, relative=True)
    inv = gauss_solve(A, np.eye(A.shape[0]))
    try:
        est = _iterate(lambda v: inv @ v, A.shape[0], rel)
    except NotConverged as exc:
        best = exc.best
        if best is not None:
            best = EigenEstimate(1.0 / best.value, best.vector, best.iterations, best.residual,
                                 [1.0 / h for h in best.history])
        raise NotConverged(str(exc), best=best) from None
    return EigenEstimate(1.0 / est.value, est.vector, est.iterations, est.residual,
                         [1.0 / h for h in est.history])
