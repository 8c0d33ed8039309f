"""Scalar-preconditioned Richardson iteration and Newton-Schulz refinement.

    theta_i = theta_{i-1} - alpha (A theta_{i-1} - b)

runs until ||A theta_i - b||_2 <= delta.  The only division anywhere in the
solve is inside the choice of alpha (by ||A||_inf or by an eigenvalue sum),
so no matrix-dependent small number is ever divided through.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import BadSpectrum, Diverging, NotConverged
from .linalg import as_matrix, as_vector, frobenius_norm, max_row_sum_norm

DEFAULT_SAFETY = 0.99
DEFAULT_DELTA_REL = 1e-6
DEFAULT_MAX_ITERS = 100_000
# residual growth past this factor means alpha is outside the stable range
BLOWUP_FACTOR = 1e8

SIMPLEST = "simplest"
OPTIMAL = "optimal"
SUBOPTIMAL = "suboptimal"


@dataclass(frozen=True)
class Preconditioner:
    alpha: float
    kind: str
    inputs: dict = field(default_factory=dict)
    safety: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    def spectral_radius(self, eigenvalues) -> float:
        """rho(I - alpha A) for a symmetric A with the given eigenvalues."""
        ev = np.asarray(eigenvalues, dtype=float)
        return float(np.max(np.abs(1.0 - self.alpha * ev)))


def precond_simplest(A, safety: float = DEFAULT_SAFETY) -> Preconditioner:
    """alpha = safety * 2 / ||A||_inf.

    ||A||_inf bounds every Gershgorin disc and hence lambda_max, so with
    safety < 1 the iteration contracts for any SPD A.  safety = 1 gives
    rho = 1 exactly when lambda_max = ||A||_inf (e.g. A = cI).
    """
    A = as_matrix(A, spd_expected=True)
    norm_inf = max_row_sum_norm(A)
    if norm_inf == 0.0:
        raise ValueError("zero matrix has no preconditioner")
    return Preconditioner(safety * 2.0 / norm_inf, SIMPLEST, {"norm_inf": norm_inf}, safety)


def precond_optimal(lam_min: float, lam_max: float) -> Preconditioner:
    if not (0.0 < lam_min <= lam_max):
        raise BadSpectrum(f"need 0 < lam_min <= lam_max, got {lam_min}, {lam_max}")
    return Preconditioner(2.0 / (lam_min + lam_max), OPTIMAL,
                          {"lam_min": lam_min, "lam_max": lam_max})


def precond_suboptimal(lam_max_hat: float, eps: float) -> Preconditioner:
    """Optimal gain with the unknown lambda_min replaced by a small eps."""
    if not (lam_max_hat > 0 and eps > 0):
        raise BadSpectrum(f"need lam_max_hat > 0 and eps > 0, got {lam_max_hat}, {eps}")
    return Preconditioner(2.0 / (eps + lam_max_hat), SUBOPTIMAL,
                          {"lam_max": lam_max_hat, "eps": eps})


def optimal_rho(lam_min: float, lam_max: float) -> float:
    return (lam_max - lam_min) / (lam_max + lam_min)


def suboptimal_top_rho(lam_max: float, eps: float) -> float:
    """Contraction at the top of the spectrum, |1 - 2 lam_max / (lam_max + eps)|."""
    return abs(1.0 - 2.0 * lam_max / (lam_max + eps))


@dataclass(frozen=True)
class RichardsonConfig:
    delta: float | None = None  # absolute bound; None means delta_rel * ||b||_2
    delta_rel: float = DEFAULT_DELTA_REL
    max_iters: int = DEFAULT_MAX_ITERS
    record_trace: bool = False

    def __post_init__(self):
        if self.delta is not None and not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.delta_rel > 0:
            raise ValueError("delta_rel must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")

    def bound(self, b: np.ndarray) -> float:
        if self.delta is not None:
            return self.delta
        nb = float(np.linalg.norm(b))
        # b = 0 has the exact answer theta = 0; any positive bound works
        return self.delta_rel * nb if nb > 0 else self.delta_rel


@dataclass
class RichardsonResult:
    theta: np.ndarray
    iterations: int
    final_residual: float
    delta: float
    trace: list | None = None


def solve(A, b, p: Preconditioner, cfg: RichardsonConfig | None = None, theta0=None) -> RichardsonResult:
    """Iterate until the residual two-norm is at most delta.

    The residual is carried by its own recurrence r <- r - alpha A r and
    recomputed from scratch before exit; if the two disagree the loop keeps
    going on the fresh residual, so the returned ``final_residual`` is always
    the recomputed one.

    Raises NotConverged (with the best RichardsonResult as ``best``) at the
    iteration cap or when the residual blows up.
    """
    A = as_matrix(A)
    n = A.shape[0]
    b = as_vector(b, n)
    cfg = cfg or RichardsonConfig()
    theta = np.zeros(n) if theta0 is None else as_vector(theta0, n).copy()
    alpha = p.alpha
    delta = cfg.bound(b)
    delta2 = delta * delta
    trace = [] if cfg.record_trace else None

    r = A @ theta - b
    rr = float(r @ r)
    blowup2 = max(rr, delta2) * BLOWUP_FACTOR ** 2
    if trace is not None:
        trace.append(np.sqrt(rr))
    i = 0
    while True:
        # at least one update, so an exact warm start reports one iteration
        if i > 0 and rr <= delta2:
            r = A @ theta - b
            rr = float(r @ r)
            if rr <= delta2:
                break
        if i >= cfg.max_iters or not rr <= blowup2:
            res = float(np.linalg.norm(A @ theta - b))
            best = RichardsonResult(theta, i, res, delta, trace)
            why = "diverged" if i < cfg.max_iters else f"hit the cap of {cfg.max_iters} iterations"
            raise NotConverged(f"Richardson {why}; residual {res:.3e} > delta {delta:.3e}", best=best)
        theta -= alpha * r
        r -= alpha * (A @ r)
        rr = float(r @ r)
        i += 1
        if trace is not None:
            trace.append(np.sqrt(rr))
    return RichardsonResult(theta, i, float(np.sqrt(rr)), delta, trace)


def inversion_error(A, Gamma) -> float:
    """||I - Gamma A||_F"""
    n = A.shape[0]
    return frobenius_norm(np.eye(n) - Gamma @ A)


def newton_schulz_correct(A, Gamma, steps: int = 1, return_errors: bool = False):
    """Refine an approximate inverse with Gamma <- Gamma (2I - A Gamma).

    Each step squares the inversion error F = I - Gamma A.  A warning is
    issued when ||F||_F >= 1 on entry (contraction not guaranteed) and
    Diverging is raised if ||F||_F grows from one step to the next by more
    than the rounding floor of forming I - Gamma A.
    """
    A = as_matrix(A)
    G = np.array(Gamma, dtype=float)
    n = A.shape[0]
    eye = np.eye(n)
    err = inversion_error(A, G)
    errors = [err]
    if err >= 1.0:
        warnings.warn(f"||I - Gamma A||_F = {err:.3g} >= 1; Newton-Schulz may not contract",
                      RuntimeWarning, stacklevel=2)
    for _ in range(steps):
        G = G @ (2.0 * eye - A @ G)
        new_err = inversion_error(A, G)
        errors.append(new_err)
        floor = 64 * n * np.finfo(float).eps * frobenius_norm(A) * frobenius_norm(G)
        if new_err > max(err, floor):
            raise Diverging(f"inversion error grew from {err:.3e} to {new_err:.3e}")
        err = new_err
    if return_errors:
        return G, errors
    return G
