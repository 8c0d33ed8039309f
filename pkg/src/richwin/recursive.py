"""Recursive inverse of the window information matrix.

A window step adds Q D2 Q^T to A with Q = [phi_in, phi_out] and
D2 = diag(1, -1), so the matrix inversion lemma gives

    Gamma_k = Gamma_{k-1} - U S^-1 U^T,  U = Gamma_{k-1} Q,  S = D2 + Q^T Gamma_{k-1} Q

and the parameters follow either from the previous ones,

    theta_k = (I - U S^-1 Q^T)(theta_{k-1} + Gamma_{k-1} d_k),

or directly as theta_k = Gamma_k b_k.  Without corrections the inverse
drifts; a Newton-Schulz step per slide keeps it in check.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import richardson
from .errors import Diverging, NotConverged, SNearSingular, WindowTooSmall
from .linalg import as_matrix, as_vector, gauss_solve, invert_via_ldl
from .richardson import inversion_error, newton_schulz_correct
from .window import RankTwoUpdate, WindowState

S_DET_RTOL = 1e-12
D2 = np.diag([1.0, -1.0])


@dataclass(frozen=True)
class CorrectionPolicy:
    kind: str = "newton_schulz"  # "none" | "newton_schulz" | "richardson_refresh"
    steps: int = 1  # Newton-Schulz steps per slide
    every: int = 1  # slides between Richardson refreshes

    def __post_init__(self):
        if self.kind not in ("none", "newton_schulz", "richardson_refresh"):
            raise ValueError(f"unknown correction policy {self.kind!r}")
        if self.steps < 1 or self.every < 1:
            raise ValueError("steps and every must be >= 1")

    @classmethod
    def none(cls) -> "CorrectionPolicy":
        return cls("none")

    @classmethod
    def newton_schulz(cls, steps: int = 1) -> "CorrectionPolicy":
        return cls("newton_schulz", steps=steps)

    @classmethod
    def richardson_refresh(cls, every: int) -> "CorrectionPolicy":
        return cls("richardson_refresh", every=every)


@dataclass
class RecursiveState:
    Gamma: np.ndarray
    theta: np.ndarray
    S: np.ndarray | None = None
    step: int = 0
    policy: CorrectionPolicy = field(default_factory=CorrectionPolicy)
    inv_error: float = float("nan")
    init_inv_error: float = float("nan")
    init_flops: int = 0
    reinits: int = 0

    @property
    def m(self) -> int:
        return self.Gamma.shape[0]


def init_flops(m: int, polish_steps: int) -> int:
    """Rough flop count of an initialisation: LDL, inverse, polish, Gauss solve."""
    return int(m ** 3 / 3 + m ** 3 + polish_steps * 4 * m ** 3 + 2 * m ** 3 / 3)


def _symmetrize(G: np.ndarray) -> np.ndarray:
    return 0.5 * (G + G.T)


def init(A_w, b_w, polish_steps: int = 1, policy: CorrectionPolicy | None = None) -> RecursiveState:
    """Gamma from the LDL inverse (optionally Newton-Schulz polished), theta by Gauss.

    A polish that would diverge (badly conditioned A_w) is skipped rather
    than raised; the raw LDL inverse is kept.  SingularPivot propagates.
    """
    A_w = as_matrix(A_w, spd_expected=True)
    b_w = as_vector(b_w, A_w.shape[0])
    Gamma = invert_via_ldl(A_w)
    if polish_steps:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                Gamma = newton_schulz_correct(A_w, Gamma, polish_steps)
        except Diverging:
            pass
    Gamma = _symmetrize(Gamma)
    theta = gauss_solve(A_w, b_w)
    err = inversion_error(A_w, Gamma)
    return RecursiveState(Gamma, theta, policy=policy or CorrectionPolicy(), inv_error=err,
                          init_inv_error=err, init_flops=init_flops(A_w.shape[0], polish_steps))


def _rank_two_terms(Gamma: np.ndarray, u: RankTwoUpdate, det_rtol: float = S_DET_RTOL):
    Q = np.column_stack([u.phi_in, u.phi_out])
    U = Gamma @ Q
    S = D2 + Q.T @ U
    det = S[0, 0] * S[1, 1] - S[0, 1] * S[1, 0]
    scale = det_rtol * float(np.sum(S * S))
    if not abs(det) >= scale:
        raise SNearSingular(det, scale)
    S_inv = np.array([[S[1, 1], -S[0, 1]], [-S[1, 0], S[0, 0]]]) / det
    return Q, U, S, S_inv


def update_gamma(state: RecursiveState, u: RankTwoUpdate, det_rtol: float = S_DET_RTOL) -> RecursiveState:
    if u.phi_in.shape != (state.m,) or u.phi_out.shape != (state.m,):
        raise ValueError("update dimension does not match the state")
    _, U, S, S_inv = _rank_two_terms(state.Gamma, u, det_rtol)
    Gamma = _symmetrize(state.Gamma - U @ S_inv @ U.T)
    return replace(state, Gamma=Gamma, S=S, step=state.step + 1)


def update_theta_form1(state: RecursiveState, u: RankTwoUpdate, det_rtol: float = S_DET_RTOL) -> np.ndarray:
    """theta_k from theta_{k-1}; ``state`` must still hold Gamma_{k-1}."""
    Q, U, _, S_inv = _rank_two_terms(state.Gamma, u, det_rtol)
    v = state.theta + state.Gamma @ u.d
    return v - U @ (S_inv @ (Q.T @ v))


def update_theta_form2(state: RecursiveState, b_k) -> np.ndarray:
    """theta_k = Gamma_k b_k; ``state`` must already hold Gamma_k."""
    return state.Gamma @ np.asarray(b_k, dtype=float)


def reinitialize_on_resize(state: RecursiveState, new_window: WindowState,
                           polish_steps: int = 1) -> RecursiveState:
    """Full re-initialisation for a window of a different size.

    ``init_flops`` on the returned state is the cost that makes frequent
    resizing expensive compared with the O(m^2) per-slide update.
    """
    if new_window.w < new_window.m:
        raise WindowTooSmall(f"window w={new_window.w} is smaller than m={new_window.m}")
    fresh = init(new_window.A, new_window.b, polish_steps, state.policy)
    fresh.reinits = state.reinits + 1
    return fresh


@dataclass
class StepOutcome:
    theta: np.ndarray
    theta_form1: np.ndarray | None
    theta_form2: np.ndarray | None
    inv_error: float
    status: str = "ok"


class RecursiveEstimator:
    """Drives the recursive update along a sliding window.

    ``step`` takes the RankTwoUpdate from a window slide plus the new A_k and
    b_k (needed for corrections and error tracking).  When S is too close to
    singular, or the inversion error passes ``ceiling``, the estimator
    re-initialises from A_k, b_k instead of dividing through.
    """

    def __init__(self, A_w, b_w, policy: CorrectionPolicy | None = None,
                 ceiling: float | None = None, polish_steps: int = 1,
                 refresh_cfg: richardson.RichardsonConfig | None = None):
        self.policy = policy or CorrectionPolicy()
        self.ceiling = ceiling
        self.polish_steps = polish_steps
        self.refresh_cfg = refresh_cfg or richardson.RichardsonConfig()
        self.state = init(A_w, b_w, polish_steps, self.policy)

    def _reinit(self, A_k, b_k, step: int):
        reinits = self.state.reinits
        self.state = init(A_k, b_k, self.polish_steps, self.policy)
        self.state.reinits = reinits + 1
        self.state.step = step

    def step(self, u: RankTwoUpdate, A_k, b_k) -> StepOutcome:
        status = "ok"
        try:
            theta1 = update_theta_form1(self.state, u)
            self.state = update_gamma(self.state, u)
        except SNearSingular:
            self._reinit(A_k, b_k, self.state.step + 1)
            err = inversion_error(A_k, self.state.Gamma)
            self.state.inv_error = err
            return StepOutcome(self.state.theta, None, None, err, "s_near_singular")

        st = self.state
        theta = theta1
        if self.policy.kind == "newton_schulz":
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)
                    st.Gamma = _symmetrize(newton_schulz_correct(A_k, st.Gamma, self.policy.steps))
            except Diverging:
                status = "not_converged"
            theta = update_theta_form2(st, b_k)
        elif self.policy.kind == "richardson_refresh" and st.step % self.policy.every == 0:
            p = richardson.precond_simplest(A_k)
            try:
                theta = richardson.solve(A_k, b_k, p, self.refresh_cfg, theta0=theta1).theta
            except NotConverged as exc:
                theta = exc.best.theta
                status = "not_converged"
        theta2 = update_theta_form2(st, b_k)
        st.theta = theta
        st.inv_error = inversion_error(A_k, st.Gamma)

        if self.ceiling is not None and not st.inv_error <= self.ceiling:
            self._reinit(A_k, b_k, st.step)
            st = self.state
            st.inv_error = inversion_error(A_k, st.Gamma)
            theta = st.theta
        return StepOutcome(theta, theta1, theta2, st.inv_error, status)
