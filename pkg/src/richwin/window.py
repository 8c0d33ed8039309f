"""Harmonic regressor and the sliding-window normal equations.

For a window of the last ``w`` samples ending at index k,

    A_k = sum_j phi_j phi_j^T,     b_k = sum_j phi_j y_j,

and one step of the window changes both by the entering sample minus the
leaving one: a rank-two update of A and a two-term update of b.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .eigen import PowerConfig, power_iterate
from .errors import WindowTooSmall
from .linalg import frobenius_norm


@dataclass(frozen=True)
class HarmonicBasis:
    """Angular frequencies in radians per sample, strictly increasing in (0, pi)."""

    frequencies: tuple

    def __post_init__(self):
        q = tuple(float(f) for f in self.frequencies)
        if not q:
            raise ValueError("need at least one frequency")
        if any(not (0.0 < f < np.pi) for f in q):
            raise ValueError("frequencies must lie in (0, pi) rad/sample")
        if any(b <= a for a, b in zip(q, q[1:])):
            raise ValueError("frequencies must be strictly increasing")
        object.__setattr__(self, "frequencies", q)

    @property
    def m(self) -> int:
        return 2 * len(self.frequencies)

    @classmethod
    def from_orders(cls, orders, samples_per_cycle: int = 256) -> "HarmonicBasis":
        """Harmonics of a fundamental sampled ``samples_per_cycle`` times per period."""
        return cls(tuple(2.0 * np.pi * o / samples_per_cycle for o in orders))

    @classmethod
    def from_hz(cls, freqs_hz, sampling_rate_hz: float) -> "HarmonicBasis":
        return cls(tuple(2.0 * np.pi * f / sampling_rate_hz for f in freqs_hz))


def default_basis() -> HarmonicBasis:
    """60 Hz fundamental plus harmonics 2..5 at 256 samples per cycle (m = 10)."""
    return HarmonicBasis.from_orders(range(1, 6), 256)


def regressor(basis: HarmonicBasis, k) -> np.ndarray:
    """[cos(q_0 k), sin(q_0 k), ..., cos(q_h k), sin(q_h k)]"""
    angles = np.asarray(basis.frequencies) * k
    out = np.empty(basis.m)
    out[0::2] = np.cos(angles)
    out[1::2] = np.sin(angles)
    return out


@dataclass(frozen=True)
class RankTwoUpdate:
    phi_in: np.ndarray
    phi_out: np.ndarray
    d: np.ndarray

    @property
    def R(self) -> np.ndarray:
        return np.outer(self.phi_in, self.phi_in) - np.outer(self.phi_out, self.phi_out)


class WindowState:
    """Running A_k, b_k over the last ``w`` samples.

    The history ring buffer keeps the regressors themselves so ``rebuild``
    can re-sum exactly what the incremental updates saw.
    """

    def __init__(self, basis: HarmonicBasis, w: int):
        if w < basis.m:
            raise WindowTooSmall(f"window w={w} is smaller than regressor dimension m={basis.m}")
        self.basis = basis
        self.w = int(w)
        self.k = -1
        self.history: deque = deque(maxlen=self.w)
        self.A = np.zeros((basis.m, basis.m))
        self.b = np.zeros(basis.m)

    @property
    def m(self) -> int:
        return self.basis.m

    @property
    def warm(self) -> bool:
        return len(self.history) == self.w

    def push(self, y: float, k: int | None = None) -> None:
        """Add a sample during warm-up (no sample leaves the window)."""
        if self.warm:
            raise RuntimeError("window is full; use slide()")
        k = self.k + 1 if k is None else int(k)
        phi = regressor(self.basis, k)
        self.A += np.outer(phi, phi)
        self.b += phi * y
        self.history.append((phi, float(y)))
        self.k = k

    def slide(self, y_new: float, k: int | None = None) -> RankTwoUpdate:
        if not self.warm:
            raise RuntimeError(f"window holds {len(self.history)} of {self.w} samples")
        k = self.k + 1 if k is None else int(k)
        phi_in = regressor(self.basis, k)
        phi_out, y_out = self.history[0]
        y_new = float(y_new)
        # outer(p, p) is exactly symmetric, so A stays exactly symmetric
        self.A += np.outer(phi_in, phi_in) - np.outer(phi_out, phi_out)
        d = phi_in * y_new - phi_out * y_out
        self.b += d
        self.history.append((phi_in, y_new))
        self.k = k
        return RankTwoUpdate(phi_in, phi_out, d)

    def rebuild(self) -> tuple[np.ndarray, np.ndarray]:
        """A and b summed from scratch over the history."""
        A = np.zeros((self.m, self.m))
        b = np.zeros(self.m)
        for phi, y in self.history:
            A += np.outer(phi, phi)
            b += phi * y
        return A, b

    def copy(self) -> "WindowState":
        other = WindowState(self.basis, self.w)
        other.k = self.k
        other.history = deque(self.history, maxlen=self.w)
        other.A = self.A.copy()
        other.b = self.b.copy()
        return other


def warm_start(basis: HarmonicBasis, w: int, samples, ks=None) -> WindowState:
    """Fill a window with its first ``w`` samples by direct summation."""
    samples = np.asarray(samples, dtype=float)
    if w < basis.m:
        raise WindowTooSmall(f"window w={w} is smaller than regressor dimension m={basis.m}")
    if samples.shape != (w,):
        raise ValueError(f"need exactly w={w} samples, got {samples.shape[0]}")
    ks = range(w) if ks is None else ks
    state = WindowState(basis, w)
    for k, y in zip(ks, samples):
        state.push(y, k)
    return state


def slide(state: WindowState, y_new: float, k: int | None = None) -> tuple[WindowState, RankTwoUpdate]:
    update = state.slide(y_new, k)
    return state, update


def rank_two_eigen_check(R, cfg: PowerConfig | None = None) -> tuple[float, float]:
    """Largest and smallest eigenvalue of R = phi phi^T - psi psi^T.

    R has eigenvalues of both signs and, for equal-norm phi and psi, equal
    magnitude, where plain power iteration cannot pick a side.  Shifting by
    s = ||R||_F makes R + sI and sI - R positive semidefinite, and each end
    is read off their dominant eigenvalue.

    For unit (or equal-norm) phi, psi the result is +-||R||_F / sqrt(2).
    That fails when phi is parallel to psi with a different norm: R is then
    rank one.
    """
    R = np.asarray(R, dtype=float)
    s = frobenius_norm(R)
    if s == 0.0:
        return 0.0, 0.0
    n = R.shape[0]
    cfg = cfg or PowerConfig(tol=1e-12 * s, max_iters=1000 * n)
    eye = np.eye(n)
    top = power_iterate(R + s * eye, cfg)
    bottom = power_iterate(s * eye - R, cfg)
    return top.value - s, s - bottom.value
