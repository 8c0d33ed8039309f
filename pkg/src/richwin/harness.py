"""Synthetic waveforms, per-step solver comparison, and the eigen-iteration sweep.

The comparison slides a window over a sampled waveform and, at every step,
solves A_k theta = b_k with each configured solver, recording the residual
||A_k theta - b_k||_2 and (for synthetic signals) the parameter error.
"""
from __future__ import annotations

import csv
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import eigen, richardson
from .errors import (BadSpectrum, Diverging, NotConverged, ParseError, RichwinError,
                     ShiftTooSmall, SingularPivot, SNearSingular, ZeroVector)
from .linalg import condition_estimate, gauss_solve, invert_via_ldl
from .recursive import CorrectionPolicy, RecursiveEstimator
from .window import HarmonicBasis, regressor, warm_start

SOLVERS = (
    "gauss",
    "ldl",
    "recursive",
    "recursive-ns",
    "richardson-optimal",
    "richardson-simplest",
    "richardson-suboptimal",
)
DEFAULT_SOLVERS = ("gauss", "ldl", "recursive", "recursive-ns", "richardson-simplest")
STATUSES = ("ok", "not_converged", "singular_pivot", "s_near_singular")
REPORT_HEADER = ("k", "solver", "residual", "param_error", "cond_est", "iterations", "elapsed_us", "status")

# mains-like harmonic content: (order, amplitude, phase)
DEFAULT_HARMONICS = (
    (1, 169.7, 0.0),
    (2, 0.6, 0.4),
    (3, 6.0, 1.1),
    (4, 0.4, -0.7),
    (5, 3.5, 2.3),
)


@dataclass(frozen=True)
class SignalSpec:
    fundamental_hz: float = 60.0
    samples_per_cycle: int = 256
    harmonics: tuple = DEFAULT_HARMONICS
    noise_std: float = 0.1
    cycles: float = 2.0
    seed: int = 0

    def __post_init__(self):
        harmonics = tuple((int(o), float(a), float(p)) for o, a, p in self.harmonics)
        object.__setattr__(self, "harmonics", harmonics)
        if not harmonics:
            raise ValueError("need at least one harmonic")
        top = max(o for o, _, _ in harmonics)
        if self.samples_per_cycle < 2 * (top + 1):
            raise ValueError(f"samples_per_cycle={self.samples_per_cycle} too low for harmonic order {top}")
        if not all(np.isfinite(a) for _, a, _ in harmonics):
            raise ValueError("amplitudes must be finite")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")

    @property
    def orders(self) -> list:
        return sorted(o for o, _, _ in self.harmonics)

    @property
    def n_samples(self) -> int:
        return int(round(self.cycles * self.samples_per_cycle))

    @property
    def sampling_rate_hz(self) -> float:
        return self.fundamental_hz * self.samples_per_cycle

    def basis(self) -> HarmonicBasis:
        return HarmonicBasis.from_orders(self.orders, self.samples_per_cycle)

    def theta_star(self, basis_orders=None) -> np.ndarray:
        """True parameters in the [cos, sin] regressor layout.

        a cos(q k + p) = a cos(p) cos(q k) - a sin(p) sin(q k)
        """
        orders = self.orders if basis_orders is None else list(basis_orders)
        theta = np.zeros(2 * len(orders))
        for o, a, p in self.harmonics:
            if o in orders:
                i = orders.index(o)
                theta[2 * i] = a * np.cos(p)
                theta[2 * i + 1] = -a * np.sin(p)
        return theta


def generate(spec: SignalSpec) -> np.ndarray:
    """y_k = sum of the configured harmonics plus Gaussian noise, k = 0 .. n-1."""
    k = np.arange(spec.n_samples)
    y = np.zeros(spec.n_samples)
    for o, a, p in spec.harmonics:
        y += a * np.cos(2.0 * np.pi * o * k / spec.samples_per_cycle + p)
    if spec.noise_std > 0:
        y += np.random.default_rng(spec.seed).normal(0.0, spec.noise_std, spec.n_samples)
    return y


def write_waveform_csv(path, y, ks=None) -> None:
    ks = range(len(y)) if ks is None else ks
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["k", "value"])
        for k, v in zip(ks, y):
            out.writerow([int(k), repr(float(v))])


def ingest_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a ``k,value`` waveform file.  Returns (ks, values)."""
    ks, values = [], []
    seen_header = False
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if not seen_header:
                if [c.strip() for c in row] != ["k", "value"]:
                    raise ParseError(f"expected header 'k,value', got {','.join(row)!r}", lineno)
                seen_header = True
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 fields, got {len(row)}", lineno)
            try:
                k = int(row[0])
                v = float(row[1])
            except ValueError:
                raise ParseError(f"cannot parse {','.join(row)!r}", lineno) from None
            if not np.isfinite(v):
                raise ParseError("non-finite sample value", lineno)
            if ks and k <= ks[-1]:
                raise ParseError(f"k={k} does not increase (previous {ks[-1]})", lineno)
            ks.append(k)
            values.append(v)
    if not values:
        raise ParseError("no samples found")
    return np.array(ks, dtype=int), np.array(values)


@dataclass
class ScenarioConfig:
    w: int = 36
    solvers: tuple = DEFAULT_SOLVERS
    delta_rel: float = richardson.DEFAULT_DELTA_REL
    delta: float | None = None
    max_iters: int = richardson.DEFAULT_MAX_ITERS
    safety: float = richardson.DEFAULT_SAFETY
    eps_frac: float = eigen.DEFAULT_SHIFT_FRACTION  # suboptimal eps = eps_frac * lambda_max_hat
    power_tol: float = eigen.DEFAULT_TOL
    seed: int = 0
    cond_method: str = "inverse"
    max_steps: int | None = None
    ceiling: float | None = None  # recursive re-initialisation threshold on ||I - Gamma A||_F

    def __post_init__(self):
        self.solvers = tuple(self.solvers)
        unknown = [s for s in self.solvers if s not in SOLVERS]
        if unknown:
            raise ValueError(f"unknown solver(s) {unknown}; choose from {list(SOLVERS)}")
        if not self.solvers:
            raise ValueError("no solvers configured")

    def richardson_config(self) -> richardson.RichardsonConfig:
        return richardson.RichardsonConfig(delta=self.delta, delta_rel=self.delta_rel,
                                           max_iters=self.max_iters)

    def power_config(self) -> eigen.PowerConfig:
        return eigen.PowerConfig(tol=self.power_tol, seed=self.seed)


def figure1_config(**overrides) -> ScenarioConfig:
    """Ill-conditioned comparison preset: short window, loose Richardson bound.

    w = 36 with the default five-harmonic basis puts the information matrix
    near the limit of double precision, where the LDL inverse loses most of
    its digits on some steps.  The residual bound is 1e-5 ||b||.
    """
    base = dict(w=36, delta_rel=1e-5, max_steps=256)
    base.update(overrides)
    return ScenarioConfig(**base)


@dataclass
class Row:
    k: int
    solver: str
    residual: float
    param_error: float | None
    cond_est: float
    iterations: int
    elapsed_us: int
    status: str


@dataclass
class ScenarioReport:
    rows: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)  # solver -> list of (k, y_hat)
    preconditioners: dict = field(default_factory=dict)

    def for_solver(self, solver: str) -> list:
        return [r for r in self.rows if r.solver == solver]

    def residuals(self, solver: str) -> np.ndarray:
        return np.array([r.residual for r in self.for_solver(solver)])

    def statuses(self, solver: str) -> list:
        return [r.status for r in self.for_solver(solver)]

    def failures(self) -> list:
        return [r for r in self.rows if r.status != "ok"]


def _status_of(exc: BaseException) -> str:
    if isinstance(exc, SingularPivot):
        return "singular_pivot"
    if isinstance(exc, SNearSingular):
        return "s_near_singular"
    return "not_converged"


def _eigen_preconditioners(A, cfg: ScenarioConfig) -> dict:
    """Optimal and suboptimal gains from power iterations on the initial window.

    The window eigenvalues do not change while the window slides, so one
    estimate serves every step.  A non-converged estimate is used as is,
    which is the realistic failure mode of these gains.
    """
    pcfg = cfg.power_config()
    out = {}
    try:
        top = eigen.power_iterate(A, pcfg)
    except NotConverged as exc:
        top = exc.best
    except ZeroVector:
        return out
    lam_max = top.value
    eps = cfg.eps_frac * lam_max
    try:
        out["richardson-suboptimal"] = richardson.precond_suboptimal(lam_max, eps)
    except BadSpectrum:
        pass
    try:
        low = eigen.min_eigen_shifted(A, lam_max, eps, pcfg)
        lam_min = low.value
    except NotConverged as exc:
        lam_min = exc.best.value if exc.best is not None else float("nan")
    except ShiftTooSmall:
        lam_min = float("nan")
    try:
        out["richardson-optimal"] = richardson.precond_optimal(lam_min, lam_max)
    except BadSpectrum:
        pass
    return out


def run_scenario(signal, basis: HarmonicBasis, config: ScenarioConfig | None = None,
                 ks=None, theta_star=None) -> ScenarioReport:
    """Warm-start a window of ``config.w`` samples, then slide and solve at every step.

    Every configured solver contributes one row per step.  Solver failures
    become a row status; they never stop the run.
    """
    cfg = config or ScenarioConfig()
    y = np.asarray(signal, dtype=float)
    ks = np.arange(len(y)) if ks is None else np.asarray(ks, dtype=int)
    w = cfg.w
    if len(y) <= w:
        raise ValueError(f"signal has {len(y)} samples; need more than w={w}")
    state = warm_start(basis, w, y[:w], ks[:w])
    solvers = sorted(cfg.solvers)
    rcfg = cfg.richardson_config()
    pcfg = cfg.power_config()

    report = ScenarioReport(config=_effective_config(cfg, basis))
    report.fits = {s: [] for s in solvers}

    warm_theta = {s: None for s in solvers if s.startswith("richardson")}
    recursive = {}
    with warnings.catch_warnings(), np.errstate(all="ignore"):
        warnings.simplefilter("ignore", RuntimeWarning)
        if any(s in ("richardson-optimal", "richardson-suboptimal") for s in solvers):
            report.preconditioners.update(_eigen_preconditioners(state.A, cfg))
        for name, policy in (("recursive", CorrectionPolicy.none()),
                             ("recursive-ns", CorrectionPolicy.newton_schulz(1))):
            if name in solvers:
                try:
                    recursive[name] = RecursiveEstimator(state.A, state.b, policy, cfg.ceiling)
                except RichwinError as exc:
                    recursive[name] = exc

        n_steps = len(y) - w
        if cfg.max_steps is not None:
            n_steps = min(n_steps, cfg.max_steps)
        for j in range(w, w + n_steps):
            update = state.slide(y[j], ks[j])
            A, b, k = state.A, state.b, int(ks[j])
            phi = update.phi_in
            try:
                cond = condition_estimate(A, pcfg, cfg.cond_method, accept_best=True)
            except (NotConverged, ZeroVector, ShiftTooSmall, SingularPivot):
                cond = float("nan")
            for name in solvers:
                t0 = time.perf_counter_ns()
                status, theta, iters = "ok", None, 0
                try:
                    if name == "ldl":
                        theta = invert_via_ldl(A) @ b
                    elif name == "gauss":
                        theta = gauss_solve(A, b)
                    elif name.startswith("richardson"):
                        if name == "richardson-simplest":
                            p = richardson.precond_simplest(A, cfg.safety)
                        else:
                            p = report.preconditioners.get(name)
                            if p is None:
                                raise BadSpectrum(f"no usable eigenvalue estimates for {name}")
                        theta0 = warm_theta[name]
                        try:
                            res = richardson.solve(A, b, p, rcfg, theta0=theta0)
                        except NotConverged as exc:
                            res = exc.best
                            status = "not_converged"
                        theta, iters = res.theta, res.iterations
                        ok = np.all(np.isfinite(theta)) and status == "ok"
                        warm_theta[name] = theta if ok else None
                    else:
                        est = recursive[name]
                        if isinstance(est, Exception):
                            raise est
                        out = est.step(update, A, b)
                        theta, status = out.theta, out.status
                except (RichwinError, ArithmeticError, Diverging) as exc:
                    status = _status_of(exc)
                elapsed = (time.perf_counter_ns() - t0) // 1000
                if theta is not None and np.all(np.isfinite(theta)):
                    resid = float(np.linalg.norm(A @ theta - b))
                    perr = None if theta_star is None else float(np.linalg.norm(theta - theta_star))
                    yhat = float(phi @ theta)
                else:
                    resid, perr, yhat = float("nan"), (None if theta_star is None else float("nan")), float("nan")
                    if status == "ok":
                        status = "not_converged"
                report.rows.append(Row(k, name, resid, perr, cond, iters, int(elapsed), status))
                report.fits[name].append((k, yhat))
    return report


def _effective_config(cfg: ScenarioConfig, basis: HarmonicBasis) -> dict:
    d = asdict(cfg)
    d["solvers"] = ",".join(cfg.solvers)
    d["frequencies_rad_per_sample"] = ",".join(repr(q) for q in basis.frequencies)
    return d


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_report_csv(report: ScenarioReport, path, extra_config: dict | None = None) -> None:
    """Report CSV, preceded by ``# key = value`` lines holding the effective configuration."""
    config = dict(report.config)
    if extra_config:
        config.update(extra_config)
    with open(path, "w", newline="") as fh:
        for key in sorted(config):
            fh.write(f"# {key} = {config[key]}\n")
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(REPORT_HEADER)
        for r in report.rows:
            out.writerow([r.k, r.solver, _fmt(r.residual), _fmt(r.param_error), _fmt(r.cond_est),
                          r.iterations, r.elapsed_us, r.status])


def read_report_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_traces(report: ScenarioReport, out_dir) -> list[Path]:
    """One ``trace_<solver>.csv`` per solver with k, residual, y_hat, status."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, fit in report.fits.items():
        path = out_dir / f"trace_{name}.csv"
        rows = report.for_solver(name)
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["k", "residual", "y_hat", "status"])
            for r, (_, yhat) in zip(rows, fit):
                out.writerow([r.k, _fmt(r.residual), _fmt(yhat), r.status])
        paths.append(path)
    return paths


def peaking_summary(report: ScenarioReport, reference: str = "richardson-simplest",
                    direct: str = "ldl", factor: float = 1e3) -> dict:
    """How often the direct solver's residual exceeds ``factor`` x the reference median."""
    ref = report.residuals(reference)
    ref_ok = ref[np.array([s == "ok" for s in report.statuses(reference)])]
    med = float(np.median(ref_ok)) if ref_ok.size else float("nan")
    d = report.residuals(direct)
    spikes = int(np.sum(np.nan_to_num(d, nan=np.inf) > factor * med))
    return {"reference_median": med, "direct_max": float(np.nanmax(d)) if d.size else float("nan"),
            "direct_median": float(np.nanmedian(d)) if d.size else float("nan"),
            "spikes": spikes, "factor": factor}


# --- eigenvalue iteration sweep -------------------------------------------------


def harmonic_information_matrix(size: int, samples_per_cycle: int = 256, extra: int = 2) -> np.ndarray:
    """Short-window information matrix of dimension ``size``.

    Harmonic orders 1 .. size/2 at ``samples_per_cycle``, window of
    size + ``extra`` samples.  Short windows make these badly conditioned.
    """
    if size < 2 or size % 2:
        raise ValueError("size must be an even integer >= 2")
    basis = HarmonicBasis.from_orders(range(1, size // 2 + 1), samples_per_cycle)
    w = size + extra
    Phi = np.array([regressor(basis, k) for k in range(w)])
    return Phi.T @ Phi


@dataclass
class SweepRow:
    size: int
    iterations: int
    value: float
    status: str
    min_iterations: int | None = None
    min_status: str | None = None


def eig_iteration_sweep(sizes, generator=harmonic_information_matrix,
                        cfg: eigen.PowerConfig | None = None, with_min: bool = False) -> list[SweepRow]:
    """Power-iteration steps needed to reach ``cfg.tol`` for each matrix size.

    With ``with_min`` the shifted iteration for lambda_min is run too.
    """
    sizes = list(sizes)
    if sizes != sorted(sizes):
        raise ValueError("sizes must be ascending")
    cfg = cfg or eigen.PowerConfig()
    rows = []
    for size in sizes:
        A = generator(size)
        try:
            est = eigen.power_iterate(A, cfg)
            row = SweepRow(size, est.iterations, est.value, "ok")
        except NotConverged as exc:
            best = exc.best
            row = SweepRow(size, cfg.cap(A.shape[0]), best.value if best else float("nan"), "not_converged")
        if with_min:
            try:
                low = eigen.min_eigen_shifted(A, row.value, cfg=cfg)
                row.min_iterations, row.min_status = low.iterations, "ok"
            except NotConverged:
                row.min_iterations, row.min_status = cfg.cap(A.shape[0]), "not_converged"
            except ShiftTooSmall:
                row.min_iterations, row.min_status = 0, "shift_too_small"
        rows.append(row)
    return rows


def write_sweep_csv(rows, path, config: dict | None = None) -> None:
    with open(path, "w", newline="") as fh:
        for key in sorted(config or {}):
            fh.write(f"# {key} = {config[key]}\n")
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["size", "iterations", "value", "status", "min_iterations", "min_status"])
        for r in rows:
            out.writerow([r.size, r.iterations, _fmt(r.value), r.status,
                          _fmt(r.min_iterations), _fmt(r.min_status)])


def moving_average(values, width: int = 3) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    return np.convolve(v, np.ones(width) / width, mode="valid")


def window_condition_sweep(basis: HarmonicBasis, ws, cfg: eigen.PowerConfig | None = None) -> list:
    """(w, condition estimate) for each window size, from the first window of the basis."""
    cfg = cfg or eigen.PowerConfig()
    out = []
    for w in ws:
        Phi = np.array([regressor(basis, k) for k in range(w)])
        try:
            cond = condition_estimate(Phi.T @ Phi, cfg, method="inverse", accept_best=True)
        except (NotConverged, SingularPivot):
            cond = float("nan")
        out.append((int(w), cond))
    return out


def suboptimal_worse_search(lam_mins, lam_max: float = 1.0, eps_values=(1e-6, 1e-4, 1e-2),
                            n: int = 6, seed: int = 0, safety: float = 1.0) -> list:
    """Spectra where the suboptimal gain contracts worse than the simplest one.

    Each candidate is a symmetric matrix Q diag(spectrum) Q^T with
    log-spaced eigenvalues between lam_min and lam_max and a random
    orthogonal Q.  Returns (lam_min, eps, rho_suboptimal, rho_simplest) for
    every case with rho_suboptimal > rho_simplest; both radii are computed
    from the known spectrum.
    """
    rng = np.random.default_rng(seed)
    hits = []
    for lam_min in lam_mins:
        ev = np.geomspace(lam_min, lam_max, n)
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        A = (Q * ev) @ Q.T
        A = 0.5 * (A + A.T)
        rho_simple = richardson.precond_simplest(A, safety).spectral_radius(ev)
        for eps in eps_values:
            rho_sub = richardson.precond_suboptimal(lam_max, eps).spectral_radius(ev)
            if rho_sub > rho_simple:
                hits.append((float(lam_min), float(eps), rho_sub, rho_simple))
    return hits
