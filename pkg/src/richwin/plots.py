"""Matplotlib renderings of the comparison report and the iteration sweep."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "ldl": dict(color="tab:blue", lw=1.0),
    "gauss": dict(color="tab:green", lw=1.0),
    "richardson-simplest": dict(color="tab:red", lw=1.4, ls="--"),
    "richardson-optimal": dict(color="tab:orange", lw=1.0, ls=":"),
    "richardson-suboptimal": dict(color="tab:purple", lw=1.0, ls=":"),
    "recursive": dict(color="tab:gray", lw=0.8),
    "recursive-ns": dict(color="tab:brown", lw=0.8),
}

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.dpi": 120,
}


def plot_scenario(report, y, ks, path, title=None):
    """Waveform with each solver's one-step fit (top) and residual traces (bottom)."""
    ks = np.asarray(ks)
    y = np.asarray(y)
    with plt.rc_context(RC):
        fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7.0, 6.0), sharex=True)
        fit_k = [k for k, _ in next(iter(report.fits.values()))]
        lo, hi = min(fit_k), max(fit_k)
        sel = (ks >= lo) & (ks <= hi)
        ax1.plot(ks[sel], y[sel], color="black", lw=1.6, label="signal")
        for name, fit in report.fits.items():
            k, yhat = zip(*fit)
            ax1.plot(k, yhat, label=name, **STYLE.get(name, {}))
            ax2.semilogy(k, report.residuals(name), label=name, **STYLE.get(name, {}))
        span = np.ptp(y[sel]) if sel.any() else 1.0
        mid = 0.5 * (y[sel].max() + y[sel].min()) if sel.any() else 0.0
        ax1.set_ylim(mid - 0.75 * span, mid + 0.75 * span)
        ax1.set_ylabel("amplitude")
        ax1.legend(loc="upper right", ncol=2)
        ax2.set_xlabel("step k")
        ax2.set_ylabel(r"$\|A_k\theta_k - b_k\|_2$")
        ax2.grid(True, which="major", alpha=0.3)
        if title:
            ax1.set_title(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def plot_sweep(rows, path, tol=None):
    sizes = [r.size for r in rows]
    iters = [r.iterations for r in rows]
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.5))
        ax.plot(sizes, iters, "o-", color="black", label="largest eigenvalue")
        mins = [(r.size, r.min_iterations) for r in rows if r.min_iterations is not None]
        if mins:
            s, m = zip(*mins)
            ax.plot(s, m, "s--", color="tab:red", label="smallest (shifted)")
            ax.legend()
        ax.set_xscale("log", base=2)
        ax.set_yscale("log")
        ax.set_xlabel("matrix size")
        ax.set_ylabel("power iterations")
        if tol is not None:
            ax.set_title(f"tolerance {tol:g}")
        ax.grid(True, which="major", alpha=0.3)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
