"""Command-line entry point.

    richwin generate --out wave.csv --cycles 10
    richwin run --in wave.csv --out report.csv
    richwin compare --out-dir fig1/
    richwin eigbench --out fig2.csv

Settings come from built-in defaults, then an optional ``--config`` file of
``key = value`` lines, then explicit flags.  Exit status: 0 on success, 2 on a
configuration or input error, 3 when ``--strict`` is set and any solver row
failed.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import eigen, harness
from .errors import ConfigError, ParseError
from .window import HarmonicBasis

log = logging.getLogger("richwin")

EXIT_OK, EXIT_CONFIG, EXIT_FAILED_ROWS = 0, 2, 3


def _floats(text):
    return [float(t) for t in str(text).split(",") if t.strip()]


def _ints(text):
    return [int(t) for t in str(text).split(",") if t.strip()]


def _names(text):
    return tuple(t.strip() for t in str(text).split(",") if t.strip())


def _harmonics(text):
    """``order:amplitude:phase`` triples separated by commas."""
    out = []
    for item in str(text).split(","):
        if not item.strip():
            continue
        parts = item.split(":")
        if len(parts) != 3:
            raise ValueError(f"harmonic {item!r} is not order:amplitude:phase")
        out.append((int(parts[0]), float(parts[1]), float(parts[2])))
    return tuple(out)


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> parser; every key is valid in the config file and as --key-with-dashes
KEYS = {
    "w": int,
    "solvers": _names,
    "delta": float,
    "delta_rel": float,
    "safety": float,
    "eps": float,
    "seed": int,
    "max_iters": int,
    "max_steps": int,
    "power_tol": float,
    "cond_method": str,
    "ceiling": float,
    "cycles": float,
    "noise_std": float,
    "fundamental_hz": float,
    "samples_per_cycle": int,
    "harmonics": _harmonics,
    "orders": _ints,
    "sizes": _ints,
    "tol": float,
    "with_min": _bool,
    "strict": _bool,
}

HELP = {
    "w": "window size in samples",
    "solvers": "comma-separated solver ids: " + ",".join(harness.SOLVERS),
    "delta": "absolute Richardson residual bound (overrides delta-rel)",
    "delta_rel": "Richardson residual bound relative to ||b||_2",
    "safety": "safety factor on the simplest preconditioner 2/||A||_inf",
    "eps": "suboptimal/shift epsilon as a fraction of the estimated largest eigenvalue",
    "seed": "seed for noise and power-iteration start vectors",
    "max_iters": "Richardson iteration cap per step",
    "max_steps": "number of window steps to run",
    "power_tol": "power-iteration residual tolerance",
    "cond_method": "condition estimate: inverse or shifted",
    "ceiling": "re-initialise the recursive solvers when ||I - Gamma A||_F exceeds this",
    "cycles": "signal length in fundamental cycles",
    "noise_std": "standard deviation of the additive Gaussian noise",
    "fundamental_hz": "fundamental frequency in Hz",
    "samples_per_cycle": "samples per fundamental cycle",
    "harmonics": "order:amplitude:phase,... for the synthetic signal",
    "orders": "harmonic orders of the regressor (default: those of the signal)",
    "sizes": "matrix sizes for eigbench, ascending",
    "tol": "eigbench power-iteration tolerance",
    "with_min": "eigbench: also time the shifted smallest-eigenvalue iteration",
    "strict": "exit 3 if any solver row failed",
}

SUBCOMMAND_KEYS = {
    "generate": ("seed", "cycles", "noise_std", "fundamental_hz", "samples_per_cycle", "harmonics"),
    "run": ("w", "solvers", "delta", "delta_rel", "safety", "eps", "seed", "max_iters", "max_steps",
            "power_tol", "cond_method", "ceiling", "samples_per_cycle", "fundamental_hz", "harmonics",
            "orders", "strict"),
    "compare": ("w", "solvers", "delta", "delta_rel", "safety", "eps", "seed", "max_iters", "max_steps",
                "power_tol", "cond_method", "ceiling", "cycles", "noise_std", "fundamental_hz",
                "samples_per_cycle", "harmonics", "orders", "strict"),
    "eigbench": ("sizes", "tol", "seed", "samples_per_cycle", "with_min"),
}


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment.  Unknown keys are an error."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="richwin", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_keys(p, name):
        p.add_argument("--config", help="key = value settings file (flags override it)")
        for key in SUBCOMMAND_KEYS[name]:
            flag = "--" + key.replace("_", "-")
            if KEYS[key] is _bool:
                p.add_argument(flag, dest=key, action="store_const", const=True, default=None, help=HELP[key])
            else:
                p.add_argument(flag, dest=key, default=None, help=HELP[key])

    p = sub.add_parser("generate", help="write a synthetic waveform CSV")
    p.add_argument("--out", required=True, help="waveform CSV to write (k,value)")
    add_keys(p, "generate")

    p = sub.add_parser("run", help="run the solver comparison on a waveform CSV")
    p.add_argument("--in", dest="input", required=True, help="waveform CSV (k,value)")
    p.add_argument("--out", required=True, help="report CSV to write")
    p.add_argument("--traces-dir", help="also write trace_<solver>.csv files here")
    p.add_argument("--plot", help="render the comparison figure to this file")
    add_keys(p, "run")

    p = sub.add_parser("compare", help="synthetic ill-conditioned comparison: report, traces and figure")
    p.add_argument("--out-dir", default="compare_out", help="directory for all outputs")
    p.add_argument("--no-plot", action="store_true", help="skip the figure")
    add_keys(p, "compare")

    p = sub.add_parser("eigbench", help="power-iteration count versus matrix size")
    p.add_argument("--out", required=True, help="sweep CSV to write")
    p.add_argument("--plot", help="render the sweep figure to this file")
    p.add_argument("--cond-sweep", help="also write w,cond_est for window sizes LO:HI:STEP to <out>.cond.csv")
    add_keys(p, "eigbench")
    return parser


def effective_settings(args) -> dict:
    settings = {}
    if args.config:
        settings.update(read_config_file(args.config))
    allowed = SUBCOMMAND_KEYS[args.command]
    stray = sorted(set(settings) - set(allowed))
    if stray:
        raise ConfigError(f"config key(s) {stray} do not apply to '{args.command}'")
    for key in allowed:
        value = getattr(args, key, None)
        if value is None:
            continue
        try:
            settings[key] = value if isinstance(value, bool) else KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for --{key.replace('_', '-')}: {exc}") from None
    return settings


def _signal_spec(s: dict) -> harness.SignalSpec:
    kw = {k: s[k] for k in ("fundamental_hz", "samples_per_cycle", "harmonics", "noise_std", "cycles", "seed")
          if k in s}
    try:
        return harness.SignalSpec(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _scenario_config(s: dict, preset) -> harness.ScenarioConfig:
    kw = {k: s[k] for k in ("w", "solvers", "delta", "delta_rel", "safety", "seed", "max_iters",
                            "max_steps", "power_tol", "cond_method", "ceiling") if k in s}
    if "eps" in s:
        kw["eps_frac"] = s["eps"]
    try:
        return preset(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _basis(s: dict, spec: harness.SignalSpec) -> HarmonicBasis:
    orders = s.get("orders", spec.orders)
    try:
        return HarmonicBasis.from_orders(orders, spec.samples_per_cycle)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _header(command: str, settings: dict, **extra) -> dict:
    d = {"command": command}
    d.update({f"setting.{k}": v for k, v in settings.items()})
    d.update(extra)
    return d


def _finish(report, strict: bool) -> int:
    failed = report.failures()
    if failed:
        log.warning("%d of %d rows report a failure status", len(failed), len(report.rows))
    if strict and failed:
        print(f"richwin: {len(failed)} solver row(s) failed (--strict)", file=sys.stderr)
        return EXIT_FAILED_ROWS
    return EXIT_OK


def cmd_generate(args, s) -> int:
    spec = _signal_spec(s)
    y = harness.generate(spec)
    harness.write_waveform_csv(args.out, y)
    log.info("wrote %d samples to %s", len(y), args.out)
    return EXIT_OK


def cmd_run(args, s) -> int:
    if not Path(args.input).is_file():
        raise ConfigError(f"input file not found: {args.input}")
    ks, y = harness.ingest_csv(args.input)
    spec = _signal_spec(s)
    basis = _basis(s, spec)
    cfg = _scenario_config(s, harness.ScenarioConfig)
    if cfg.w < basis.m:
        raise ConfigError(f"w={cfg.w} is below the regressor dimension m={basis.m}")
    if len(y) <= cfg.w:
        raise ConfigError(f"input has {len(y)} samples; need more than w={cfg.w}")
    report = harness.run_scenario(y, basis, cfg, ks=ks)
    harness.write_report_csv(report, args.out, _header("run", s, input=args.input))
    if args.traces_dir:
        harness.write_traces(report, args.traces_dir)
    if args.plot:
        from .plots import plot_scenario
        plot_scenario(report, y, ks, args.plot)
    return _finish(report, s.get("strict", False))


def cmd_compare(args, s) -> int:
    spec = _signal_spec(s)
    basis = _basis(s, spec)
    cfg = _scenario_config(s, harness.figure1_config)
    if cfg.w < basis.m:
        raise ConfigError(f"w={cfg.w} is below the regressor dimension m={basis.m}")
    y = harness.generate(spec)
    if len(y) <= cfg.w:
        raise ConfigError(f"signal has {len(y)} samples; need more than w={cfg.w}")
    out = Path(args.out_dir)
    theta_star = spec.theta_star(s.get("orders"))
    report = harness.run_scenario(y, basis, cfg, theta_star=theta_star)
    out.mkdir(parents=True, exist_ok=True)
    harness.write_waveform_csv(out / "waveform.csv", y)
    harness.write_report_csv(report, out / "report.csv", _header("compare", s, signal=spec))
    harness.write_traces(report, out)
    if not args.no_plot:
        from .plots import plot_scenario
        plot_scenario(report, y, np.arange(len(y)), out / "figure1.png",
                      title=f"w = {cfg.w}, median condition estimate "
                            f"{np.nanmedian([r.cond_est for r in report.rows]):.1e}")
    if "ldl" in cfg.solvers and "richardson-simplest" in cfg.solvers:
        summary = harness.peaking_summary(report)
        print("ldl residual: median {direct_median:.3e}, max {direct_max:.3e}; "
              "richardson-simplest median {reference_median:.3e}; "
              "steps above {factor:g}x: {spikes}".format(**summary))
    return _finish(report, s.get("strict", False))


def cmd_eigbench(args, s) -> int:
    sizes = s.get("sizes", [4, 8, 16, 32, 64])
    spc = s.get("samples_per_cycle", 256)
    try:
        cfg = eigen.PowerConfig(tol=s.get("tol", eigen.DEFAULT_TOL), seed=s.get("seed", 0))
        rows = harness.eig_iteration_sweep(
            sizes, lambda n: harness.harmonic_information_matrix(n, spc), cfg, s.get("with_min", False))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    harness.write_sweep_csv(rows, args.out, _header("eigbench", s))
    for r in rows:
        print(f"size {r.size:4d}: {r.iterations} iterations ({r.status})")
    if args.cond_sweep:
        try:
            lo, hi, step = (int(t) for t in args.cond_sweep.split(":"))
        except ValueError:
            raise ConfigError("--cond-sweep expects LO:HI:STEP") from None
        spec = harness.SignalSpec(samples_per_cycle=spc)
        table = harness.window_condition_sweep(spec.basis(), range(lo, hi + 1, step), cfg)
        with open(str(args.out) + ".cond.csv", "w") as fh:
            fh.write("w,cond_est\n")
            for w, c in table:
                fh.write(f"{w},{c!r}\n")
    if args.plot:
        from .plots import plot_sweep
        plot_sweep(rows, args.plot, cfg.tol)
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "run": cmd_run, "compare": cmd_compare, "eigbench": cmd_eigbench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        settings = effective_settings(args)
        return COMMANDS[args.command](args, settings)
    except (ConfigError, ParseError) as exc:
        print(f"richwin: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
