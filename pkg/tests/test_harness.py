import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from richwin import harness
from richwin.errors import ParseError
from richwin.linalg import gauss_solve
from richwin.window import default_basis, warm_start


# --- signal ----------------------------------------------------------------------

def test_generate_single_fundamental():
    spec = harness.SignalSpec(harmonics=((1, 1.0, 0.0),), noise_std=0.0, cycles=1)
    k = np.arange(256)
    np.testing.assert_allclose(harness.generate(spec), np.cos(2 * np.pi * k / 256), atol=1e-15)


def test_generate_zero_amplitudes():
    spec = harness.SignalSpec(harmonics=((1, 0.0, 0.3), (3, 0.0, 1.0)), noise_std=0.0)
    np.testing.assert_array_equal(harness.generate(spec), 0.0)


def test_generate_is_deterministic():
    spec = harness.SignalSpec(seed=4)
    np.testing.assert_array_equal(harness.generate(spec), harness.generate(spec))
    assert not np.array_equal(harness.generate(spec), harness.generate(harness.SignalSpec(seed=5)))


def test_full_cycle_fit_is_within_noise_bound():
    spec = harness.SignalSpec()
    y = harness.generate(spec)
    state = warm_start(spec.basis(), 256, y[:256])
    theta = gauss_solve(state.A, state.b)
    # A = 128 I over a full cycle, so each coefficient error has std sigma / sqrt(128)
    bound = 5 * spec.noise_std * np.sqrt(spec.basis().m / 128)
    assert np.linalg.norm(theta - spec.theta_star()) <= bound


def test_theta_star_layout():
    spec = harness.SignalSpec(harmonics=((1, 2.0, np.pi / 2), (3, 1.0, 0.0)))
    np.testing.assert_allclose(spec.theta_star(), [0.0, -2.0, 1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(spec.theta_star([1, 2, 3]), [0.0, -2.0, 0.0, 0.0, 1.0, 0.0], atol=1e-15)


def test_signal_spec_validation():
    with pytest.raises(ValueError):
        harness.SignalSpec(samples_per_cycle=8, harmonics=((4, 1.0, 0.0),))
    with pytest.raises(ValueError):
        harness.SignalSpec(harmonics=((1, float("inf"), 0.0),))
    with pytest.raises(ValueError):
        harness.SignalSpec(noise_std=-1.0)
    with pytest.raises(ValueError):
        harness.SignalSpec(harmonics=())


# --- waveform CSV ----------------------------------------------------------------------

def test_waveform_round_trip(tmp_path):
    y = harness.generate(harness.SignalSpec(cycles=0.5))
    path = tmp_path / "wave.csv"
    harness.write_waveform_csv(path, y)
    assert path.read_text().splitlines()[0] == "k,value"
    ks, values = harness.ingest_csv(path)
    np.testing.assert_array_equal(ks, np.arange(len(y)))
    np.testing.assert_array_equal(values, y)


@pytest.mark.parametrize("body,line", [
    ("k,value\n0,1.0\n1,abc\n", 3),
    ("k,value\n0,1.0\n0,2.0\n", 3),
    ("k,value\n0,1.0,3\n", 2),
    ("time,value\n0,1.0\n", 1),
    ("k,value\n0,nan\n", 2),
])
def test_ingest_errors_carry_line(tmp_path, body, line):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(ParseError) as exc:
        harness.ingest_csv(path)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_ingest_skips_comments_and_blank_lines(tmp_path):
    path = tmp_path / "wave.csv"
    path.write_text("# recorded on bench\nk,value\n\n3,0.5\n7,-0.25\n")
    ks, values = harness.ingest_csv(path)
    np.testing.assert_array_equal(ks, [3, 7])
    np.testing.assert_array_equal(values, [0.5, -0.25])


def test_ingest_empty(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("k,value\n")
    with pytest.raises(ParseError):
        harness.ingest_csv(path)


# --- scenarios -----------------------------------------------------------------------

@pytest.fixture(scope="module")
def clean_full_cycle():
    spec = harness.SignalSpec(noise_std=0.0, cycles=1.25)
    cfg = harness.ScenarioConfig(w=256, solvers=harness.SOLVERS, max_steps=24)
    report = harness.run_scenario(harness.generate(spec), spec.basis(), cfg, theta_star=spec.theta_star())
    return spec, cfg, report


def test_full_cycle_all_solvers_recover_theta(clean_full_cycle):
    spec, cfg, report = clean_full_cycle
    bound = 1e-6 * np.linalg.norm(spec.theta_star())
    for row in report.rows:
        assert row.status == "ok", row
        assert row.param_error <= bound, row
        assert row.cond_est == pytest.approx(1.0, rel=1e-3)


def test_rows_are_ordered_and_conserved(clean_full_cycle):
    _, cfg, report = clean_full_cycle
    keys = [(r.k, r.solver) for r in report.rows]
    assert keys == sorted(keys)
    assert len(set(keys)) == len(keys)
    assert len(report.rows) == cfg.max_steps * len(cfg.solvers)
    assert report.fits.keys() == set(cfg.solvers)


def test_eigen_preconditioners_recorded(clean_full_cycle):
    _, _, report = clean_full_cycle
    assert report.preconditioners["richardson-optimal"].alpha == pytest.approx(2 / 256, rel=1e-3)
    assert report.preconditioners["richardson-suboptimal"].kind == "suboptimal"


def test_richardson_rows_meet_delta():
    spec = harness.SignalSpec(cycles=1.0)
    y = harness.generate(spec)
    cfg = harness.ScenarioConfig(w=48, solvers=("richardson-simplest",), max_steps=30)
    report = harness.run_scenario(y, spec.basis(), cfg)
    state = warm_start(spec.basis(), 48, y[:48])
    for row in report.rows:
        state.slide(y[row.k])
        assert row.status == "ok"
        assert row.residual <= cfg.delta_rel * np.linalg.norm(state.b)
        assert row.param_error is None


def test_short_window_peaking():
    spec = harness.SignalSpec()
    cfg = harness.figure1_config(max_steps=64, solvers=("ldl", "richardson-simplest"))
    report = harness.run_scenario(harness.generate(spec), spec.basis(), cfg)
    conds = np.array([r.cond_est for r in report.for_solver("ldl")])
    assert np.any(conds >= 1e6)
    summary = harness.peaking_summary(report)
    assert summary["spikes"] >= 1


def test_failures_are_rows_not_exceptions():
    spec = harness.SignalSpec(cycles=0.5)
    cfg = harness.ScenarioConfig(w=20, solvers=("richardson-simplest",), max_iters=1, max_steps=5)
    report = harness.run_scenario(harness.generate(spec), spec.basis(), cfg)
    assert len(report.rows) == 5
    assert all(r.status == "not_converged" for r in report.rows)
    assert len(report.failures()) == 5


def test_run_scenario_needs_more_than_w_samples():
    with pytest.raises(ValueError):
        harness.run_scenario(np.zeros(30), default_basis(), harness.ScenarioConfig(w=30))


def test_scenario_config_rejects_unknown_solver():
    with pytest.raises(ValueError):
        harness.ScenarioConfig(solvers=("cholesky",))


def test_scenario_is_deterministic():
    spec = harness.SignalSpec(cycles=0.5)
    cfg = harness.ScenarioConfig(w=24, max_steps=20, max_iters=2000)
    runs = [harness.run_scenario(harness.generate(spec), spec.basis(), cfg) for _ in range(2)]
    # repr, so that nan compares equal to nan
    strip = [[repr((r.k, r.solver, r.residual, r.cond_est, r.iterations, r.status)) for r in rep.rows]
             for rep in runs]
    assert strip[0] == strip[1]


# --- report output ----------------------------------------------------------------------

def test_report_csv_format(tmp_path, clean_full_cycle):
    _, cfg, report = clean_full_cycle
    path = tmp_path / "report.csv"
    harness.write_report_csv(report, path, {"note": "unit"})
    lines = path.read_text().splitlines()
    comments = [ln for ln in lines if ln.startswith("#")]
    assert "# note = unit" in comments
    assert "# w = 256" in comments
    assert lines[len(comments)] == ",".join(harness.REPORT_HEADER)
    rows = harness.read_report_csv(path)
    assert len(rows) == len(report.rows)
    assert float(rows[0]["residual"]) == report.rows[0].residual
    assert {r["status"] for r in rows} <= set(harness.STATUSES)


def test_param_error_empty_without_theta_star(tmp_path):
    spec = harness.SignalSpec(cycles=0.5)
    report = harness.run_scenario(harness.generate(spec), spec.basis(),
                                  harness.ScenarioConfig(w=40, solvers=("gauss",), max_steps=3))
    path = tmp_path / "r.csv"
    harness.write_report_csv(report, path)
    assert all(r["param_error"] == "" for r in harness.read_report_csv(path))


def test_traces(tmp_path, clean_full_cycle):
    _, cfg, report = clean_full_cycle
    paths = harness.write_traces(report, tmp_path / "traces")
    assert sorted(p.name for p in paths) == sorted(f"trace_{s}.csv" for s in cfg.solvers)
    lines = paths[0].read_text().splitlines()
    assert lines[0] == "k,residual,y_hat,status"
    assert len(lines) == cfg.max_steps + 1


# --- sweeps --------------------------------------------------------------------------

def test_sweep_small_size_converges_fast():
    rows = harness.eig_iteration_sweep([2])
    assert rows[0].iterations < 50
    assert rows[0].status == "ok"


def test_sweep_identity_row():
    rows = harness.eig_iteration_sweep([3], generator=np.eye)
    assert rows[0].iterations == 1


def test_sweep_trend_and_min_column():
    rows = harness.eig_iteration_sweep([4, 8, 16, 32, 64], with_min=True)
    ma = harness.moving_average([r.iterations for r in rows])
    assert np.all(np.diff(ma) >= 0)
    assert all(r.min_status in ("ok", "not_converged", "shift_too_small") for r in rows)


def test_sweep_sizes_must_ascend():
    with pytest.raises(ValueError):
        harness.eig_iteration_sweep([8, 4])


def test_sweep_csv(tmp_path):
    rows = harness.eig_iteration_sweep([2, 4])
    path = tmp_path / "sweep.csv"
    harness.write_sweep_csv(rows, path, {"tol": 0.01})
    lines = path.read_text().splitlines()
    assert lines[0] == "# tol = 0.01"
    assert lines[1].startswith("size,iterations")
    assert len(lines) == 4


def test_harmonic_information_matrix():
    A = harness.harmonic_information_matrix(4)
    assert A.shape == (4, 4)
    np.testing.assert_array_equal(A, A.T)
    with pytest.raises(ValueError):
        harness.harmonic_information_matrix(5)


def test_moving_average():
    np.testing.assert_allclose(harness.moving_average([1, 2, 3, 4]), [2.0, 3.0])


def test_window_condition_sweep_decreases_toward_full_cycle():
    table = harness.window_condition_sweep(default_basis(), [12, 36, 128, 256])
    conds = [c for _, c in table]
    assert conds[0] > 1e10
    assert conds[-1] == pytest.approx(1.0, rel=1e-3)
    assert conds == sorted(conds, reverse=True)


def test_suboptimal_worse_search_finds_cases():
    hits = harness.suboptimal_worse_search(np.geomspace(1e-3, 0.5, 8))
    assert hits
    for lam_min, eps, rho_sub, rho_simple in hits:
        assert rho_sub > rho_simple
        assert eps < lam_min


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.0, 2.0))
def test_row_conservation_property(seed, noise):
    spec = harness.SignalSpec(seed=seed, noise_std=noise, cycles=0.3)
    cfg = harness.ScenarioConfig(w=30, solvers=("gauss", "ldl"), seed=seed)
    y = harness.generate(spec)
    report = harness.run_scenario(y, spec.basis(), cfg)
    assert len(report.rows) == (len(y) - cfg.w) * 2
    keys = [(r.k, r.solver) for r in report.rows]
    assert keys == sorted(keys)
