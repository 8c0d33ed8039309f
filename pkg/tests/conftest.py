import numpy as np
import pytest

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_spd(rng, n, cond=100.0):
    """Q diag(spectrum) Q^T with log-spaced spectrum from 1 to cond."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    ev = np.geomspace(1.0, cond, n)
    A = (Q * ev) @ Q.T
    return 0.5 * (A + A.T), ev


def constructed(ev, seed=0):
    ev = np.asarray(ev, dtype=float)
    n = len(ev)
    Q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((n, n)))
    A = (Q * ev) @ Q.T
    return 0.5 * (A + A.T)
