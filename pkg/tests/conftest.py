import numpy as np
import pytest

from fastons.sources import default_stream


def windows(samples, dim):
    """Newest-first windows ending at each sample, zero padded."""
    padded = np.concatenate([np.zeros(dim), np.asarray(samples, dtype=float)])
    return np.array([padded[t + dim: t: -1] for t in range(len(samples))])


def direct_ons(samples, dim, step_size, ridge=1.0, epsilon=1e-8):
    """Textbook ONS that inverts A = ridge*I + sum x x' from scratch each step.

    Returns per-step (weights after the step, prediction, error, A^{-1} before
    the step).  Independent of the library code.
    """
    X = windows(samples, dim)
    A = ridge * np.eye(dim)
    w = np.zeros(dim)
    out = []
    for t in range(len(samples) - 1):
        x = X[t]
        pred = w @ x
        e = samples[t + 1] - pred
        a_inv_before = np.linalg.inv(A)
        A = A + np.outer(x, x)
        a_inv = np.linalg.inv(A)
        if abs(e) > epsilon:
            w = w + np.sign(e) / step_size * (a_inv @ x)
        out.append((w.copy(), pred, e, a_inv_before))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def ar_stream():
    return default_stream(4000, seed=7).samples


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: s.split()[1]):
            terminalreporter.write_line(line)
