import numpy as np
import pytest

# Filled by test_acceptance.py; printed after the run so each criterion
# gets one visible PASS/FAIL line even under output capture.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)


def random_pmf(rng, n, min_prob=1e-4):
    """Dirichlet draw with probabilities bounded away from zero."""
    raw = rng.dirichlet(np.ones(n))
    raw = raw + min_prob
    return raw / raw.sum()
