import math

import numpy as np
import pytest

from bgkmix.mixture_model import MixtureParams


def normalized(m1=1.0, m2=3.0, epsilon=1.0 / 3.0, nu12=0.2, n1=1.5, n2=0.7, **kw) -> MixtureParams:
    """Parameters with nu11, nu22 chosen so both relaxation rates equal 1."""
    nu21 = nu12 / epsilon
    return MixtureParams(m1=m1, m2=m2, nu11=(1.0 - nu12 * n2) / n1, nu12=nu12, nu21=nu21,
                         nu22=(1.0 - nu21 * n1) / n2, epsilon=epsilon, n_inf_1=n1, n_inf_2=n2,
                         **kw)


@pytest.fixture
def symmetric():
    return MixtureParams()


@pytest.fixture
def asymmetric():
    return normalized(delta=0.3, alpha=0.2, gamma=0.05, L=4.0 * math.pi)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for an acceptance criterion and fail the test when it fails."""

    def report(number: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
