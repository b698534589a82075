import functools
import time

import pytest

from gaugedqball import numeric
from gaugedqball.model import ModelParams
from gaugedqball.thinwall import NoSolutionError

# one line per acceptance check, printed in the terminal summary
ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def solved(epsilon, e, omega=None, q=None, method="collocation"):
    """Converged profile, cached across the session (solves are deterministic)."""
    return numeric.solve_selfconsistent(ModelParams(e, epsilon, omega=omega, q=q), method=method)


@functools.lru_cache(maxsize=None)
def attempt(epsilon, e, omega):
    """``(profile or None, error or None, seconds)``; failures are cached too."""
    t0 = time.perf_counter()
    try:
        prof = solved(epsilon, e, omega=omega)
    except (NoSolutionError, numeric.ConvergenceError) as exc:
        return None, exc, time.perf_counter() - t0
    return prof, None, time.perf_counter() - t0


@pytest.fixture(scope="session")
def solve():
    return solved


@pytest.fixture
def criterion():
    def record(label, ok, detail):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
