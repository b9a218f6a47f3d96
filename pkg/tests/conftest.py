import numpy as np
import pytest

from qmpemba import _pycore, hydro, statevector

try:
    from qmpemba import _core
except ImportError:
    _core = None

BACKENDS = {"python": _pycore}
if _core is not None:
    BACKENDS["cython"] = _core


@pytest.fixture(params=sorted(BACKENDS))
def backend(request, monkeypatch):
    """Run a test once per available kernel backend."""
    k = BACKENDS[request.param]
    monkeypatch.setattr(statevector, "kernels", k)
    monkeypatch.setattr(hydro, "kernels", k)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record and print one pass/fail line for an acceptance criterion, then assert it."""

    def record(number, name, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number} ({name}): {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
