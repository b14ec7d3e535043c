import numpy as np
import pytest

from lubricav.kernels import backends

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def record_acceptance(number, passed, text):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {text}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(params=sorted(backends()))
def kernel_module(request):
    return backends()[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
