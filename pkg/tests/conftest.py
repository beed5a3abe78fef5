import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bqtsim import _kernels  # noqa: E402

DATA = Path(__file__).parent / "data"

# lines collected by test_acceptance, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session", autouse=True)
def compiled_kernels():
    # JIT compilation happens once here so timed checks measure steady state
    _kernels.warmup()
    return _kernels.BACKEND


@pytest.fixture
def data_dir():
    return DATA


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
