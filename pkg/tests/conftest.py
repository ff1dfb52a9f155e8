import sys

import numpy as np
import pytest

from relflow.rng import Rng


@pytest.fixture
def rng():
    return Rng(1234, 0)


@pytest.fixture
def nprng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
