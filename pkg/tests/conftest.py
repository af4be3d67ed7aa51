import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from stml import corpus  # noqa: E402
from stml.minic import parse  # noqa: E402

ACCEPTANCE_RESULTS = {}


@pytest.fixture
def conv():
    return corpus.load_program("conv2d")


@pytest.fixture
def src():
    """Parse a source snippet."""
    return parse


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, detail, seconds, limit = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line("criterion %d: %s  (%.2f s, limit %g s)  %s"
                                    % (n, "PASS" if ok else "FAIL", seconds, limit, detail))
