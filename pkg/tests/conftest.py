import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    criterion = props.get("criterion")
    if criterion is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        number, title = criterion
        status = "PASS" if report.passed else "FAIL"
        detail = props.get("detail")
        ACCEPTANCE_LINES[number] = f"{status}  {number:>2}. {title}" + (f"  [{detail}]" if detail else "")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
