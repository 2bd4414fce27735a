import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from snmpcep.lang import default_patterns  # noqa: E402
from verdicts import VERDICTS  # noqa: E402


@pytest.fixture(scope="session")
def patterns():
    return default_patterns()


@pytest.fixture(scope="session")
def by_name(patterns):
    return {p.name: p for p in patterns}


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run long property sweeps")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        terminalreporter.write_line(VERDICTS[n])
