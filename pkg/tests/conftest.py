import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from relqc.config import build_instance, fixture_config, parse_subgroup  # noqa: E402


def load(name):
    return build_instance(fixture_config(name))


@pytest.fixture(scope="session")
def fprod():
    return load("INST-FPROD")


@pytest.fixture(scope="session")
def free():
    return load("INST-FREE")


@pytest.fixture(scope="session")
def cyc():
    return load("INST-CYC")


@pytest.fixture(scope="session")
def zinst():
    return load("INST-Z")


@pytest.fixture
def sub():
    return parse_subgroup


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(LINES):
            terminalreporter.write_line(LINES[key])
