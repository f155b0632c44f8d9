"""Shared fixtures and the acceptance-criteria summary hook."""

import math

import pytest

from vhckit.models import get_model

_CRITERIA = {}


@pytest.fixture(scope="session")
def circle0():
    return get_model("circle", alpha=0.0)


@pytest.fixture(scope="session")
def circle03():
    return get_model("circle", alpha=0.3)


@pytest.fixture(scope="session")
def sphere():
    return get_model("sphere")


@pytest.fixture(scope="session")
def dpc_a():
    return get_model("dpc-a")


@pytest.fixture(scope="session")
def dpc_b():
    return get_model("dpc-b")


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if name.startswith("test_criterion_"):
        num = name.split("_")[2]
        _CRITERIA[int(num)] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num in sorted(_CRITERIA):
        terminalreporter.write_line(f"CRITERION {num}: {_CRITERIA[num]}")
