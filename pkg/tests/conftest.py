from __future__ import annotations

from pathlib import Path

import pytest

from hho.syntax import parse_file

DATA = Path(__file__).parent / "data"

_criteria: dict[int, tuple[str, bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    if crit is None:
        return
    number, title = crit
    ok = report.passed if report.when == "call" else not report.failed
    prev = _criteria.get(number, (title, True))
    _criteria[number] = (title, prev[1] and ok)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        rep.criterion = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}")


def load(name: str):
    return parse_file((DATA / name).read_text(), name)


@pytest.fixture(scope="session")
def nnf():
    return load("nnf.prs")


@pytest.fixture(scope="session")
def nnf_sig(nnf):
    return nnf[0]


@pytest.fixture(scope="session")
def nnf_prs(nnf):
    return nnf[1]
