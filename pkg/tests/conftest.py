from pathlib import Path

import pytest

DATA = Path(__file__).resolve().parent.parent / "data"

_acceptance: dict[int, tuple[str, str]] = {}


@pytest.fixture
def data_dir() -> Path:
    return DATA


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    marker = getattr(report, "acceptance", None)
    if marker is None:
        return
    number, title = marker
    outcome = "PASS" if report.passed else "FAIL"
    prev = _acceptance.get(number)
    if prev is None or prev[0] == "PASS":
        _acceptance[number] = (outcome, title)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    m = item.get_closest_marker("acceptance")
    if m is not None:
        outcome.get_result().acceptance = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        outcome, title = _acceptance[number]
        terminalreporter.write_line(f"[{outcome}] AC{number}: {title}")
