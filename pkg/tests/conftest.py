"""Collects the acceptance-criterion outcomes and prints one line per criterion."""

import pytest

_OUTCOMES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    number, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    _OUTCOMES[number] = (title, rep.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        title, passed, detail = _OUTCOMES[number]
        status = "PASS" if passed else "FAIL"
        line = f"criterion {number:2d} {status}  {title}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)
