from __future__ import annotations

import pytest

_RESULTS: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    details = [v for k, v in item.user_properties if k == "detail"]
    _RESULTS[marker.args[0]] = {"passed": report.passed, "name": item.name, "details": details}


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_RESULTS):
        res = _RESULTS[n]
        tr.write_line(f"criterion {n:2d}: {'PASS' if res['passed'] else 'FAIL'}  ({res['name']})")
        for line in res["details"]:
            tr.write_line(f"    {line}")
