"""Per-criterion reporting for the acceptance suite.

Tests tagged ``@pytest.mark.criterion(n, "text")`` are grouped by ``n``; a
criterion passes only if every test carrying its number passed. One line per
criterion is printed at the end of the run.
"""

from collections import defaultdict

import pytest

_outcomes = defaultdict(list)
_texts = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, text = marker.args
    _texts[number] = text
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _outcomes[number].append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        status = "PASS" if all(_outcomes[number]) else "FAIL"
        passed = sum(_outcomes[number])
        terminalreporter.write_line(
            f"CRITERION {number:>2}: {status}  ({passed}/{len(_outcomes[number])} checks)  {_texts[number]}")
