"""Shared pytest wiring: acceptance-criteria summary lines.

Tests marked @pytest.mark.acceptance(num, "name") get a one-line PASS/FAIL
verdict in the terminal summary, one line per criterion.
"""

import pytest

_acceptance_results = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    num, name = marker.args[0], marker.args[1]
    if report.when == "call":
        _acceptance_results[num] = (name, report.outcome)
    elif report.when == "setup" and report.outcome in ("failed", "skipped"):
        _acceptance_results[num] = (name, report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    labels = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP (inconclusive)"}
    for num in sorted(_acceptance_results):
        name, outcome = _acceptance_results[num]
        terminalreporter.write_line(f"  [{num:2d}] {labels.get(outcome, outcome.upper())}: {name}")
