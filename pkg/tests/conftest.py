"""Shared fixtures plus a small plugin that reports acceptance criteria.

Tests tagged ``@pytest.mark.criterion(n, "title")`` are grouped by ``n``;
the terminal summary prints one PASS/FAIL line per criterion.
"""

from __future__ import annotations

from collections import defaultdict

import pytest

from zsbilling import BillingPeriodConfig, TariffSchedule
from zsbilling.noise import ScriptedNoise

_titles: dict[int, str] = {}
_outcomes: dict[int, list[tuple[str, str]]] = defaultdict(list)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    _titles[number] = title
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _outcomes[number].append((item.nodeid, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        results = _outcomes[number]
        ok = all(o == "passed" for _, o in results)
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(
            f"criterion {number}: {verdict}  {_titles[number]}  ({sum(o == 'passed' for _, o in results)}/{len(results)} checks)"
        )


@pytest.fixture
def hand_period():
    """Three-interval period used by the worked examples."""
    return BillingPeriodConfig(480, 1)


@pytest.fixture
def hand_case(hand_period):
    return {
        "config": hand_period,
        "consumption": [1, 2, 3],
        "tariffs": TariffSchedule(1, [0.1, 0.2, 0.3]),
        "noise": ScriptedNoise([0.5, -0.4]),
    }
