from __future__ import annotations

import pytest

from layerids.baseline import benchmark_master
from layerids.benchmark import default_partition

_acceptance: dict[str, list[str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    label = marker.args[0]
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _acceptance.setdefault(label, []).append(rep.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_acceptance, key=lambda s: int(s.split()[0][2:])):
        outcomes = _acceptance[label]
        ok = all(o == "passed" for o in outcomes)
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {label} ({len(outcomes)} checks)")


@pytest.fixture(scope="session")
def master():
    return benchmark_master()


@pytest.fixture(scope="session")
def default_split(master):
    return default_partition(master)
