from __future__ import annotations

import pytest

from botreverts.roster import BotRoster
from helpers import pages_to_export_xml, redirect_fixture_page


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and item.get_closest_marker("acceptance"):
        status = "PASS" if report.passed else "FAIL"
        tr = item.config.pluginmanager.get_plugin("terminalreporter")
        if tr is not None:
            tr.write_line(f"[acceptance] {status} {item.name}")


@pytest.fixture
def fixture_page():
    return redirect_fixture_page()


@pytest.fixture
def fixture_xml(fixture_page):
    return pages_to_export_xml([fixture_page])


@pytest.fixture
def fixture_roster(fixture_page):
    roster = BotRoster()
    roster.add("en", "Xqbot", "current_group")
    roster.add("en", "DarknessBot", "category")
    return roster
