"""Collects acceptance-criterion results and prints one line per criterion at the end of the run."""
import pytest


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")
    config._criteria = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = item.config._criteria.setdefault(number, {"title": title, "ok": True, "notes": []})
    if call.excinfo is not None and not call.excinfo.errisinstance(pytest.skip.Exception):
        entry["ok"] = False
    if call.when == "call":
        entry["notes"].extend(v for k, v in item.user_properties if k == "finding")


def pytest_terminal_summary(terminalreporter):
    criteria = getattr(terminalreporter.config, "_criteria", {})
    if not criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(criteria):
        entry = criteria[number]
        status = "PASS" if entry["ok"] else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {entry['title']}")
        for note in entry["notes"]:
            terminalreporter.write_line(f"              finding: {note}")
