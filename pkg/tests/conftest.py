import os
from pathlib import Path

import pytest

REFERENCE_DATA_ENV = "VISDECODE_REFERENCE_DATA"

_outcomes = {}


def pytest_addoption(parser):
    parser.addoption(
        "--reference-data",
        default=os.environ.get(REFERENCE_DATA_ENV),
        help="dataset directory (or a directory of per-subject dataset directories) "
             f"for the reference-number check; also read from ${REFERENCE_DATA_ENV}",
    )


@pytest.fixture
def reference_data(request):
    value = request.config.getoption("--reference-data")
    if not value:
        pytest.skip(f"reference dataset not supplied (--reference-data or ${REFERENCE_DATA_ENV})")
    path = Path(value)
    if not path.is_dir():
        pytest.skip(f"reference dataset directory {path} does not exist")
    return path


def _criterion(item):
    marker = item.get_closest_marker("acceptance")
    return marker.args[0] if marker and marker.args else None


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    name = _criterion(item)
    if name is None:
        return
    state = _outcomes.setdefault(name, {"failed": False, "skipped": False, "ran": False})
    if report.failed:
        state["failed"] = True
    elif report.skipped:
        state["skipped"] = True
    elif report.when == "call":
        state["ran"] = True


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for name, state in _outcomes.items():
        if state["failed"]:
            verdict = "FAIL"
        elif state["skipped"] and not state["ran"]:
            verdict = "SKIP"
        else:
            verdict = "PASS"
        terminalreporter.write_line(f"{verdict}  {name}")
