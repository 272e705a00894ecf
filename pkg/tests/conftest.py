import os
import sys
from fractions import Fraction

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from regcomp.phi_model import PRESETS, TwoParam  # noqa: E402

_criteria: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    failed = call.excinfo is not None and not call.excinfo.errisinstance(pytest.skip.Exception)
    entry = _criteria.setdefault(number, {"title": title, "ok": True, "ran": False})
    if call.when == "call":
        entry["ran"] = True
    if failed:
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        status = "PASS" if entry["ok"] and entry["ran"] else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {entry['title']}")


@pytest.fixture(params=sorted(PRESETS), ids=sorted(PRESETS))
def preset(request):
    return PRESETS[request.param]


TWO_PARAM_CASES = [TwoParam(Fraction(a), Fraction(t)) for a, t in [(0, 1), ("1/2", "1/2"), ("1/3", "2/5"), ("1/2", 0)]]
