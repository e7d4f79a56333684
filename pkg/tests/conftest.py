from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def two_mb_path():
    return FIXTURES / "two_mb_coeffs.xml"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    tag, summary = marker.args
    entry = _ACCEPTANCE.setdefault(tag, {"summary": summary, "outcome": "PASS", "detail": ""})
    if call.when == "call" and call.excinfo is not None:
        if call.excinfo.errisinstance(pytest.skip.Exception):
            entry["outcome"] = "SKIP"
            entry["detail"] = str(call.excinfo.value)
        else:
            entry["outcome"] = "FAIL"
            entry["detail"] = call.excinfo.exconly().splitlines()[0][:120]
    elif call.excinfo is not None and call.when == "setup":
        skipped = call.excinfo.errisinstance(pytest.skip.Exception)
        entry["outcome"] = "SKIP" if skipped else "FAIL"
        entry["detail"] = str(call.excinfo.value)[:120]


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for tag in sorted(_ACCEPTANCE, key=lambda t: int(t[2:])):
        e = _ACCEPTANCE[tag]
        line = f"{tag:5s} {e['outcome']:4s}  {e['summary']}"
        if e["detail"]:
            line += f"  [{e['detail']}]"
        terminalreporter.write_line(line)
