import os

import pytest

_RESULTS = {}


class AcceptanceRecorder:
    """Collects one verdict per acceptance criterion for the terminal summary."""

    def record(self, number: int, passed: bool, detail: str = ""):
        _RESULTS[number] = (bool(passed), detail)
        return passed


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceRecorder()


@pytest.fixture
def tmp_csv(tmp_path):
    def make(name, lines):
        p = tmp_path / name
        p.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return p
    return make


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_RESULTS):
        ok, detail = _RESULTS[k]
        terminalreporter.write_line(f"ACCEPTANCE criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_report_header(config):
    from nbpmt import BACKEND
    return f"nbpmt backend: {BACKEND} (NBPMT_PURE_PYTHON={os.environ.get('NBPMT_PURE_PYTHON', '')})"
