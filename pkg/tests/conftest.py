import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

DATA = Path(__file__).parent / "data"

ACCEPTANCE: dict[str, str] = {}


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def record_criterion():
    def record(key, status, detail=""):
        ACCEPTANCE[key] = f"{status} {detail}".rstrip()
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[2:])):
        terminalreporter.write_line(f"{key}: {ACCEPTANCE[key]}")
