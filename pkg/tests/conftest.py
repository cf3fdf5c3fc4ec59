from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent

# filled by tests/test_acceptance.py, printed at the end of the run
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


@pytest.fixture
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture
def default_config_path() -> Path:
    return REPO_ROOT / "configs" / "defaults.cfg"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})")
