import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from massart_sq.massart_measures import build_pair  # noqa: E402
from massart_sq.presets import preset_params  # noqa: E402


@pytest.fixture(scope="session")
def desk_pair():
    return build_pair(preset_params("desk"))


@pytest.fixture(scope="session")
def lift_pair():
    return build_pair(preset_params("lift"))


@pytest.fixture(scope="session")
def large_eta_pair():
    return build_pair(preset_params("large-eta"))


_ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(name: str, ok: bool, detail: str = ""):
        line = f"{'PASS' if ok else 'FAIL'} {name}" + (f": {detail}" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
