import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from crnqp.corpus import BY_NAME, CORPUS  # noqa: E402


@pytest.fixture(params=CORPUS, ids=lambda e: e.name)
def example(request):
    return request.param


@pytest.fixture
def bd():
    return BY_NAME["birth_death"].network


@pytest.fixture
def anderson():
    return BY_NAME["anderson13"].network


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def record(number: int, title: str, ok: bool, detail: str):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title} ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
