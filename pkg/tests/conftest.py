import pathlib

import pytest

from rramkit.config import ToolConfig

BENCH = pathlib.Path(__file__).resolve().parents[1] / "benchmarks"

_criteria = {}


@pytest.fixture(scope="session")
def cfg():
    return ToolConfig()


@pytest.fixture(scope="session")
def bench():
    return lambda name: (BENCH / name).read_text()


@pytest.fixture
def criterion():
    """Record one acceptance line; the terminal summary lists them all."""

    def record(number, title, ok, detail):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        _criteria[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        terminalreporter.write_line(_criteria[n])
