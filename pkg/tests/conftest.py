from importlib import resources

import pytest

from gradedkit.dsl import parse

FIXTURES = resources.files("gradedkit") / "fixtures"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


def load(name: str):
    return parse(fixture_text(name))


def fixture_names():
    return sorted(p.name for p in FIXTURES.iterdir() if p.name.endswith(".gk"))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def fx():
    return load
