import pytest

from nested_mzi import scenarios

ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  criterion {criterion}: {detail}")


@pytest.fixture(scope="session")
def runs():
    """One default run per built-in scenario, shared across test modules."""
    cache = {}

    def get(name):
        if name not in cache:
            sc = scenarios.build_scenario(name)
            cache[name] = (sc, scenarios.run(sc))
        return cache[name]

    return get


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
