import numpy as np
import pytest

from lambda_share import FiniteSpace

CRITERIA = pytest.StashKey[dict]()


@pytest.fixture
def uniform4():
    return FiniteSpace.uniform(4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


@pytest.fixture
def record_criterion(request):
    """Store one summary line per acceptance criterion for the terminal report."""
    lines = request.config.stash.setdefault(CRITERIA, {})

    def record(number: int, passed: bool, detail: str, seconds: float, limit: float) -> None:
        verdict = "PASS" if passed else "FAIL"
        lines[number] = f"criterion {number:>2}: {verdict}  {detail}  [{seconds:.2f} s of {limit:g} s]"

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(CRITERIA, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
