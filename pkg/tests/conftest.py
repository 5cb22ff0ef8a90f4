import numpy as np
import pytest

_ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record one acceptance line; returns the verdict so the test can assert on it."""
    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        line = f"criterion {number:>2}  {'PASS' if passed else 'FAIL'}  {title}  [{detail}]"
        _ACCEPTANCE[number] = line
        print(line)
        return bool(passed)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[n])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
