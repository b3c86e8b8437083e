import numpy as np
import pytest

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        passed, title, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}")


@pytest.fixture(scope="session")
def record():
    """record(num, passed, title, detail) stores one acceptance line."""

    def _record(num, passed, title, detail):
        ACCEPTANCE[num] = (bool(passed), title, detail)
        return passed

    return _record
