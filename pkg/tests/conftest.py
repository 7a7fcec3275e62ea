import numpy as np
import pytest

from capcover.instance import euclidean_instance

# criterion id -> (passed, detail); filled by test_acceptance, printed in the summary
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def line_instance(points, centers, balls):
    """One-dimensional Euclidean instance from plain numbers."""
    return euclidean_instance([[p] for p in points], [[c] for c in centers], balls)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
