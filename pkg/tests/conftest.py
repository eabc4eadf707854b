import math
from pathlib import Path

import numpy as np
import pytest

from bst.boundary import BoundarySpec, circle_spec, ellipse_spec, validate_spec

DOMAINS = Path(__file__).resolve().parent.parent / "domains"

# filled by test_acceptance, printed at the end of the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def circle():
    return validate_spec(circle_spec())


@pytest.fixture(scope="session")
def ellipse():
    return validate_spec(ellipse_spec(2.0, 1.0))


@pytest.fixture(scope="session")
def nearcircle():
    return validate_spec(BoundarySpec(((0, 1.0, 0.0), (2, 0.05, 0.0)), label="near circle"))


@pytest.fixture(scope="session")
def generic():
    return validate_spec(BoundarySpec(((0, 1.0, 0.0), (2, 0.05, 0.0), (4, 0.01, 0.004)), label="generic"))


def random_spec(rng, n_modes=3, amp=0.04):
    """Random centrally symmetric, convex-ish radial spec."""
    rows = [(0, 1.0, 0.0)]
    for k in range(1, n_modes + 1):
        scale = amp / k**2
        rows.append((2 * k, rng.uniform(-scale, scale), rng.uniform(-scale, scale)))
    return BoundarySpec(tuple(rows), rotation=rng.uniform(0, math.pi))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
