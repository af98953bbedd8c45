import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hvlasov import ComplexField, PhaseGrid

settings.register_profile(
    "default", deadline=None, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


def gaussian_field(grid, x0=0.0, v0=0.0, sx=0.6, sv=1.0, kick=0.0):
    """Normalized Gaussian bump, optionally with a position-dependent phase."""
    X, V = grid.mesh()
    vals = np.exp(-((X - x0) ** 2) / (2 * sx**2) - (V - v0) ** 2 / (2 * sv**2))
    vals = vals * np.exp(1j * kick * np.sin(X))
    return ComplexField(grid, vals).normalized()


@pytest.fixture
def grid32():
    return PhaseGrid.square(32)


@pytest.fixture
def grid64():
    return PhaseGrid.square(64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def torus_points(n):
    return -math.pi + 2 * math.pi * np.arange(n) / n


ACCEPTANCE_LINES = []


def report_criterion(number, title, passed, detail):
    """Print and remember one pass/fail line for an acceptance criterion."""
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
