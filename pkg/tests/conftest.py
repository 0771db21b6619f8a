import numpy as np
import pytest

from poincare_invariants import grid as gf
from poincare_invariants.rigid_body import ChargeProfile

# Madelung constant of the simple cubic lattice with neutralizing background
MADELUNG_SC = -2.837297479480620


def periodic_gaussian_energy(sigma, L):
    """Electrostatic energy per cell of a unit Gaussian charge with background."""
    return (MADELUNG_SC / (8 * np.pi * L) + 1.0 / (8 * np.pi ** 1.5 * sigma)
            + sigma ** 2 / (2 * L ** 3))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def profile():
    return ChargeProfile(1.0)


@pytest.fixture
def grid16():
    return gf.GridSpec(16, 16.0)


@pytest.fixture
def grid32():
    return gf.GridSpec(32, 16.0)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_line():
    """Record one PASS/FAIL line for the end-of-run acceptance report."""
    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
