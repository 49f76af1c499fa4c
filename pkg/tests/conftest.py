import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ellipsmt import Ellipsoid, Phantom, RadialGrid, boundary_quadrature, bump, sample_smt

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

E2 = Ellipsoid((1.3, 0.8))
E3 = Ellipsoid((1.0, 1.2, 0.8))
PHANTOM2 = Phantom((bump((0.2, -0.1), 0.35),))
PHANTOM3 = Phantom((bump((0.1, -0.1, 0.05), 0.45),))


@pytest.fixture(scope="session")
def data2d():
    """Bump phantom sampled at n_theta=256, K=512 on the (1.3, 0.8) ellipse."""
    bq = boundary_quadrature(E2, 256)
    return sample_smt(PHANTOM2, E2, bq, RadialGrid.for_ellipsoid(E2, 512))


@pytest.fixture(scope="session")
def data3d():
    """Bump phantom on the (1, 1.2, 0.8) ellipsoid: 64 x 32 boundary, K=256."""
    bq = boundary_quadrature(E3, 64, 32)
    return sample_smt(PHANTOM3, E3, bq, RadialGrid.for_ellipsoid(E3, 256), m_theta=128, m_phi=64)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the assertion is left to the test."""

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
