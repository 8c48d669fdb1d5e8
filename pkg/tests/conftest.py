import pytest
from hypothesis import HealthCheck, settings

from wavefront_lab import kernels
from wavefront_lab.nonlinear import WaveModel, linear, saturating

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def kpp(L=None, kernel=None):
    """f(u) = u, g(u) = 2u/(1+u): c* = 2 for the local kernel."""
    return WaveModel(linear(1.0), saturating(2.0, 1.0), kernel or kernels.PointMass(0.0, 0.0), L)


@pytest.fixture
def kpp_model():
    return kpp()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
