import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wpcn_placement.model import Device, Region, Scenario

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def make_scenario(points, box=24.0, a1=50e-6, a2=1.4e-6, gamma=0.0, region=None) -> Scenario:
    devices = tuple(Device(float(x), float(y), a1, a2) for x, y in points)
    return Scenario(devices=devices, region=region or Region.square(box), gamma=gamma)


@pytest.fixture
def two_groups() -> Scenario:
    """Eight devices in two tight, well separated groups."""
    rng = np.random.default_rng(11)
    left = np.array([5.0, 6.0]) + rng.uniform(-1, 1, size=(4, 2))
    right = np.array([18.0, 17.0]) + rng.uniform(-1, 1, size=(4, 2))
    return make_scenario(np.vstack([left, right]))
