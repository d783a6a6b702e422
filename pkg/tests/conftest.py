import numpy as np
import pytest

from curvedchip.geometry import ProcessParams, ToolGeometry, build_turning_region, max_feed

# acceptance criterion -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def vtool():
    """Symmetric V insert with a 0.2 mm nose, cutting 1 mm deep."""
    return ToolGeometry.from_degrees(60, 60, 0.2)


@pytest.fixture(scope="session")
def vtool_region(vtool):
    def make(fraction, depth=1.0):
        return build_turning_region(vtool, ProcessParams(feed=fraction * max_feed(vtool, depth), depth=depth))
    return make


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
