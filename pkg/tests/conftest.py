import math

import numpy as np
import pytest

from uonn.mesh import CLEMENTS, MeshLayout, clements_layout
from uonn.network import Network, MeshLayer


def single_mzi_network(theta: float, phi: float = 0.0) -> Network:
    """N=2 network holding one MZI and a zero input screen."""
    base = clements_layout(2)
    return Network(2, (MeshLayer(base.with_parameters([theta, phi, 0.0, 0.0])),))


def phase_network(theta: float) -> Network:
    """N=2 network acting as diag(e^{i theta}, 1): identity MZI, screen phase on mode 0."""
    base = clements_layout(2)
    return Network(2, (MeshLayer(base.with_parameters([math.pi, math.pi, theta, 0.0])),))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = sorted(getattr(mod, "RESULTS", []))
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
