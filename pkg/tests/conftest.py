import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ccldgm import EnsembleSpec, sample, sample_source

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: takes more than a few seconds")
    config.addinivalue_line("markers", "acceptance: acceptance criteria")


@pytest.fixture
def small_coupled():
    spec = EnsembleSpec(3, 6, 40, 8, 2)
    g = sample(spec, 11)
    return g, sample_source(g.num_generators, 12)


@pytest.fixture
def small_uncoupled():
    spec = EnsembleSpec(3, 6, 60)
    g = sample(spec, 21)
    return g, sample_source(g.num_generators, 22)


def dense_matrix(graph):
    """Generator-by-code-bit incidence matrix mod 2 (alive edges)."""
    G = np.zeros((graph.num_generators, graph.num_code_bits), dtype=np.int64)
    for a, i in graph.edge_list():
        G[a, i] += 1
    return G % 2


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
