from pathlib import Path

import numpy as np
import pytest

from netsensors.epidemic import DiseaseModel, Dendrogram, SimulationConfig, run_ensemble
from netsensors.graph import load_network

FIXTURES = Path(__file__).parent / "fixtures"


def dendrogram(n, parents, days=None):
    """Dendrogram from a ``{child: parent}`` map.

    Nodes that appear only as parents are seeds (day 0); a child is infected
    the day after its parent unless ``days`` overrides it.
    """
    infector = np.full(n, -1, dtype=np.int64)
    day = np.full(n, -1, dtype=np.int64)
    nodes = set(parents) | set(parents.values())
    seeds = sorted(v for v in nodes if v not in parents)
    for v in seeds:
        day[v] = 0
    for c, p in parents.items():
        infector[c] = p
    # resolve days along parent chains
    changed = True
    while changed:
        changed = False
        for c, p in parents.items():
            if day[c] < 0 and day[p] >= 0:
                day[c] = day[p] + 1
                changed = True
    if days:
        for v, d in days.items():
            day[v] = d
    return Dendrogram(day, infector, np.array(seeds, dtype=np.int64))


@pytest.fixture(scope="session")
def small_city():
    return load_network(FIXTURES / "small_city.txt")


@pytest.fixture(scope="session")
def small_city_ensemble(small_city):
    return run_ensemble(small_city, DiseaseModel(), SimulationConfig(5, 200, 11), 40)


# one line per acceptance criterion, echoed after the test session
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
