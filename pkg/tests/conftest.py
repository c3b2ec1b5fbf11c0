import networkx as nx
import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from reconplan import Mission, Plan, library

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_mission(rng: np.random.Generator, n: int, density: float = 0.5,
                   zero_p: float = 0.15, zero_w: float = 0.15) -> Mission:
    """Connected random mission: a random spanning tree plus extra edges."""
    q = np.zeros((n, n))
    order = rng.permutation(n)
    for k in range(1, n):
        a, b = order[k], order[rng.integers(k)]
        q[a, b] = q[b, a] = rng.uniform(0.05, 1.0)
    for a in range(n):
        for b in range(a + 1, n):
            if q[a, b] == 0 and rng.random() < density:
                q[a, b] = q[b, a] = rng.uniform(0.05, 1.0)
    p = np.where(rng.random(n) < zero_p, 0.0, rng.uniform(0.05, 1.0, n))
    w = np.where(rng.random(n) < zero_w, 0.0, rng.uniform(0.0, 3.0, n))
    p[0], w[0] = 1.0, 0.0
    return Mission(q=q, p=p, w=w)


def random_plan(rng: np.random.Generator, m: Mission, max_len: int, p_send: float = 0.4) -> Plan:
    """Random walk from the base, closed by a shortest path home, with random sends."""
    length = int(rng.integers(0, max_len + 1))
    route = [0]
    for _ in range(length):
        nb = m.neighbors(route[-1])
        route.append(int(nb[rng.integers(len(nb))]))
    if route[-1] != 0:
        route += nx.shortest_path(m.graph(), route[-1], 0)[1:]
    k = len(route)
    if k == 1:
        return Plan((0,), (1,))
    send = [0] + [int(rng.random() < p_send) for _ in range(k - 2)] + [1]
    return Plan(tuple(route), tuple(send))


@st.composite
def missions(draw, min_n=2, max_n=7):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(min_n, max_n))
    return random_mission(np.random.default_rng(seed), n)


@st.composite
def missions_with_plans(draw, min_n=2, max_n=7, max_len=25, drones=1):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(min_n, max_n))
    rng = np.random.default_rng(seed)
    m = random_mission(rng, n)
    plans = [random_plan(rng, m, max_len) for _ in range(drones)]
    return m, plans


@pytest.fixture(scope="session")
def fig1():
    return library.mission("fig1")


@pytest.fixture(scope="session")
def k10():
    return library.mission("k10")


@pytest.fixture(scope="session")
def k6():
    return library.mission("k6-multi")


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
