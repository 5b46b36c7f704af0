import numpy as np
import pytest
from hypothesis import strategies as st

from lapdet import graphs
from lapdet.multigraph import Multigraph


@pytest.fixture
def paw():
    return graphs.paw()


@pytest.fixture
def diamond():
    return graphs.diamond()


@pytest.fixture
def house():
    return graphs.house()


@pytest.fixture
def triangle():
    return graphs.triangle()


def random_connected_multigraph(rng: np.random.Generator, max_vertices=6, max_edges=10, min_vertices=2):
    """Random spanning tree plus random extra (possibly parallel) edges."""
    n = int(rng.integers(min_vertices, max_vertices + 1))
    edges = [(int(rng.integers(0, v)), v) for v in range(1, n)]
    extra = int(rng.integers(0, max_edges - (n - 1) + 1)) if max_edges > n - 1 else 0
    for _ in range(extra):
        a, b = rng.choice(n, size=2, replace=False)
        edges.append((int(a), int(b)))
    order = rng.permutation(len(edges))
    return Multigraph.from_edges([edges[i] for i in order], vertices=list(range(n)))


@st.composite
def connected_multigraphs(draw, max_vertices=6, max_edges=10, min_vertices=2):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_connected_multigraph(np.random.default_rng(seed), max_vertices, max_edges, min_vertices)


# one line per acceptance criterion in the terminal summary
_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    number, title = mark.args
    ok = _criteria.get(number, (title, True))[1] and not rep.failed
    if rep.when == "call" or rep.failed:
        _criteria[number] = (title, ok)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}")
