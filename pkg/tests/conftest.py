import pytest

from dnlab.graph import build_graph, lattice_graph
from dnlab.star import StarGraph

# criterion number -> (passed, seconds, budget); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, float, float]] = {}


@pytest.fixture(scope="session")
def star():
    """N=3, b_k = 2^k, depth 30."""
    return StarGraph.uniform(3, "geometric:2", 30)


@pytest.fixture(scope="session")
def deep_star():
    return StarGraph.uniform(3, "geometric:2", 40)


@pytest.fixture(scope="session")
def mixed_star():
    return StarGraph(3, ("geometric:2", "geometric:3", "power:2"), 40)


@pytest.fixture(scope="session")
def two_vertex():
    return build_graph({
        "vertices": ["a", "b"],
        "edges": [{"u": "a", "v": "b", "w": 1}],
        "killing": [{"v": "a", "c": 1}],
    })


@pytest.fixture(scope="session")
def z3():
    return lattice_graph(3, 6)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, secs, budget = ACCEPTANCE[n]
        terminalreporter.write_line(
            f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  ({secs:.3f} s, budget {budget:g} s)"
        )
