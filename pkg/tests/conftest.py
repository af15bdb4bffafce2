import hypothesis
import numpy as np
import pytest

from qgrf.graph import Graph, generate_er, generate_structured

hypothesis.settings.register_profile("default", max_examples=40, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.load_profile("default")


def karate():
    nx = pytest.importorskip("networkx")
    kg = nx.karate_club_graph()
    return Graph.from_edges(kg.number_of_nodes(), [(u, v) for u, v in kg.edges()])


def small_suite():
    """(name, graph) pairs with n <= 34 used by the unbiasedness checks."""
    out = [
        ("path", generate_structured("path", 4)),
        ("triangle", generate_structured("complete", 3)),
        ("k5", generate_structured("complete", 5)),
        ("er20", generate_er(20, 0.4, seed=0)),
    ]
    try:
        out.append(("karate", karate()))
    except pytest.skip.Exception:
        pass
    return out


def inv_sq(u):
    """Independent oracle for (I - U)^{-2}."""
    a = np.linalg.inv(np.eye(len(u)) - u)
    return a @ a


@pytest.fixture
def karate_graph():
    return karate()


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
