import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ocm import BipartiteInstance, parse_instance  # noqa: E402

E1_TEXT = "p ocm 3 3 5\n2 6\n1 6\n2 5\n2 4\n3 4\n"
E2_EDGES = [(1, 12), (2, 12), (3, 10), (4, 10), (5, 11), (6, 12), (7, 12), (8, 12), (9, 10)]
E3_EDGES = [
    (1, 5), (1, 7), (1, 9), (2, 5), (2, 7), (2, 9),
    (3, 6), (3, 8), (3, 10), (4, 6), (4, 8), (4, 10),
]


@pytest.fixture
def e1():
    return parse_instance(E1_TEXT)


@pytest.fixture
def e2():
    return BipartiteInstance.from_edges(9, 3, E2_EDGES)


@pytest.fixture
def e3():
    return BipartiteInstance.from_edges(4, 6, E3_EDGES)


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call" or "test_acceptance.py::test_criterion_" not in rep.nodeid:
                continue
            name = rep.nodeid.split("::")[-1]
            number = int(name.split("_")[2])
            detail = dict(rep.user_properties).get("detail", "")
            lines.append((number, f"criterion {number}: {'PASS' if rep.passed else 'FAIL'}  {detail}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
