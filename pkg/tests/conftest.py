import numpy as np
import pytest

from dualdecomp import ConsensusProblem, ConstraintSet, QuadraticCost

ACCEPTANCE_LINES = []


def record_criterion(number, title, passed, detail=""):
    line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}"
    if detail:
        line += f"  [{detail}]"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


def random_problem(rng, m=5, n=1, box=None, diagonal=True):
    costs = []
    for _ in range(m):
        if diagonal:
            mat = np.diag(rng.uniform(0.5, 2.0, size=n))
        else:
            b = rng.normal(size=(n, n))
            mat = b @ b.T + 0.5 * np.eye(n)
        costs.append(QuadraticCost(mat, rng.uniform(-4, 4, size=n)))
    cons = ConstraintSet.box(box) if box else ConstraintSet()
    return ConsensusProblem(m, n, tuple(costs), cons)


@pytest.fixture
def two_node():
    """f_1 = y^2, f_2 = y^2 - 4y: optimum y* = 1, lambda* = -2, p* = -2."""
    return ConsensusProblem.from_arrays([[[1.0]], [[1.0]]], [[0.0], [-4.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
