import numpy as np
import pytest

from steinsq.grid import Grid


def random_equi(n: int, rng: np.random.Generator) -> Grid:
    """Uniformly shuffled multiset with every symbol exactly n times."""
    flat = np.repeat(np.arange(1, n + 1), n)
    rng.shuffle(flat)
    return Grid(flat.reshape(n, n), m=n)


def cyclic(n: int) -> Grid:
    i, j = np.indices((n, n))
    return Grid((i + j) % n + 1, m=n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def report(criterion: int, ok: bool, detail: str) -> None:
    line = f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
