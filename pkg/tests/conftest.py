import numpy as np
import pytest

from pdlmba.netcore import FrequencyGrid
from pdlmba.sfg import FlowGraph

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one acceptance verdict line; printed in the terminal summary."""
    def _report(criterion: str, passed: bool, detail: str, status: str | None = None) -> None:
        status = status or ("PASS" if passed else "FAIL")
        ACCEPTANCE_LINES.append(f"[{status}] {criterion}: {detail}")
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def band():
    """181-point 0.2-2 GHz grid."""
    return FrequencyGrid.linspace(0.2e9, 2e9, 181)


@pytest.fixture
def small_grid():
    return FrequencyGrid.linspace(1e9, 2e9, 5)


def random_graph(rng: np.random.Generator, n_nodes: int, n_branches: int, n_points: int = 4,
                 radius: float = 0.85, self_loops: bool = True) -> tuple[FlowGraph, str, str]:
    """Random graph with a dedicated source ``s`` feeding a random core.

    Gains are rescaled so the spectral radius of the core adjacency stays
    below ``radius`` at every frequency. Returns ``(graph, source, sink)``.
    """
    core = [f"n{i:02d}" for i in range(n_nodes - 1)]
    pairs = [(u, v) for u in core for v in core if self_loops or u != v]
    idx = rng.choice(len(pairs), size=min(n_branches - 1, len(pairs)), replace=False)
    edges = [pairs[i] for i in idx]
    gains = rng.normal(size=(len(edges), n_points)) + 1j * rng.normal(size=(len(edges), n_points))
    a = np.zeros((n_points, len(core), len(core)), dtype=complex)
    pos = {n: i for i, n in enumerate(core)}
    for (u, v), g in zip(edges, gains):
        a[:, pos[v], pos[u]] = g
    rho = max(np.abs(np.linalg.eigvals(a[k])).max() for k in range(n_points))
    if rho > 0:
        gains *= radius * rng.uniform(0.3, 1.0) / rho
    entry = core[int(rng.integers(len(core)))]
    branches = [(u, v, g) for (u, v), g in zip(edges, gains)]
    branches.append(("s", entry, rng.normal(size=n_points) + 1j * rng.normal(size=n_points)))
    sink = core[int(rng.integers(len(core)))]
    return FlowGraph.from_branches(branches, nodes=core, n_points=n_points), "s", sink
