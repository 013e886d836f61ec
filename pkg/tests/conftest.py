"""Shared fixtures and independent oracles.

The oracles deliberately avoid the package's own machinery: a heapq
Dijkstra over an adjacency dict, brute-force quadruple enumeration, and
simple-path enumeration.
"""
import heapq
import itertools
import math

import numpy as np
import pytest

from roughuniform.models import binary_tree, halfplane_grid
from roughuniform.metric import space_from_arrays

LOG3 = math.log(3.0)


def dijkstra_oracle(n, edges, lengths, src):
    adj = {i: [] for i in range(n)}
    for (u, v), w in zip(edges, lengths):
        adj[u].append((v, w))
        adj[v].append((u, w))
    dist = [math.inf] * n
    dist[src] = 0.0
    heap = [(0.0, src)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in adj[u]:
            if d + w < dist[v]:
                dist[v] = d + w
                heapq.heappush(heap, (d + w, v))
    return dist


def brute_delta(D):
    """max over all ordered quadruples of min((x|z)_o, (z|y)_o) - (x|y)_o, clamped at 0."""
    n = len(D)
    best = 0.0
    for x, y, z, o in itertools.product(range(n), repeat=4):
        g = lambda a, b: 0.5 * (D[a][o] + D[b][o] - D[a][b])  # noqa: E731
        best = max(best, min(g(x, z), g(z, y)) - g(x, y))
    return best


def simple_paths(adj, u, v, path=None):
    path = [u] if path is None else path
    if u == v:
        yield list(path)
        return
    for w in sorted(adj[u]):
        if w not in path:
            path.append(w)
            yield from simple_paths(adj, w, v, path)
            path.pop()


def path_graph(lengths, names=None):
    n = len(lengths) + 1
    names = names or [f"p{i}" for i in range(n)]
    edges = np.array([(i, i + 1) for i in range(n - 1)])
    return space_from_arrays(names, edges, np.asarray(lengths, dtype=float))


def cycle_graph(n, length=1.0):
    edges = np.array([(i, (i + 1) % n) for i in range(n)])
    return space_from_arrays([f"c{i}" for i in range(n)], edges, np.full(n, length))


@pytest.fixture(scope="session")
def tree6():
    return binary_tree(6)


@pytest.fixture(scope="session")
def small_grid():
    return halfplane_grid(x_range=(-2.0, 2.0), y_range=(0.25, 4.0))


@pytest.fixture(scope="session")
def tiny_grid():
    return halfplane_grid(x_range=(-2.0, 2.0), y_range=(0.25, 4.0), m=4)


@pytest.fixture(scope="session")
def default_grid():
    return halfplane_grid()


# one line per acceptance criterion, echoed again in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
