"""Gromov products and the four-point hyperbolicity constant."""
from __future__ import annotations

import os
from dataclasses import dataclass

import networkx as nx
import numba
import numpy as np

from .metric import MetricSpace

__all__ = [
    "HyperbolicityReport",
    "CapExceeded",
    "gromov_product",
    "gromov_products",
    "delta_four_point",
    "quadruple_delta",
]

DEFAULT_CAP = 300

# the default layer probes TBB first and warns on old system builds
if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "omp"


class CapExceeded(ValueError):
    """Exact four-point enumeration requested on too large a block."""


@dataclass(frozen=True)
class HyperbolicityReport:
    delta: float
    witness: tuple[str, str, str, str]
    mode: str
    count: int | None = None

    def to_dict(self) -> dict:
        mode = self.mode if self.count is None else f"{self.mode}({self.count})"
        return {"delta": self.delta, "witness": list(self.witness), "mode": mode}


def gromov_product(space: MetricSpace, x, y, o) -> float:
    """``(x|y)_o = (d(x,o) + d(y,o) - d(x,y)) / 2``."""
    D = space.dist
    i, j, k = space.idx(x), space.idx(y), space.idx(o)
    return 0.5 * (D[i, k] + D[j, k] - D[i, j])


def gromov_products(dist: np.ndarray, o: int) -> np.ndarray:
    """Matrix of ``(x|y)_o`` over all ``x, y``."""
    row = dist[o]
    return 0.5 * (row[:, None] + row[None, :] - dist)


def quadruple_delta(dist: np.ndarray, x: int, y: int, z: int, o: int) -> float:
    """``min{(x|z)_o, (z|y)_o} - (x|y)_o`` for one ordered quadruple."""
    g = lambda a, b: 0.5 * (dist[a, o] + dist[b, o] - dist[a, b])  # noqa: E731
    return min(g(x, z), g(z, y)) - g(x, y)


@numba.njit(cache=True, parallel=True)
def _four_point_kernel(D):
    # max over i<j<k<l of (largest - middle) of the three pair sums
    n = D.shape[0]
    best = np.zeros(n)
    arg = np.zeros((n, 2), dtype=np.int64)
    for i in numba.prange(n):
        Di = D[i]
        bi = 0.0
        for j in range(i + 1, n):
            Dj = D[j]
            a = Di[j]
            for k in range(j + 1, n):
                Dk = D[k]
                dik = Di[k]
                djk = Dj[k]
                m = 0.0
                for l in range(k + 1, n):
                    s1 = a + Dk[l]
                    s2 = dik + Dj[l]
                    s3 = Di[l] + djk
                    hi = max(s1, max(s2, s3))
                    lo = min(s1, min(s2, s3))
                    v = hi - (s1 + s2 + s3 - hi - lo)
                    if v > m:
                        m = v
                if m > bi:
                    bi = m
                    arg[i, 0] = j
                    arg[i, 1] = k
        best[i] = bi
    return best, arg


def _complete_witness(D: np.ndarray, i: int, j: int, k: int) -> tuple[int, int, int, int, float]:
    best, bl = -1.0, k
    for l in range(k + 1, D.shape[0]):
        s = sorted([D[i, j] + D[k, l], D[i, k] + D[j, l], D[i, l] + D[j, k]])
        if s[2] - s[1] > best:
            best, bl = s[2] - s[1], l
    return i, j, k, bl, best / 2


def _arrange(D: np.ndarray, a: int, b: int, c: int, d: int) -> tuple[int, int, int, int]:
    """Order a quadruple as ``(x, y, z, o)`` so that the base-point form
    reproduces its four-point value: ``d(x,y) + d(z,o)`` is the largest sum."""
    pairings = [((a, b), (c, d)), ((a, c), (b, d)), ((a, d), (b, c))]
    (x, y), (z, o) = max(pairings, key=lambda p: D[p[0]] + D[p[1]])
    return x, y, z, o


def _blocks(space: MetricSpace) -> list[np.ndarray]:
    g = nx.Graph()
    g.add_nodes_from(range(space.n))
    g.add_edges_from(space.edges.tolist())
    return [np.array(sorted(b)) for b in nx.biconnected_components(g)]


def delta_four_point(
    space: MetricSpace,
    sampled: int | None = None,
    seed: int = 0,
    cap: int = DEFAULT_CAP,
) -> HyperbolicityReport:
    """Four-point hyperbolicity constant of ``space``.

    Exact mode (``sampled=None``) maximises over all quadruples.  Shortest
    paths between vertices of one biconnected block stay inside the block,
    and a quadruple spread over several blocks has value bounded by one
    inside a single block, so the enumeration runs block by block; ``cap``
    limits the largest block.

    Sampled mode draws ``sampled`` uniform quadruples from ``seed`` and
    returns their maximum, a lower bound on the exact value.
    """
    D = space.dist
    n = space.n
    trivial = (space.ids[0],) * 4 if n else ("",) * 4

    if sampled is not None:
        if sampled < 1:
            raise ValueError("sampled mode needs count >= 1")
        rng = np.random.default_rng(seed)
        q = rng.integers(0, n, size=(sampled, 4))
        a, b, c, d = q.T
        s = np.sort(np.stack([D[a, b] + D[c, d], D[a, c] + D[b, d], D[a, d] + D[b, c]]), axis=0)
        vals = 0.5 * (s[2] - s[1])
        t = int(np.argmax(vals))
        if vals[t] <= 0:
            return HyperbolicityReport(0.0, trivial, "sampled", sampled)
        w = _arrange(D, *q[t])
        return HyperbolicityReport(float(vals[t]), tuple(space.ids[i] for i in w), "sampled", sampled)

    best, witness = 0.0, None
    for block in _blocks(space):
        if len(block) < 4:
            continue
        if len(block) > cap:
            raise CapExceeded(
                f"exact four-point enumeration over a block of {len(block)} vertices exceeds "
                f"cap={cap}; use sampled mode (sampled=N) or raise the cap"
            )
        sub = np.ascontiguousarray(D[np.ix_(block, block)])
        vals, arg = _four_point_kernel(sub)
        i = int(np.argmax(vals))
        if vals[i] / 2 > best:
            a, b, c, dd, val = _complete_witness(sub, i, int(arg[i, 0]), int(arg[i, 1]))
            best = val
            witness = tuple(int(block[t]) for t in _arrange(sub, a, b, c, dd))
    if witness is None:
        return HyperbolicityReport(0.0, trivial, "exact")
    return HyperbolicityReport(float(best), tuple(space.ids[i] for i in witness), "exact")
