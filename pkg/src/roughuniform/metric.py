"""Finite metric spaces as weighted graphs.

A :class:`MetricSpace` is an immutable connected graph with positive edge
lengths together with its exact all-pairs shortest-path matrix.  Curves are
vertex paths along edges, parametrised by cumulative arclength.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

__all__ = [
    "GraphError",
    "MetricSpace",
    "Curve",
    "build_space",
    "space_from_arrays",
    "load_graph",
    "save_graph",
    "geodesic",
    "sample_along",
    "sample_indices",
]


class GraphError(ValueError):
    """Raised for malformed graph descriptions."""


def all_pairs(n: int, edges: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Symmetric shortest-path matrix of an undirected weighted graph."""
    if n == 0:
        return np.zeros((0, 0))
    if len(edges) == 0:
        dist = np.full((n, n), np.inf)
        np.fill_diagonal(dist, 0.0)
        return dist
    graph = csr_matrix((weights, (edges[:, 0], edges[:, 1])), shape=(n, n))
    dist = dijkstra(graph, directed=False)
    # per-source summation order can differ in the last ulp
    np.minimum(dist, dist.T, out=dist)
    np.fill_diagonal(dist, 0.0)
    return dist


@dataclass(eq=False)
class MetricSpace:
    """Connected weighted graph with its shortest-path metric.

    Attributes
    ----------
    ids : tuple of str
        Vertex identifiers; position in the tuple is the vertex index.
    edges : ndarray, shape (E, 2)
        Endpoint indices, one row per undirected edge.
    lengths : ndarray, shape (E,)
        Positive edge lengths.
    dist : ndarray, shape (n, n)
        Shortest-path distances.
    coords : ndarray, shape (n, 2), optional
        Model coordinates, if the graph came from a geometric model.
    anchors, frontier, base
        Optional annotations carried through the graph JSON format.
    model : dict, optional
        Description of the generating model (``{"kind": "halfplane", ...}``).
    """

    ids: tuple[str, ...]
    edges: np.ndarray
    lengths: np.ndarray
    dist: np.ndarray
    coords: np.ndarray | None = None
    anchors: dict[str, list[str]] = field(default_factory=dict)
    frontier: list[str] = field(default_factory=list)
    base: str | None = None
    model: dict[str, Any] | None = None

    @property
    def n(self) -> int:
        return len(self.ids)

    def __len__(self) -> int:
        return len(self.ids)

    def __repr__(self) -> str:
        kind = self.model.get("kind") if self.model else "graph"
        return f"MetricSpace({kind}, n={self.n}, edges={len(self.edges)})"

    @cached_property
    def index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.ids)}

    def idx(self, v: str | int) -> int:
        """Index of a vertex given by id or by index."""
        if isinstance(v, (int, np.integer)):
            if not 0 <= v < self.n:
                raise KeyError(f"vertex index {v} out of range")
            return int(v)
        try:
            return self.index[v]
        except KeyError:
            raise KeyError(f"unknown vertex {v!r}") from None

    def indices(self, vs: Iterable[str | int]) -> np.ndarray:
        return np.array([self.idx(v) for v in vs], dtype=np.int64)

    @cached_property
    def lex_rank(self) -> np.ndarray:
        """Rank of each vertex in lexicographic order of ids."""
        order = sorted(range(self.n), key=self.ids.__getitem__)
        rank = np.empty(self.n, dtype=np.int64)
        rank[order] = np.arange(self.n)
        return rank

    @cached_property
    def adjacency(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR-style ``(indptr, neighbours, edge_index)`` arrays."""
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        eid = np.concatenate([np.arange(len(self.edges))] * 2)
        order = np.lexsort((dst, src))
        src, dst, eid = src[order], dst[order], eid[order]
        indptr = np.searchsorted(src, np.arange(self.n + 1))
        return indptr, dst, eid

    @cached_property
    def edge_lookup(self) -> dict[tuple[int, int], int]:
        table = {}
        for e, (u, v) in enumerate(self.edges.tolist()):
            table[(u, v)] = e
            table[(v, u)] = e
        return table

    def edge_index(self, u: int, v: int) -> int:
        try:
            return self.edge_lookup[(u, v)]
        except KeyError:
            raise GraphError(f"no edge between {self.ids[u]!r} and {self.ids[v]!r}") from None

    def neighbours(self, u: int) -> np.ndarray:
        indptr, nbr, _ = self.adjacency
        return nbr[indptr[u]:indptr[u + 1]]

    @property
    def scale(self) -> float:
        return float(self.dist.max()) if self.n else 0.0

    @property
    def tol(self) -> float:
        """Absolute tolerance for comparisons of summed lengths."""
        return 1e-9 * (1.0 + self.scale)

    @property
    def max_edge(self) -> float:
        return float(self.lengths.max()) if len(self.lengths) else 0.0

    @property
    def diameter(self) -> float:
        return self.scale

    def d(self, u: str | int, v: str | int) -> float:
        return float(self.dist[self.idx(u), self.idx(v)])

    def nearest(self, point: Sequence[float]) -> int:
        """Index of the vertex whose coordinates are closest to ``point``."""
        if self.coords is None:
            raise GraphError("space has no coordinates")
        d2 = ((self.coords - np.asarray(point, dtype=float)) ** 2).sum(axis=1)
        return int(np.argmin(d2))

    def with_lengths(self, lengths: np.ndarray, **changes: Any) -> "MetricSpace":
        """Same graph with new edge lengths (distances recomputed)."""
        lengths = np.asarray(lengths, dtype=float)
        kw = dict(
            coords=self.coords,
            anchors=dict(self.anchors),
            frontier=list(self.frontier),
            base=self.base,
            model=self.model,
        )
        kw.update(changes)
        return space_from_arrays(self.ids, self.edges, lengths, **kw)

    def to_dict(self) -> dict[str, Any]:
        verts = []
        for i, v in enumerate(self.ids):
            rec: dict[str, Any] = {"id": v}
            if self.coords is not None:
                rec["x"] = float(self.coords[i, 0])
                rec["y"] = float(self.coords[i, 1])
            verts.append(rec)
        out: dict[str, Any] = {
            "vertices": verts,
            "edges": [
                {"u": self.ids[u], "v": self.ids[v], "len": float(w)}
                for (u, v), w in zip(self.edges.tolist(), self.lengths.tolist())
            ],
            "anchors": {k: list(s) for k, s in self.anchors.items()},
            "frontier": list(self.frontier),
        }
        if self.base is not None:
            out["base"] = self.base
        if self.model is not None:
            out["model"] = self.model
        return out


def space_from_arrays(
    ids: Sequence[str],
    edges: np.ndarray,
    lengths: np.ndarray,
    *,
    coords: np.ndarray | None = None,
    anchors: Mapping[str, Sequence[str]] | None = None,
    frontier: Sequence[str] | None = None,
    base: str | None = None,
    model: dict[str, Any] | None = None,
) -> MetricSpace:
    """Build a space from index arrays; validates and computes distances."""
    ids = tuple(str(v) for v in ids)
    n = len(ids)
    if n == 0:
        raise GraphError("graph has no vertices")
    if len(set(ids)) != n:
        raise GraphError("duplicate vertex ids")
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    lengths = np.asarray(lengths, dtype=float).reshape(-1)
    if len(edges) != len(lengths):
        raise GraphError("edges and lengths differ in size")
    bad = np.flatnonzero(~(lengths > 0) | ~np.isfinite(lengths))
    if len(bad):
        u, v = edges[bad[0]]
        raise GraphError(
            f"edge ({ids[u]!r}, {ids[v]!r}) has non-positive length {lengths[bad[0]]!r}"
        )
    loops = np.flatnonzero(edges[:, 0] == edges[:, 1])
    if len(loops):
        raise GraphError(f"self-loop at {ids[edges[loops[0], 0]]!r}")
    # parallel edges: keep the shortest
    if len(edges):
        key = np.sort(edges, axis=1)
        order = np.lexsort((lengths, key[:, 1], key[:, 0]))
        key, lengths = key[order], lengths[order]
        first = np.ones(len(key), dtype=bool)
        first[1:] = np.any(key[1:] != key[:-1], axis=1)
        edges, lengths = key[first], lengths[first]

    dist = all_pairs(n, edges, lengths)
    if n and not np.isfinite(dist).all():
        i, j = np.argwhere(~np.isfinite(dist))[0]
        raise GraphError(f"graph is disconnected: no path between {ids[i]!r} and {ids[j]!r}")

    space = MetricSpace(
        ids=ids,
        edges=edges,
        lengths=lengths,
        dist=dist,
        coords=None if coords is None else np.asarray(coords, dtype=float),
        anchors={k: [str(v) for v in s] for k, s in (anchors or {}).items()},
        frontier=[str(v) for v in (frontier or [])],
        base=None if base is None else str(base),
        model=model,
    )
    for name, seq in space.anchors.items():
        for v in seq:
            if v not in space.index:
                raise GraphError(f"anchor {name!r} references unknown vertex {v!r}")
    for v in space.frontier:
        if v not in space.index:
            raise GraphError(f"frontier references unknown vertex {v!r}")
    if space.base is not None and space.base not in space.index:
        raise GraphError(f"unknown base vertex {space.base!r}")
    return space


def build_space(description: Mapping[str, Any]) -> MetricSpace:
    """Build a space from a graph description in the JSON schema.

    ``{"vertices": [{"id", "x"?, "y"?}], "edges": [{"u", "v", "len"}],
    "anchors": {name: [ids]}, "frontier": [ids], "base": id}``
    """
    verts = description.get("vertices", [])
    ids = [str(v["id"]) if isinstance(v, Mapping) else str(v) for v in verts]
    index = {v: i for i, v in enumerate(ids)}
    coords = None
    if verts and all(isinstance(v, Mapping) and "x" in v and "y" in v for v in verts):
        coords = np.array([[float(v["x"]), float(v["y"])] for v in verts])
    pairs, lengths = [], []
    for e in description.get("edges", []):
        u, v = str(e["u"]), str(e["v"])
        for w in (u, v):
            if w not in index:
                raise GraphError(f"edge ({u!r}, {v!r}) references unknown vertex {w!r}")
        length = float(e["len"])
        if not length > 0:
            raise GraphError(f"edge ({u!r}, {v!r}) has non-positive length {length!r}")
        pairs.append((index[u], index[v]))
        lengths.append(length)
    return space_from_arrays(
        ids,
        np.array(pairs, dtype=np.int64).reshape(-1, 2),
        np.array(lengths, dtype=float),
        coords=coords,
        anchors=description.get("anchors"),
        frontier=description.get("frontier"),
        base=description.get("base"),
        model=description.get("model"),
    )


def load_graph(path: str | Path) -> MetricSpace:
    with open(path, encoding="utf-8") as fh:
        return build_space(json.load(fh))


def save_graph(space: MetricSpace, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(space.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")


@dataclass(eq=False)
class Curve:
    """Edge path in a space, parametrised by cumulative arclength."""

    space: MetricSpace
    path: np.ndarray
    cum_length: np.ndarray

    @classmethod
    def from_path(cls, space: MetricSpace, vertices: Iterable[str | int]) -> "Curve":
        path = space.indices(vertices)
        if len(path) == 0:
            raise GraphError("empty curve")
        steps = np.array(
            [space.lengths[space.edge_index(u, v)] for u, v in zip(path[:-1], path[1:])],
            dtype=float,
        )
        cum = np.concatenate([[0.0], np.cumsum(steps)])
        return cls(space, path, cum)

    @property
    def length(self) -> float:
        return float(self.cum_length[-1])

    @property
    def ids(self) -> list[str]:
        return [self.space.ids[i] for i in self.path]

    @property
    def start(self) -> int:
        return int(self.path[0])

    @property
    def end(self) -> int:
        return int(self.path[-1])

    def __len__(self) -> int:
        return len(self.path)

    def edge_indices(self) -> np.ndarray:
        lookup = self.space.edge_lookup
        return np.array(
            [lookup[(u, v)] for u, v in zip(self.path[:-1].tolist(), self.path[1:].tolist())],
            dtype=np.int64,
        )

    def subcurve(self, i: int, j: int) -> "Curve":
        """Piece between path positions ``i`` and ``j`` (inclusive)."""
        if not 0 <= i <= j < len(self.path):
            raise IndexError("subcurve positions out of range")
        cum = self.cum_length[i:j + 1] - self.cum_length[i]
        return Curve(self.space, self.path[i:j + 1].copy(), cum)

    def reversed(self) -> "Curve":
        return Curve(self.space, self.path[::-1].copy(), self.length - self.cum_length[::-1])

    def __add__(self, other: "Curve") -> "Curve":
        if other.space is not self.space:
            raise GraphError("cannot join curves from different spaces")
        if self.end != other.start:
            raise GraphError("curves do not share an endpoint")
        cum = np.concatenate([self.cum_length, self.length + other.cum_length[1:]])
        return Curve(self.space, np.concatenate([self.path, other.path[1:]]), cum)


def shortest_path(
    space: MetricSpace,
    u: int,
    v: int,
    weights: np.ndarray,
    dist_to_v: np.ndarray,
    tol: float,
) -> np.ndarray:
    """Lexicographically smallest shortest vertex path from ``u`` to ``v``.

    ``dist_to_v`` holds distances to ``v`` under ``weights``.  Greedy choice
    of the smallest admissible next vertex yields the lexicographic minimum
    because every admissible prefix extends to a shortest path.
    """
    indptr, nbr, eid = space.adjacency
    rank = space.lex_rank
    path = [u]
    seen = {u}
    cur = u
    while cur != v:
        sl = slice(indptr[cur], indptr[cur + 1])
        cand = nbr[sl]
        slack = weights[eid[sl]] + dist_to_v[cand] - dist_to_v[cur]
        # edges lighter than tol could otherwise close a cycle
        ok = cand[(slack <= tol) & np.array([c not in seen for c in cand.tolist()], dtype=bool)]
        if len(ok) == 0:
            raise GraphError("distance table inconsistent with edge weights")
        cur = int(ok[np.argmin(rank[ok])])
        seen.add(cur)
        path.append(cur)
    return np.array(path, dtype=np.int64)


def geodesic(space: MetricSpace, u: str | int, v: str | int) -> Curve:
    """Shortest curve from ``u`` to ``v`` with lexicographic tie-breaking."""
    iu, iv = space.idx(u), space.idx(v)
    path = shortest_path(space, iu, iv, space.lengths, space.dist[:, iv], space.tol)
    steps = space.lengths[[space.edge_lookup[(a, b)] for a, b in zip(path[:-1].tolist(), path[1:].tolist())]]
    return Curve(space, path, np.concatenate([[0.0], np.cumsum(steps)]))


def sample_indices(curve: Curve, q: float) -> tuple[np.ndarray, np.ndarray]:
    """Positions along ``curve`` nearest to arclengths ``0, q, 2q, ...``.

    Returns ``(positions, arclengths)`` where ``positions`` index into
    ``curve.path``.  Ties snap to the earlier vertex.
    """
    if not q > 0:
        raise ValueError("step q must be positive")
    L = curve.length
    count = int(np.floor(L / q + 1e-9)) + 1
    targets = np.arange(count) * q
    cum = curve.cum_length
    hi = np.clip(np.searchsorted(cum, targets, side="left"), 0, len(cum) - 1)
    lo = np.clip(hi - 1, 0, len(cum) - 1)
    pick = np.where(np.abs(cum[lo] - targets) <= np.abs(cum[hi] - targets), lo, hi)
    return pick, cum[pick]


def sample_along(curve: Curve, q: float) -> list[tuple[str, float]]:
    """Snapped sample points ``a_i`` at arclength ``i*q`` along ``curve``."""
    pos, s = sample_indices(curve, q)
    return [(curve.space.ids[curve.path[p]], float(t)) for p, t in zip(pos, s)]
