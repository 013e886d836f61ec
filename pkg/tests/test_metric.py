import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roughuniform.metric import (
    Curve,
    GraphError,
    build_space,
    geodesic,
    load_graph,
    sample_along,
    save_graph,
    space_from_arrays,
)

from conftest import cycle_graph, dijkstra_oracle, path_graph, simple_paths


@st.composite
def connected_graphs(draw, max_n=9):
    n = draw(st.integers(1, max_n))
    edges, lengths = [], []
    # random spanning tree, then extra edges
    for v in range(1, n):
        edges.append((draw(st.integers(0, v - 1)), v))
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=2 * n))
    edges += [(a, b) for a, b in extra if a != b]
    lengths = draw(
        st.lists(st.floats(0.05, 10.0, allow_nan=False), min_size=len(edges), max_size=len(edges))
    )
    return n, np.array(edges, dtype=np.int64).reshape(-1, 2), np.array(lengths)


def _space(g):
    n, edges, lengths = g
    return space_from_arrays([f"v{i}" for i in range(n)], edges, lengths)


def test_path_distances():
    s = build_space(
        {"vertices": [{"id": "a"}, {"id": "o"}, {"id": "b"}],
         "edges": [{"u": "a", "v": "o", "len": 2}, {"u": "o", "v": "b", "len": 2}]}
    )
    assert s.d("a", "b") == 4.0
    assert s.d("a", "o") == 2.0


def test_single_vertex():
    s = build_space({"vertices": [{"id": "x"}], "edges": []})
    assert s.dist.tolist() == [[0.0]]


def test_disconnected_names_pair():
    desc = {"vertices": ["a", "b", "c"], "edges": [{"u": "a", "v": "b", "len": 1}]}
    with pytest.raises(GraphError, match="no path between"):
        build_space(desc)


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan")])
def test_nonpositive_edge_rejected(bad):
    desc = {"vertices": ["a", "b"], "edges": [{"u": "a", "v": "b", "len": bad}]}
    with pytest.raises(GraphError, match="'a', 'b'"):
        build_space(desc)


def test_unknown_vertex_rejected():
    with pytest.raises(GraphError, match="unknown vertex"):
        build_space({"vertices": ["a"], "edges": [{"u": "a", "v": "z", "len": 1}]})


def test_grid_matches_single_pair_oracle(tiny_grid):
    g = tiny_grid
    rng = np.random.default_rng(3)
    for src in rng.choice(g.n, 10, replace=False):
        ref = dijkstra_oracle(g.n, g.edges.tolist(), g.lengths.tolist(), int(src))
        np.testing.assert_allclose(g.dist[src], ref, rtol=1e-12, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(connected_graphs())
def test_apsp_matches_oracle(g):
    s = _space(g)
    n, edges, lengths = g
    for src in range(n):
        np.testing.assert_allclose(s.dist[src], dijkstra_oracle(n, edges.tolist(), lengths.tolist(), src), rtol=1e-12)


@settings(max_examples=60, deadline=None)
@given(connected_graphs())
def test_metric_invariants(g):
    s = _space(g)
    D = s.dist
    assert np.array_equal(D, D.T)
    assert np.all(np.diag(D) == 0)
    off = ~np.eye(s.n, dtype=bool)
    assert np.all(D[off] > 0)
    # triangle inequality over all triples
    assert np.all(D[:, None, :] <= D[:, :, None] + D[None, :, :] + s.tol)
    u, v = s.edges.T
    assert np.all(D[u, v] <= s.lengths + s.tol)


@settings(max_examples=40, deadline=None)
@given(connected_graphs(max_n=7), st.data())
def test_geodesic_is_lexicographic_minimum(g, data):
    s = _space(g)
    u = data.draw(st.integers(0, s.n - 1))
    v = data.draw(st.integers(0, s.n - 1))
    c = geodesic(s, u, v)
    assert c.length == pytest.approx(s.dist[u, v], rel=1e-12, abs=1e-12)
    adj = {i: set() for i in range(s.n)}
    for a, b in s.edges.tolist():
        adj[a].add(b)
        adj[b].add(a)
    shortest = []
    for p in simple_paths(adj, u, v):
        L = sum(s.lengths[s.edge_index(a, b)] for a, b in zip(p[:-1], p[1:]))
        if L <= s.dist[u, v] + s.tol:
            shortest.append([s.ids[i] for i in p])
    assert c.ids == min(shortest)


def test_geodesic_trivial_and_path():
    s = path_graph([2.0, 2.0], ["a", "o", "b"])
    assert geodesic(s, "a", "a").ids == ["a"]
    assert geodesic(s, "a", "a").length == 0.0
    assert geodesic(s, "a", "b").ids == ["a", "o", "b"]


def test_geodesic_four_cycle_tie():
    s = cycle_graph(4)
    # c0-c1-c2 and c0-c3-c2 have length 2; the first is lexicographically smaller
    assert geodesic(s, "c0", "c2").ids == ["c0", "c1", "c2"]
    assert geodesic(s, "c2", "c0").ids == ["c2", "c1", "c0"]


def test_curve_invariants():
    s = path_graph([1.0, 2.0, 0.5])
    c = Curve.from_path(s, ["p0", "p1", "p2", "p3"])
    assert c.cum_length[0] == 0.0
    assert c.length == 3.5
    assert np.all(np.diff(c.cum_length) > 0)
    with pytest.raises(GraphError):
        Curve.from_path(s, ["p0", "p2"])
    r = c.reversed()
    assert r.ids == ["p3", "p2", "p1", "p0"] and r.length == 3.5
    assert (c.subcurve(1, 3)).ids == ["p1", "p2", "p3"]


def test_sample_unit_path():
    s = path_graph([1.0] * 4)
    c = geodesic(s, "p0", "p4")
    assert sample_along(c, 1.0) == [(f"p{i}", float(i)) for i in range(5)]


def test_sample_step_exceeds_length():
    s = path_graph([1.0] * 4)
    c = geodesic(s, "p0", "p4")
    assert [v for v, _ in sample_along(c, 10.0)] == ["p0"]
    assert [v for v, _ in sample_along(c, 4.0)] == ["p0", "p4"]


def test_sample_snap_displacement():
    s = path_graph([0.5, 1.0, 1.0, 1.0])
    c = geodesic(s, "p0", "p4")
    assert c.length == 3.5
    q = 3.5 / 3
    pts = sample_along(c, q)
    assert len(pts) == 4
    for i, (_, t) in enumerate(pts):
        assert abs(t - i * q) <= 0.5 * 1.0 + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.1, 3.0), min_size=1, max_size=12), st.integers(1, 8))
def test_sample_count_and_snap(lengths, N):
    s = path_graph(lengths)
    c = geodesic(s, "p0", f"p{len(lengths)}")
    q = c.length / N
    pts = sample_along(c, q)
    assert len(pts) == N + 1
    for i, (_, t) in enumerate(pts):
        assert abs(t - i * q) <= max(lengths) / 2 + 1e-9


def test_graph_json_roundtrip(tmp_path, tiny_grid):
    p = tmp_path / "g.json"
    save_graph(tiny_grid, p)
    g = load_graph(p)
    assert g.ids == tiny_grid.ids
    assert np.array_equal(g.dist, tiny_grid.dist)
    assert g.anchors == tiny_grid.anchors and g.frontier == tiny_grid.frontier and g.base == tiny_grid.base
    assert json.loads(p.read_text())["model"]["kind"] == "halfplane"
    save_graph(g, tmp_path / "h.json")
    assert (tmp_path / "h.json").read_bytes() == p.read_bytes()


def test_tolerance_scale():
    s = path_graph([1.0, 1e6])
    assert s.tol == pytest.approx(1e-9 * (1 + s.scale))
    assert math.isclose(s.scale, 1e6 + 1)
