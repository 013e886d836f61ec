import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from roughuniform.hyperbolicity import delta_four_point
from roughuniform.metric import GraphError
from roughuniform.models import (
    HalfPlaneGrid,
    binary_tree,
    circle_perimeter,
    counterexample_grid,
    halfplane_grid,
    hyperbolic_distance,
    mesh_of,
    net_map,
    scaled_space,
    segment_length,
    special_pair,
    special_points,
)

from conftest import LOG3


def _quad_length(x1, y1, x2, y2):
    L = math.hypot(x2 - x1, y2 - y1)
    return quad(lambda t: L / (y1 + t * (y2 - y1)), 0.0, 1.0, epsabs=1e-13, epsrel=1e-12)[0]


@settings(max_examples=80, deadline=None)
@given(
    st.floats(-3, 3), st.floats(0.05, 8), st.floats(-3, 3), st.floats(0.05, 8)
)
def test_segment_length_matches_quadrature(x1, y1, x2, y2):
    ref = _quad_length(x1, y1, x2, y2)
    assert float(segment_length(x1, y1, x2, y2)) == pytest.approx(ref, rel=1e-9, abs=1e-12)
    # straight segments are never shorter than the geodesic
    assert float(segment_length(x1, y1, x2, y2)) >= float(hyperbolic_distance(x1, y1, x2, y2)) - 1e-9


def test_vertical_hyperbolic_distance():
    assert float(hyperbolic_distance(0.0, 1.0, 0.0, math.e)) == pytest.approx(1.0)
    assert float(segment_length(0.3, 1.0, 0.3, 4.0)) == pytest.approx(math.log(4.0))


def test_grid_edges_are_segment_lengths(small_grid):
    g = small_grid
    u, v = g.edges.T
    X, Y = g.coords.T
    np.testing.assert_allclose(g.lengths, segment_length(X[u], Y[u], X[v], Y[v]), rtol=1e-12)


def test_grid_structure(small_grid):
    g = small_grid
    assert g.base == g.ids[g.nearest((0.0, 1.0))]
    assert tuple(g.coords[g.idx(g.base)]) == (0.0, 1.0)
    Y = g.coords[:, 1]
    assert set(g.frontier) == {g.ids[i] for i in np.flatnonzero(Y == Y.min())}
    assert set(g.anchors) == {"omega", "zeta_L", "zeta_R"}
    om = g.coords[g.indices(g.anchors["omega"])]
    assert np.all(om[:, 0] == 0.0) and np.all(np.diff(om[:, 1]) > 0)
    # rows are 2**(k/m)
    heights = np.unique(Y)
    k = np.log2(heights) * 16
    np.testing.assert_allclose(k, np.round(k), atol=1e-9)


def test_graph_distances_dominate_continuum(small_grid):
    g = small_grid
    X, Y = g.coords.T
    rng = np.random.default_rng(5)
    a = rng.integers(0, g.n, 400)
    b = rng.integers(0, g.n, 400)
    h = hyperbolic_distance(X[a], Y[a], X[b], Y[b])
    assert np.all(g.dist[a, b] >= h - 1e-9)
    far = h > 1
    assert np.max(g.dist[a, b][far] / h[far]) < 1.1


def test_vertical_distances_within_mesh(small_grid):
    g = small_grid
    X, Y = g.coords.T
    col = np.flatnonzero(X == 0.0)
    ref = np.abs(np.log(Y[col][:, None] / Y[col][None, :]))
    np.testing.assert_allclose(g.dist[np.ix_(col, col)], ref, rtol=2 / 16, atol=1e-12)


def test_distance_to_e(default_grid):
    g = default_grid
    d = g.d(g.base, g.nearest((0.0, math.e)))
    assert d == pytest.approx(1.0, abs=0.02)


def test_refinement_stable():
    a = halfplane_grid(x_range=(-2, 2), y_range=(0.25, 4), m=8)
    b = halfplane_grid(x_range=(-2, 2), y_range=(0.25, 4), m=16)
    da = a.d(a.base, a.nearest((0.0, 4.0)))
    db = b.d(b.base, b.nearest((0.0, 4.0)))
    assert abs(da - db) / db < 1 / 16


def test_circle_perimeter(default_grid):
    r = 2.0
    ref = math.pi * (math.exp(r) - math.exp(-r))
    assert abs(circle_perimeter(default_grid, r) / ref - 1) < 0.10


def test_small_truncation_delta(tiny_grid):
    assert delta_four_point(tiny_grid).delta <= LOG3 + 2 * mesh_of(tiny_grid)


@pytest.mark.parametrize(
    "kwargs, word",
    [
        ({"y_range": (0.0, 8.0)}, "y_min"),
        ({"y_range": (2.0, 8.0)}, "base height"),
        ({"m": 3}, "m must"),
        ({"x_range": (-1.0, 1.0)}, "x_range"),
        ({"h": -1.0}, "h must"),
        ({"pins": (9.0,)}, "pin"),
    ],
)
def test_grid_validation(kwargs, word):
    with pytest.raises(ValueError, match=word):
        halfplane_grid(**kwargs)


def test_special_points_geometry():
    z0, w0 = special_points(0.0)
    assert z0 == (0.0, 1.0) and w0 == (-0.0, 1.0)
    for R in (0.5, 1.0, 2.0, 3.0):
        z, w = special_points(R)
        for p in (z, w):
            assert p[0] ** 2 + p[1] ** 2 == pytest.approx(1.0)
            assert float(hyperbolic_distance(0.0, 1.0, *p)) == pytest.approx(R, rel=1e-9)
        assert z[0] == -w[0] and z[1] == w[1]


def test_special_points_literal_variant():
    z, w = special_points(2.0, literal=True)
    e4 = math.exp(4.0)
    assert z == pytest.approx(((e4 - 1) / (e4 + 1), 2 * e4 / (e4 + 1)))
    assert w == pytest.approx(((1 / e4 - 1) / (1 / e4 + 1), 2 / e4 / (1 / e4 + 1)))
    assert z[0] == pytest.approx(0.9640, abs=1e-3) and z[1] == pytest.approx(1.9640, abs=1e-3)


def test_special_pair_snapping():
    g = halfplane_grid(counterexample_grid(1.0))
    sp = special_pair(g, 1.0)
    for i, p in enumerate((sp.z, sp.w)):
        x, y = g.coords[g.idx(sp.snapped[i])]
        assert x == pytest.approx(p[0], abs=1e-12)
        assert sp.displacement[i] <= math.log(2) / 16 / 2 + 1e-12


def test_special_pair_out_of_range(small_grid):
    with pytest.raises(ValueError, match="needs"):
        special_pair(small_grid, 3.0)


def test_tree_model():
    t = binary_tree(5, edge_len=0.5)
    assert t.d("v", "v10101") == pytest.approx(2.5)
    assert len(t.frontier) == 2 ** 5 - 1 and "v00000" not in t.frontier
    assert delta_four_point(t).delta == 0.0
    with pytest.raises(ValueError):
        binary_tree(1)


def test_net_identity(tiny_grid):
    iso = net_map(tiny_grid, tiny_grid)
    assert np.array_equal(iso.map, np.arange(tiny_grid.n))
    assert iso.lam == 0.0 and iso.tau == 0.0


def test_net_decimated_grid(small_grid):
    coarse = halfplane_grid(x_range=(-2.0, 2.0), y_range=(0.25, 4.0), m=8, h=1.0)
    iso = net_map(small_grid, coarse)
    assert iso.lam <= 2 * mesh_of(coarse)
    assert iso.tau == 0.0


def test_net_pruned_tree():
    fine, coarse = binary_tree(6), binary_tree(5)
    iso = net_map(fine, coarse)
    assert iso.lam <= 2 * 1.0
    assert iso("v101010") == "v10101"


def test_net_errors(tiny_grid, tree6):
    with pytest.raises(GraphError, match="coordinates"):
        net_map(tree6, tiny_grid, by="coords")
    with pytest.raises(GraphError, match="not a vertex"):
        net_map(tree6, tiny_grid, by="ids")


def test_scaled_space(tiny_grid):
    same, sim1 = scaled_space(tiny_grid, 1.0)
    assert np.array_equal(same.dist, tiny_grid.dist) and sim1.tau == 0.0
    eps0, eps = 2.0, 0.5
    s, sim = scaled_space(tiny_grid, eps0 / eps)
    assert sim.kappa == 4.0 and sim.tau == pytest.approx(0.0, abs=1e-9)
    np.testing.assert_allclose(s.dist, 4.0 * tiny_grid.dist, rtol=1e-12)
    s2, sim2 = scaled_space(tiny_grid, 2.0)
    assert sim2.lam == pytest.approx(tiny_grid.diameter)
    with pytest.raises(ValueError):
        scaled_space(tiny_grid, 0.0)


def test_params_dataclass():
    p = HalfPlaneGrid(x_range=(-2, 2), y_range=(0.5, 2), m=4)
    assert p.heights[0] == 0.5 and p.heights[-1] == 2.0
    assert len(p.heights) == 9
    assert p.build().n == halfplane_grid(p).n


def test_ball_truncation(small_grid):
    from roughuniform.models import ball_truncation

    b = ball_truncation(small_grid, 120)
    assert b.n == 120 and b.base == small_grid.base
    o = small_grid.idx(small_grid.base)
    radius = np.sort(small_grid.dist[o])[119]
    sub = np.array([small_grid.idx(v) for v in b.ids])
    assert small_grid.dist[o, sub].max() == pytest.approx(radius)
    # induced distances can only grow
    assert np.all(b.dist >= small_grid.dist[np.ix_(sub, sub)] - 1e-12)
    with pytest.raises(ValueError, match="size"):
        ball_truncation(small_grid, 0)
