import numpy as np
import pytest

from roughuniform.busemann import BoundaryAnchor, anchor_from_space, busemann_field
from roughuniform.metric import Curve, geodesic
from roughuniform.models import binary_tree, halfplane_grid
from roughuniform.uniformity import (
    FAMILIES,
    curve_badness,
    estimate_starlike,
    estimate_uniformity,
    short_range_constant,
    tent_curves,
)
from roughuniform.uniformize import deform, deformed_geodesic, deformed_prefix, make_density

from conftest import LOG3


def _deformed(space, anchor, eps, delta):
    f = busemann_field(space, anchor_from_space(space, anchor), delta)
    return deform(space, make_density(f, eps), tail="analytic")


@pytest.fixture(scope="module")
def grid1(small_grid):
    return _deformed(small_grid, "omega", 1.0, LOG3)


def _tree(depth, eps=0.5):
    t = binary_tree(depth)
    return _deformed(t, "xi", eps, 0.0)


def test_deformed_geodesic_quasiconvex_one(grid1):
    g = grid1.base
    rng = np.random.default_rng(2)
    for _ in range(20):
        a, b = rng.choice(g.n, 2, replace=False)
        qc, cone = curve_badness(grid1, deformed_geodesic(grid1, a, b))
        assert qc == pytest.approx(1.0, abs=1e-12)
        assert cone >= 0


def test_single_edge_curve(grid1):
    g = grid1.base
    u, v = g.edges[0]
    c = Curve.from_path(g, [u, v])
    qc, cone = curve_badness(grid1, c)
    length = grid1.edge_eps_length[0]
    assert cone == pytest.approx(0.5 * length / min(grid1.delta_eps[u], grid1.delta_eps[v]))
    assert qc == pytest.approx(length / grid1.dist_eps[u, v])


def test_cone_ratio_by_hand(grid1):
    g = grid1.base
    c = geodesic(g, g.nearest((-1.0, 0.5)), g.nearest((1.0, 0.5)))
    pre = deformed_prefix(grid1, c)
    inner = pre[1:-1]
    ref = np.max(np.minimum(inner, pre[-1] - inner) / grid1.delta_eps[c.path[1:-1]])
    assert curve_badness(grid1, c)[1] == pytest.approx(ref)


def test_badness_errors(grid1):
    g = grid1.base
    with pytest.raises(ValueError, match="distinct"):
        curve_badness(grid1, Curve.from_path(g, [0]))
    loop = geodesic(g, 0, 5) + geodesic(g, 5, 0)
    with pytest.raises(ValueError, match="distinct"):
        curve_badness(grid1, loop)


def test_collapsed_pair_rejected(grid1):
    import dataclasses

    g = grid1.base
    u, v = g.edges[0]
    squashed = dataclasses.replace(grid1, dist_eps=np.zeros_like(grid1.dist_eps))
    with pytest.raises(ValueError, match="collapsed"):
        curve_badness(squashed, Curve.from_path(g, [u, v]))
    rep = estimate_uniformity(squashed, [(g.ids[u], g.ids[v])])
    assert rep.pairs_tested == 0 and rep.skipped == [(g.ids[u], g.ids[v])]


def test_report_invariants(grid1):
    rep = estimate_uniformity(grid1, 15, seed=3)
    assert rep.pairs_tested == 15 and rep.A_estimate >= 1
    worst = max(max(p["quasiconvex_ratio"], p["cone_ratio"]) for p in rep.per_pair)
    assert rep.A_estimate == pytest.approx(max(1.0, worst))
    assert rep.label.startswith("empirical A within families")
    assert set(p["curve_family_used"] for p in rep.per_pair) <= set(FAMILIES)


def test_geodesic_family_reduces_to_cone(grid1):
    rep = estimate_uniformity(grid1, 15, families="g", seed=3)
    assert all(p["quasiconvex_ratio"] == pytest.approx(1.0) for p in rep.per_pair)
    assert rep.A_estimate == pytest.approx(max(1.0, max(p["cone_ratio"] for p in rep.per_pair)))


def test_more_families_never_worse(grid1):
    a = estimate_uniformity(grid1, 15, families="g", seed=4).A_estimate
    b = estimate_uniformity(grid1, 15, families="g,b", seed=4).A_estimate
    c = estimate_uniformity(grid1, 15, families="g,b,t", seed=4).A_estimate
    assert a >= b >= c


def test_all_pairs_dominate_subset():
    D = _tree(3)
    full = estimate_uniformity(D, "all")
    assert full.pairs_tested == D.base.n * (D.base.n - 1) // 2
    sub = estimate_uniformity(D, 20, seed=1)
    assert full.A_estimate >= sub.A_estimate


def test_tree_stable_under_growth():
    a = estimate_uniformity(_tree(6), 60, seed=1).A_estimate
    b = estimate_uniformity(_tree(8), 60, seed=1).A_estimate
    assert np.isfinite(a) and np.isfinite(b)
    assert abs(a - b) < 0.5


def test_family_validation(grid1):
    with pytest.raises(ValueError, match="unknown curve family"):
        estimate_uniformity(grid1, 2, families="zigzag")
    with pytest.raises(ValueError, match="at least one"):
        estimate_uniformity(grid1, 2, families=[])
    with pytest.raises(ValueError, match="pair sampler"):
        estimate_uniformity(grid1, "some")


def test_tent_curves_shape(grid1):
    g = grid1.base
    x, y = g.nearest((-1.0, 0.5)), g.nearest((1.0, 0.5))
    b = grid1.density.field.values
    levels = []
    for level, c in tent_curves(grid1, x, y):
        assert c.start == x and c.end == y
        levels.append(level)
    assert levels[0] == pytest.approx(min(b[x], b[y]))
    assert np.all(np.diff(levels) < 0)


def test_starlike_tree_zero():
    t = binary_tree(5)
    rep = estimate_starlike(t, "xi", [BoundaryAnchor(v, (v,), t.base) for v in t.frontier])
    assert rep.K_estimate == 0.0


def _column_anchor(g, x):
    X, Y = g.coords.T
    idx = np.flatnonzero((np.abs(X - x) < 1e-12) & (Y <= 1.0))
    idx = idx[np.argsort(-Y[idx])]
    return BoundaryAnchor(f"col{x:g}", tuple(g.ids[i] for i in idx), g.base)


def test_starlike_grid_all_columns(small_grid):
    g = small_grid
    X, Y = g.coords.T
    bottom = np.unique(X[Y == Y.min()])
    anchors = [_column_anchor(g, x) for x in bottom]
    rep = estimate_starlike(g, "omega", anchors)
    spacing = g.model["h"]
    assert rep.K_estimate <= 2 * spacing


def test_starlike_single_anchor_grows():
    ks = []
    for w in (2.0, 4.0):
        g = halfplane_grid(x_range=(-w, w), y_range=(0.25, 4.0), m=8)
        ks.append(estimate_starlike(g, "omega", [_column_anchor(g, 0.0)]).K_estimate)
    assert ks[1] > ks[0]


def test_starlike_needs_other_anchor(small_grid):
    with pytest.raises(ValueError, match="at least one other"):
        estimate_starlike(small_grid, "omega", [])


def test_short_range_law(grid1):
    g = grid1.base
    bound = short_range_constant(grid1)
    rng = np.random.default_rng(9)
    near = np.argwhere((g.dist <= 4) & (g.dist > 0))
    for a, b in near[rng.choice(len(near), 30, replace=False)]:
        qc, cone = curve_badness(grid1, geodesic(g, a, b))
        assert max(qc, cone) <= bound
