"""Generators for concrete spaces: half-plane grids, binary trees, nets,
scaled copies, and the special point pairs of the half-plane counterexample.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, floor

import numpy as np

from .metric import GraphError, MetricSpace, space_from_arrays
from .roughiso import RoughIsometry, RoughSimilarity, certify, certify_similarity

__all__ = [
    "HalfPlaneGrid",
    "SpecialPair",
    "halfplane_grid",
    "counterexample_grid",
    "hyperbolic_distance",
    "segment_length",
    "circle_perimeter",
    "ball_truncation",
    "special_points",
    "special_pair",
    "binary_tree",
    "net_map",
    "scaled_space",
]


def hyperbolic_distance(x1, y1, x2, y2):
    """Distance in the upper half-plane."""
    return np.arccosh(1.0 + ((x1 - x2) ** 2 + (y1 - y2) ** 2) / (2.0 * y1 * y2))


def segment_length(x1, y1, x2, y2):
    """Hyperbolic length of the straight Euclidean segment between two points.

    ``int |dz| / y`` along the segment is ``|p - q| / logmean(y1, y2)``.
    Along such a segment ``ln y`` is affine in arclength.
    """
    x1, y1, x2, y2 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x1, y1, x2, y2)))
    euc = np.hypot(x2 - x1, y2 - y1)
    t = np.log(y2 / y1)
    ratio = np.ones_like(t)
    big = np.abs(t) > 1e-8
    ratio[big] = t[big] / np.expm1(t[big])
    ratio[~big] = 1.0 - 0.5 * t[~big]
    return euc * ratio / y1


@dataclass(frozen=True)
class HalfPlaneGrid:
    """Parameters of a truncated upper half-plane grid.

    Rows sit at heights ``2**(k/m)`` inside ``y_range`` (the row through
    ``y = 1`` is always present).  Row ``k`` carries the dyadic columns
    ``x_lo + W*i/2**q`` with ``2**q ~ W/(h*y)``, so horizontal spacing is
    about ``h`` in the hyperbolic metric; ``qmax`` caps the column count
    in deep rows.  ``pins`` are extra x-values present in every row.

    Edges are straight Euclidean segments with their exact hyperbolic
    length: all immediate horizontal and vertical neighbours, plus a
    stencil of segments up to length ``reach`` thinned to the shortest one
    per direction sector.
    """

    x_range: tuple[float, float] = (-4.0, 4.0)
    y_range: tuple[float, float] = (0.125, 8.0)
    m: int = 16
    h: float = 0.5
    qmax: int = 30
    reach: float = 1.5
    sectors: int = 48
    pins: tuple[float, ...] = ()

    def validate(self) -> None:
        x_lo, x_hi = self.x_range
        y_min, y_max = self.y_range
        if not y_min > 0:
            raise ValueError(f"y_min must be positive, got {y_min}")
        if not y_max > y_min:
            raise ValueError(f"y_max must exceed y_min, got y_range={self.y_range}")
        if not (y_min <= 1.0 <= y_max):
            raise ValueError(f"y_range {self.y_range} must contain the base height 1")
        if int(self.m) != self.m or self.m < 4:
            raise ValueError(f"m must be an integer >= 4, got {self.m}")
        if x_lo > -1.5 or x_hi < 1.5:
            raise ValueError(f"x_range {self.x_range} must cover [-1.5, 1.5]")
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")
        if self.qmax < 1:
            raise ValueError(f"qmax must be >= 1, got {self.qmax}")
        if not self.reach > 0:
            raise ValueError(f"reach must be positive, got {self.reach}")
        for p in self.pins:
            if not x_lo <= p <= x_hi:
                raise ValueError(f"pin {p} lies outside x_range {self.x_range}")

    @property
    def row_exponents(self) -> np.ndarray:
        y_min, y_max = self.y_range
        k_lo = ceil(self.m * np.log2(y_min) - 1e-9)
        k_hi = floor(self.m * np.log2(y_max) + 1e-9)
        return np.arange(k_lo, k_hi + 1)

    @property
    def heights(self) -> np.ndarray:
        return 2.0 ** (self.row_exponents / self.m)

    @property
    def column_levels(self) -> np.ndarray:
        W = self.x_range[1] - self.x_range[0]
        q = np.round(np.log2(W / (self.h * self.heights))).astype(int)
        return np.clip(q, 1, self.qmax)

    def build(self) -> MetricSpace:
        return halfplane_grid(self)


def _row_points(grid: HalfPlaneGrid):
    x_lo, x_hi = grid.x_range
    W = x_hi - x_lo
    pins = np.unique(np.asarray(tuple(grid.pins) + (0.0,), dtype=float))
    rows = []
    for k, y, q in zip(grid.row_exponents, grid.heights, grid.column_levels):
        lattice = x_lo + W * np.arange(2 ** q + 1) / 2 ** q
        on = np.abs((pins - x_lo) / W * 2 ** q - np.rint((pins - x_lo) / W * 2 ** q)) < 1e-9
        xs = np.concatenate([lattice, pins[~on]])
        is_lattice = np.concatenate([np.ones(len(lattice), bool), np.zeros((~on).sum(), bool)])
        order = np.argsort(xs, kind="stable")
        rows.append((int(k), float(y), int(q), xs[order], is_lattice[order]))
    return rows


def _stencil(grid: HalfPlaneGrid, rows, starts, X, Y):
    """Lattice segments between distinct rows of hyperbolic length <= reach."""
    W = grid.x_range[1] - grid.x_range[0]
    dy = np.log(2.0) / grid.m
    lat = [s + np.flatnonzero(r[4]) for r, s in zip(rows, starts)]
    us, vs = [], []
    for a in range(len(rows)):
        ga = lat[a]
        xa = X[ga]
        ya = rows[a][1]
        for b in range(a + 1, len(rows)):
            if (b - a) * dy > grid.reach:
                break
            gb = lat[b]
            xb = X[gb]
            yb = rows[b][1]
            # horizontal half-width of the reach ball; segments are never shorter than geodesics
            span = np.sqrt(max(2 * ya * yb * (np.cosh(grid.reach) - 1) - (ya - yb) ** 2, 0.0))
            C = int(np.ceil(span / (W / 2 ** rows[b][2]))) + 1
            pos = np.searchsorted(xb, xa)
            for off in range(-C - 1, C + 1):
                idx = pos + off
                ok = (idx >= 0) & (idx < len(gb))
                u, v = ga[ok], gb[idx[ok]]
                sel = segment_length(X[u], Y[u], X[v], Y[v]) <= grid.reach
                us.append(u[sel])
                vs.append(v[sel])
    us = np.concatenate(us) if us else np.zeros(0, np.int64)
    vs = np.concatenate(vs) if vs else np.zeros(0, np.int64)
    return us, vs


def _sector_filter(us, vs, X, Y, sectors: int):
    """Keep an edge if it is the shortest in its direction sector at either end."""
    w = segment_length(X[us], Y[us], X[vs], Y[vs])
    a = np.concatenate([us, vs])
    b = np.concatenate([vs, us])
    ww = np.concatenate([w, w])
    eid = np.concatenate([np.arange(len(us))] * 2)
    ang = np.arctan2(np.log(Y[b] / Y[a]), (X[b] - X[a]) / np.sqrt(Y[a] * Y[b]))
    sec = np.floor((ang + np.pi) / (2 * np.pi) * sectors).astype(np.int64) % sectors
    order = np.lexsort((ww, sec, a))
    a2, s2 = a[order], sec[order]
    first = np.ones(len(a2), dtype=bool)
    first[1:] = (a2[1:] != a2[:-1]) | (s2[1:] != s2[:-1])
    keep = np.zeros(len(us), dtype=bool)
    keep[eid[order][first]] = True
    return us[keep], vs[keep]


def halfplane_grid(params: HalfPlaneGrid | None = None, **kwargs) -> MetricSpace:
    """Truncated hyperbolic upper half-plane as a weighted graph.

    Parameters
    ----------
    params : HalfPlaneGrid, optional
        Grid parameters; keyword arguments override or replace them.

    Returns
    -------
    MetricSpace
        With coordinates, anchors ``omega`` (ascending ray at ``x = 0``),
        ``zeta_L`` and ``zeta_R`` (descending rays along the side columns),
        the bottom row as frontier and base at ``(0, 1)``.
    """
    if params is None:
        params = HalfPlaneGrid(**kwargs)
    elif kwargs:
        params = HalfPlaneGrid(**{**params.__dict__, **kwargs})
    params.validate()
    rows = _row_points(params)
    counts = [len(r[3]) for r in rows]
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]]).astype(np.int64)
    X = np.concatenate([r[3] for r in rows])
    Y = np.concatenate([np.full(len(r[3]), r[1]) for r in rows])
    ids = [f"r{k:+04d}c{j:04d}" for (k, _, _, xs, _) in rows for j in range(len(xs))]

    su, sv = _stencil(params, rows, starts, X, Y)
    su, sv = _sector_filter(su, sv, X, Y, params.sectors)

    # immediate neighbours keep every row and column connected
    fu, fv = [], []
    for r, s in enumerate(starts):
        c = counts[r]
        fu.append(np.arange(s, s + c - 1))
        fv.append(np.arange(s + 1, s + c))
        if r + 1 < len(rows):
            xa, xb = rows[r][3], rows[r + 1][3]
            pos = np.searchsorted(xb, xa)
            pos = np.clip(pos, 0, len(xb) - 1)
            hit = np.abs(xb[pos] - xa) < 1e-12 * (1 + np.abs(xa))
            fu.append(s + np.flatnonzero(hit))
            fv.append(starts[r + 1] + pos[hit])
    us = np.concatenate([su] + fu)
    vs = np.concatenate([sv] + fv)
    lengths = segment_length(X[us], Y[us], X[vs], Y[vs])

    k_all = np.concatenate([np.full(c, r) for r, c in enumerate(counts)])
    zero_col = np.flatnonzero(np.abs(X) < 1e-12)
    base_row = int(np.flatnonzero(params.row_exponents == 0)[0])
    omega = [ids[i] for i in zero_col if k_all[i] >= base_row]
    left = np.flatnonzero(np.abs(X - params.x_range[0]) < 1e-12)
    right = np.flatnonzero(np.abs(X - params.x_range[1]) < 1e-12)
    zeta_L = [ids[i] for i in left[::-1] if k_all[i] <= base_row]
    zeta_R = [ids[i] for i in right[::-1] if k_all[i] <= base_row]
    frontier = [ids[i] for i in range(counts[0])]
    base = ids[int(zero_col[base_row])]

    forced = np.concatenate(fu) if fu else np.zeros(0)
    nf = len(su)
    mesh = float(lengths[nf:].max()) if len(forced) else 0.0
    model = {
        "kind": "halfplane",
        "x_range": [float(v) for v in params.x_range],
        "y_range": [float(v) for v in params.y_range],
        "m": int(params.m),
        "h": float(params.h),
        "qmax": int(params.qmax),
        "reach": float(params.reach),
        "sectors": int(params.sectors),
        "pins": [float(p) for p in params.pins],
        "mesh": mesh,
        "scale": 1.0,
    }
    return space_from_arrays(
        ids,
        np.stack([us, vs], axis=1),
        lengths,
        coords=np.stack([X, Y], axis=1),
        anchors={"omega": omega, "zeta_L": zeta_L, "zeta_R": zeta_R},
        frontier=frontier,
        base=base,
        model=model,
    )


def mesh_of(space: MetricSpace) -> float:
    """Largest immediate-neighbour spacing recorded by a grid generator."""
    model = space.model or {}
    if "mesh" in model:
        return float(model["mesh"]) * float(model.get("scale", 1.0))
    return space.max_edge


def ball_truncation(space: MetricSpace, size: int, center=None) -> MetricSpace:
    """Induced subgraph on the ``size`` vertices nearest to ``center``.

    Distances are recomputed inside the subgraph, so the result is a
    truncation in its own right rather than a restriction of the metric.
    Anchors and frontier are dropped; the centre becomes the base.
    """
    c = space.idx(space.base if center is None else center)
    if not 1 <= size <= space.n:
        raise ValueError(f"size must lie in [1, {space.n}], got {size}")
    keep = np.sort(np.argsort(space.dist[c], kind="stable")[:size])
    pos = np.full(space.n, -1)
    pos[keep] = np.arange(size)
    u, v = space.edges.T
    inside = (pos[u] >= 0) & (pos[v] >= 0)
    return space_from_arrays(
        [space.ids[i] for i in keep],
        np.column_stack([pos[u[inside]], pos[v[inside]]]),
        space.lengths[inside],
        coords=None if space.coords is None else space.coords[keep],
        base=space.ids[c],
        model=space.model,
    )


def circle_perimeter(space: MetricSpace, r: float, bins: int = 256) -> float:
    """Hyperbolic length of the discrete circle of radius ``r`` about the base.

    The level set ``d(base, .) = r`` is located on every crossing edge by
    linear interpolation in ``(x, ln y)``, crossings are averaged in
    ``bins`` angular bins about the circle's Euclidean centre, and the
    closed polygon through the bin means is measured.
    """
    if space.coords is None:
        raise GraphError("circle perimeter needs a half-plane grid with coordinates")
    o = space.idx(space.base)
    d = space.dist[o]
    u, v = space.edges.T
    du, dv = d[u], d[v]
    cross = (du - r) * (dv - r) < 0
    u, v, du, dv = u[cross], v[cross], du[cross], dv[cross]
    t = (r - du) / (dv - du)
    X, Y = space.coords.T
    px = X[u] + t * (X[v] - X[u])
    py = np.exp(np.log(Y[u]) + t * (np.log(Y[v]) - np.log(Y[u])))
    cx, cy = X[o], Y[o] * np.cosh(r)
    ang = np.arctan2(py - cy, px - cx)
    b = np.floor((ang + np.pi) / (2 * np.pi) * bins).astype(np.int64) % bins
    cnt = np.bincount(b, minlength=bins)
    mx = np.bincount(b, px, minlength=bins)[cnt > 0] / cnt[cnt > 0]
    my = np.bincount(b, py, minlength=bins)[cnt > 0] / cnt[cnt > 0]
    qx, qy = np.append(mx, mx[0]), np.append(my, my[0])
    return float(hyperbolic_distance(qx[:-1], qy[:-1], qx[1:], qy[1:]).sum())


def special_points(R: float, literal: bool = False) -> tuple[tuple[float, float], tuple[float, float]]:
    """The points ``z_R`` and ``w_R`` at hyperbolic distance ``R`` from ``i``
    on the unit semicircle: ``(+-tanh R, sech R)``.

    ``literal=True`` returns the variant with second coordinate
    ``2 e^{2R} / (e^{2R} + 1)`` instead of ``sech R``; those points are not
    on the semicircle and are kept only for comparison.
    """
    if not R >= 0:
        raise ValueError("R must be nonnegative")
    th = float(np.tanh(R))
    if literal:
        e = float(np.exp(2 * R))
        return (th, 2 * e / (e + 1)), (-th, 2 / (e + 1))
    sh = float(1.0 / np.cosh(R))
    return (th, sh), (-th, sh)


@dataclass(frozen=True)
class SpecialPair:
    R: float
    z: tuple[float, float]
    w: tuple[float, float]
    snapped: tuple[str, str]
    displacement: tuple[float, float]
    euclidean_displacement: tuple[float, float]


def counterexample_grid(R_max: float, m: int = 16, h: float = 0.5, qmax: int = 4, pin_R=None) -> HalfPlaneGrid:
    """Grid parameters for the special pairs up to ``R_max``.

    ``x`` in ``[-1.5, 1.5]``, ``y`` in ``[e^{-2 R_max}/4, 8]``, and the
    columns ``x = +-tanh R`` pinned in every row for each ``R`` in
    ``pin_R`` (default ``R_max``) so the special points and their vertical
    descents are grid vertices.
    """
    Rs = [R_max] if pin_R is None else list(pin_R)
    pins = tuple(sorted({s * float(np.tanh(R)) for R in Rs for s in (-1.0, 1.0)}))
    return HalfPlaneGrid(
        x_range=(-1.5, 1.5),
        y_range=(float(np.exp(-2 * R_max) / 4), 8.0),
        m=m,
        h=h,
        qmax=qmax,
        pins=pins,
    )


def special_pair(grid: MetricSpace, R: float) -> SpecialPair:
    """Special points for ``R`` snapped to the nearest grid vertices."""
    if (grid.model or {}).get("kind") != "halfplane" or grid.coords is None:
        raise GraphError("special pairs live on half-plane grids")
    z, w = special_points(R)
    x_lo, x_hi = grid.model["x_range"]
    y_min, y_max = grid.model["y_range"]
    if not (x_lo <= -z[0] and z[0] <= x_hi and y_min <= z[1] <= y_max):
        raise ValueError(
            f"grid x_range={[x_lo, x_hi]}, y_range={[y_min, y_max]} does not cover the points for R={R}: "
            f"needs x in [{-z[0]:.6g}, {z[0]:.6g}] and y down to {z[1]:.6g} "
            f"(descents need y_min <= {np.exp(-2 * R) / 4:.6g})"
        )
    X, Y = grid.coords.T
    snapped, disp, edisp = [], [], []
    for p in (z, w):
        d = hyperbolic_distance(X, Y, p[0], p[1])
        i = int(np.argmin(d))
        snapped.append(grid.ids[i])
        disp.append(float(d[i]))
        edisp.append(float(np.hypot(X[i] - p[0], Y[i] - p[1])))
    return SpecialPair(float(R), z, w, tuple(snapped), tuple(disp), tuple(edisp))


def binary_tree(depth: int, edge_len: float = 1.0, tail: int = 3) -> MetricSpace:
    """Rooted binary tree with an anchor down the leftmost branch.

    Vertex ids are ``"v"`` followed by the branch string (``0`` = left).
    The leftmost branch continues ``tail`` edges past depth ``depth`` so
    the anchor's deepest points lie beyond every branching vertex; the
    anchor ``xi`` runs from the root to the tip.  The frontier is the set
    of depth-``depth`` leaves off that branch.
    """
    if depth < 2:
        raise ValueError(f"depth must be >= 2, got {depth}")
    if not edge_len > 0:
        raise ValueError("edge_len must be positive")
    ids = ["v"]
    edges = []
    index = {"v": 0}
    level = ["v"]
    for _ in range(depth):
        nxt = []
        for p in level:
            for c in "01":
                name = p + c
                index[name] = len(ids)
                ids.append(name)
                edges.append((index[p], index[name]))
                nxt.append(name)
        level = nxt
    spine = ["v" + "0" * k for k in range(depth + 1)]
    for k in range(1, tail + 1):
        name = "v" + "0" * (depth + k)
        index[name] = len(ids)
        ids.append(name)
        edges.append((index[spine[-1]], index[name]))
        spine.append(name)
    frontier = [v for v in level if v != "v" + "0" * depth]
    return space_from_arrays(
        ids,
        np.array(edges, dtype=np.int64),
        np.full(len(edges), float(edge_len)),
        anchors={"xi": spine},
        frontier=frontier,
        base="v",
        model={"kind": "tree", "depth": int(depth), "edge_len": float(edge_len), "tail": int(tail), "scale": 1.0},
    )


def net_map(fine: MetricSpace, coarse: MetricSpace, by: str | None = None) -> RoughIsometry:
    """Map every ``fine`` vertex to its nearest ``coarse`` vertex, certified.

    ``by="coords"`` measures nearness in model coordinates (hyperbolic
    distance for half-plane grids, Euclidean otherwise); ``by="ids"``
    requires the coarse ids to exist in ``fine`` and uses ``fine``'s graph
    distance.  The default picks coordinates when both spaces have them.
    Ties go to the lexicographically smallest coarse id.
    """
    if coarse.n == 0:
        raise GraphError("coarse space is empty")
    if by is None:
        by = "coords" if fine.coords is not None and coarse.coords is not None else "ids"
    order = np.argsort(coarse.lex_rank, kind="stable")
    if by == "coords":
        if fine.coords is None or coarse.coords is None:
            raise GraphError("coordinate nearness needs coordinates on both spaces")
        hyper = (fine.model or {}).get("kind") == "halfplane" and (coarse.model or {}).get("kind") == "halfplane"
        C = coarse.coords[order]
        m = np.empty(fine.n, dtype=np.int64)
        for s in range(0, fine.n, 512):
            F = fine.coords[s:s + 512]
            if hyper:
                D = hyperbolic_distance(F[:, None, 0], F[:, None, 1], C[None, :, 0], C[None, :, 1])
            else:
                D = np.hypot(F[:, None, 0] - C[None, :, 0], F[:, None, 1] - C[None, :, 1])
            m[s:s + 512] = order[np.argmin(D, axis=1)]
    elif by == "ids":
        missing = [v for v in coarse.ids if v not in fine.index]
        if missing:
            raise GraphError(f"coarse vertex {missing[0]!r} is not a vertex of the fine space")
        cols = fine.indices([coarse.ids[i] for i in order])
        m = order[np.argmin(fine.dist[:, cols], axis=1)]
    else:
        raise ValueError(f"unknown nearness rule {by!r}")
    lam, tau = certify(m, fine, coarse)
    return RoughIsometry(fine, coarse, m, lam, tau)


def scaled_space(space: MetricSpace, kappa: float) -> tuple[MetricSpace, RoughSimilarity]:
    """Copy of ``space`` with every edge length multiplied by ``kappa``.

    Returns the scaled space and the identity map from ``space`` onto it,
    certified as a ``(kappa, tau)`` rough similarity (``tau`` is zero up
    to rounding).
    """
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    model = dict(space.model or {})
    model["scale"] = float(model.get("scale", 1.0)) * float(kappa)
    scaled = space.with_lengths(space.lengths * kappa, model=model)
    ident = np.arange(space.n)
    tau = certify_similarity(ident, space, scaled, kappa)
    lam, _ = certify(ident, space, scaled)
    return scaled, RoughSimilarity(space, scaled, ident, lam, tau, float(kappa))
