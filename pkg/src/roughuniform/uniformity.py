"""Empirical uniformity and rough-starlikeness constants.

The uniformity estimate is the worst, over tested pairs, of the best
badness reachable within a few explicit curve families.  It is a lower
bound for the true constant restricted to those pairs only if the
families contain near-optimal curves; it is always an upper bound for
the best constant over the families themselves.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .busemann import BoundaryAnchor, anchor_from_space
from .metric import Curve, MetricSpace, geodesic, shortest_path
from .uniformize import DeformedSpace, deformed_geodesic, deformed_prefix

__all__ = [
    "UniformityReport",
    "StarlikeReport",
    "FAMILIES",
    "curve_badness",
    "tent_curves",
    "estimate_uniformity",
    "estimate_starlike",
    "short_range_constant",
]

log = logging.getLogger(__name__)

FAMILIES = ("deformed_geodesic", "base_geodesic", "tent")
_ALIASES = {"g": "deformed_geodesic", "b": "base_geodesic", "t": "tent"}
LEVEL_STEP = float(np.log(2.0))


def curve_badness(deformed: DeformedSpace, curve: Curve) -> tuple[float, float]:
    """``(quasiconvex_ratio, cone_ratio)`` of a curve in the deformed space.

    ``quasiconvex_ratio = l_eps(curve) / d_eps(ends)``; ``cone_ratio`` is
    the largest ``min(l_eps(curve[x..z]), l_eps(curve[z..y])) / delta_eps(z)``
    over interior vertices ``z``.  A single-edge curve has no interior
    vertex and is scored at its midpoint against the smaller endpoint
    value of ``delta_eps``.
    """
    if len(curve) < 2 or curve.start == curve.end:
        raise ValueError("curve endpoints must be distinct")
    d = deformed.dist_eps[curve.start, curve.end]
    if not d > 1e-12 * deformed.scale:
        a, b = curve.space.ids[curve.start], curve.space.ids[curve.end]
        raise ValueError(f"collapsed pair ({a}, {b}): d_eps = {d:.3g}")
    prefix = deformed_prefix(deformed, curve)
    total = prefix[-1]
    qc = total / d
    if len(curve) == 2:
        cone = 0.5 * total / deformed.delta_eps[curve.path].min()
    else:
        inner = prefix[1:-1]
        cone = float((np.minimum(inner, total - inner) / deformed.delta_eps[curve.path[1:-1]]).max())
    return float(qc), float(cone)


def _restricted_path(deformed: DeformedSpace, inside: np.ndarray, u: int, v: int) -> np.ndarray | None:
    space = deformed.base
    e0, e1 = space.edges.T
    keep = inside[e0] & inside[e1]
    w = np.where(keep, deformed.edge_eps_length, np.inf)
    g = csr_matrix((deformed.edge_eps_length[keep], (e0[keep], e1[keep])), shape=(space.n, space.n))
    dist = dijkstra(g, directed=False, indices=v)
    if not np.isfinite(dist[u]):
        return None
    return shortest_path(space, u, v, w, dist, deformed.tol)


def _nearest_in(space: MetricSpace, x: int, inside: np.ndarray) -> int:
    cand = np.flatnonzero(inside)
    d = space.dist[x, cand]
    best = cand[d <= d.min() + space.tol]
    return int(best[np.argmin(space.lex_rank[best])])


def tent_curves(deformed: DeformedSpace, x, y, step: float = LEVEL_STEP) -> Iterable[tuple[float, Curve]]:
    """Ascend, traverse, descend curves between ``x`` and ``y``.

    For each Busemann level ``l`` in ``min(b(x), b(y)) - k*step`` down to
    the minimum of the field, ``p_x`` and ``p_y`` are the nearest vertices
    of the sublevel set ``{b <= l}``; the curve is the base geodesic
    ``x -> p_x``, the deformed geodesic ``p_x -> p_y`` inside the
    sublevel set, and the base geodesic ``p_y -> y``.
    """
    space = deformed.base
    b = deformed.density.field.values
    ix, iy = space.idx(x), space.idx(y)
    top = min(b[ix], b[iy])
    lo = b.min()
    level = top
    while level >= lo - 1e-12:
        inside = b <= level + 1e-12
        px = _nearest_in(space, ix, inside)
        py = _nearest_in(space, iy, inside)
        mid = _restricted_path(deformed, inside, px, py)
        if mid is not None:
            curve = geodesic(space, ix, px) + Curve.from_path(space, mid) + geodesic(space, py, iy)
            yield float(level), curve
        level -= step


@dataclass
class UniformityReport:
    epsilon: float
    pairs_tested: int
    A_estimate: float
    worst_pair: tuple[str, str] | None
    per_pair: list[dict] = field(default_factory=list)
    families: tuple[str, ...] = FAMILIES
    skipped: list[tuple[str, str]] = field(default_factory=list)

    @property
    def label(self) -> str:
        return "empirical A within families " + ",".join(self.families)

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "pairs_tested": self.pairs_tested,
            "A_estimate": self.A_estimate,
            "worst_pair": list(self.worst_pair) if self.worst_pair else None,
            "label": self.label,
            "families": list(self.families),
            "skipped": [list(p) for p in self.skipped],
            "per_pair": self.per_pair,
        }


def _pairs(space: MetricSpace, pairs, seed: int) -> list[tuple[int, int]]:
    if isinstance(pairs, str):
        if pairs != "all":
            raise ValueError(f"unknown pair sampler {pairs!r}")
        return [(i, j) for i in range(space.n) for j in range(i + 1, space.n)]
    if isinstance(pairs, (int, np.integer)):
        rng = np.random.default_rng(seed)
        out = []
        while len(out) < int(pairs):
            i, j = rng.integers(0, space.n, 2)
            if i != j:
                out.append((int(i), int(j)))
        return out
    return [(space.idx(a), space.idx(b)) for a, b in pairs]


def _families(families) -> tuple[str, ...]:
    if isinstance(families, str):
        families = families.split(",")
    out = []
    for f in families:
        f = _ALIASES.get(f.strip(), f.strip())
        if f not in FAMILIES:
            raise ValueError(f"unknown curve family {f!r} (known: {', '.join(FAMILIES)})")
        if f not in out:
            out.append(f)
    if not out:
        raise ValueError("at least one curve family must be enabled")
    return tuple(f for f in FAMILIES if f in out)


def estimate_uniformity(
    deformed: DeformedSpace,
    pairs: str | int | Sequence[tuple] = 50,
    families: Sequence[str] | str = FAMILIES,
    seed: int = 0,
) -> UniformityReport:
    """Empirical uniformity constant over sampled pairs and curve families.

    Parameters
    ----------
    pairs : ``"all"``, int or list of pairs
        Every vertex pair, that many seeded random pairs, or explicit pairs.
    families : sequence of str
        Any of ``deformed_geodesic``, ``base_geodesic``, ``tent`` (or the
        short forms ``g``, ``b``, ``t``).

    Each pair scores ``min`` over the enabled families of
    ``max(quasiconvex_ratio, cone_ratio)``; the estimate is the worst pair.
    Pairs with ``d_eps`` below ``1e-12 * scale`` are skipped and logged.
    """
    fams = _families(families)
    space = deformed.base
    todo = _pairs(space, pairs, seed)
    floor_ = 1e-12 * deformed.scale
    rows, skipped = [], []
    A, worst = 1.0, None
    for i, j in todo:
        a, b = space.ids[i], space.ids[j]
        if i == j or not deformed.dist_eps[i, j] > floor_:
            log.info("skipping collapsed pair (%s, %s)", a, b)
            skipped.append((a, b))
            continue
        best = None
        for fam in fams:
            if fam == "deformed_geodesic":
                cands = [deformed_geodesic(deformed, i, j)]
            elif fam == "base_geodesic":
                cands = [geodesic(space, i, j)]
            else:
                cands = [c for _, c in tent_curves(deformed, i, j)]
            for curve in cands:
                qc, cone = curve_badness(deformed, curve)
                score = max(qc, cone)
                if best is None or score < best[0]:
                    best = (score, qc, cone, fam)
        score, qc, cone, fam = best
        rows.append(
            {"pair": [a, b], "quasiconvex_ratio": qc, "cone_ratio": cone, "badness": score, "curve_family_used": fam}
        )
        if worst is None or score > A:
            A, worst = max(A, score), (a, b)
    return UniformityReport(deformed.epsilon, len(rows), float(A), worst, rows, fams, skipped)


@dataclass(frozen=True)
class StarlikeReport:
    K_estimate: float
    worst_vertex: str
    ray_family: list[tuple[str, str]]

    def to_dict(self) -> dict:
        return {
            "K_estimate": self.K_estimate,
            "worst_vertex": self.worst_vertex,
            "ray_family": [list(p) for p in self.ray_family],
        }


def estimate_starlike(
    space: MetricSpace,
    base_anchor: BoundaryAnchor | str,
    frontier_anchors: Sequence[BoundaryAnchor | str],
) -> StarlikeReport:
    """Rough-starlikeness constant from rays between ``base_anchor`` and each
    of ``frontier_anchors``.

    A ray is the base geodesic between the deepest points of the two
    anchors; ``K_estimate`` is the largest distance from a vertex to the
    nearest ray.
    """

    def resolve(a):
        return anchor_from_space(space, a) if isinstance(a, str) else a

    xi = resolve(base_anchor)
    others = [resolve(a) for a in frontier_anchors]
    if not others:
        raise ValueError("rough starlikeness needs the base anchor and at least one other anchor")
    near = np.full(space.n, np.inf)
    family = []
    for zeta in others:
        ray = geodesic(space, xi.sequence[-1], zeta.sequence[-1])
        near = np.minimum(near, space.dist[:, ray.path].min(axis=1))
        family.append((xi.name, zeta.name))
    k = int(np.argmax(near))
    return StarlikeReport(float(near[k]), space.ids[k], family)


def short_range_constant(deformed: DeformedSpace, lam: float = 0.0) -> float:
    """Uniformity constant for base geodesics between points at distance
    at most ``4 + lam``.

    Along such a geodesic ``b`` stays within ``2*lam + 8`` of ``b(x)``, so
    ``l_eps <= exp(2*lam*eps + 8*eps) rho(x) d`` and ``d_eps >=
    exp(-2*lam*eps - 8*eps) rho(x) d``.  The cone part combines this with
    the lower envelope ``delta_eps >= exp(-10*eps*delta) / (2*eps) * rho / s``.
    """
    eps = deformed.epsilon
    dens = deformed.density
    delta = dens.delta + dens.field.error_bound
    h = np.exp(2 * lam * eps + 8 * eps)
    quasiconvex = h * h
    cone = h * h * (4 + lam) / 2 * 2 * eps * np.exp(10 * eps * delta) * deformed.snap_slack
    return float(max(quasiconvex, cone))
