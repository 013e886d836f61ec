"""Rough isometries and rough similarities between finite spaces.

Constants are computed, not assumed: :func:`certify` returns the smallest
additive distortion and density radius of a given vertex map, and every
transport check compares against those computed values.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .busemann import AnchorError, BoundaryAnchor, BusemannField, verify_anchor
from .metric import MetricSpace, load_graph
from .uniformize import DeformedSpace

__all__ = [
    "RoughIsometry",
    "RoughSimilarity",
    "InverseReport",
    "TransportReport",
    "DeformedTransportReport",
    "as_map",
    "certify",
    "certify_similarity",
    "rough_isometry",
    "quasi_inverse",
    "push_anchor",
    "busemann_transport_check",
    "deformed_transport_check",
    "load_map",
]

_CHUNK = 512


@dataclass(eq=False)
class RoughIsometry:
    """Vertex map ``source -> target`` with certified ``(lambda, tau)``."""

    source: MetricSpace
    target: MetricSpace
    map: np.ndarray
    lam: float
    tau: float

    def __call__(self, v) -> str:
        return self.target.ids[self.map[self.source.idx(v)]]

    def mapping(self) -> dict[str, str]:
        return {self.source.ids[i]: self.target.ids[j] for i, j in enumerate(self.map)}


@dataclass(eq=False)
class RoughSimilarity(RoughIsometry):
    kappa: float = 1.0


def as_map(mapping, source: MetricSpace, target: MetricSpace) -> np.ndarray:
    """Index array from a ``{src_id: dst_id}`` dict or an index sequence."""
    if isinstance(mapping, Mapping):
        missing = [v for v in source.ids if v not in mapping]
        if missing:
            raise ValueError(f"map is not total: no image for {missing[0]!r}")
        return np.array([target.idx(mapping[v]) for v in source.ids], dtype=np.int64)
    arr = np.asarray(mapping, dtype=np.int64)
    if arr.shape != (source.n,):
        raise ValueError("map must give one target index per source vertex")
    return arr


def _distortion(source: MetricSpace, target: MetricSpace, m: np.ndarray, kappa: float) -> float:
    worst = 0.0
    for s in range(0, source.n, _CHUNK):
        rows = slice(s, s + _CHUNK)
        diff = np.abs(target.dist[np.ix_(m[rows], m)] - kappa * source.dist[rows])
        worst = max(worst, float(diff.max()))
    return worst


def _density_radius(target: MetricSpace, m: np.ndarray) -> float:
    image = np.unique(m)
    return float(target.dist[:, image].min(axis=1).max())


def certify(mapping, source: MetricSpace, target: MetricSpace) -> tuple[float, float]:
    """Smallest ``lambda`` and ``tau`` for which the map is a rough isometry.

    ``lambda = max |d_X(f(a), f(b)) - d_Y(a, b)|`` over all source pairs and
    ``tau = max_x min_y d_X(x, f(y))``.
    """
    m = as_map(mapping, source, target)
    return _distortion(source, target, m, 1.0), _density_radius(target, m)


def certify_similarity(mapping, source: MetricSpace, target: MetricSpace, kappa: float) -> float:
    """Smallest ``tau`` making the map a ``(kappa, tau)``-rough similarity."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    m = as_map(mapping, source, target)
    return max(_distortion(source, target, m, kappa), _density_radius(target, m))


def rough_isometry(mapping, source: MetricSpace, target: MetricSpace) -> RoughIsometry:
    m = as_map(mapping, source, target)
    lam, tau = certify(m, source, target)
    return RoughIsometry(source, target, m, lam, tau)


@dataclass(frozen=True)
class InverseReport:
    """Displacements of the two round trips, against ``2*lambda`` and
    ``max(lambda, tau)`` (the single constant of a map whose image is also
    ``lambda``-dense)."""

    source_roundtrip: float
    target_roundtrip: float
    source_ok: bool
    target_ok: bool


def quasi_inverse(iso: RoughIsometry) -> tuple[RoughIsometry, InverseReport]:
    """Nearest-preimage inverse ``x -> argmin_y d_X(x, f(y))``.

    Ties go to the lexicographically smallest source id.  The inverse is
    certified; the report checks ``d_Y(y, g(f(y))) <= 2*lambda`` and
    ``d_X(x, f(g(x))) <= max(lambda, tau)`` with the forward map's computed
    constants.
    """
    src, tgt = iso.source, iso.target
    order = np.argsort(src.lex_rank, kind="stable")
    m_sorted = iso.map[order]
    inv = np.empty(tgt.n, dtype=np.int64)
    for s in range(0, tgt.n, _CHUNK):
        block = tgt.dist[s:s + _CHUNK][:, m_sorted]
        inv[s:s + _CHUNK] = order[np.argmin(block, axis=1)]
    lam, tau = certify(inv, tgt, src)
    back = RoughIsometry(tgt, src, inv, lam, tau)
    y_disp = float(src.dist[np.arange(src.n), inv[iso.map]].max())
    x_disp = float(tgt.dist[np.arange(tgt.n), iso.map[inv]].max())
    tol = max(src.tol, tgt.tol)
    report = InverseReport(y_disp, x_disp, y_disp <= 2 * iso.lam + tol, x_disp <= max(iso.lam, iso.tau) + tol)
    return back, report


def push_anchor(iso: RoughIsometry, anchor: BoundaryAnchor, delta: float) -> BoundaryAnchor:
    """Image ``f(z_i)`` of a source anchor, verified in the target."""
    seq = tuple(iso(v) for v in anchor.sequence)
    pushed = BoundaryAnchor(anchor.name + "'", seq, iso(anchor.base))
    rep = verify_anchor(iso.target, pushed, delta)
    if not rep.passed:
        raise AnchorError(
            f"image of anchor {anchor.name!r} fails verification in the target "
            f"(min product {rep.min_product:.4g}, tail product {rep.tail_product:.4g}): "
            + "; ".join(rep.reasons)
            + " -- lambda may be too large for this truncation"
        )
    return pushed


@dataclass(frozen=True)
class TransportReport:
    deviation: float
    witness: str
    bound_5lambda: float
    bound_3lambda_4delta: float
    pass_5lambda: bool
    pass_3lambda_4delta: bool


def busemann_transport_check(
    iso: RoughIsometry, field_Y: BusemannField, field_X: BusemannField
) -> TransportReport:
    """``sup_y |b(y) - b'(f(y))|`` against ``5*lambda`` and ``3*lambda + 4*delta``.

    Both bounds are widened by the two fields' error bounds.
    """
    if field_X.base != iso(field_Y.base):
        raise ValueError(
            f"target field base {field_X.base!r} is not the image {iso(field_Y.base)!r} of the source base"
        )
    dev = np.abs(field_Y.values - field_X.values[iso.map])
    i = int(np.argmax(dev))
    slack = field_Y.error_bound + field_X.error_bound
    delta = max(field_Y.delta, field_X.delta)
    b1 = 5 * iso.lam + slack
    b2 = 3 * iso.lam + 4 * delta + slack
    tol = max(iso.source.tol, iso.target.tol)
    return TransportReport(
        float(dev[i]), iso.source.ids[i], b1, b2, bool(dev[i] <= b1 + tol), bool(dev[i] <= b2 + tol)
    )


@dataclass(frozen=True)
class DeformedTransportReport:
    pairs: int
    dist_ratio_min: float
    dist_ratio_max: float
    delta_ratio_min: float
    delta_ratio_max: float
    flagged: tuple[tuple[str, str, float], ...]
    budget: float

    @property
    def dist_window(self) -> float:
        return self.dist_ratio_max / self.dist_ratio_min if self.pairs else 1.0

    @property
    def delta_window(self) -> float:
        return self.delta_ratio_max / self.delta_ratio_min


def deformed_transport_check(
    iso: RoughIsometry,
    deformed_Y: DeformedSpace,
    deformed_X: DeformedSpace,
    pairs: int | Sequence[tuple] | None = 2000,
    seed: int = 0,
    budget: float = 50.0,
) -> DeformedTransportReport:
    """Ratios ``d_eps^Y(x, y) / d_eps^X(f x, f y)`` and ``delta_eps^Y / delta_eps^X o f``.

    Distance ratios use pairs with ``d_Y(x, y) >= 2 + lambda``: all such
    pairs when ``pairs`` is None, ``pairs`` seeded random ones when an int,
    or an explicit list.  Pairs whose ratio leaves ``[1/budget, budget]``
    are flagged.
    """
    if not np.isclose(deformed_Y.epsilon, deformed_X.epsilon, rtol=1e-12, atol=0):
        raise ValueError(f"epsilon mismatch: {deformed_Y.epsilon} vs {deformed_X.epsilon}")
    Y = iso.source
    m = iso.map
    if pairs is None:
        a, b = np.triu_indices(Y.n, 1)
    elif isinstance(pairs, (int, np.integer)):
        rng = np.random.default_rng(seed)
        a = rng.integers(0, Y.n, int(pairs))
        b = rng.integers(0, Y.n, int(pairs))
    else:
        a = Y.indices([p[0] for p in pairs])
        b = Y.indices([p[1] for p in pairs])
    keep = Y.dist[a, b] >= 2 + iso.lam
    a, b = a[keep], b[keep]
    num = deformed_Y.dist_eps[a, b]
    den = deformed_X.dist_eps[m[a], m[b]]
    r = num / den
    flagged = tuple(
        (Y.ids[a[k]], Y.ids[b[k]], float(r[k])) for k in np.flatnonzero((r > budget) | (r < 1 / budget))
    )
    dr = deformed_Y.delta_eps / deformed_X.delta_eps[m]
    return DeformedTransportReport(
        int(len(r)),
        float(r.min()) if len(r) else 1.0,
        float(r.max()) if len(r) else 1.0,
        float(dr.min()),
        float(dr.max()),
        flagged,
        float(budget),
    )


def load_map(path: str | Path) -> RoughIsometry:
    """Load ``{"source": file, "target": file, "map": {src: dst}}`` and certify."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        spec = json.load(fh)
    src = load_graph(path.parent / spec["source"])
    tgt = load_graph(path.parent / spec["target"])
    return rough_isometry(spec["map"], src, tgt)
