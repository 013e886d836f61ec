"""Boundary anchors and Busemann fields.

Points of the Gromov boundary are approximated by finite escaping vertex
sequences (anchors).  A Busemann field based at an anchor is estimated from
the anchor's deepest points, ``b(x) ~ d(x, z_i) - d(o, z_i)``, and carries
an explicit additive error bound.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .metric import MetricSpace

__all__ = [
    "AnchorError",
    "BoundaryAnchor",
    "AnchorReport",
    "BusemannField",
    "ShiftReport",
    "anchor_from_space",
    "verify_anchor",
    "busemann_field",
    "boundary_product",
    "basepoint_shift_check",
]

TAIL = 3


class AnchorError(ValueError):
    """Raised for anchors that are malformed or fail verification."""


@dataclass(frozen=True)
class BoundaryAnchor:
    name: str
    sequence: tuple[str, ...]
    base: str

    def __post_init__(self):
        object.__setattr__(self, "sequence", tuple(self.sequence))


def anchor_from_space(space: MetricSpace, name: str, base: str | None = None) -> BoundaryAnchor:
    """Anchor stored in the space's ``anchors`` map."""
    if name not in space.anchors:
        raise AnchorError(f"space has no anchor named {name!r} (known: {sorted(space.anchors)})")
    base = base if base is not None else space.base
    if base is None:
        raise AnchorError("no base vertex given and the space has none")
    return BoundaryAnchor(name, tuple(space.anchors[name]), str(base))


@dataclass(frozen=True)
class AnchorReport:
    passed: bool
    min_product: float
    first_product: float
    tail_product: float
    threshold: float
    reasons: tuple[str, ...] = ()


def _products(space: MetricSpace, seq: np.ndarray, o: int) -> np.ndarray:
    D = space.dist
    row = D[o, seq]
    return 0.5 * (row[:, None] + row[None, :] - D[np.ix_(seq, seq)])


def verify_anchor(
    space: MetricSpace,
    anchor: BoundaryAnchor,
    delta: float,
    escape_threshold: float | None = None,
) -> AnchorReport:
    """Finite check that an anchor behaves like a Gromov sequence.

    Passes when every pairwise product ``(z_i|z_j)_o`` stays above
    ``(z_1|z_2)_o - 2*delta``, the tail product ``(z_{M-1}|z_M)_o`` reaches
    the escape threshold (default ``d(o, z_M) / 2``), and the sequence
    actually moves away from the base: ``d(o, z_M)`` is the largest
    distance along the sequence and exceeds ``d(o, z_1)``.
    """
    if len(anchor.sequence) < 2:
        raise AnchorError(f"anchor {anchor.name!r} needs at least 2 points")
    seq = space.indices(anchor.sequence)
    o = space.idx(anchor.base)
    P = _products(space, seq, o)
    iu = np.triu_indices(len(seq), 1)
    min_product = float(P[iu].min())
    first = float(P[0, 1])
    tail = float(P[-2, -1])
    reach = space.dist[o, seq]
    threshold = 0.5 * reach[-1] if escape_threshold is None else float(escape_threshold)
    tol = space.tol

    reasons = []
    if min_product < first - 2 * delta - tol:
        i, j = iu[0][np.argmin(P[iu])], iu[1][np.argmin(P[iu])]
        reasons.append(
            f"product (z_{i + 1}|z_{j + 1}) = {min_product:.6g} drops below "
            f"(z_1|z_2) - 2*delta = {first - 2 * delta:.6g}"
        )
    if tail < threshold - tol:
        reasons.append(f"tail product {tail:.6g} below escape threshold {threshold:.6g}")
    if reach[-1] < reach.max() - tol or reach[-1] <= reach[0] + tol:
        reasons.append("sequence does not escape: d(o, z_M) is not the strict maximum")
    return AnchorReport(not reasons, min_product, first, tail, threshold, tuple(reasons))


@dataclass(eq=False)
class BusemannField:
    """Per-vertex values of ``b = b_{xi,o}`` with a certified error bound."""

    anchor: BoundaryAnchor
    base: str
    values: np.ndarray
    error_bound: float
    delta: float
    spread: np.ndarray = field(repr=False)
    space: MetricSpace = field(repr=False)
    uncertified: tuple[str, ...] = ()

    def __getitem__(self, v) -> float:
        return float(self.values[self.space.idx(v)])

    @property
    def certified(self) -> np.ndarray:
        """Boolean mask of the vertices covered by ``error_bound``."""
        mask = np.ones(self.space.n, dtype=bool)
        if self.uncertified:
            mask[self.space.indices(self.uncertified)] = False
        return mask

    @property
    def truncation_slack(self) -> float:
        return self.error_bound - 2.0 * self.delta


def busemann_field(
    space: MetricSpace,
    anchor: BoundaryAnchor,
    delta: float,
    escape_threshold: float | None = None,
) -> BusemannField:
    """Busemann field from the median of the last three anchor estimates.

    ``values[x] = median_i (d(x, z_i) - d(o, z_i))`` over the three deepest
    anchor points; ``error_bound = 2*delta + max_x spread(x)`` where the
    spread is the range of the three estimates at ``x``.
    """
    report = verify_anchor(space, anchor, delta, escape_threshold)
    if not report.passed:
        raise AnchorError(f"anchor {anchor.name!r} failed verification: " + "; ".join(report.reasons))
    seq = space.indices(anchor.sequence)[-TAIL:]
    o = space.idx(anchor.base)
    est = space.dist[:, seq] - space.dist[o, seq][None, :]
    values = np.median(est, axis=1)
    spread = est.max(axis=1) - est.min(axis=1)
    certified = np.ones(space.n, dtype=bool)
    certified[seq[1:]] = False
    certified[o] = True
    eb = 2.0 * delta + float(spread[certified].max())
    skipped = tuple(space.ids[i] for i in np.flatnonzero(~certified))
    return BusemannField(anchor, anchor.base, values, eb, float(delta), spread, space, skipped)


def boundary_product(
    space: MetricSpace,
    anchor_a: BoundaryAnchor,
    anchor_b: BoundaryAnchor,
    o,
    delta: float,
) -> tuple[float, float]:
    """Certified window ``[m, m + 2*delta]`` for ``(xi|xi')_o``.

    ``m`` is the minimum of ``(z_i|z'_j)_o`` over tail pairs (last three
    points of each anchor).
    """
    for a in (anchor_a, anchor_b):
        rep = verify_anchor(space, BoundaryAnchor(a.name, a.sequence, space.ids[space.idx(o)]), delta)
        if not rep.passed:
            raise AnchorError(f"anchor {a.name!r} failed verification: " + "; ".join(rep.reasons))
    D = space.dist
    oi = space.idx(o)
    za = space.indices(anchor_a.sequence)[-TAIL:]
    zb = space.indices(anchor_b.sequence)[-TAIL:]
    P = 0.5 * (D[oi, za][:, None] + D[oi, zb][None, :] - D[np.ix_(za, zb)])
    m = float(P.min())
    return m, m + 2.0 * delta


@dataclass(frozen=True)
class ShiftReport:
    deviation: float
    bound: float
    passed: bool
    witness: str


def basepoint_shift_check(field_o: BusemannField, field_o2: BusemannField) -> ShiftReport:
    """Cocycle check ``b(x, o) - b(x, o') ~ b(o', o)`` up to ``6*delta``.

    Reports ``sup_x |(field_o[x] - field_o2[x]) - field_o[o']|`` against
    ``6*delta`` widened by both fields' error bounds.
    """
    if field_o.anchor.sequence != field_o2.anchor.sequence or field_o.space is not field_o2.space:
        raise AnchorError("base-point shift check needs the same anchor sequence on the same space")
    space = field_o.space
    shift = field_o.values[space.idx(field_o2.base)]
    dev = np.abs(field_o.values - field_o2.values - shift)
    i = int(np.argmax(dev))
    delta = max(field_o.delta, field_o2.delta)
    bound = 6.0 * delta + field_o.error_bound + field_o2.error_bound
    return ShiftReport(float(dev[i]), bound, bool(dev[i] <= bound + space.tol), space.ids[i])
