"""Conformal deformation by ``rho = exp(-eps * b)`` and its boundary distance."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .busemann import BusemannField
from .metric import Curve, MetricSpace, all_pairs, sample_indices, shortest_path

__all__ = [
    "HarnackWarning",
    "ConformalDensity",
    "DeformedSpace",
    "HarnackReport",
    "make_density",
    "deform",
    "deformed_curve_length",
    "deformed_geodesic",
    "discretized_integral",
    "discretization_bound",
    "harnack_check",
    "analytic_tail",
    "boundary_distance_bounds",
    "logmean_factor",
]


class HarnackWarning(UserWarning):
    """Adjacent densities differ by more than the Harnack window allows."""


def logmean_factor(t: np.ndarray) -> np.ndarray:
    """``expm1(t) / t`` with the removable singularity filled in."""
    t = np.asarray(t, dtype=float)
    out = np.ones_like(t)
    big = np.abs(t) > 1e-8
    out[big] = np.expm1(t[big]) / t[big]
    out[~big] = 1.0 + 0.5 * t[~big]
    return out


@dataclass(eq=False)
class ConformalDensity:
    epsilon: float
    field: BusemannField
    rho: np.ndarray
    harnack_C: float
    violations: list[tuple[str, str, float]] = field(default_factory=list)

    @property
    def space(self) -> MetricSpace:
        return self.field.space

    @property
    def delta(self) -> float:
        return self.field.delta

    def __getitem__(self, v) -> float:
        return float(self.rho[self.space.idx(v)])


def make_density(field: BusemannField, epsilon: float) -> ConformalDensity:
    """Density ``exp(-epsilon * b)`` with the unit-scale Harnack check.

    Adjacent pairs at distance at most 1 must satisfy
    ``1/C <= rho[u]/rho[v] <= C`` with ``C = exp(10*eps*delta + eps)``;
    violations beyond the field's error-bound widening are collected and
    reported through :class:`HarnackWarning`.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    space = field.space
    rho = np.exp(-epsilon * field.values)
    C = float(np.exp(10 * epsilon * field.delta + epsilon))
    u, v = space.edges.T
    near = space.dist[u, v] <= 1.0
    log_ratio = np.abs(field.values[u] - field.values[v]) * epsilon
    limit = np.log(C) + 2 * epsilon * field.error_bound
    bad = np.flatnonzero(near & (log_ratio > limit + 1e-12))
    violations = [(space.ids[u[e]], space.ids[v[e]], float(np.exp(log_ratio[e]))) for e in bad]
    if violations:
        a, b, r = violations[0]
        warnings.warn(
            f"{len(violations)} Harnack violations, e.g. rho ratio {r:.4g} on ({a}, {b}) exceeds C={C:.4g}",
            HarnackWarning,
            stacklevel=2,
        )
    return ConformalDensity(float(epsilon), field, rho, C, violations)


def analytic_tail(space: MetricSpace, frontier: np.ndarray, epsilon: float) -> np.ndarray:
    """Closed-form remaining distance to the boundary below frontier vertices.

    Half-plane grids: the vertical drop from height ``y`` costs
    ``int_0^y t^(eps-1) dt = y**eps / eps`` (``y**(eps*k) / eps`` when the
    grid lengths are scaled by ``k``).  Trees: each frontier leaf
    continues as a descending ray on which ``b`` grows at unit rate, giving
    ``rho / eps``.
    """
    kind = (space.model or {}).get("kind")
    if kind == "halfplane":
        y = space.coords[frontier, 1]
        k = float(space.model.get("scale", 1.0))
        return y ** (epsilon * k) / epsilon
    if kind == "tree":
        return None
    raise ValueError(f"no analytic tail for model {kind!r}; use tail='geometric'")


@dataclass(eq=False)
class DeformedSpace:
    base: MetricSpace
    density: ConformalDensity
    edge_eps_length: np.ndarray
    dist_eps: np.ndarray
    frontier: np.ndarray
    tail: np.ndarray
    delta_eps: np.ndarray
    tail_rule: str

    @property
    def epsilon(self) -> float:
        return self.density.epsilon

    @property
    def rho(self) -> np.ndarray:
        return self.density.rho

    @property
    def scale(self) -> float:
        return float(self.dist_eps.max())

    @property
    def tol(self) -> float:
        # deformed edges can be far shorter than base ones
        return 1e-12 * (1.0 + self.scale)

    @cached_property
    def edge_b_variation(self) -> float:
        """Largest Busemann change across a single edge."""
        b = self.density.field.values
        u, v = self.base.edges.T
        return float(np.abs(b[u] - b[v]).max()) if len(u) else 0.0

    @property
    def snap_slack(self) -> float:
        """Factor bounding the density change caused by snapping a curve point
        to the nearest vertex: ``exp(eps * max_edge |b(u) - b(v)|)``.

        The field is 1-Lipschitz, so this never exceeds
        ``exp(eps * max_edge_length)``.
        """
        return float(np.exp(self.epsilon * self.edge_b_variation))

    def geodesic(self, u, v) -> Curve:
        return deformed_geodesic(self, u, v)


def deform(
    space: MetricSpace,
    density: ConformalDensity,
    frontier: Sequence | None = None,
    tail: str | np.ndarray = "geometric",
) -> DeformedSpace:
    """Deformed metric ``d_eps`` and boundary distance ``delta_eps``.

    Each edge gets length ``len(u,v) * logmean(rho[u], rho[v])``, the exact
    integral of a density interpolated log-linearly along the edge.
    ``delta_eps[x] = min_f (d_eps(x, f) + tail[f])`` over frontier vertices.

    ``tail`` is ``"geometric"`` (``rho[f] / eps``, the integral of
    ``rho[f] * exp(-eps*t)`` over a ray that keeps escaping), ``"analytic"``
    (model closed form, see :func:`analytic_tail`), or an explicit array.
    """
    if density.space is not space:
        raise ValueError("density was built on a different space")
    if frontier is None:
        frontier = space.frontier
    front = space.indices(frontier)
    if len(front) == 0:
        raise ValueError("frontier is empty: delta_eps needs a marked escape set")
    front = np.unique(front)
    eps = density.epsilon
    b = density.field.values
    u, v = space.edges.T
    log_rho_u = -eps * b[u]
    edge_eps = space.lengths * np.exp(log_rho_u) * logmean_factor(eps * (b[u] - b[v]))
    dist_eps = all_pairs(space.n, space.edges, edge_eps)

    if isinstance(tail, str):
        rule = tail
        if tail == "geometric":
            tails = density.rho[front] / eps
        elif tail == "analytic":
            tails = analytic_tail(space, front, eps)
            if tails is None:
                tails = density.rho[front] / eps
        else:
            raise ValueError(f"unknown tail rule {tail!r}")
    else:
        rule = "explicit"
        tails = np.asarray(tail, dtype=float)
        if tails.shape != front.shape:
            raise ValueError("explicit tail must give one value per frontier vertex")
    delta_eps = (dist_eps[:, front] + tails[None, :]).min(axis=1)
    return DeformedSpace(space, density, edge_eps, dist_eps, front, tails, delta_eps, rule)


def deformed_geodesic(deformed: DeformedSpace, u, v) -> Curve:
    """Shortest curve in the deformed metric (lexicographic tie-breaking)."""
    space = deformed.base
    iu, iv = space.idx(u), space.idx(v)
    path = shortest_path(space, iu, iv, deformed.edge_eps_length, deformed.dist_eps[:, iv], deformed.tol)
    return Curve.from_path(space, path)


def deformed_curve_length(deformed: DeformedSpace, curve: Curve) -> float:
    """``l_eps`` of a curve: sum of deformed edge lengths along it."""
    if curve.space is not deformed.base:
        raise ValueError("curve lives in a different space")
    if len(curve) < 2:
        return 0.0
    return float(deformed.edge_eps_length[curve.edge_indices()].sum())


def deformed_prefix(deformed: DeformedSpace, curve: Curve) -> np.ndarray:
    """Cumulative deformed length at each vertex of ``curve``."""
    if len(curve) < 2:
        return np.zeros(1)
    return np.concatenate([[0.0], np.cumsum(deformed.edge_eps_length[curve.edge_indices()])])


def discretized_integral(deformed: DeformedSpace, curve: Curve, Q: float = 1.0) -> tuple[float, float]:
    """Riemann-type sum for ``int rho ds`` along a curve and the ratio to it.

    For length ``L > Q``: ``N = floor(L)``, ``q = L/N`` and the sum is
    ``sum_{i<N} rho(a_i)`` over snapped samples ``a_i`` at arclength ``i*q``.
    For ``L <= Q`` the sum is ``L * rho(curve start)``.  Returns
    ``(sum, l_eps(curve) / sum)``.
    """
    L = curve.length
    if not L > 0:
        raise ValueError("curve has zero length")
    rho = deformed.rho
    if L <= Q:
        total = L * rho[curve.start]
    else:
        N = int(np.floor(L + 1e-12))
        pos, _ = sample_indices(curve, L / N)
        total = float(rho[curve.path[pos[:N]]].sum())
    return float(total), deformed_curve_length(deformed, curve) / float(total)


def discretization_bound(deformed: DeformedSpace, short: bool, Q: float = 1.0) -> float:
    """Comparison constant ``2 C^2 s`` (or ``C^(Q+1) s`` for short curves)."""
    C = deformed.density.harnack_C
    s = deformed.snap_slack
    return (C ** (Q + 1) if short else 2 * C ** 2) * s


@dataclass(frozen=True)
class HarnackReport:
    pairs: int
    violations: int
    worst_margin: float
    worst_pair: tuple[str, str]


def harnack_check(density: ConformalDensity, pairs: int = 1000, seed: int = 0) -> HarnackReport:
    """Two-sided Harnack bound on random vertex pairs.

    ``|log rho[u] - log rho[v]| <= eps * (10*delta' + d(u, v))`` with
    ``delta' = delta + error_bound``.  ``worst_margin`` is the smallest
    remaining gap (negative on violation).
    """
    space = density.space
    rng = np.random.default_rng(seed)
    u = rng.integers(0, space.n, pairs)
    v = rng.integers(0, space.n, pairs)
    eps = density.epsilon
    dprime = density.delta + density.field.error_bound
    lhs = eps * np.abs(density.field.values[u] - density.field.values[v])
    rhs = eps * (10 * dprime + space.dist[u, v])
    margin = rhs - lhs
    k = int(np.argmin(margin))
    return HarnackReport(pairs, int((margin < -1e-12).sum()), float(margin[k]), (space.ids[u[k]], space.ids[v[k]]))


def boundary_distance_bounds(deformed: DeformedSpace, K: float) -> tuple[np.ndarray, np.ndarray]:
    """Lower and upper envelopes for ``delta_eps`` in terms of ``rho``.

    Lower: ``exp(-10*eps*delta) / (2*eps) * rho / s``.  Upper, for
    ``K``-roughly starlike spaces: ``(K*exp(2*K*eps) + exp(eps*(K + 16*delta))/eps) * rho``.
    Here ``delta`` is the field's constant widened by its error bound.
    """
    eps = deformed.epsilon
    dens = deformed.density
    delta = dens.delta + dens.field.error_bound
    rho = deformed.rho
    lower = np.exp(-10 * eps * delta) / (2 * eps) * rho / deformed.snap_slack
    M = K * np.exp(2 * K * eps) + np.exp(eps * (K + 16 * delta)) / eps
    return lower, M * rho
