"""Tour of the half-plane grid: metric fidelity, Busemann field, and the
uniformized metric at a few values of eps.

Run with ``python demos/halfplane_tour.py``; takes about half a minute.
"""
import math

import numpy as np

from roughuniform import (
    anchor_from_space,
    busemann_field,
    deform,
    estimate_uniformity,
    make_density,
)
from roughuniform.models import halfplane_grid, mesh_of

LOG3 = math.log(3)

g = halfplane_grid(x_range=(-2, 2), y_range=(0.25, 4))
print(f"grid: {g.n} vertices, {len(g.edges)} edges, mesh {mesh_of(g):.3f}")

# the grid metric against the continuum
top = g.nearest((0.0, math.e))
print(f"d((0,1), (0,e)) = {g.d(g.base, top):.4f}   (continuum: 1)")

# Busemann field of the upward anchor is -ln y
fld = busemann_field(g, anchor_from_space(g, "omega"), LOG3)
X, Y = g.coords.T
col = np.abs(X) < 1e-12
dev = np.abs(fld.values[col] + np.log(Y[col])).max()
print(f"max |b(0,y) + ln y| = {dev:.4f}, certified error bound {fld.error_bound:.3f}")

# deformed metric: eps=1 gives Euclidean length on vertical lines
for eps in (0.5, 1.0, 2.0):
    D = deform(g, make_density(fld, eps), tail="analytic")
    lo, hi = g.nearest((0.0, 0.5)), g.nearest((0.0, 2.0))
    rep = estimate_uniformity(D, 20, seed=0)
    print(
        f"eps={eps:g}: d_eps((0,.5),(0,2)) = {D.dist_eps[lo, hi]:.4f}, "
        f"delta_eps(base) = {D.delta_eps[g.idx(g.base)]:.3f}, A ~ {rep.A_estimate:.2f}"
    )
