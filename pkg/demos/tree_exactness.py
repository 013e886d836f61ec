"""On binary trees everything is exact: delta = 0, the Busemann field has
no error, and it drops by exactly one per edge along the anchor branch.
The last two anchor points only see the truncated tail and are reported
as uncertified, so they are left out.
"""
import numpy as np

from roughuniform import anchor_from_space, busemann_field, delta_four_point
from roughuniform.models import binary_tree

for depth in (3, 5, 8):
    t = binary_tree(depth)
    rep = delta_four_point(t)
    anchor = anchor_from_space(t, "xi")
    fld = busemann_field(t, anchor, rep.delta)
    branch = t.indices(anchor.sequence)
    branch = branch[fld.certified[branch]]
    steps = np.diff(fld.values[branch])
    print(
        f"depth {depth}: n={t.n}, delta={rep.delta:g}, error_bound={fld.error_bound:g}, "
        f"steps along anchor {np.unique(np.round(steps, 12))}, uncertified {list(fld.uncertified)}"
    )
