"""Busemann-based conformal uniformization of finite Gromov hyperbolic graphs."""
from .metric import (
    Curve,
    GraphError,
    MetricSpace,
    build_space,
    geodesic,
    load_graph,
    sample_along,
    save_graph,
    space_from_arrays,
)
from .hyperbolicity import CapExceeded, HyperbolicityReport, delta_four_point, gromov_product
from .busemann import (
    AnchorError,
    BoundaryAnchor,
    BusemannField,
    anchor_from_space,
    basepoint_shift_check,
    boundary_product,
    busemann_field,
    verify_anchor,
)
from .uniformize import (
    ConformalDensity,
    DeformedSpace,
    HarnackWarning,
    boundary_distance_bounds,
    deform,
    deformed_curve_length,
    deformed_geodesic,
    discretized_integral,
    harnack_check,
    make_density,
)
from .roughiso import (
    RoughIsometry,
    RoughSimilarity,
    busemann_transport_check,
    certify,
    certify_similarity,
    deformed_transport_check,
    push_anchor,
    quasi_inverse,
)
from .models import (
    HalfPlaneGrid,
    SpecialPair,
    binary_tree,
    circle_perimeter,
    halfplane_grid,
    net_map,
    scaled_space,
    special_pair,
)
from .uniformity import (
    StarlikeReport,
    UniformityReport,
    curve_badness,
    estimate_starlike,
    estimate_uniformity,
    short_range_constant,
    tent_curves,
)
from .experiments import (
    ExperimentReport,
    Verdict,
    experiment_counterexample,
    experiment_lemmas,
    experiment_theorem,
    similarity_identification,
)

__version__ = "0.1.0"
