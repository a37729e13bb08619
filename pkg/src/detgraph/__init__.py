"""Determinantal measures on graph edge sets: exact sampling, monotone
couplings, transport distances, and Schreier-graph trace experiments."""

__version__ = "0.1.0"

from .errors import InvalidArgument, CapacityExceeded, NumericalFailure, InvalidState
from .rng import RandomStream
from .backend import backend_name
from .graphs import (
    Graph,
    complete_graph,
    cycle_graph,
    path_graph,
    grid_graph,
    wired_contraction,
)
from .schreier import (
    GeneratorSet,
    SchreierGraph,
    RootedBallClass,
    paired_generators,
    self_inverse_generators,
    build_torus,
    random_schreier,
    label_as_schreier,
    subdivide,
    ball_class,
    local_statistics,
    ball_distance,
    ball_is_tree,
)
from .operators import (
    GroupWord,
    GroupRingElement,
    OperatorMatrix,
    SpectralMeasure,
    ContractionCheck,
    Zd,
    FreeGroup,
    parse_element,
    represent,
    element_trace,
    normalized_trace,
    limit_trace,
    spectral_measure,
    kernel_fraction,
    schatten_norm,
    heat_kernel,
    validate_contraction,
)
from .dpp import (
    DeterminantalMeasure,
    SubsetDistribution,
    cylinder_prob,
    exact_distribution,
    sample,
    sample_mask,
)
from .forests import (
    Subspace,
    OrientedEdgeSpace,
    graph_spaces,
    bounded_cycle_space,
    transfer_current,
    ust_measure,
    wilson_sample,
    fsf_L_kernel,
    girth_check,
    expected_degree,
    torus_graph,
    torus_square_cycle_space,
    degree_limit_rows,
)
from .coupling import (
    Coupling,
    NotDominated,
    BoundReport,
    monotone_coupling,
    dominates_exhaustive,
    dbar,
    dbar_monotone,
    dbar_monotone_kernels,
    relative_product,
    bound_suite,
    mdependence_check,
    circulant_kernel,
    finitely_dependent_approx,
    return_prob_compare,
)
from .exact import (
    rational_transfer_current,
    rational_cylinder,
    rational_distribution,
    spanning_tree_count,
    enumerate_spanning_trees,
)

__all__ = [
    "__version__",
    "InvalidArgument",
    "CapacityExceeded",
    "NumericalFailure",
    "InvalidState",
    "RandomStream",
    "backend_name",
    "Graph",
    "complete_graph",
    "cycle_graph",
    "path_graph",
    "grid_graph",
    "wired_contraction",
    "GeneratorSet",
    "SchreierGraph",
    "RootedBallClass",
    "paired_generators",
    "self_inverse_generators",
    "build_torus",
    "random_schreier",
    "label_as_schreier",
    "subdivide",
    "ball_class",
    "local_statistics",
    "ball_distance",
    "ball_is_tree",
    "GroupWord",
    "GroupRingElement",
    "OperatorMatrix",
    "SpectralMeasure",
    "ContractionCheck",
    "Zd",
    "FreeGroup",
    "parse_element",
    "represent",
    "element_trace",
    "normalized_trace",
    "limit_trace",
    "spectral_measure",
    "kernel_fraction",
    "schatten_norm",
    "heat_kernel",
    "validate_contraction",
    "DeterminantalMeasure",
    "SubsetDistribution",
    "cylinder_prob",
    "exact_distribution",
    "sample",
    "sample_mask",
    "Subspace",
    "OrientedEdgeSpace",
    "graph_spaces",
    "bounded_cycle_space",
    "transfer_current",
    "ust_measure",
    "wilson_sample",
    "fsf_L_kernel",
    "girth_check",
    "expected_degree",
    "torus_graph",
    "torus_square_cycle_space",
    "degree_limit_rows",
    "Coupling",
    "NotDominated",
    "BoundReport",
    "monotone_coupling",
    "dominates_exhaustive",
    "dbar",
    "dbar_monotone",
    "dbar_monotone_kernels",
    "relative_product",
    "bound_suite",
    "mdependence_check",
    "circulant_kernel",
    "finitely_dependent_approx",
    "return_prob_compare",
    "rational_transfer_current",
    "rational_cylinder",
    "rational_distribution",
    "spanning_tree_count",
    "enumerate_spanning_trees",
]
