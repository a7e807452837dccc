"""Nearest-neighbour link lengths and connectivity thresholds on convex polytopes.

The library computes the theoretical limiting constants for the largest
k-nearest-neighbour link and the k-connectivity threshold of random samples
in a convex polytope, simulates both thresholds on seeded point clouds, and
runs convergence experiments comparing the two.
"""

from .errors import (
    ConfigurationError,
    PolytopeConstructionError,
    SamplingEfficiencyError,
    SizeGuardError,
    UnsupportedDimensionError,
)
from .rates import BetaMode, chernoff_bound, h_function, hhat
from .geometry import (
    Face,
    Polytope,
    angular_volume,
    angular_volume_monte_carlo,
    box,
    build_polytope,
    contains,
    cross_polytope,
    dihedral_angle,
    face_lattice,
    from_vertices,
    hypercube,
    regular_polygon,
    simplex,
    unit_ball_volume,
)
from .sampling import (
    DensityModel,
    PointCloud,
    check_normalization,
    derive_seed,
    estimate_face_infimum,
    grid_density,
    make_density,
    product_density,
    rng_from_seed,
    sample_points,
    uniform_density,
)
from .thresholds import (
    ThresholdReport,
    brute_force_L,
    brute_force_is_k_connected,
    compute_thresholds,
    is_k_connected,
    k_connectivity_threshold,
    largest_k_nn_link,
    longest_mst_edge,
)
from .limits import (
    FaceContribution,
    LimitReport,
    limit_constant,
    limit_constant_hypercube,
    limit_constant_polygon,
    limit_constant_polyhedron,
)
from .experiment import (
    CSV_COLUMNS,
    ExperimentConfig,
    KRule,
    format_row,
    read_rows,
    run_convergence_experiment,
)
from .plots import render_report
from .cli import cli_main

__version__ = "0.1.0"

__all__ = [
    "BetaMode",
    "CSV_COLUMNS",
    "ConfigurationError",
    "DensityModel",
    "ExperimentConfig",
    "Face",
    "FaceContribution",
    "KRule",
    "LimitReport",
    "PointCloud",
    "Polytope",
    "PolytopeConstructionError",
    "SamplingEfficiencyError",
    "SizeGuardError",
    "ThresholdReport",
    "UnsupportedDimensionError",
    "angular_volume",
    "angular_volume_monte_carlo",
    "box",
    "brute_force_L",
    "brute_force_is_k_connected",
    "build_polytope",
    "check_normalization",
    "chernoff_bound",
    "cli_main",
    "compute_thresholds",
    "contains",
    "cross_polytope",
    "derive_seed",
    "dihedral_angle",
    "estimate_face_infimum",
    "face_lattice",
    "format_row",
    "from_vertices",
    "grid_density",
    "h_function",
    "hhat",
    "hypercube",
    "is_k_connected",
    "k_connectivity_threshold",
    "largest_k_nn_link",
    "limit_constant",
    "limit_constant_hypercube",
    "limit_constant_polygon",
    "limit_constant_polyhedron",
    "longest_mst_edge",
    "make_density",
    "product_density",
    "read_rows",
    "regular_polygon",
    "render_report",
    "rng_from_seed",
    "run_convergence_experiment",
    "sample_points",
    "simplex",
    "unit_ball_volume",
    "uniform_density",
    "__version__",
]
