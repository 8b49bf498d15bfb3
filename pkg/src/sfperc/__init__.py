"""Scale-free percolation on Z^d.

Sites carry i.i.d. weights and are joined independently with probability
``1 - exp(-lambda W_x W_y / |x - y|^alpha)``.  The package provides the
closed-form constants of the model, deterministic seed-driven sampling of
finite realisations (full or lazily revealed), cluster and distance
algorithms, estimators for the model's asymptotic laws and the ``sfperc``
command-line harness.
"""

__version__ = "0.1.0"

from .errors import (
    BracketingError,
    ConfigError,
    DegenerateSampleError,
    DivergenceError,
    DomainError,
    InapplicableBoundError,
    InfiniteMomentError,
    NumericalError,
    RegimeError,
    ResourceError,
    SfpercError,
)
from .lattice import LatticeBox, ball_offsets, shell_counts
from .model import (
    DistanceConstants,
    LatticeSum,
    ModelParams,
    RegimeReport,
    WeightDistribution,
    classify_regime,
    distance_constant,
    edge_probability,
    gamma_exponent,
    gamma_function,
    lambda_c_lower_bound,
    laplace_complement,
    laplace_weight,
    lattice_sum,
    min_product_moment,
    reparametrize_unit_lambda,
    unit_ball_volume,
    weight_moment,
    xi_constant,
)
from .graph import (
    Graph,
    LazyGraph,
    PairUniformSource,
    WeightField,
    bfs_distances,
    connected_components,
    generate_coupled,
    generate_graph,
    largest_component_fraction,
    origin_degree_profile,
    origin_degree_sample,
    pair_distance_lazy,
    reach_radius,
    sample_weights,
    truncation_bound,
    vertex_edges,
)
from .estimators import (
    PercolationCurve,
    TailEstimate,
    ccdf_slope,
    conditional_degree_empirical,
    conditional_degree_quadrature,
    crossing_lambda_estimate,
    distance_regressions,
    distance_scaling,
    gfun_envelope_check,
    hill_estimator,
    percolation_curve,
)
