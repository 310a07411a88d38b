"""Tropical measures on moduli spaces of metric graphs.

Coefficient-table recursions, polynomial-time sampling of metric graphs
from the tropical measure, Monte Carlo estimators for correlation
coefficients of cubic and quartic scalar theories, exact rational oracles,
and a truncated-series solver for the underlying loop equation.
"""

from .errors import InvalidSectorError, NonGenericDimensionError, TableFormatError
from .graphs import (
    DisconnectedGraphError,
    Graph,
    GraphError,
    MetricAssignment,
    bridges,
    canonical_key,
    concatenate_beaded,
    from_text,
    glue_special_legs,
    is_beaded,
    is_connected,
    is_k_regular,
    is_one_particle_irreducible,
    loop_number,
    spanning_trees,
    to_text,
)
from .hepp import (
    beaded_ensemble_sum_oracle,
    beaded_sector_distribution,
    ensemble_sum_oracle,
    hepp_cubical_mc,
    hepp_exact,
    hepp_positive_exact,
    primitive_beta_hepp_exact,
    sector_distribution,
)
from .loopeq import (
    TruncatedSeries,
    apply_inverse_pd,
    cross_check_tables,
    pd_eigenvalue,
    solve_gamma_tr,
)
from .montecarlo import (
    Accumulator,
    EstimateReport,
    EstimatorSpec,
    estimate_beta_prim,
    estimate_phi3_vertex,
    is_primitive,
    is_primitive_vertex_oracle,
    relative_error_bound,
    run_parallel,
)
from .sampler import (
    BufferedRNG,
    GraphSampler,
    MetricGraphSample,
    SamplerConfig,
    sample_beaded,
    sample_one_pi,
    to_projective,
)
from .symanzik import (
    SymanzikContext,
    SymanzikEvaluationError,
    log_u_exact,
    log_u_tropical,
    residual_f,
    spanning_tree_count,
    v_exact,
    v_tropical,
)
from .tables import (
    AliasSampler,
    CoefficientTables,
    build,
    load,
    omega,
    save,
    sector_edge_count,
    sector_vertex_count,
)

__version__ = "0.1.0"
