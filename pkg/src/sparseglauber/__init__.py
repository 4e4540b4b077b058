"""Glauber-dynamics sampling for hard-core, antiferromagnetic Ising and
monomer-dimer models on sparse graphs, with exact desk-scale oracles,
self-avoiding-walk-tree analysis machinery and random-graph property checks.
"""

__version__ = "0.1.0"

from .errors import (
    ComponentTooComplexError,
    DegenerateInstanceError,
    EmptySupportError,
    EnumerationOverflowError,
    InvalidParameterError,
    NumericFailureError,
    SparseGlauberError,
    UndefinedInfluenceError,
)
from .graphs import (
    Component,
    ComponentDecomposition,
    Graph,
    VertexPartition,
    ball,
    component_of_low_vertex,
    connected_sets_from,
    degree_partition,
    from_edge_list_text,
    generate_gnp,
    induced_components,
    read_edge_list,
    subgraph_components,
    to_edge_list_text,
    write_edge_list,
)
from .models import (
    Configuration,
    ModelSpec,
    Pinning,
    beta_c,
    hardcore_marginal_bound,
    ising_marginal_bound,
    lambda_c,
    log_weight,
    weight,
)
from .oracle import (
    DiscreteDistribution,
    conditional_entropy,
    crude_factorization_bound,
    empirical_distribution,
    entropy,
    exact_distribution,
    exact_marginal,
    tv_distance,
)
from .trees import (
    BranchingProfile,
    RatioProfile,
    RootedTree,
    branching_value,
    epsilon_good_check,
    hardcore_ratio,
    ising_decay_bound,
    ising_tree_influence,
    matchings_unmatched,
    saw_root_marginal,
    saw_tree,
    tree_from_graph,
    tree_influence,
)
from .dp import (
    conditional_marginal_dp,
    conditional_sample_dp,
    matching_marginal_dp,
    matching_sample_dp,
)
from .dynamics import (
    ChainState,
    FactorizationBound,
    SamplerContext,
    Schedule,
    cr_bound,
    glauber_step,
    make_chain,
    make_schedule,
    mixing_T,
    perfect_sample_sparse,
    r_block_step,
    sample,
    sample_batch,
    tmix_bound,
    transition_matrix,
    update_site_set,
)
