"""Belief-propagation laboratory.

Log-odds evidence combination, a simplified two-neighbour update round,
full pairwise sum-product, an exact enumeration oracle, and a one-layer
attention construction whose forward pass reproduces the simplified round
exactly.  See the README for the experiment CLI.
"""

from .core import (
    BP_EXACT_PARAMS,
    PROB_EPS,
    FfnParams,
    ProbabilityError,
    clamp_probability,
    logit,
    sigmoid,
    update_belief,
    update_belief_logit,
    weighted_update,
)
from .engine import (
    BpResult,
    ConvergenceOptions,
    MessageSet,
    gather_update_round,
    sumproduct_run,
    weighted_gather_round,
)
from .graph import (
    BeliefState,
    DisconnectedGraphError,
    DuplicateEdgeError,
    Factor,
    FactorGraph,
    FactorTableError,
    GraphError,
    GraphParseError,
    LOOPY_SUITE,
    SelfLoopError,
    StructureKind,
    VariableRangeError,
    format_graph,
    generate_structure,
    parse_graph,
    random_tree_edges,
)
from .oracle import (
    MAX_ENUM_VARS,
    ExactMarginals,
    OracleError,
    exact_marginals,
    kl_divergence,
    max_abs_error,
    mean_abs_error,
)
from .transformer import (
    TokenLayout,
    TransformerWeights,
    build_round_weights,
    decode_state,
    encode_bp_state,
    forward_pass,
    stack_rounds,
)
from .equivalence import (
    check_round,
    check_tree_exactness,
    extract_implicit_graph,
    replay_implicit,
    uniqueness_probe,
)
from .binarize import (
    AnnotatedGraph,
    GateKind,
    binarize_graph,
    build_combine_plan,
    limit_and_combine,
    or_combine,
)

__version__ = "0.1.0"
