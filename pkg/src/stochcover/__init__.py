"""Non-adaptive edge-query strategies for vertex cover and matching on
stochastic graphs, with exact small-graph oracles and a Monte-Carlo
evaluation harness."""

from .errors import (
    ApplicabilityError,
    CapacityError,
    ParameterError,
    StochCoverError,
    StructuralError,
)
from .graphs import (
    Bipartition,
    EdgePartition,
    FractionalAssignment,
    Graph,
    Realization,
    bipartition,
    half_stochastic_union,
    read_graph_text,
    sample_realization,
    write_graph_text,
)
from .matching import (
    Matching,
    VertexCover,
    exact_mvc_general,
    greedy_maximal_matching,
    konig_vertex_cover,
    max_matching_bipartite,
)
from .filling import FillingResult, filling, general_vc_cover, general_vc_plan
from .partition import MatchingPolicy, PartitionConfig, PartitionOutcome, build_partition
from .strategies import (
    STRATEGY_IDS,
    QueryPlan,
    StrategyAnswer,
    StrategyParams,
    plan_strategy,
    respond_strategy,
)
from .evaluator import (
    EvalReport,
    evaluate_strategies,
    evaluate_strategy,
    exact_expected_stats,
    validity_check,
)
from .instances import FAMILIES, InstanceDescriptor, from_family

__version__ = "0.1.0"
