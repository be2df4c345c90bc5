"""cde: conditional independence, interventions and causation on DAGs."""
from .bayes_net import (
    BayesNet,
    Cpt,
    JointTable,
    ci_deviation,
    conditional,
    holds_in_distribution,
    joint,
    marginal,
    recover_cpts,
)
from .ci_engine import (
    CiVerdict,
    Method,
    enumerate_equivalence_class,
    markov_equivalent,
    query_ci,
    query_ci_dsep,
    query_ci_moral,
    represented_ci_set,
)
from .errors import (
    CapacityError,
    CdeError,
    ConditioningError,
    ConsistencyError,
    GraphStructureError,
    ParseError,
    ProbabilityError,
    QueryError,
    ScopeError,
    SemanticError,
)
from .graph_core import (
    CiQuery,
    Dag,
    Node,
    NodeKind,
    UndirectedGraph,
    ancestors,
    immoralities,
    moralise,
    skeleton,
    u_separated,
)
from .parser import dumps, load_graph_file, parse_graph_file, parse_query
from .regimes import (
    IDLE,
    AugmentedBayesNet,
    EciQuery,
    RegimeAssignment,
    augment,
    check_ignorability,
    eci_holds_in_distribution,
    interventional_joint,
    no_causal_effect,
    pearl_augment,
    query_eci,
    sliced_joint,
)
from .scm import (
    Coupling,
    ErrorSpec,
    PcBounds,
    PcObservation,
    PotentialResponseJoint,
    Scm,
    StructuralFunction,
    build_spm,
    build_spm_copula,
    lookup_scm,
    pc_bounds,
    potential_response_joint,
    probability_of_causation,
    spm_joint,
)

__all__ = [
    "AugmentedBayesNet", "BayesNet", "CapacityError", "CdeError", "CiQuery", "CiVerdict",
    "ConditioningError", "ConsistencyError", "Coupling", "Cpt", "Dag", "EciQuery", "ErrorSpec",
    "GraphStructureError", "IDLE", "JointTable", "Method", "Node", "NodeKind", "ParseError",
    "PcBounds", "PcObservation", "PotentialResponseJoint", "ProbabilityError", "QueryError",
    "RegimeAssignment", "Scm", "ScopeError", "SemanticError", "StructuralFunction", "UndirectedGraph",
    "ancestors", "augment", "build_spm", "build_spm_copula", "check_ignorability", "ci_deviation",
    "conditional", "dumps", "eci_holds_in_distribution", "enumerate_equivalence_class",
    "holds_in_distribution", "immoralities", "interventional_joint", "joint", "load_graph_file",
    "lookup_scm", "marginal", "markov_equivalent", "moralise", "no_causal_effect", "parse_graph_file",
    "parse_query", "pc_bounds", "pearl_augment", "potential_response_joint", "probability_of_causation",
    "query_ci", "query_ci_dsep", "query_ci_moral", "query_eci", "recover_cpts", "represented_ci_set",
    "skeleton", "sliced_joint", "spm_joint", "u_separated",
]
