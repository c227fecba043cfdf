"""Exact alignment-based conformance checking for Petri-net process models.

Two exact engines compute optimal alignments between observed traces and
a model: a minimum-cost unit-flow LP over the reachability graph of the
synchronous product (integral by total unimodularity of the node-arc
incidence matrix), and an A* baseline guided by the marking-equation
heuristic.  A selection rule on trace length and token-replay fitness
picks between them per trace.
"""

from .astar import (
    Heuristic,
    SearchConfig,
    SearchOutcome,
    SearchStats,
    astar_align,
    marking_equation_heuristic,
)
from .errors import (
    FlowAlignError,
    InfeasibleError,
    InternalInvariantError,
    InvalidInputError,
    InvalidLimitsError,
    InvalidSpecError,
    ModelParseError,
    NotEnabledError,
    SemanticError,
    UnreachableFinalError,
)
from .flow import (
    Alignment,
    FlowProblem,
    FlowSolution,
    Method,
    MilpMatrices,
    SolveStatus,
    TuWitness,
    alignment_to_dict,
    assemble_flow_problem,
    build_milp_matrices,
    extract_alignment,
    find_non_tu_witness,
    lp_align,
    move_table,
    solve_min_cost_unit_flow,
    verify_integrality,
)
from .model_io import (
    EventLog,
    NoiseSpec,
    inject_noise,
    parse_pnml,
    parse_xes,
    read_csv_log,
    serialize_pnml,
    serialize_xes,
)
from .petri import (
    TAU,
    IncidenceTriple,
    Marking,
    PetriNet,
    Trace,
    build_trace_model,
    enabled_transitions,
    fire,
    incidence_matrices,
    validate_workflow_net,
)
from .reachability import (
    ExplorationLimits,
    NodeArcIncidence,
    ReachabilityGraph,
    build_reachability_graph,
    check_tu_column_structure,
    default_limits,
    node_arc_incidence,
)
from .selector import (
    HybridResult,
    SelectionThresholds,
    hybrid_align,
    select_method,
    token_replay_fitness,
)
from .sync_product import (
    GAP,
    CostConfig,
    MoveKind,
    SynchronousProduct,
    SyncMove,
    build_sync_product,
    cost_vector,
    product_for_trace,
)

__version__ = "0.1.0"
