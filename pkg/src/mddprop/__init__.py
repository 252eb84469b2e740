"""MDD global-constraint engine.

Layered decision diagrams as compiled constraints, with full-scan and
incremental GAC propagation, dynamic reduction, entailment detection,
long-edge/wildcard/interval-edge variants, and a backtracking search
harness.
"""

from .mdd import (
    Mdd, Node, Edge, StepMetrics, ValidationReport, WILD,
    KIND_PLAIN, KIND_LONG, KIND_WILDCARD,
    validate, live_counts, enumerate_solutions, solution_set,
    save_text, load_text, clone_live,
)
from .state import Trail, DomainStore, DomainView, make_store
from .build import (
    EmptyConstraint, NodeLimitExceeded, TupleTable, UndirectedGraph,
    build_from_tuples, conjoin, reduce_static, expand_to_plain,
    n_walk_mdd, at_least_once_mdd, chain_leq_mdd, build_alldifferent_mdd,
    embed_scope, canonical_form, shape_id, solutions_set,
)
from .scan import ScanPropagator, NoGoodStore
from .dynamic import MddPropagator, SupportIndex, init_supports
from .reduce import HashFamily, ReduceState, node_signature, label_set_signature
from .longedge import LongEdgeRegistry, IntervalUnion, WildcardState
from .interval import (
    IntervalDag, IntervalPropagator, build_interval_dag, expand_to_mdd,
)
from .search import (
    Constraint, AllDifferentPropagator, SearchProblem, PhaseRecord,
    SolveResult, initialize_problem, propagate_fixpoint, solve,
    oracle_valid_domains,
)

__all__ = [n for n in dir() if not n.startswith("_")]
