"""bforest: multi-constraint travel planning with coordinated behavior trees.

A query is decoupled into four per-task behavior trees (transportation,
accommodation, dining, attractions) that generate candidate sub-plans in
parallel, then a coordinator reconciles them against a shared budget and
global feasibility checks, advancing past memoized dead ends until a full
plan integrates or the round budget runs out.
"""

from .btree import (
    BehaviorTree,
    Candidate,
    CandidatePool,
    HeuristicWeights,
    Status,
    UnregisteredLeaf,
    generate_candidates,
    next_candidate,
    rerank,
    tick,
)
from .catalog import (
    Catalog,
    CatalogError,
    DuplicateId,
    NegativePrice,
    filter_options,
    import_csv_dir,
    load_catalog,
    load_catalog_csv,
)
from .config import ABLATIONS, ConfigError, EngineConfig, load_config, make_backend
from .coordination import (
    GlobalState,
    Outcome,
    Verdict,
    Violation,
    allocate_budget,
    combination_key,
    coordinate,
    delta_cost,
    propagate_update,
    validate_global,
)
from .domain import (
    Constraint,
    ConstraintKind,
    ConstraintSet,
    DayEntry,
    DependencyEdge,
    Plan,
    Query,
    Scope,
    Severity,
    SubPlan,
    SubPlanEntry,
    TaskKind,
    canonical_json,
    partition_constraints,
    route_constraint,
    total_cost,
    validate_plan,
)
from .evaluation import (
    ConstraintCheck,
    MetricsReport,
    PlanEvaluation,
    applicable_constraints,
    check_plan,
    macro_pass_rate,
    micro_pass_rate,
    report,
    standard_commonsense,
)
from .extraction import (
    EXTRACTION_SCHEMA,
    ForestSpec,
    MalformedExtraction,
    TreeSpec,
    UnroutableConstraint,
    build_forest,
    decouple_constraints,
    decouple_tasks,
    parse_query,
)
from .integration import InconsistentSubplans, integrate
from .llm import (
    BackendError,
    BackendTimeout,
    HttpBackend,
    LlmBackend,
    MockBackend,
    TokenUsage,
    load_mock_rules,
)
from .pipeline import PlanResult, plan

__version__ = "0.1.0"

__all__ = [
    "ABLATIONS",
    "BackendError",
    "BackendTimeout",
    "BehaviorTree",
    "Candidate",
    "CandidatePool",
    "Catalog",
    "CatalogError",
    "ConfigError",
    "Constraint",
    "ConstraintCheck",
    "ConstraintKind",
    "ConstraintSet",
    "DayEntry",
    "DependencyEdge",
    "DuplicateId",
    "EngineConfig",
    "EXTRACTION_SCHEMA",
    "ForestSpec",
    "GlobalState",
    "HeuristicWeights",
    "HttpBackend",
    "InconsistentSubplans",
    "LlmBackend",
    "MalformedExtraction",
    "MetricsReport",
    "MockBackend",
    "NegativePrice",
    "Outcome",
    "Plan",
    "PlanEvaluation",
    "PlanResult",
    "Query",
    "Scope",
    "Severity",
    "Status",
    "SubPlan",
    "SubPlanEntry",
    "TaskKind",
    "TokenUsage",
    "TreeSpec",
    "UnregisteredLeaf",
    "UnroutableConstraint",
    "Verdict",
    "Violation",
    "allocate_budget",
    "applicable_constraints",
    "build_forest",
    "canonical_json",
    "check_plan",
    "combination_key",
    "coordinate",
    "decouple_constraints",
    "decouple_tasks",
    "delta_cost",
    "filter_options",
    "generate_candidates",
    "import_csv_dir",
    "integrate",
    "load_catalog",
    "load_catalog_csv",
    "load_config",
    "load_mock_rules",
    "macro_pass_rate",
    "make_backend",
    "micro_pass_rate",
    "next_candidate",
    "parse_query",
    "partition_constraints",
    "plan",
    "propagate_update",
    "rerank",
    "report",
    "route_constraint",
    "standard_commonsense",
    "tick",
    "total_cost",
    "validate_global",
    "validate_plan",
    "__version__",
]
