"""Global coordination: budget allocation, joint validation, memoized search.

Each round every tree holds one selected candidate. The coordinator
validates exactly one fresh combination per round at a barrier, records
rejected combinations so they are never validated twice, reallocates
slack, and steers the violating tree to its next candidate. The search
over candidate tuples is systematic: when cycling the attributed tree
finds nothing new, a full lexicographic scan over all pools takes over,
so small instances are searched exhaustively.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import product
from typing import Mapping

from .btree import (
    EMIT,
    EXHAUSTED,
    GENERATE,
    BehaviorTree,
    PlanningContext,
    RERANK,
    SELECT,
    Status,
    generate_candidates,
    next_candidate,
    rerank,
    tick,
)
from .catalog import Catalog
from .config import EngineConfig
from .domain import (
    Constraint,
    ConstraintKind,
    DependencyEdge,
    Money,
    Plan,
    Query,
    SubPlan,
    TASK_ORDER,
    TaskKind,
)
from .evaluation import check, standard_commonsense
from .integration import InconsistentSubplans, integrate
from .llm import LlmBackend, TokenUsage

log = logging.getLogger("bforest.coordination")

CombinationKey = tuple


def combination_key(subplans: Mapping[TaskKind, SubPlan]) -> CombinationKey:
    """Canonical, order-independent fingerprint of one subplan combination."""
    return tuple(
        (task.value, tuple(sorted(subplans[task].resource_ids)))
        for task in TASK_ORDER
        if task in subplans
    )


@dataclass
class GlobalState:
    total_budget: Money
    allocations: dict[TaskKind, Money]
    edges: tuple[DependencyEdge, ...] = ()
    memo: set = field(default_factory=set)
    round: int = 0
    max_rounds: int = 3
    over_budget: bool = False
    validation_log: list = field(default_factory=list)


DEFAULT_SHARES: dict[TaskKind, Fraction] = {
    TaskKind.TRANSPORTATION: Fraction(30, 100),
    TaskKind.ACCOMMODATION: Fraction(35, 100),
    TaskKind.DINING: Fraction(20, 100),
    TaskKind.ATTRACTIONS: Fraction(15, 100),
}


def allocate_budget(
    total: Money,
    tasks: list[TaskKind] | tuple[TaskKind, ...],
    shares: Mapping[TaskKind, Fraction] | None = None,
) -> dict[TaskKind, Money]:
    """Fixed-share split, floored; remainder cents go to transportation."""
    if total < 0:
        raise ValueError("total budget must be non-negative")
    shares = shares or DEFAULT_SHARES
    allocations = {t: int(total * shares[t]) for t in tasks}
    remainder = total - sum(allocations.values())
    target = TaskKind.TRANSPORTATION if TaskKind.TRANSPORTATION in allocations else tasks[0]
    allocations[target] += remainder
    return allocations


def delta_cost(subplan: SubPlan, allocation: Money) -> Money:
    """Positive slack when the subplan came in under its allocation."""
    return allocation - subplan.total_cost


def propagate_update(state: GlobalState, deltas: Mapping[TaskKind, Money]) -> GlobalState:
    """Reset every allocation to committed cost plus an equal slack share.

    Negative total slack marks the state over budget and leaves the
    allocations untouched; the violating combination is already recorded,
    so reallocating from an impossible baseline would only thrash.
    """
    slack = sum(deltas.get(t, 0) for t in state.allocations)
    if slack < 0:
        return replace(state, over_budget=True)
    tasks = list(state.allocations)
    share = slack // len(tasks)
    remainder = slack - share * len(tasks)
    new_allocations = {
        t: (state.allocations[t] - deltas.get(t, 0)) + share for t in tasks
    }
    target = TaskKind.TRANSPORTATION if TaskKind.TRANSPORTATION in new_allocations else tasks[0]
    new_allocations[target] += remainder
    return replace(state, allocations=new_allocations, over_budget=False)


def record_infeasible(state: GlobalState, subplans: Mapping[TaskKind, SubPlan]) -> GlobalState:
    state.memo.add(combination_key(subplans))
    return state


def is_infeasible(state: GlobalState, subplans: Mapping[TaskKind, SubPlan]) -> bool:
    return combination_key(subplans) in state.memo


@dataclass(frozen=True)
class Violation:
    kind: ConstraintKind
    detail: str
    task: TaskKind | None = None


@dataclass(frozen=True)
class Verdict:
    feasible: bool
    violations: tuple[Violation, ...] = ()
    plan: Plan | None = None


# Default attribution for cross-subplan violations without a clear owner.
_GLOBAL_ATTRIBUTION = {
    ConstraintKind.WITHIN_SANDBOX: TaskKind.TRANSPORTATION,
    ConstraintKind.COMPLETE_INFORMATION: TaskKind.DINING,
    ConstraintKind.WITHIN_CURRENT_CITY: TaskKind.ACCOMMODATION,
    ConstraintKind.REASONABLE_CITY_ROUTE: TaskKind.TRANSPORTATION,
    ConstraintKind.NON_CONFLICTING_TRANSPORTATION: TaskKind.TRANSPORTATION,
}

_GLOBAL_CHECK_ORDER = (
    ConstraintKind.WITHIN_SANDBOX,
    ConstraintKind.COMPLETE_INFORMATION,
    ConstraintKind.WITHIN_CURRENT_CITY,
    ConstraintKind.REASONABLE_CITY_ROUTE,
    ConstraintKind.NON_CONFLICTING_TRANSPORTATION,
)


def validate_global(
    subplans: Mapping[TaskKind, SubPlan],
    globals_: tuple[Constraint, ...] | list[Constraint],
    catalog: Catalog,
    query: Query,
) -> Verdict:
    """Run every global checker on the provisional integration.

    Budget first, then the cross-subplan structural checkers. All
    violations are returned, not just the first.
    """
    violations: list[Violation] = []
    budget = next((c for c in globals_ if c.kind is ConstraintKind.BUDGET), None)
    amount = budget.payload.get("amount", query.budget) if budget else query.budget
    total = sum(sp.total_cost for sp in subplans.values())
    if total > amount:
        violations.append(
            Violation(ConstraintKind.BUDGET, f"total cost {total} exceeds budget {amount}")
        )
    try:
        plan = integrate(subplans, query, constraints=globals_)
    except InconsistentSubplans as exc:
        violations.append(
            Violation(ConstraintKind.COMPLETE_INFORMATION, str(exc), TaskKind.DINING)
        )
        return Verdict(feasible=False, violations=tuple(violations))
    standard = {c.kind: c for c in standard_commonsense()}
    for kind in _GLOBAL_CHECK_ORDER:
        result = check(plan, standard[kind], catalog, query)
        if not result.passed:
            violations.append(Violation(kind, result.detail, _GLOBAL_ATTRIBUTION[kind]))
    if violations:
        return Verdict(feasible=False, violations=tuple(violations), plan=plan)
    return Verdict(feasible=True, plan=plan)


@dataclass(frozen=True)
class Outcome:
    plan: Plan | None
    reason: str
    rounds_used: int
    trace: tuple[dict, ...]
    validation_log: tuple[CombinationKey, ...]


def _tree_handlers(
    tree: BehaviorTree,
    catalog: Catalog,
    query: Query,
    backend: LlmBackend,
    budget_hint: Money,
    config: EngineConfig,
    usage: TokenUsage | None,
) -> dict:
    def handle_generate(ctx: PlanningContext) -> Status:
        pool = generate_candidates(
            tree,
            catalog,
            query,
            backend,
            budget_hint,
            config.pool_size,
            usage=usage,
            attractions_per_person=config.attractions_per_person,
        )
        tree.state.pool = pool
        return Status.SUCCESS if pool.candidates else Status.FAILURE

    def handle_rerank(ctx: PlanningContext) -> Status:
        if "no_rerank" not in config.ablations:
            rerank(tree.state.pool, config.effective_weights())
        return Status.SUCCESS

    def handle_select(ctx: PlanningContext) -> Status:
        subplan = next_candidate(tree.state.pool)
        if subplan is EXHAUSTED:
            return Status.FAILURE
        tree.state.selected = subplan
        return Status.SUCCESS

    def handle_emit(ctx: PlanningContext) -> Status:
        tree.state.emitted = tree.state.selected
        return Status.SUCCESS

    return {
        GENERATE: handle_generate,
        RERANK: handle_rerank,
        SELECT: handle_select,
        EMIT: handle_emit,
    }


def _plant_tree(
    tree: BehaviorTree,
    catalog: Catalog,
    query: Query,
    backend: LlmBackend,
    budget_hint: Money,
    config: EngineConfig,
    usage: TokenUsage | None,
) -> Status:
    ctx = PlanningContext(_tree_handlers(tree, catalog, query, backend, budget_hint, config, usage))
    status = tick(tree, ctx)
    # a tree with an empty pool may regenerate a bounded number of times
    while status is Status.FAILURE and tree.state.regenerations < config.regenerations_per_tree:
        tree.state.regenerations += 1
        status = tick(tree, ctx)
    return status


def _attribute(violations: tuple[Violation, ...], combo: Mapping[TaskKind, SubPlan]) -> TaskKind:
    first = violations[0]
    if first.kind is ConstraintKind.BUDGET:
        chosen = TASK_ORDER[0]
        best = -1
        for task in TASK_ORDER:
            if task in combo and combo[task].total_cost > best:
                best = combo[task].total_cost
                chosen = task
        return chosen
    return first.task if first.task is not None else TASK_ORDER[0]


def _advance_to_fresh(
    trees: list[BehaviorTree],
    attributed: TaskKind | None,
    memo: set,
) -> dict[TaskKind, SubPlan] | None:
    """Move the forest to the next combination absent from the memo.

    Cycling the attributed tree is tried first; if every variation there
    is already recorded, a lexicographic scan over all pools guarantees
    systematic coverage. Returns None when the whole product is spent.
    """
    order = [t for t in TASK_ORDER if any(tree.task is t for tree in trees)]
    by_task = {tree.task: tree for tree in trees}
    pools = {t: by_task[t].state.pool for t in order}
    sizes = {t: len(pools[t].candidates) for t in order}
    current = {t: pools[t].cursor - 1 for t in order}

    def key_of(vector: Mapping[TaskKind, int]) -> CombinationKey:
        return combination_key(
            {t: pools[t].candidates[vector[t]].subplan for t in order}
        )

    def commit(vector: Mapping[TaskKind, int]) -> dict[TaskKind, SubPlan]:
        combo: dict[TaskKind, SubPlan] = {}
        for t in order:
            pool = pools[t]
            pool.cursor = vector[t]
            pool.exhausted = False
            subplan = next_candidate(pool)
            by_task[t].state.selected = subplan
            by_task[t].state.emitted = subplan
            combo[t] = subplan
        return combo

    if attributed is not None and sizes[attributed] > 1:
        base = current[attributed]
        for step in range(1, sizes[attributed]):
            vector = dict(current)
            vector[attributed] = (base + step) % sizes[attributed]
            if key_of(vector) not in memo:
                return commit(vector)

    for raw in product(*(range(sizes[t]) for t in order)):
        vector = dict(zip(order, raw))
        if key_of(vector) not in memo:
            return commit(vector)
    return None


def coordinate(
    trees: list[BehaviorTree],
    state: GlobalState,
    catalog: Catalog,
    query: Query,
    backend: LlmBackend,
    globals_: tuple[Constraint, ...],
    config: EngineConfig,
    usage: TokenUsage | None = None,
) -> Outcome:
    """Run the bounded coordination loop; one joint validation per round."""
    trace: list[dict] = []

    # Planting phase: every tree builds its pool and selects a first
    # candidate. This is the only phase with backend calls, so it is the
    # only phase where parallel and sequential modes differ.
    if config.mode == "parallel":
        with ThreadPoolExecutor(max_workers=max(len(trees), 1)) as pool:
            statuses = list(
                pool.map(
                    lambda tree: _plant_tree(
                        tree, catalog, query, backend,
                        state.allocations[tree.task], config, usage,
                    ),
                    trees,
                )
            )
    else:
        statuses = [
            _plant_tree(tree, catalog, query, backend, state.allocations[tree.task], config, usage)
            for tree in trees
        ]
    for tree, status in zip(trees, statuses):
        if status is not Status.SUCCESS:
            return Outcome(
                plan=None,
                reason=f"empty candidate pool for {tree.task.value}",
                rounds_used=state.round,
                trace=tuple(trace),
                validation_log=tuple(state.validation_log),
            )

    if "no_coordination" in config.ablations:
        # trees commit their top candidates directly, no joint validation
        combo = {tree.task: tree.state.emitted for tree in trees}
        try:
            plan = integrate(combo, query, constraints=globals_)
        except InconsistentSubplans as exc:
            return Outcome(None, f"integration failed: {exc}", 1, tuple(trace), ())
        return Outcome(plan, "", 1, tuple(trace), ())

    while state.round < state.max_rounds:
        state.round += 1
        combo = {tree.task: tree.state.emitted for tree in trees}
        if is_infeasible(state, combo):
            fresh = _advance_to_fresh(trees, None, state.memo)
            if fresh is None:
                return Outcome(
                    None, "search space exhausted", state.round,
                    tuple(trace), tuple(state.validation_log),
                )
            combo = fresh
        state.validation_log.append(combination_key(combo))
        verdict = validate_global(combo, globals_, catalog, query)
        entry = {
            "round": state.round,
            "combination": {t.value: list(sp.resource_ids) for t, sp in combo.items()},
            "violations": [
                {"kind": v.kind.value, "detail": v.detail} for v in verdict.violations
            ],
        }
        trace.append(entry)
        log.debug("%s", json.dumps(entry, sort_keys=True))
        if verdict.feasible:
            return Outcome(
                verdict.plan, "", state.round, tuple(trace), tuple(state.validation_log)
            )
        record_infeasible(state, combo)
        deltas = {t: delta_cost(combo[t], state.allocations[t]) for t in state.allocations}
        updated = propagate_update(state, deltas)
        state.allocations = updated.allocations
        state.over_budget = updated.over_budget
        if state.round >= state.max_rounds:
            break
        attributed = _attribute(verdict.violations, combo)
        fresh = _advance_to_fresh(trees, attributed, state.memo)
        if fresh is None:
            return Outcome(
                None, "search space exhausted", state.round,
                tuple(trace), tuple(state.validation_log),
            )
    return Outcome(
        None, "max rounds reached", state.round, tuple(trace), tuple(state.validation_log)
    )
