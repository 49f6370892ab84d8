"""Per-subtask behavior trees: tick semantics, candidate pools, reranking.

Each tree's root is a fixed four-step sequence: generate candidates,
rerank them, select the next untried one, emit it as the tree's current
subplan. Leaves dispatch through a handler registry supplied by the
caller, so the same structure runs under the real engine and under unit
tests with counters.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations, islice
from typing import Callable, Iterable, Sequence as Seq

from .catalog import Catalog, filter_options
from .domain import (
    Constraint,
    ConstraintKind,
    Money,
    Query,
    Severity,
    SubPlan,
    SubPlanEntry,
    TaskKind,
)
from .extraction import load_prompt
from .llm import LlmBackend, TokenUsage


class Status(Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    RUNNING = "running"


class UnregisteredLeaf(KeyError):
    """A leaf node ticked without a registered handler."""


class PlanningContext:
    """Handler registry plus a shared blackboard for one tree's run."""

    def __init__(self, handlers: dict[str, Callable[["PlanningContext"], Status]], **data) -> None:
        self.handlers = handlers
        self.data = data


class Node:
    def tick(self, ctx: PlanningContext) -> Status:
        raise NotImplementedError


@dataclass
class Sequence(Node):
    children: list[Node]

    def __post_init__(self) -> None:
        if not self.children:
            raise ValueError("sequence needs at least one child")

    def tick(self, ctx: PlanningContext) -> Status:
        for child in self.children:
            status = child.tick(ctx)
            if status is not Status.SUCCESS:
                return status  # failure and running both short-circuit
        return Status.SUCCESS


@dataclass
class Selector(Node):
    children: list[Node]

    def __post_init__(self) -> None:
        if not self.children:
            raise ValueError("selector needs at least one child")

    def tick(self, ctx: PlanningContext) -> Status:
        for child in self.children:
            status = child.tick(ctx)
            if status is not Status.FAILURE:
                return status
        return Status.FAILURE


@dataclass
class Action(Node):
    name: str

    def tick(self, ctx: PlanningContext) -> Status:
        handler = ctx.handlers.get(self.name)
        if handler is None:
            raise UnregisteredLeaf(self.name)
        return handler(ctx)


@dataclass
class Condition(Node):
    name: str

    def tick(self, ctx: PlanningContext) -> Status:
        handler = ctx.handlers.get(self.name)
        if handler is None:
            raise UnregisteredLeaf(self.name)
        return handler(ctx)


GENERATE = "GenerateCandidates"
RERANK = "RerankCandidates"
SELECT = "SelectNext"
EMIT = "EmitSubPlan"


@dataclass
class Candidate:
    subplan: SubPlan
    over_hint: bool = False
    soft_fraction: float = 0.0
    rating_norm: float = 0.0
    score: float = 0.0

    @property
    def cost(self) -> Money:
        return self.subplan.total_cost

    @property
    def first_resource_id(self) -> str:
        return self.subplan.entries[0].resource_id if self.subplan.entries else ""


@dataclass
class CandidatePool:
    candidates: list[Candidate]
    budget_hint: Money
    cursor: int = 0
    exhausted: bool = False

    def __len__(self) -> int:
        return len(self.candidates)


class _ExhaustedType:
    def __repr__(self) -> str:  # pragma: no cover
        return "Exhausted"


EXHAUSTED = _ExhaustedType()


@dataclass
class TreeState:
    pool: CandidatePool | None = None
    selected: SubPlan | None = None
    emitted: SubPlan | None = None
    regenerations: int = 0


@dataclass
class BehaviorTree:
    task: TaskKind
    root: Node
    locals: tuple[Constraint, ...] = ()
    state: TreeState = field(default_factory=TreeState)

    @classmethod
    def standard(cls, task: TaskKind, locals_: tuple[Constraint, ...] = ()) -> "BehaviorTree":
        root = Sequence([Action(GENERATE), Action(RERANK), Action(SELECT), Action(EMIT)])
        return cls(task=task, root=root, locals=locals_)


def tick(tree: BehaviorTree, ctx: PlanningContext) -> Status:
    return tree.root.tick(ctx)


@dataclass(frozen=True)
class ActivationContext:
    task: TaskKind
    node_name: str
    round_index: int
    activated: tuple[Constraint, ...]


def _walk(node: Node) -> Iterable[Node]:
    yield node
    for child in getattr(node, "children", []):
        yield from _walk(child)


def activate_constraints(tree: BehaviorTree, node: Node, round_index: int) -> ActivationContext:
    """Hard locals condition generation; soft locals condition reranking."""
    if not any(n is node for n in _walk(tree.root)):
        raise ValueError("node does not belong to this tree")
    name = getattr(node, "name", type(node).__name__)
    if name == GENERATE:
        activated = tuple(c for c in tree.locals if c.severity is Severity.HARD)
    elif name == RERANK:
        activated = tuple(c for c in tree.locals if c.severity is Severity.SOFT)
    else:
        activated = ()
    return ActivationContext(task=tree.task, node_name=name, round_index=round_index, activated=activated)


@dataclass(frozen=True)
class HeuristicWeights:
    w_cost: float = 0.5
    w_soft: float = 0.3
    w_rating: float = 0.2

    @classmethod
    def zero(cls) -> "HeuristicWeights":
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def from_doc(cls, doc: dict) -> "HeuristicWeights":
        return cls(
            w_cost=float(doc.get("w_cost", 0.5)),
            w_soft=float(doc.get("w_soft", 0.3)),
            w_rating=float(doc.get("w_rating", 0.2)),
        )


# Bounds on systematic enumeration; generous relative to pool sizes.
_COMBO_BASE_EXTRA = 8
_COMBO_CAP = 512

_REPLY_IDS = re.compile(r"\[.*?\]", re.DOTALL)


def _meal_slots(query: Query) -> int:
    return 3 * query.days


def _enumerate_transportation(options: list, query: Query) -> list[SubPlan]:
    out = sorted(
        (o for o in options if o.origin == query.origin),
        key=lambda o: (o.price, o.id),
    )
    back = sorted(
        (o for o in options if o.origin == query.destination),
        key=lambda o: (o.price, o.id),
    )
    party = query.party_size
    subplans = []
    for o in out:
        for r in back:
            if o.id == r.id:
                continue
            subplans.append(
                SubPlan.build(
                    TaskKind.TRANSPORTATION,
                    [
                        SubPlanEntry(1, o.id, party, o.price),
                        SubPlanEntry(query.days, r.id, party, r.price),
                    ],
                )
            )
    return subplans


def _enumerate_accommodation(options: list, query: Query) -> list[SubPlan]:
    if query.nights == 0:
        return [SubPlan.empty(TaskKind.ACCOMMODATION)]
    subplans = []
    for h in sorted(options, key=lambda h: (h.price_per_night, h.id)):
        entries = [
            SubPlanEntry(night, h.id, 1, h.price_per_night)
            for night in range(1, query.nights + 1)
        ]
        subplans.append(SubPlan.build(TaskKind.ACCOMMODATION, entries))
    return subplans


def _slot_entries(picks: Seq, query: Query, per_slot_qty: int, cost_of) -> list[SubPlanEntry]:
    return [
        SubPlanEntry(s // 3 + 1, picks[s].id, per_slot_qty, cost_of(picks[s]))
        for s in range(len(picks))
    ]


def _enumerate_dining(options: list, query: Query) -> list[SubPlan]:
    slots = _meal_slots(query)
    ranked = sorted(options, key=lambda r: (r.avg_cost, r.id))
    if not ranked:
        return []
    party = query.party_size
    if len(ranked) < slots:
        # not enough distinct places: cycle the cheapest ones
        picks = [ranked[s % len(ranked)] for s in range(slots)]
        return [SubPlan.build(TaskKind.DINING, _slot_entries(picks, query, party, lambda r: r.avg_cost))]
    base = ranked[: slots + _COMBO_BASE_EXTRA]
    subplans = []
    for combo in islice(combinations(base, slots), _COMBO_CAP):
        subplans.append(
            SubPlan.build(TaskKind.DINING, _slot_entries(combo, query, party, lambda r: r.avg_cost))
        )
    return subplans


def _enumerate_attractions(options: list, query: Query, per_person: bool) -> list[SubPlan]:
    ranked = sorted(options, key=lambda a: (a.price, a.id))
    if not ranked:
        return []
    qty = query.party_size if per_person else 1
    days = query.days
    if len(ranked) < days:
        picks = [ranked[(d - 1) % len(ranked)] for d in range(1, days + 1)]
        entries = [SubPlanEntry(d, picks[d - 1].id, qty, picks[d - 1].price) for d in range(1, days + 1)]
        return [SubPlan.build(TaskKind.ATTRACTIONS, entries)]
    base = ranked[: days + _COMBO_BASE_EXTRA]
    subplans = []
    for combo in islice(combinations(base, days), _COMBO_CAP):
        entries = [SubPlanEntry(d, combo[d - 1].id, qty, combo[d - 1].price) for d in range(1, days + 1)]
        subplans.append(SubPlan.build(TaskKind.ATTRACTIONS, entries))
    return subplans


def _enumerate_subplans(
    task: TaskKind, options: list, query: Query, attractions_per_person: bool
) -> list[SubPlan]:
    if task is TaskKind.TRANSPORTATION:
        return _enumerate_transportation(options, query)
    if task is TaskKind.ACCOMMODATION:
        return _enumerate_accommodation(options, query)
    if task is TaskKind.DINING:
        return _enumerate_dining(options, query)
    return _enumerate_attractions(options, query, attractions_per_person)


def _options_block(task: TaskKind, options: list) -> str:
    lines = []
    for o in options:
        if task is TaskKind.TRANSPORTATION:
            lines.append(f"- {o.id} | {o.mode} {o.origin} -> {o.destination} on {o.depart_date} | {o.price}")
        elif task is TaskKind.ACCOMMODATION:
            lines.append(f"- {o.id} | {o.name} | {o.room_type} | {o.price_per_night}/night")
        elif task is TaskKind.DINING:
            lines.append(f"- {o.id} | {o.name} | {', '.join(o.cuisines)} | {o.avg_cost} | rating {o.rating}")
        else:
            lines.append(f"- {o.id} | {o.name} | {o.price}")
    return "\n".join(lines)


def _ask_backend(
    task: TaskKind,
    options: list,
    query: Query,
    backend: LlmBackend,
    budget_hint: Money,
    k: int,
    usage: TokenUsage | None,
) -> set[str]:
    """One advisory call; unknown ids are dropped, parse failures ignored."""
    template = load_prompt(task.value)
    prompt = (
        template.replace("{origin}", query.origin)
        .replace("{destination}", query.destination)
        .replace("{start_date}", query.start_date.isoformat())
        .replace("{end_date}", query.end_date.isoformat())
        .replace("{party_size}", str(query.party_size))
        .replace("{budget_hint}", str(budget_hint))
        .replace("{k}", str(k))
        .replace("{options}", _options_block(task, options))
    )
    text, used = backend.complete(prompt)
    if usage is not None:
        usage.add(used)
    match = _REPLY_IDS.search(text)
    if match is None:
        return set()
    try:
        ids = json.loads(match.group(0))
    except json.JSONDecodeError:
        return set()
    known = {o.id for o in options}
    return {i for i in ids if isinstance(i, str) and i in known}


def _soft_satisfied(constraint: Constraint, subplan: SubPlan, catalog: Catalog) -> bool:
    resources = [catalog.resolve(subplan.task, rid) for rid in subplan.resource_ids]
    resources = [r for r in resources if r is not None]
    if not resources:
        return False
    kind = constraint.kind
    payload = constraint.payload
    if kind is ConstraintKind.MIN_RATING:
        threshold = float(payload.get("min_rating", 0))
        return all(getattr(r, "rating", 0.0) >= threshold for r in resources)
    if kind is ConstraintKind.CUISINE:
        wanted = {c.casefold() for c in payload.get("cuisines", [])}
        return all(wanted & {c.casefold() for c in r.cuisines} for r in resources)
    if kind is ConstraintKind.ROOM_TYPE:
        allowed = payload.get("room_types") or [payload.get("room_type")]
        return all(r.room_type in allowed for r in resources)
    if kind is ConstraintKind.ROOM_RULE:
        required = set(payload.get("rules", []))
        return all(required <= set(r.house_rules) for r in resources)
    if kind is ConstraintKind.TRANSPORTATION:
        allowed = payload.get("allowed")
        forbidden = set(payload.get("forbidden", []))
        return all(
            (allowed is None or r.mode in allowed) and r.mode not in forbidden for r in resources
        )
    return False


def _rating_norm(subplan: SubPlan, catalog: Catalog) -> float:
    if subplan.task is not TaskKind.DINING or not subplan.entries:
        return 0.0
    ratings = [
        catalog.resolve(TaskKind.DINING, rid).rating
        for rid in subplan.resource_ids
        if catalog.resolve(TaskKind.DINING, rid) is not None
    ]
    if not ratings:
        return 0.0
    return sum(ratings) / len(ratings) / 5.0


def generate_candidates(
    tree: BehaviorTree,
    catalog: Catalog,
    query: Query,
    backend: LlmBackend,
    budget_hint: Money,
    k: int,
    usage: TokenUsage | None = None,
    attractions_per_person: bool = True,
) -> CandidatePool:
    """Build this tree's candidate pool, at most k subplans.

    The backend proposes options first; its picks only influence ordering.
    The pool itself always comes from a systematic enumeration over the
    filtered catalog, so every candidate satisfies the activated hard
    locals by construction. When nothing fits the budget hint the
    cheapest candidates are kept anyway, flagged over_hint, so the
    coordinator can react instead of deadlocking.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    hard_locals = [c for c in tree.locals if c.severity is Severity.HARD]
    soft_locals = [c for c in tree.locals if c.severity is Severity.SOFT]
    options = filter_options(catalog, tree.task, query, hard_locals)
    subplans = _enumerate_subplans(tree.task, options, query, attractions_per_person)
    if not subplans:
        return CandidatePool(candidates=[], budget_hint=budget_hint)

    suggested = _ask_backend(tree.task, options, query, backend, budget_hint, k, usage)

    def advised(sp: SubPlan) -> int:
        ids = set(sp.resource_ids)
        return 0 if suggested and ids and ids <= suggested else 1

    fits = [sp for sp in subplans if sp.total_cost <= budget_hint]
    if fits:
        chosen = sorted(fits, key=lambda sp: (advised(sp), sp.total_cost, sp.resource_ids))[:k]
        over = False
    else:
        chosen = sorted(subplans, key=lambda sp: (sp.total_cost, sp.resource_ids))[:k]
        over = True
    candidates = [
        Candidate(
            subplan=sp,
            over_hint=over,
            soft_fraction=(
                sum(1 for c in soft_locals if _soft_satisfied(c, sp, catalog)) / len(soft_locals)
                if soft_locals
                else 0.0
            ),
            rating_norm=_rating_norm(sp, catalog),
        )
        for sp in chosen
    ]
    return CandidatePool(candidates=candidates, budget_hint=budget_hint)


def rerank(pool: CandidatePool, weights: HeuristicWeights) -> CandidatePool:
    """Order candidates by descending heuristic score, ties by first id.

    score = w_cost * (1 - cost/hint) + w_soft * soft fraction
          + w_rating * normalized rating
    """
    hint = pool.budget_hint
    for cand in pool.candidates:
        cost_term = (1.0 - cand.cost / hint) if hint > 0 else 0.0
        cand.score = (
            weights.w_cost * cost_term
            + weights.w_soft * cand.soft_fraction
            + weights.w_rating * cand.rating_norm
        )
    pool.candidates.sort(key=lambda c: (-c.score, c.first_resource_id))
    return pool


def next_candidate(pool: CandidatePool):
    """Hand out the candidate at the cursor; EXHAUSTED once past the end."""
    if pool.cursor >= len(pool.candidates):
        pool.exhausted = True
        return EXHAUSTED
    cand = pool.candidates[pool.cursor]
    pool.cursor += 1
    return cand.subplan
