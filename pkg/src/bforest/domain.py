"""Core value types shared by every other module.

Money is always an integer count of minor units (cents). Dates are
calendar dates without timezones. All types here are immutable values,
safe to share between concurrently running planners.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from typing import Any, Mapping

Money = int


class TaskKind(str, Enum):
    TRANSPORTATION = "transportation"
    ACCOMMODATION = "accommodation"
    DINING = "dining"
    ATTRACTIONS = "attractions"


# Fixed planning order; coordination and serialization both rely on it.
TASK_ORDER: tuple[TaskKind, ...] = (
    TaskKind.TRANSPORTATION,
    TaskKind.ACCOMMODATION,
    TaskKind.DINING,
    TaskKind.ATTRACTIONS,
)


class ConstraintKind(str, Enum):
    # Commonsense: structural soundness of the itinerary itself.
    WITHIN_SANDBOX = "within_sandbox"
    COMPLETE_INFORMATION = "complete_information"
    WITHIN_CURRENT_CITY = "within_current_city"
    REASONABLE_CITY_ROUTE = "reasonable_city_route"
    DIVERSE_RESTAURANTS = "diverse_restaurants"
    DIVERSE_ATTRACTIONS = "diverse_attractions"
    NON_CONFLICTING_TRANSPORTATION = "non_conflicting_transportation"
    MINIMUM_NIGHTS_STAY = "minimum_nights_stay"
    # Hard: requirements stated by the request.
    BUDGET = "budget"
    ROOM_RULE = "room_rule"
    CUISINE = "cuisine"
    ROOM_TYPE = "room_type"
    TRANSPORTATION = "transportation"
    # Preference-only: never filters, only scores during rerank.
    MIN_RATING = "min_rating"


class Severity(str, Enum):
    HARD = "hard"
    SOFT = "soft"


class Scope(str, Enum):
    LOCAL = "local"
    GLOBAL = "global"


class Category(str, Enum):
    COMMONSENSE = "commonsense"
    HARD = "hard"
    PREFERENCE = "preference"


COMMONSENSE_KINDS: tuple[ConstraintKind, ...] = (
    ConstraintKind.WITHIN_SANDBOX,
    ConstraintKind.COMPLETE_INFORMATION,
    ConstraintKind.WITHIN_CURRENT_CITY,
    ConstraintKind.REASONABLE_CITY_ROUTE,
    ConstraintKind.DIVERSE_RESTAURANTS,
    ConstraintKind.DIVERSE_ATTRACTIONS,
    ConstraintKind.NON_CONFLICTING_TRANSPORTATION,
    ConstraintKind.MINIMUM_NIGHTS_STAY,
)

HARD_KINDS: tuple[ConstraintKind, ...] = (
    ConstraintKind.BUDGET,
    ConstraintKind.ROOM_RULE,
    ConstraintKind.CUISINE,
    ConstraintKind.ROOM_TYPE,
    ConstraintKind.TRANSPORTATION,
)


def category_of(kind: ConstraintKind) -> Category:
    if kind in COMMONSENSE_KINDS:
        return Category.COMMONSENSE
    if kind in HARD_KINDS:
        return Category.HARD
    return Category.PREFERENCE


# Static routing table: which task owns each constraint kind. None means
# the constraint spans subplans and is enforced at coordination time.
KIND_ROUTING: dict[ConstraintKind, TaskKind | None] = {
    ConstraintKind.BUDGET: None,
    ConstraintKind.WITHIN_SANDBOX: None,
    ConstraintKind.COMPLETE_INFORMATION: None,
    ConstraintKind.WITHIN_CURRENT_CITY: None,
    ConstraintKind.REASONABLE_CITY_ROUTE: None,
    ConstraintKind.ROOM_RULE: TaskKind.ACCOMMODATION,
    ConstraintKind.ROOM_TYPE: TaskKind.ACCOMMODATION,
    ConstraintKind.MINIMUM_NIGHTS_STAY: TaskKind.ACCOMMODATION,
    ConstraintKind.CUISINE: TaskKind.DINING,
    ConstraintKind.DIVERSE_RESTAURANTS: TaskKind.DINING,
    ConstraintKind.TRANSPORTATION: TaskKind.TRANSPORTATION,
    ConstraintKind.NON_CONFLICTING_TRANSPORTATION: TaskKind.TRANSPORTATION,
    ConstraintKind.DIVERSE_ATTRACTIONS: TaskKind.ATTRACTIONS,
    # min_rating attaches to the task named in its payload, dining by default.
    ConstraintKind.MIN_RATING: TaskKind.DINING,
}


def route_constraint(kind: ConstraintKind, payload: Mapping[str, Any]) -> tuple[Scope, TaskKind | None]:
    """Return (scope, owning task) for a constraint kind per the routing table."""
    if kind not in KIND_ROUTING:
        raise KeyError(kind)
    task = KIND_ROUTING[kind]
    if kind is ConstraintKind.MIN_RATING and "task" in payload:
        task = TaskKind(payload["task"])
    if task is None:
        return Scope.GLOBAL, None
    return Scope.LOCAL, task


@dataclass(frozen=True)
class Constraint:
    """One structured requirement or preference from a query.

    scope and task are derived from the kind through the routing table
    and filled in automatically when omitted.
    """

    id: str
    kind: ConstraintKind
    severity: Severity = Severity.HARD
    payload: Mapping[str, Any] = field(default_factory=dict)
    scope: Scope | None = None
    task: TaskKind | None = None

    def __post_init__(self) -> None:
        scope, task = route_constraint(self.kind, self.payload)
        if self.scope is None:
            object.__setattr__(self, "scope", scope)
        if self.task is None and task is not None:
            object.__setattr__(self, "task", task)
        # budget never attaches to a single task
        if self.kind is ConstraintKind.BUDGET and self.scope is not Scope.GLOBAL:
            raise ValueError("budget constraints are always global")
        if self.scope is Scope.LOCAL and self.task is None:
            raise ValueError(f"local constraint {self.id} names no task")
        if self.scope is Scope.GLOBAL and self.task is not None:
            raise ValueError(f"global constraint {self.id} must not name a task")

    @property
    def category(self) -> Category:
        return category_of(self.kind)

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "severity": self.severity.value,
            "scope": self.scope.value,
            "task": self.task.value if self.task else None,
            "payload": dict(self.payload),
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "Constraint":
        return cls(
            id=doc["id"],
            kind=ConstraintKind(doc["kind"]),
            severity=Severity(doc.get("severity", "hard")),
            payload=dict(doc.get("payload", {})),
        )


@dataclass(frozen=True)
class ConstraintSet:
    """A constraint list partitioned into per-task locals and globals.

    Every constraint lives in exactly one bucket; the partition is
    validated at construction time.
    """

    all: tuple[Constraint, ...]
    locals: Mapping[TaskKind, tuple[Constraint, ...]]
    globals: tuple[Constraint, ...]

    def __post_init__(self) -> None:
        placed = list(self.globals)
        for task in self.locals:
            placed.extend(self.locals[task])
        if len(placed) != len(self.all):
            raise ValueError("locals and globals do not partition the constraint list")
        by_id = {c.id for c in self.all}
        if {c.id for c in placed} != by_id or len(by_id) != len(self.all):
            raise ValueError("constraint ids must be unique and cover the partition")

    def locals_for(self, task: TaskKind) -> tuple[Constraint, ...]:
        return self.locals.get(task, ())

    @classmethod
    def empty(cls) -> "ConstraintSet":
        return cls(all=(), locals={}, globals=())

    def to_doc(self) -> dict:
        return {"constraints": [c.to_doc() for c in self.all]}

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "ConstraintSet":
        constraints = [Constraint.from_doc(d) for d in doc.get("constraints", [])]
        return partition_constraints(constraints)


def partition_constraints(constraints: list[Constraint]) -> ConstraintSet:
    """Split constraints into locals/globals by their routed scope."""
    locals_: dict[TaskKind, list[Constraint]] = {}
    globals_: list[Constraint] = []
    for c in constraints:
        if c.scope is Scope.GLOBAL:
            globals_.append(c)
        else:
            locals_.setdefault(c.task, []).append(c)
    return ConstraintSet(
        all=tuple(constraints),
        locals={t: tuple(cs) for t, cs in locals_.items()},
        globals=tuple(globals_),
    )


@dataclass(frozen=True)
class Query:
    """A structured travel request."""

    id: str
    text: str
    origin: str
    destination: str
    start_date: date
    end_date: date
    party_size: int
    budget: Money
    destination_candidates: tuple[str, ...] = ()
    raw_preferences: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.end_date < self.start_date:
            raise ValueError("end_date precedes start_date")
        if self.party_size < 1:
            raise ValueError("party_size must be at least 1")
        if self.budget < 0:
            raise ValueError("budget must be non-negative")
        if not self.destination_candidates:
            object.__setattr__(self, "destination_candidates", (self.destination,))

    @property
    def days(self) -> int:
        return (self.end_date - self.start_date).days + 1

    @property
    def nights(self) -> int:
        return self.days - 1

    def to_doc(self) -> dict:
        dest: Any = self.destination
        if len(self.destination_candidates) > 1:
            dest = list(self.destination_candidates)
        return {
            "id": self.id,
            "text": self.text,
            "origin": self.origin,
            "destination": dest,
            "start_date": self.start_date.isoformat(),
            "end_date": self.end_date.isoformat(),
            "party_size": self.party_size,
            "budget": self.budget,
            "raw_preferences": list(self.raw_preferences),
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "Query":
        dest = doc["destination"]
        if isinstance(dest, str):
            candidates: tuple[str, ...] = (dest,)
        else:
            candidates = tuple(dest)
            if not candidates:
                raise ValueError("destination list is empty")
        return cls(
            id=doc["id"],
            text=doc.get("text", ""),
            origin=doc["origin"],
            destination=candidates[0],
            start_date=date.fromisoformat(doc["start_date"]),
            end_date=date.fromisoformat(doc["end_date"]),
            party_size=int(doc["party_size"]),
            budget=int(doc["budget"]),
            destination_candidates=candidates,
            raw_preferences=tuple(doc.get("raw_preferences", [])),
        )


@dataclass(frozen=True)
class SubPlanEntry:
    day: int
    resource_id: str
    quantity: int
    unit_cost: Money

    @property
    def cost(self) -> Money:
        return self.quantity * self.unit_cost

    def to_doc(self) -> dict:
        return {
            "day": self.day,
            "resource_id": self.resource_id,
            "quantity": self.quantity,
            "unit_cost": self.unit_cost,
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "SubPlanEntry":
        return cls(
            day=int(doc["day"]),
            resource_id=doc["resource_id"],
            quantity=int(doc["quantity"]),
            unit_cost=int(doc["unit_cost"]),
        )


@dataclass(frozen=True)
class SubPlan:
    """One task's slice of the itinerary with its exact cost."""

    task: TaskKind
    entries: tuple[SubPlanEntry, ...]
    total_cost: Money

    def __post_init__(self) -> None:
        expected = sum(e.cost for e in self.entries)
        if self.total_cost != expected:
            raise ValueError(
                f"{self.task.value} subplan cost {self.total_cost} != entry sum {expected}"
            )

    @classmethod
    def build(cls, task: TaskKind, entries: tuple[SubPlanEntry, ...] | list[SubPlanEntry]) -> "SubPlan":
        entries = tuple(entries)
        return cls(task=task, entries=entries, total_cost=sum(e.cost for e in entries))

    @classmethod
    def empty(cls, task: TaskKind) -> "SubPlan":
        return cls(task=task, entries=(), total_cost=0)

    @property
    def resource_ids(self) -> tuple[str, ...]:
        return tuple(e.resource_id for e in self.entries)

    def to_doc(self) -> dict:
        return {
            "task": self.task.value,
            "entries": [e.to_doc() for e in self.entries],
            "total_cost": self.total_cost,
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "SubPlan":
        return cls(
            task=TaskKind(doc["task"]),
            entries=tuple(SubPlanEntry.from_doc(d) for d in doc.get("entries", [])),
            total_cost=int(doc["total_cost"]),
        )


@dataclass(frozen=True)
class DayEntry:
    """Everything scheduled on a single day of the trip."""

    day: int
    breakfast: str | None = None
    lunch: str | None = None
    dinner: str | None = None
    attractions: tuple[str, ...] = ()
    accommodation: str | None = None
    transport_legs: tuple[str, ...] = ()

    @property
    def meals(self) -> tuple[str | None, str | None, str | None]:
        return (self.breakfast, self.lunch, self.dinner)

    def to_doc(self) -> dict:
        return {
            "day": self.day,
            "breakfast": self.breakfast,
            "lunch": self.lunch,
            "dinner": self.dinner,
            "attractions": list(self.attractions),
            "accommodation": self.accommodation,
            "transport_legs": list(self.transport_legs),
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "DayEntry":
        return cls(
            day=int(doc["day"]),
            breakfast=doc.get("breakfast"),
            lunch=doc.get("lunch"),
            dinner=doc.get("dinner"),
            attractions=tuple(doc.get("attractions", [])),
            accommodation=doc.get("accommodation"),
            transport_legs=tuple(doc.get("transport_legs", [])),
        )


@dataclass(frozen=True)
class Plan:
    """The integrated end-to-end itinerary."""

    query_id: str
    days: tuple[DayEntry, ...]
    subplans: Mapping[TaskKind, SubPlan]
    total_cost: Money

    # Invariants (contiguous days, cost additivity) are deliberately not
    # enforced here; validate_plan reports them as defects instead of
    # making malformed plans unrepresentable.

    @classmethod
    def build(
        cls,
        query_id: str,
        days: tuple[DayEntry, ...] | list[DayEntry],
        subplans: Mapping[TaskKind, SubPlan],
    ) -> "Plan":
        return cls(
            query_id=query_id,
            days=tuple(days),
            subplans=dict(subplans),
            total_cost=sum(sp.total_cost for sp in subplans.values()),
        )

    def subplan(self, task: TaskKind) -> SubPlan:
        return self.subplans.get(task, SubPlan.empty(task))

    def to_doc(self) -> dict:
        return {
            "query_id": self.query_id,
            "days": [d.to_doc() for d in self.days],
            "subplans": [self.subplans[t].to_doc() for t in TASK_ORDER if t in self.subplans],
            "total_cost": self.total_cost,
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "Plan":
        subplans = {TaskKind(d["task"]): SubPlan.from_doc(d) for d in doc.get("subplans", [])}
        return cls(
            query_id=doc["query_id"],
            days=tuple(DayEntry.from_doc(d) for d in doc.get("days", [])),
            subplans=subplans,
            total_cost=int(doc["total_cost"]),
        )


@dataclass(frozen=True)
class DependencyEdge:
    """A coordination link between two task trees."""

    source: TaskKind
    target: TaskKind
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.source == self.target:
            raise ValueError("dependency edge endpoints must differ")

    def to_doc(self) -> dict:
        return {"source": self.source.value, "target": self.target.value, "weight": self.weight}


def total_cost(plan: Plan) -> Money:
    """Exact integer sum of every subplan's entry costs."""
    return sum(sum(e.cost for e in sp.entries) for sp in plan.subplans.values())


def validate_plan(plan: Plan, catalog: "Catalog") -> list[str]:  # noqa: F821
    """Structural checks; returns defect codes, empty when well-formed."""
    defects: list[str] = []
    indices = [d.day for d in plan.days]
    if indices != list(range(1, len(indices) + 1)):
        defects.append("NonContiguousDays")
    n_days = len(plan.days)
    for task, sp in plan.subplans.items():
        for entry in sp.entries:
            if catalog.resolve(task, entry.resource_id) is None:
                defects.append(f"UnknownResource:{entry.resource_id}")
            if not 1 <= entry.day <= max(n_days, 1):
                defects.append(f"DayOutOfRange:{entry.day}")
    if plan.total_cost != sum(sp.total_cost for sp in plan.subplans.values()):
        defects.append("PlanCostMismatch")
    return defects


def canonical_json(doc: Any) -> str:
    """Stable serialization used for every artifact this package writes."""
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
