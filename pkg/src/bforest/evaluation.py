"""Constraint checkers and pass-rate metrics.

All rates are exact rationals internally; percentages only appear at
display time. Undelivered plans count as failing every applicable
constraint, so the final pass rate can never exceed the delivery rate.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .catalog import Catalog
from .domain import (
    COMMONSENSE_KINDS,
    Category,
    Constraint,
    ConstraintKind,
    ConstraintSet,
    Plan,
    Query,
    Severity,
    TaskKind,
    total_cost,
)


@dataclass(frozen=True)
class ConstraintCheck:
    constraint_id: str
    plan_id: str
    passed: bool
    detail: str
    kind: ConstraintKind
    category: Category

    def __post_init__(self) -> None:
        if not self.passed and not self.detail:
            raise ValueError("failed checks need a non-empty detail")

    def to_doc(self) -> dict:
        return {
            "constraint_id": self.constraint_id,
            "plan_id": self.plan_id,
            "passed": self.passed,
            "detail": self.detail,
            "kind": self.kind.value,
            "category": self.category.value,
        }


def _meal_ids(plan: Plan) -> list[str]:
    return [m for day in plan.days for m in day.meals if m is not None]


def _attraction_ids(plan: Plan) -> list[str]:
    return [a for day in plan.days for a in day.attractions]


def _hotel_by_day(plan: Plan) -> list[tuple[int, str | None]]:
    return [(day.day, day.accommodation) for day in plan.days]


def _legs(plan: Plan) -> list[tuple[int, str]]:
    return [(day.day, leg) for day in plan.days for leg in day.transport_legs]


def _check_within_sandbox(plan, payload, catalog, query):
    for rid in _meal_ids(plan):
        if catalog.resolve(TaskKind.DINING, rid) is None:
            return False, f"restaurant {rid} is not in the sandbox"
    for rid in _attraction_ids(plan):
        if catalog.resolve(TaskKind.ATTRACTIONS, rid) is None:
            return False, f"attraction {rid} is not in the sandbox"
    for _, rid in _hotel_by_day(plan):
        if rid is not None and catalog.resolve(TaskKind.ACCOMMODATION, rid) is None:
            return False, f"accommodation {rid} is not in the sandbox"
    for _, rid in _legs(plan):
        if catalog.resolve(TaskKind.TRANSPORTATION, rid) is None:
            return False, f"transport leg {rid} is not in the sandbox"
    return True, ""


def _check_complete_information(plan, payload, catalog, query):
    n = len(plan.days)
    nights = n - 1
    for day in plan.days:
        for slot, rid in zip(("breakfast", "lunch", "dinner"), day.meals):
            if rid is None:
                return False, f"day {day.day}: {slot} is missing"
        if not day.attractions:
            return False, f"day {day.day}: no attraction scheduled"
        if day.day <= nights and day.accommodation is None:
            return False, f"day {day.day}: accommodation is missing"
    if n >= 1 and not plan.days[0].transport_legs:
        return False, "day 1: arrival transport is missing"
    if n >= 1 and not plan.days[-1].transport_legs:
        return False, f"day {n}: return transport is missing"
    return True, ""


def _check_within_current_city(plan, payload, catalog, query):
    expected = query.destination
    for rid in _meal_ids(plan):
        r = catalog.resolve(TaskKind.DINING, rid)
        if r is not None and r.city != expected:
            return False, f"restaurant {rid} is in {r.city}, not {expected}"
    for rid in _attraction_ids(plan):
        a = catalog.resolve(TaskKind.ATTRACTIONS, rid)
        if a is not None and a.city != expected:
            return False, f"attraction {rid} is in {a.city}, not {expected}"
    for _, rid in _hotel_by_day(plan):
        if rid is None:
            continue
        h = catalog.resolve(TaskKind.ACCOMMODATION, rid)
        if h is not None and h.city != expected:
            return False, f"accommodation {rid} is in {h.city}, not {expected}"
    return True, ""


def _check_reasonable_city_route(plan, payload, catalog, query):
    n = len(plan.days)
    legs = _legs(plan)
    resolved = [(day, catalog.resolve(TaskKind.TRANSPORTATION, rid)) for day, rid in legs]
    resolved = [(day, leg) for day, leg in resolved if leg is not None]
    outbound = [
        leg
        for day, leg in resolved
        if day == 1
        and leg.origin == query.origin
        and leg.destination == query.destination
        and leg.depart_date == query.start_date
    ]
    if not outbound:
        return False, f"no outbound leg {query.origin} -> {query.destination} on day 1"
    returning = [
        leg
        for day, leg in resolved
        if day == n
        and leg.origin == query.destination
        and leg.destination == query.origin
        and leg.depart_date == query.end_date
    ]
    if not returning:
        return False, f"no return leg {query.destination} -> {query.origin} on day {n}"
    stray = [day for day, _ in resolved if 1 < day < n]
    if stray:
        return False, f"unexpected transport on day {stray[0]}"
    return True, ""


def _check_diverse_restaurants(plan, payload, catalog, query):
    ids = _meal_ids(plan)
    seen = set()
    for rid in ids:
        if rid in seen:
            return False, f"restaurant {rid} appears more than once"
        seen.add(rid)
    return True, ""


def _check_diverse_attractions(plan, payload, catalog, query):
    ids = _attraction_ids(plan)
    seen = set()
    for rid in ids:
        if rid in seen:
            return False, f"attraction {rid} appears more than once"
        seen.add(rid)
    return True, ""


def _check_non_conflicting_transportation(plan, payload, catalog, query):
    legs = [rid for _, rid in _legs(plan)]
    if len(legs) != len(set(legs)):
        return False, "a transport leg is used twice"
    modes = {
        leg.mode
        for rid in legs
        for leg in [catalog.resolve(TaskKind.TRANSPORTATION, rid)]
        if leg is not None
    }
    if "flight" in modes and "self_driving" in modes:
        return False, "flight and self-driving cannot be mixed in one trip"
    return True, ""


def _check_minimum_nights_stay(plan, payload, catalog, query):
    nights = [rid for day, rid in _hotel_by_day(plan) if day <= len(plan.days) - 1]
    runs: list[tuple[str, int]] = []
    for rid in nights:
        if rid is None:
            continue
        if runs and runs[-1][0] == rid:
            runs[-1] = (rid, runs[-1][1] + 1)
        else:
            runs.append((rid, 1))
    for rid, length in runs:
        h = catalog.resolve(TaskKind.ACCOMMODATION, rid)
        if h is not None and length < h.min_nights:
            return False, f"{rid} requires {h.min_nights} nights, stayed {length}"
    return True, ""


def _check_budget(plan, payload, catalog, query):
    amount = payload.get("amount")
    if amount is None:
        amount = query.budget
    cost = total_cost(plan)
    if cost > amount:
        return False, f"total cost {cost} exceeds budget {amount}"
    return True, ""


def _check_room_rule(plan, payload, catalog, query):
    required = set(payload.get("rules", []))
    for _, rid in _hotel_by_day(plan):
        if rid is None:
            continue
        h = catalog.resolve(TaskKind.ACCOMMODATION, rid)
        if h is not None and not required <= set(h.house_rules):
            missing = sorted(required - set(h.house_rules))
            return False, f"{rid} does not allow {', '.join(missing)}"
    return True, ""


def _check_room_type(plan, payload, catalog, query):
    allowed = payload.get("room_types")
    if allowed is None:
        allowed = [payload.get("room_type")]
    for _, rid in _hotel_by_day(plan):
        if rid is None:
            continue
        h = catalog.resolve(TaskKind.ACCOMMODATION, rid)
        if h is not None and h.room_type not in allowed:
            return False, f"{rid} is {h.room_type}, wanted {', '.join(map(str, allowed))}"
    return True, ""


def _check_cuisine(plan, payload, catalog, query):
    # case-insensitive: must agree with the dining option filter
    wanted = {c.casefold() for c in payload.get("cuisines", [])}
    if not wanted:
        return True, ""
    for rid in _meal_ids(plan):
        r = catalog.resolve(TaskKind.DINING, rid)
        if r is not None and not wanted & {c.casefold() for c in r.cuisines}:
            return False, f"{rid} serves none of {', '.join(sorted(wanted))}"
    return True, ""


def _check_transportation(plan, payload, catalog, query):
    allowed = payload.get("allowed")
    forbidden = set(payload.get("forbidden", []))
    for _, rid in _legs(plan):
        leg = catalog.resolve(TaskKind.TRANSPORTATION, rid)
        if leg is None:
            continue
        if allowed is not None and leg.mode not in allowed:
            return False, f"leg {rid} uses {leg.mode}, allowed: {', '.join(allowed)}"
        if leg.mode in forbidden:
            return False, f"leg {rid} uses forbidden mode {leg.mode}"
    return True, ""


def _check_min_rating(plan, payload, catalog, query):
    threshold = float(payload.get("min_rating", 0))
    for rid in _meal_ids(plan):
        r = catalog.resolve(TaskKind.DINING, rid)
        if r is not None and r.rating < threshold:
            return False, f"{rid} is rated {r.rating}, below {threshold}"
    return True, ""


_CHECKERS = {
    ConstraintKind.WITHIN_SANDBOX: _check_within_sandbox,
    ConstraintKind.COMPLETE_INFORMATION: _check_complete_information,
    ConstraintKind.WITHIN_CURRENT_CITY: _check_within_current_city,
    ConstraintKind.REASONABLE_CITY_ROUTE: _check_reasonable_city_route,
    ConstraintKind.DIVERSE_RESTAURANTS: _check_diverse_restaurants,
    ConstraintKind.DIVERSE_ATTRACTIONS: _check_diverse_attractions,
    ConstraintKind.NON_CONFLICTING_TRANSPORTATION: _check_non_conflicting_transportation,
    ConstraintKind.MINIMUM_NIGHTS_STAY: _check_minimum_nights_stay,
    ConstraintKind.BUDGET: _check_budget,
    ConstraintKind.ROOM_RULE: _check_room_rule,
    ConstraintKind.ROOM_TYPE: _check_room_type,
    ConstraintKind.CUISINE: _check_cuisine,
    ConstraintKind.TRANSPORTATION: _check_transportation,
    ConstraintKind.MIN_RATING: _check_min_rating,
}


def check(plan: Plan, constraint: Constraint, catalog: Catalog, query: Query) -> ConstraintCheck:
    """Run one constraint checker against an integrated plan."""
    passed, detail = _CHECKERS[constraint.kind](plan, constraint.payload, catalog, query)
    return ConstraintCheck(
        constraint_id=constraint.id,
        plan_id=plan.query_id,
        passed=passed,
        detail=detail,
        kind=constraint.kind,
        category=constraint.category,
    )


def standard_commonsense() -> tuple[Constraint, ...]:
    """The always-applicable structural constraints, one per kind."""
    return tuple(
        Constraint(id=f"cs-{kind.value}", kind=kind, severity=Severity.HARD, payload={})
        for kind in COMMONSENSE_KINDS
    )


def applicable_constraints(cs: ConstraintSet | None) -> list[Constraint]:
    """Commonsense always applies; hard constraints come from the query."""
    constraints = list(standard_commonsense())
    present = {c.kind for c in constraints}
    if cs is not None:
        for c in cs.all:
            if c.category is Category.COMMONSENSE and c.kind in present:
                continue
            if c.severity is not Severity.HARD:
                continue  # soft preferences score, they are not pass/fail
            if c.category is Category.PREFERENCE:
                continue
            constraints.append(c)
    return constraints


def check_plan(
    plan: Plan | None,
    cs: ConstraintSet | None,
    catalog: Catalog,
    query: Query,
) -> list[ConstraintCheck]:
    """All applicable checks for one query; everything fails when no plan."""
    constraints = applicable_constraints(cs)
    if plan is None:
        return [
            ConstraintCheck(
                constraint_id=c.id,
                plan_id=query.id,
                passed=False,
                detail="no plan delivered",
                kind=c.kind,
                category=c.category,
            )
            for c in constraints
        ]
    return [check(plan, c, catalog, query) for c in constraints]


def micro_pass_rate(groups: Iterable[Iterable[ConstraintCheck]]) -> Fraction:
    """Passed checks over applied checks, pooled across all plans."""
    passed = applied = 0
    for group in groups:
        for item in group:
            applied += 1
            passed += 1 if item.passed else 0
    if applied == 0:
        return Fraction(0)
    return Fraction(passed, applied)


def macro_pass_rate(groups: Iterable[Iterable[ConstraintCheck]]) -> Fraction:
    """Fraction of plans whose every check passes."""
    total = full = 0
    for group in groups:
        total += 1
        full += 1 if all(item.passed for item in group) else 0
    if total == 0:
        return Fraction(0)
    return Fraction(full, total)


@dataclass(frozen=True)
class PlanEvaluation:
    query_id: str
    delivered: bool
    checks: tuple[ConstraintCheck, ...]


@dataclass(frozen=True)
class MetricsReport:
    delivery_rate: Fraction
    commonsense_micro: Fraction
    commonsense_macro: Fraction
    hard_micro: Fraction
    hard_macro: Fraction
    final_pass_rate: Fraction
    violation_counts: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in (
            "delivery_rate",
            "commonsense_micro",
            "commonsense_macro",
            "hard_micro",
            "hard_macro",
            "final_pass_rate",
        ):
            rate = getattr(self, name)
            if not 0 <= rate <= 1:
                raise ValueError(f"{name} out of range: {rate}")

    def to_doc(self) -> dict:
        def rate(f: Fraction) -> dict:
            return {
                "numerator": f.numerator,
                "denominator": f.denominator,
                "pct": round(float(f) * 100, 2),
            }

        return {
            "delivery_rate": rate(self.delivery_rate),
            "commonsense_micro": rate(self.commonsense_micro),
            "commonsense_macro": rate(self.commonsense_macro),
            "hard_micro": rate(self.hard_micro),
            "hard_macro": rate(self.hard_macro),
            "final_pass_rate": rate(self.final_pass_rate),
            "violation_counts": dict(sorted(self.violation_counts.items())),
        }

    def render_text(self) -> str:
        def pct(f: Fraction) -> str:
            return f"{float(f) * 100:6.2f}"

        header = (
            f"{'Delivery':>10} {'CS-Micro':>10} {'CS-Macro':>10}"
            f" {'Hard-Micro':>10} {'Hard-Macro':>10} {'Final':>10}"
        )
        row = (
            f"{pct(self.delivery_rate):>10} {pct(self.commonsense_micro):>10}"
            f" {pct(self.commonsense_macro):>10} {pct(self.hard_micro):>10}"
            f" {pct(self.hard_macro):>10} {pct(self.final_pass_rate):>10}"
        )
        return header + "\n" + row + "\n"

    def violations_csv(self) -> str:
        lines = ["kind,count"]
        for kind, count in sorted(self.violation_counts.items()):
            lines.append(f"{kind},{count}")
        return "\n".join(lines) + "\n"


def report(evaluations: list[PlanEvaluation]) -> MetricsReport:
    """Aggregate a batch of evaluated plans into the metric set."""
    total = len(evaluations)
    if total == 0:
        zero = Fraction(0)
        return MetricsReport(zero, zero, zero, zero, zero, zero, {})
    delivered = sum(1 for e in evaluations if e.delivered)
    cs_groups = [[c for c in e.checks if c.category is Category.COMMONSENSE] for e in evaluations]
    hard_groups = [[c for c in e.checks if c.category is Category.HARD] for e in evaluations]
    final = sum(1 for e in evaluations if e.delivered and all(c.passed for c in e.checks))
    violations: Counter[str] = Counter()
    for e in evaluations:
        if not e.delivered:
            continue
        for c in e.checks:
            if not c.passed:
                violations[c.kind.value] += 1
    return MetricsReport(
        delivery_rate=Fraction(delivered, total),
        commonsense_micro=micro_pass_rate(cs_groups),
        commonsense_macro=macro_pass_rate(cs_groups),
        hard_micro=micro_pass_rate(hard_groups),
        hard_macro=macro_pass_rate(hard_groups),
        final_pass_rate=Fraction(final, total),
        violation_counts=dict(violations),
    )
