"""Constraint checking plumbing and pass-rate aggregation."""

from fractions import Fraction

import pytest

from bforest.domain import (
    Category,
    Constraint,
    ConstraintKind,
    Query,
    Severity,
    SubPlan,
    SubPlanEntry,
    TaskKind,
    partition_constraints,
)
from bforest.evaluation import (
    ConstraintCheck,
    MetricsReport,
    PlanEvaluation,
    applicable_constraints,
    check,
    check_plan,
    macro_pass_rate,
    micro_pass_rate,
    report,
    standard_commonsense,
)
from bforest.integration import integrate


def test_standard_commonsense_covers_all_structural_kinds():
    constraints = standard_commonsense()
    assert len(constraints) == 8
    assert all(c.severity is Severity.HARD for c in constraints)
    assert all(c.category is Category.COMMONSENSE for c in constraints)
    assert {c.id for c in constraints} == {f"cs-{c.kind.value}" for c in constraints}


def test_applicable_constraints_base_set_is_commonsense():
    assert [c.category for c in applicable_constraints(None)] == [Category.COMMONSENSE] * 8


def test_applicable_constraints_filters_by_severity_and_category():
    cs = partition_constraints(
        [
            Constraint(id="c1", kind=ConstraintKind.CUISINE, payload={"cuisines": ["thai"]}),
            Constraint(
                id="c2",
                kind=ConstraintKind.ROOM_TYPE,
                severity=Severity.SOFT,
                payload={"room_type": "entire_home"},
            ),
            Constraint(
                id="c3",
                kind=ConstraintKind.MIN_RATING,
                severity=Severity.HARD,
                payload={"min_rating": 4.0, "task": "dining"},
            ),
            Constraint(id="c4", kind=ConstraintKind.BUDGET, payload={"amount": 100}),
        ]
    )
    got = applicable_constraints(cs)
    extra = [c.id for c in got if c.category is not Category.COMMONSENSE]
    # soft c2 scores instead of gating; preference-category c3 never gates
    assert extra == ["c1", "c4"]
    assert len(got) == 10


def _day_trip_query():
    return Query.from_doc(
        {
            "id": "q-day",
            "text": "",
            "origin": "Avalon",
            "destination": "Brightwater",
            "start_date": "2026-09-10",
            "end_date": "2026-09-10",
            "party_size": 1,
            "budget": 60_000,
        }
    )


def _day_trip_plan(meal_ids=("R1", "R2", "R3")):
    costs = {"R1": 600, "R2": 700, "R3": 800}
    subplans = {
        TaskKind.TRANSPORTATION: SubPlan.build(
            TaskKind.TRANSPORTATION,
            [SubPlanEntry(1, "T1", 1, 6000), SubPlanEntry(1, "T2", 1, 5500)],
        ),
        TaskKind.ACCOMMODATION: SubPlan.empty(TaskKind.ACCOMMODATION),
        TaskKind.DINING: SubPlan.build(
            TaskKind.DINING,
            [SubPlanEntry(1, rid, 1, costs.get(rid, 600)) for rid in meal_ids],
        ),
        TaskKind.ATTRACTIONS: SubPlan.build(
            TaskKind.ATTRACTIONS, [SubPlanEntry(1, "A1", 1, 500)]
        ),
    }
    return integrate(subplans, _day_trip_query())


def test_check_plan_all_commonsense_pass_on_clean_plan(tiny_catalog):
    checks = check_plan(_day_trip_plan(), None, tiny_catalog, _day_trip_query())
    assert len(checks) == 8
    assert all(c.passed for c in checks)


def test_check_flags_repeated_restaurant(tiny_catalog):
    plan = _day_trip_plan(meal_ids=("R1", "R1", "R2"))
    constraint = next(
        c for c in standard_commonsense() if c.kind is ConstraintKind.DIVERSE_RESTAURANTS
    )
    result = check(plan, constraint, tiny_catalog, _day_trip_query())
    assert not result.passed
    assert "R1" in result.detail


def test_check_plan_without_plan_fails_everything(tiny_catalog):
    checks = check_plan(None, None, tiny_catalog, _day_trip_query())
    assert len(checks) == 8
    assert all(not c.passed for c in checks)
    assert all(c.detail == "no plan delivered" for c in checks)


def _cs_check(passed, kind=ConstraintKind.DIVERSE_RESTAURANTS):
    return ConstraintCheck(
        constraint_id=f"cs-{kind.value}",
        plan_id="p",
        passed=passed,
        detail="" if passed else "did not hold",
        kind=kind,
        category=Category.COMMONSENSE,
    )


def _hard_check(passed, kind=ConstraintKind.BUDGET):
    return ConstraintCheck(
        constraint_id=kind.value,
        plan_id="p",
        passed=passed,
        detail="" if passed else "did not hold",
        kind=kind,
        category=Category.HARD,
    )


def test_micro_pools_checks_across_plans():
    groups = [
        [_cs_check(True), _cs_check(False)],
        [_cs_check(True)],
        [],
    ]
    assert micro_pass_rate(groups) == Fraction(2, 3)


def test_macro_counts_fully_passing_plans():
    groups = [
        [_cs_check(True), _cs_check(True)],
        [_cs_check(True), _cs_check(False)],
        [],  # nothing applied, nothing violated
    ]
    assert macro_pass_rate(groups) == Fraction(2, 3)


def test_rates_on_empty_input_are_zero():
    assert micro_pass_rate([]) == Fraction(0)
    assert macro_pass_rate([]) == Fraction(0)
    empty = report([])
    assert empty.delivery_rate == Fraction(0)
    assert empty.final_pass_rate == Fraction(0)
    assert empty.violation_counts == {}


def test_report_aggregates_batch():
    e1 = PlanEvaluation(
        "q1", True, (_cs_check(True), _cs_check(True), _hard_check(True))
    )
    e2 = PlanEvaluation(
        "q2",
        True,
        (
            _cs_check(False, ConstraintKind.DIVERSE_ATTRACTIONS),
            _cs_check(True),
            _hard_check(False, ConstraintKind.CUISINE),
        ),
    )
    e3 = PlanEvaluation(
        "q3", False, (_cs_check(False), _cs_check(False), _hard_check(False))
    )
    got = report([e1, e2, e3])
    assert got.delivery_rate == Fraction(2, 3)
    assert got.commonsense_micro == Fraction(3, 6)
    assert got.commonsense_macro == Fraction(1, 3)
    assert got.hard_micro == Fraction(1, 3)
    assert got.hard_macro == Fraction(1, 3)
    assert got.final_pass_rate == Fraction(1, 3)
    # undelivered plans never contribute violation rows
    assert got.violation_counts == {"diverse_attractions": 1, "cuisine": 1}


def test_report_doc_exposes_exact_and_percent_forms():
    got = report(
        [PlanEvaluation("q1", True, (_cs_check(True), _cs_check(False)))]
    ).to_doc()
    assert got["commonsense_micro"] == {"numerator": 1, "denominator": 2, "pct": 50.0}
    assert got["delivery_rate"]["pct"] == 100.0
    assert list(got["violation_counts"]) == ["diverse_restaurants"]


def test_render_text_is_a_two_line_table():
    text = report([PlanEvaluation("q1", True, (_cs_check(True),))]).render_text()
    lines = text.splitlines()
    assert len(lines) == 2
    assert lines[0].split() == [
        "Delivery", "CS-Micro", "CS-Macro", "Hard-Micro", "Hard-Macro", "Final",
    ]
    # no hard constraints applied: micro has nothing to pool, macro passes vacuously
    assert lines[1].split() == ["100.00", "100.00", "100.00", "0.00", "100.00", "100.00"]


def test_violations_csv_sorted_by_kind():
    rep = MetricsReport(
        delivery_rate=Fraction(1),
        commonsense_micro=Fraction(1),
        commonsense_macro=Fraction(1),
        hard_micro=Fraction(1),
        hard_macro=Fraction(1),
        final_pass_rate=Fraction(1),
        violation_counts={"cuisine": 2, "budget": 1},
    )
    assert rep.violations_csv() == "kind,count\nbudget,1\ncuisine,2\n"


def test_report_rejects_out_of_range_rates():
    with pytest.raises(ValueError):
        MetricsReport(
            delivery_rate=Fraction(3, 2),
            commonsense_micro=Fraction(1),
            commonsense_macro=Fraction(1),
            hard_micro=Fraction(1),
            hard_macro=Fraction(1),
            final_pass_rate=Fraction(1),
        )
