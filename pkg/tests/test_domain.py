import json
from datetime import date

import pytest
from hypothesis import given, strategies as st

from bforest.domain import (
    COMMONSENSE_KINDS,
    HARD_KINDS,
    KIND_ROUTING,
    TASK_ORDER,
    Category,
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


def test_task_order_is_stable():
    assert [t.value for t in TASK_ORDER] == [
        "transportation",
        "accommodation",
        "dining",
        "attractions",
    ]


def test_every_kind_is_routed():
    assert set(KIND_ROUTING) == set(ConstraintKind)


@pytest.mark.parametrize(
    "kind,expected_scope,expected_task",
    [
        (ConstraintKind.BUDGET, Scope.GLOBAL, None),
        (ConstraintKind.WITHIN_SANDBOX, Scope.GLOBAL, None),
        (ConstraintKind.CUISINE, Scope.LOCAL, TaskKind.DINING),
        (ConstraintKind.ROOM_RULE, Scope.LOCAL, TaskKind.ACCOMMODATION),
        (ConstraintKind.ROOM_TYPE, Scope.LOCAL, TaskKind.ACCOMMODATION),
        (ConstraintKind.TRANSPORTATION, Scope.LOCAL, TaskKind.TRANSPORTATION),
        (ConstraintKind.DIVERSE_ATTRACTIONS, Scope.LOCAL, TaskKind.ATTRACTIONS),
        (ConstraintKind.MIN_RATING, Scope.LOCAL, TaskKind.DINING),
    ],
)
def test_route_constraint(kind, expected_scope, expected_task):
    scope, task = route_constraint(kind, {})
    assert scope is expected_scope
    assert task is expected_task


def test_min_rating_payload_can_redirect_task():
    scope, task = route_constraint(ConstraintKind.MIN_RATING, {"task": "accommodation"})
    assert scope is Scope.LOCAL
    assert task is TaskKind.ACCOMMODATION


def test_constraint_derives_scope_and_task():
    c = Constraint(id="c1", kind=ConstraintKind.CUISINE, payload={"cuisines": ["thai"]})
    assert c.scope is Scope.LOCAL
    assert c.task is TaskKind.DINING
    assert c.category is Category.HARD


def test_budget_constraint_cannot_be_local():
    with pytest.raises(ValueError):
        Constraint(id="b", kind=ConstraintKind.BUDGET, scope=Scope.LOCAL, task=TaskKind.DINING)


def test_categories_cover_the_kinds():
    assert set(COMMONSENSE_KINDS) | set(HARD_KINDS) | {ConstraintKind.MIN_RATING} == set(
        ConstraintKind
    )
    assert Constraint(id="m", kind=ConstraintKind.MIN_RATING).category is Category.PREFERENCE


def test_constraint_doc_roundtrip():
    c = Constraint(
        id="c1",
        kind=ConstraintKind.ROOM_RULE,
        severity=Severity.SOFT,
        payload={"rules": ["pets"]},
    )
    again = Constraint.from_doc(c.to_doc())
    assert again == c


def _constraints():
    return [
        Constraint(id="budget", kind=ConstraintKind.BUDGET, payload={"amount": 100}),
        Constraint(id="c-cuisine", kind=ConstraintKind.CUISINE, payload={"cuisines": ["thai"]}),
        Constraint(id="c-room", kind=ConstraintKind.ROOM_TYPE, payload={"room_type": "entire_home"}),
    ]


def test_partition_groups_by_task():
    cs = partition_constraints(_constraints())
    assert [c.id for c in cs.globals] == ["budget"]
    assert [c.id for c in cs.locals_for(TaskKind.DINING)] == ["c-cuisine"]
    assert [c.id for c in cs.locals_for(TaskKind.ACCOMMODATION)] == ["c-room"]
    assert cs.locals_for(TaskKind.ATTRACTIONS) == ()


def test_partition_validation_rejects_duplicates():
    cs = partition_constraints(_constraints())
    with pytest.raises(ValueError):
        ConstraintSet(all=cs.all, locals={}, globals=cs.globals)


def test_constraint_set_doc_roundtrip():
    cs = partition_constraints(_constraints())
    again = ConstraintSet.from_doc(cs.to_doc())
    assert again.all == cs.all
    assert again.globals == cs.globals


_KIND_STRATEGY = st.sampled_from(list(ConstraintKind))


@given(st.lists(_KIND_STRATEGY, max_size=12))
def test_partition_loses_nothing(kinds):
    constraints = [
        Constraint(id=f"k{i}", kind=kind, payload={}) for i, kind in enumerate(kinds)
    ]
    cs = partition_constraints(constraints)
    placed = list(cs.globals) + [c for t in cs.locals for c in cs.locals[t]]
    assert sorted(c.id for c in placed) == sorted(c.id for c in constraints)
    for c in cs.globals:
        assert c.scope is Scope.GLOBAL
    for task in cs.locals:
        assert all(c.task is task for c in cs.locals[task])


def _query(**over):
    doc = {
        "id": "q1",
        "text": "",
        "origin": "A",
        "destination": "B",
        "start_date": "2026-09-10",
        "end_date": "2026-09-12",
        "party_size": 2,
        "budget": 1000,
    }
    doc.update(over)
    return Query.from_doc(doc)


def test_query_days_and_nights():
    q = _query()
    assert (q.days, q.nights) == (3, 2)
    same_day = _query(end_date="2026-09-10")
    assert (same_day.days, same_day.nights) == (1, 0)


def test_query_rejects_reversed_dates():
    with pytest.raises(ValueError):
        _query(end_date="2026-09-09")


def test_query_rejects_empty_party():
    with pytest.raises(ValueError):
        _query(party_size=0)


def test_query_destination_list_takes_first():
    q = _query(destination=["B", "C"])
    assert q.destination == "B"
    assert q.destination_candidates == ("B", "C")
    assert Query.from_doc(q.to_doc()) == q


def test_subplan_cost_is_strict():
    entries = (SubPlanEntry(1, "X", 2, 50),)
    assert SubPlan.build(TaskKind.DINING, entries).total_cost == 100
    with pytest.raises(ValueError):
        SubPlan(task=TaskKind.DINING, entries=entries, total_cost=99)


def _tiny_plan():
    sp = {
        TaskKind.TRANSPORTATION: SubPlan.build(
            TaskKind.TRANSPORTATION,
            [SubPlanEntry(1, "T1", 1, 10), SubPlanEntry(1, "T2", 1, 10)],
        ),
        TaskKind.ACCOMMODATION: SubPlan.empty(TaskKind.ACCOMMODATION),
        TaskKind.DINING: SubPlan.build(
            TaskKind.DINING,
            [SubPlanEntry(1, "R1", 1, 5), SubPlanEntry(1, "R2", 1, 5), SubPlanEntry(1, "R3", 1, 5)],
        ),
        TaskKind.ATTRACTIONS: SubPlan.build(TaskKind.ATTRACTIONS, [SubPlanEntry(1, "A1", 1, 3)]),
    }
    day = DayEntry(
        day=1,
        breakfast="R1",
        lunch="R2",
        dinner="R3",
        attractions=("A1",),
        transport_legs=("T1", "T2"),
    )
    return Plan.build("q1", [day], sp)


def test_plan_build_totals_and_doc_roundtrip():
    plan = _tiny_plan()
    assert plan.total_cost == 38
    assert total_cost(plan) == 38
    again = Plan.from_doc(plan.to_doc())
    assert again == plan
    # subplans serialize in the fixed task order
    assert [d["task"] for d in plan.to_doc()["subplans"]] == [t.value for t in TASK_ORDER]


def test_validate_plan_reports_defects(tiny_catalog):
    plan = _tiny_plan()
    defects = validate_plan(plan, tiny_catalog)
    # T1/R1... exist in the tiny fixture catalog, the rest do not
    assert "NonContiguousDays" not in defects
    assert "PlanCostMismatch" not in defects

    scrambled = Plan(
        query_id="q1",
        days=(DayEntry(day=2), DayEntry(day=1)),
        subplans={TaskKind.DINING: SubPlan.build(TaskKind.DINING, [SubPlanEntry(9, "R1", 1, 5)])},
        total_cost=999,
    )
    defects = validate_plan(scrambled, tiny_catalog)
    assert "NonContiguousDays" in defects
    assert "DayOutOfRange:9" in defects
    assert "PlanCostMismatch" in defects


def test_validate_plan_flags_unknown_resources(tiny_catalog):
    plan = Plan(
        query_id="q1",
        days=(DayEntry(day=1),),
        subplans={TaskKind.DINING: SubPlan.build(TaskKind.DINING, [SubPlanEntry(1, "NOPE", 1, 5)])},
        total_cost=5,
    )
    assert "UnknownResource:NOPE" in validate_plan(plan, tiny_catalog)


def test_dependency_edge_rejects_self_loop():
    with pytest.raises(ValueError):
        DependencyEdge(TaskKind.DINING, TaskKind.DINING)


def test_canonical_json_is_sorted_and_newline_terminated():
    text = canonical_json({"b": 1, "a": [2, 1]})
    assert text.endswith("\n")
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"b": 1, "a": [2, 1]}
    assert canonical_json({"x": "déjà"}).count("déjà") == 1  # no ascii escaping
