import pytest

from bforest.btree import (
    EMIT,
    EXHAUSTED,
    GENERATE,
    RERANK,
    SELECT,
    Action,
    BehaviorTree,
    CandidatePool,
    Condition,
    HeuristicWeights,
    PlanningContext,
    Selector,
    Sequence,
    Status,
    UnregisteredLeaf,
    activate_constraints,
    generate_candidates,
    next_candidate,
    rerank,
    tick,
)
from bforest.catalog import load_catalog_doc
from bforest.domain import Constraint, ConstraintKind, Query, Severity, TaskKind
from bforest.llm import MockBackend, MockRule

DOC = {
    "schema": 1,
    "transport": [
        {"id": "O1", "origin": "A", "destination": "B", "mode": "train",
         "depart_date": "2026-09-10", "arrive_date": "2026-09-10", "price": 100},
        {"id": "O2", "origin": "A", "destination": "B", "mode": "flight",
         "depart_date": "2026-09-10", "arrive_date": "2026-09-10", "price": 250},
        {"id": "B1", "origin": "B", "destination": "A", "mode": "train",
         "depart_date": "2026-09-11", "arrive_date": "2026-09-11", "price": 90},
        {"id": "B2", "origin": "B", "destination": "A", "mode": "flight",
         "depart_date": "2026-09-11", "arrive_date": "2026-09-11", "price": 240},
    ],
    "accommodations": [
        {"id": "H1", "city": "B", "name": "One", "price_per_night": 70,
         "room_type": "entire_home", "house_rules": [], "min_nights": 1, "max_occupancy": 4},
        {"id": "H2", "city": "B", "name": "Two", "price_per_night": 50,
         "room_type": "private_room", "house_rules": [], "min_nights": 1, "max_occupancy": 4},
    ],
    "dining": [
        {"id": f"R{i}", "city": "B", "name": f"R{i}", "cuisines": ["thai"],
         "avg_cost": 10 * i, "rating": 4.0}
        for i in range(1, 9)
    ],
    "attractions": [
        {"id": "A1", "city": "B", "name": "One", "price": 10},
        {"id": "A2", "city": "B", "name": "Two", "price": 5},
        {"id": "A3", "city": "B", "name": "Three", "price": 0},
    ],
}


def _query(**over):
    doc = {
        "id": "q",
        "text": "",
        "origin": "A",
        "destination": "B",
        "start_date": "2026-09-10",
        "end_date": "2026-09-11",
        "party_size": 1,
        "budget": 100_000,
    }
    doc.update(over)
    return Query.from_doc(doc)


@pytest.fixture()
def catalog():
    return load_catalog_doc(DOC)


def _scripted(trace, name, result):
    def handler(ctx):
        trace.append(name)
        return result

    return handler


def test_sequence_short_circuits_on_failure():
    trace = []
    ctx = PlanningContext(
        handlers={
            "a": _scripted(trace, "a", Status.SUCCESS),
            "b": _scripted(trace, "b", Status.FAILURE),
            "c": _scripted(trace, "c", Status.SUCCESS),
        }
    )
    root = Sequence(children=(Action("a"), Action("b"), Action("c")))
    assert root.tick(ctx) is Status.FAILURE
    assert trace == ["a", "b"]


def test_sequence_reports_running():
    ctx = PlanningContext(handlers={"a": lambda ctx: Status.RUNNING})
    assert Sequence(children=(Action("a"), Action("a"))).tick(ctx) is Status.RUNNING


def test_selector_takes_first_success():
    trace = []
    ctx = PlanningContext(
        handlers={
            "a": _scripted(trace, "a", Status.FAILURE),
            "b": _scripted(trace, "b", Status.SUCCESS),
            "c": _scripted(trace, "c", Status.SUCCESS),
        }
    )
    root = Selector(children=(Condition("a"), Condition("b"), Condition("c")))
    assert root.tick(ctx) is Status.SUCCESS
    assert trace == ["a", "b"]


def test_unregistered_leaf_raises():
    with pytest.raises(UnregisteredLeaf):
        Action("ghost").tick(PlanningContext(handlers={}))


def test_standard_tree_is_the_four_step_sequence():
    tree = BehaviorTree.standard(TaskKind.DINING)
    names = [child.name for child in tree.root.children]
    assert names == [GENERATE, RERANK, SELECT, EMIT]
    ran = []
    ctx = PlanningContext(
        handlers={name: _scripted(ran, name, Status.SUCCESS) for name in names}
    )
    assert tick(tree, ctx) is Status.SUCCESS
    assert ran == names


def test_activation_gates_constraints_by_node():
    hard = Constraint(id="h", kind=ConstraintKind.CUISINE, payload={"cuisines": ["thai"]})
    soft = Constraint(
        id="s", kind=ConstraintKind.MIN_RATING, severity=Severity.SOFT, payload={}
    )
    tree = BehaviorTree.standard(TaskKind.DINING, (hard, soft))
    generate_node, rerank_node, select_node, _ = tree.root.children
    assert [c.id for c in activate_constraints(tree, generate_node, 1).activated] == ["h"]
    assert [c.id for c in activate_constraints(tree, rerank_node, 1).activated] == ["s"]
    assert activate_constraints(tree, select_node, 1).activated == ()


def test_transportation_candidates_are_pairs(catalog):
    tree = BehaviorTree.standard(TaskKind.TRANSPORTATION)
    pool = generate_candidates(tree, catalog, _query(party_size=2), MockBackend(), 100_000, 10)
    ids = [c.subplan.resource_ids for c in pool.candidates]
    assert ("O1", "B1") in ids and ("O2", "B2") in ids
    first = pool.candidates[0].subplan
    assert [e.day for e in first.entries] == [1, 2]
    assert all(e.quantity == 2 for e in first.entries)


def test_accommodation_empty_for_day_trip(catalog):
    tree = BehaviorTree.standard(TaskKind.ACCOMMODATION)
    pool = generate_candidates(
        tree, catalog, _query(end_date="2026-09-10"), MockBackend(), 1000, 5
    )
    assert len(pool.candidates) == 1
    assert pool.candidates[0].subplan.entries == ()


def test_dining_cycles_when_supply_is_short(catalog):
    # 8 restaurants for a 3-day trip: 9 slots, so the cheapest cycle fills in
    tree = BehaviorTree.standard(TaskKind.DINING)
    query = _query(end_date="2026-09-12")
    pool = generate_candidates(tree, catalog, query, MockBackend(), 100_000, 5)
    assert len(pool.candidates) == 1
    ids = pool.candidates[0].subplan.resource_ids
    assert len(ids) == 9
    assert ids[:8] == tuple(f"R{i}" for i in range(1, 9)) and ids[8] == "R1"


def test_dining_distinct_combinations_when_supply_allows(catalog):
    tree = BehaviorTree.standard(TaskKind.DINING)
    pool = generate_candidates(tree, catalog, _query(), MockBackend(), 100_000, 5)
    for cand in pool.candidates:
        ids = cand.subplan.resource_ids
        assert len(ids) == 6 == len(set(ids))


def test_attraction_quantities_follow_the_switch(catalog):
    tree = BehaviorTree.standard(TaskKind.ATTRACTIONS)
    per_person = generate_candidates(
        tree, catalog, _query(party_size=3), MockBackend(), 100_000, 5,
        attractions_per_person=True,
    )
    assert all(
        e.quantity == 3 for c in per_person.candidates for e in c.subplan.entries
    )
    per_party = generate_candidates(
        tree, catalog, _query(party_size=3), MockBackend(), 100_000, 5,
        attractions_per_person=False,
    )
    assert all(e.quantity == 1 for c in per_party.candidates for e in c.subplan.entries)


def test_pool_keeps_only_fitting_candidates_when_any_fits(catalog):
    tree = BehaviorTree.standard(TaskKind.TRANSPORTATION)
    pool = generate_candidates(tree, catalog, _query(), MockBackend(), 200, 10)
    assert [c.subplan.resource_ids for c in pool.candidates] == [("O1", "B1")]
    assert not pool.candidates[0].over_hint


def test_pool_falls_back_to_cheapest_when_nothing_fits(catalog):
    tree = BehaviorTree.standard(TaskKind.TRANSPORTATION)
    pool = generate_candidates(tree, catalog, _query(), MockBackend(), 10, 2)
    assert len(pool.candidates) == 2
    assert all(c.over_hint for c in pool.candidates)
    costs = [c.cost for c in pool.candidates]
    assert costs == sorted(costs)
    assert pool.candidates[0].subplan.resource_ids == ("O1", "B1")


def test_backend_advice_prioritizes_pool_membership(catalog):
    # the backend pushes the most expensive pair; it must enter the pool
    advice = MockRule(pattern="PROPOSE CANDIDATES", response='["O2", "B2"]')
    tree = BehaviorTree.standard(TaskKind.TRANSPORTATION)
    pool = generate_candidates(
        tree, catalog, _query(), MockBackend(rules=[advice]), 100_000, 1
    )
    assert [c.subplan.resource_ids for c in pool.candidates] == [("O2", "B2")]


def test_bad_advice_is_ignored(catalog):
    garbage = MockRule(pattern="PROPOSE CANDIDATES", response="not a json array")
    tree = BehaviorTree.standard(TaskKind.TRANSPORTATION)
    pool = generate_candidates(
        tree, catalog, _query(), MockBackend(rules=[garbage]), 100_000, 2
    )
    assert len(pool.candidates) == 2  # systematic enumeration still fills the pool


def test_generate_rejects_nonpositive_k(catalog):
    tree = BehaviorTree.standard(TaskKind.DINING)
    with pytest.raises(ValueError):
        generate_candidates(tree, catalog, _query(), MockBackend(), 100, 0)


def test_rerank_orders_by_score_then_id(catalog):
    tree = BehaviorTree.standard(TaskKind.ACCOMMODATION)
    soft = Constraint(
        id="s",
        kind=ConstraintKind.ROOM_TYPE,
        severity=Severity.SOFT,
        payload={"room_type": "entire_home"},
    )
    tree = BehaviorTree.standard(TaskKind.ACCOMMODATION, (soft,))
    pool = generate_candidates(tree, catalog, _query(), MockBackend(), 1000, 5)
    ranked = rerank(pool, HeuristicWeights())
    # H1 is pricier but satisfies the soft preference: 0.5*(1-70/1000)+0.3
    # beats 0.5*(1-50/1000)
    assert [c.subplan.resource_ids[0] for c in ranked.candidates] == ["H1", "H2"]
    scores = [c.score for c in ranked.candidates]
    assert scores == sorted(scores, reverse=True)


def test_rerank_with_zero_weights_is_stable_by_id(catalog):
    tree = BehaviorTree.standard(TaskKind.ATTRACTIONS)
    pool = generate_candidates(tree, catalog, _query(), MockBackend(), 100_000, 5)
    ranked = rerank(pool, HeuristicWeights.zero())
    ids = [c.first_resource_id for c in ranked.candidates]
    assert ids == sorted(ids)


def test_next_candidate_walks_then_exhausts(catalog):
    tree = BehaviorTree.standard(TaskKind.ACCOMMODATION)
    pool = generate_candidates(tree, catalog, _query(), MockBackend(), 1000, 5)
    first = next_candidate(pool)
    second = next_candidate(pool)
    assert first.resource_ids != second.resource_ids
    assert next_candidate(pool) is EXHAUSTED
    assert pool.exhausted


def test_empty_pool_reports_exhausted_immediately():
    pool = CandidatePool(candidates=[], budget_hint=10)
    assert next_candidate(pool) is EXHAUSTED
