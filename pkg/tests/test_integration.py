"""Subplan merging into a day-indexed itinerary."""

import pytest

from bforest.domain import (
    Constraint,
    ConstraintKind,
    Query,
    SubPlan,
    SubPlanEntry,
    TaskKind,
)
from bforest.integration import InconsistentSubplans, integrate

T = TaskKind.TRANSPORTATION
A = TaskKind.ACCOMMODATION
D = TaskKind.DINING
AT = TaskKind.ATTRACTIONS


def _query(days=2, party=1):
    return Query.from_doc(
        {
            "id": "q",
            "text": "",
            "origin": "Arden",
            "destination": "Bellport",
            "start_date": "2026-09-10",
            "end_date": f"2026-09-{10 + days - 1:02d}",
            "party_size": party,
            "budget": 100_000,
        }
    )


def _subplans(days=2, **over):
    base = {
        T: SubPlan.build(
            T, [SubPlanEntry(1, "out", 1, 100), SubPlanEntry(days, "ret", 1, 100)]
        ),
        A: SubPlan.build(
            A, [SubPlanEntry(d, "hotel", 1, 80) for d in range(1, days)]
        )
        if days > 1
        else SubPlan.empty(A),
        D: SubPlan.build(
            D,
            [SubPlanEntry(1 + s // 3, f"meal{s}", 1, 10) for s in range(3 * days)],
        ),
        AT: SubPlan.build(
            AT, [SubPlanEntry(d, f"sight{d}", 1, 5) for d in range(1, days + 1)]
        ),
    }
    base.update(over)
    return base


def test_two_day_assembly_places_everything():
    plan = integrate(_subplans(), _query())
    assert [d.day for d in plan.days] == [1, 2]
    day1, day2 = plan.days
    assert day1.transport_legs == ("out",)
    assert day2.transport_legs == ("ret",)
    assert day1.accommodation == "hotel"
    assert day2.accommodation is None
    assert (day1.breakfast, day1.lunch, day1.dinner) == ("meal0", "meal1", "meal2")
    assert (day2.breakfast, day2.lunch, day2.dinner) == ("meal3", "meal4", "meal5")
    assert day1.attractions == ("sight1",)
    assert day2.attractions == ("sight2",)
    assert plan.total_cost == 100 + 100 + 80 + 60 + 10


def test_day_trip_puts_both_legs_on_day_one():
    subplans = _subplans(days=1)
    subplans[T] = SubPlan.build(
        T, [SubPlanEntry(1, "out", 1, 100), SubPlanEntry(1, "ret", 1, 100)]
    )
    plan = integrate(subplans, _query(days=1))
    assert len(plan.days) == 1
    assert plan.days[0].transport_legs == ("out", "ret")
    assert plan.days[0].accommodation is None


def test_missing_outbound_leg_rejected():
    subplans = _subplans()
    subplans[T] = SubPlan.build(T, [SubPlanEntry(2, "ret", 1, 100)])
    with pytest.raises(InconsistentSubplans, match="day 1"):
        integrate(subplans, _query())


def test_missing_return_leg_rejected():
    subplans = _subplans()
    subplans[T] = SubPlan.build(T, [SubPlanEntry(1, "out", 1, 100)])
    with pytest.raises(InconsistentSubplans, match="return transport entry for day 2"):
        integrate(subplans, _query())


def test_double_booked_night_rejected():
    subplans = _subplans()
    subplans[A] = SubPlan.build(
        A, [SubPlanEntry(1, "hotel", 1, 80), SubPlanEntry(1, "other", 1, 90)]
    )
    with pytest.raises(InconsistentSubplans, match="two accommodation entries"):
        integrate(subplans, _query())


def test_uncovered_night_rejected():
    subplans = _subplans(days=3)
    subplans[A] = SubPlan.build(A, [SubPlanEntry(1, "hotel", 1, 80)])
    with pytest.raises(InconsistentSubplans, match="night 2"):
        integrate(subplans, _query(days=3))


def test_hotel_entries_on_day_trip_rejected():
    subplans = _subplans(days=1)
    subplans[T] = SubPlan.build(
        T, [SubPlanEntry(1, "out", 1, 100), SubPlanEntry(1, "ret", 1, 100)]
    )
    subplans[A] = SubPlan.build(A, [SubPlanEntry(1, "hotel", 1, 80)])
    with pytest.raises(InconsistentSubplans, match="no nights"):
        integrate(subplans, _query(days=1))


def test_too_few_meals_rejected_with_plain_wording():
    subplans = _subplans()
    subplans[D] = SubPlan.build(D, [SubPlanEntry(1, "meal", 1, 10)] * 4)
    with pytest.raises(InconsistentSubplans, match="4 meal entries cannot cover 6"):
        integrate(subplans, _query())


def test_too_few_meals_names_diversity_when_demanded():
    subplans = _subplans()
    subplans[D] = SubPlan.build(D, [SubPlanEntry(1, "meal", 1, 10)] * 4)
    diverse = Constraint(
        id="cs-dr", kind=ConstraintKind.DIVERSE_RESTAURANTS, payload={}
    )
    with pytest.raises(InconsistentSubplans, match="distinct restaurants"):
        integrate(subplans, _query(), constraints=(diverse,))


def test_uncovered_attraction_day_rejected():
    subplans = _subplans()
    subplans[AT] = SubPlan.build(AT, [SubPlanEntry(1, "sight1", 1, 5)])
    with pytest.raises(InconsistentSubplans, match="no attraction entry for day 2"):
        integrate(subplans, _query())


def test_extra_meals_beyond_slots_are_dropped_in_day_grid():
    subplans = _subplans()
    subplans[D] = SubPlan.build(
        D, [SubPlanEntry(1 + s // 3, f"meal{s}", 1, 10) for s in range(8)]
    )
    plan = integrate(subplans, _query())
    served = [
        meal
        for day in plan.days
        for meal in (day.breakfast, day.lunch, day.dinner)
    ]
    assert served == [f"meal{s}" for s in range(6)]
