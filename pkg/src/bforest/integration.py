"""Merge the four task subplans into one day-indexed itinerary."""

from __future__ import annotations

from typing import Iterable, Mapping

from .domain import (
    Constraint,
    ConstraintKind,
    DayEntry,
    Plan,
    Query,
    SubPlan,
    TaskKind,
)


class InconsistentSubplans(ValueError):
    """Day coverage cannot be satisfied from the given subplans."""


def integrate(
    subplans: Mapping[TaskKind, SubPlan],
    query: Query,
    constraints: Iterable[Constraint] | None = None,
) -> Plan:
    """Deterministic assembly: outbound transport on day 1, return on the
    final day, accommodation on every night, three meals a day in entry
    order, attractions placed on the day each entry names.
    """
    n = query.days
    nights = query.nights
    transport = subplans.get(TaskKind.TRANSPORTATION, SubPlan.empty(TaskKind.TRANSPORTATION))
    lodging = subplans.get(TaskKind.ACCOMMODATION, SubPlan.empty(TaskKind.ACCOMMODATION))
    dining = subplans.get(TaskKind.DINING, SubPlan.empty(TaskKind.DINING))
    attractions = subplans.get(TaskKind.ATTRACTIONS, SubPlan.empty(TaskKind.ATTRACTIONS))

    legs_by_day: dict[int, list[str]] = {}
    for entry in transport.entries:
        legs_by_day.setdefault(entry.day, []).append(entry.resource_id)
    if n >= 1 and not legs_by_day.get(1):
        raise InconsistentSubplans("no outbound transport entry for day 1")
    if not legs_by_day.get(n):
        raise InconsistentSubplans(f"no return transport entry for day {n}")

    hotel_by_day: dict[int, str] = {}
    for entry in lodging.entries:
        if entry.day in hotel_by_day:
            raise InconsistentSubplans(f"two accommodation entries for night {entry.day}")
        hotel_by_day[entry.day] = entry.resource_id
    if nights >= 1:
        missing = [d for d in range(1, nights + 1) if d not in hotel_by_day]
        if missing:
            raise InconsistentSubplans(f"no accommodation entry for night {missing[0]}")
    elif lodging.entries:
        raise InconsistentSubplans("accommodation entries on a trip with no nights")

    slots = 3 * n
    meals = list(dining.entries)
    if len(meals) < slots:
        want_distinct = any(
            c.kind is ConstraintKind.DIVERSE_RESTAURANTS for c in (constraints or ())
        )
        qualifier = "distinct restaurants" if want_distinct else "meal entries"
        raise InconsistentSubplans(
            f"{len(meals)} {qualifier} cannot cover {slots} meal slots"
        )
    meals = meals[:slots]

    attr_by_day: dict[int, list[str]] = {}
    for entry in attractions.entries:
        attr_by_day.setdefault(entry.day, []).append(entry.resource_id)
    missing_days = [d for d in range(1, n + 1) if not attr_by_day.get(d)]
    if missing_days:
        raise InconsistentSubplans(f"no attraction entry for day {missing_days[0]}")

    days = []
    for d in range(1, n + 1):
        base = (d - 1) * 3
        days.append(
            DayEntry(
                day=d,
                breakfast=meals[base].resource_id,
                lunch=meals[base + 1].resource_id,
                dinner=meals[base + 2].resource_id,
                attractions=tuple(attr_by_day.get(d, [])),
                accommodation=hotel_by_day.get(d),
                transport_legs=tuple(legs_by_day.get(d, [])),
            )
        )
    return Plan.build(
        query_id=query.id,
        days=days,
        subplans={
            TaskKind.TRANSPORTATION: transport,
            TaskKind.ACCOMMODATION: lodging,
            TaskKind.DINING: dining,
            TaskKind.ATTRACTIONS: attractions,
        },
    )
