"""Plan one trip end to end and print the day-by-day result.

Run from the repository root:

    python3 demos/03_plan_trip.py
"""

import json
from pathlib import Path

from bforest.catalog import load_catalog_doc
from bforest.config import EngineConfig
from bforest.domain import Query
from bforest.llm import MockBackend
from bforest.pipeline import plan

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


def show(result) -> None:
    if not result.delivered:
        print(f"{result.query_id}: no plan ({result.reason})")
        for entry in result.violation_trace:
            kinds = [v["kind"] for v in entry["violations"]]
            print(f"  round {entry['round']}: tried {entry['combination']} -> {kinds}")
        return
    p = result.plan
    print(f"{result.query_id}: delivered in {result.rounds_used} round(s), total {p.total_cost}")
    for day in p.days:
        print(f"  day {day.day}:")
        if day.transport_legs:
            print(f"    travel: {', '.join(day.transport_legs)}")
        for slot in ("breakfast", "lunch", "dinner"):
            meal = getattr(day, slot)
            if meal:
                print(f"    {slot}: {meal}")
        if day.attractions:
            print(f"    visit: {', '.join(day.attractions)}")
        if day.accommodation:
            print(f"    sleep: {day.accommodation}")


def main() -> None:
    catalog = load_catalog_doc(json.loads((FIXTURES / "tiny.json").read_text()))
    backend = MockBackend()

    # A family trip with preferences in the free text. Extraction turns
    # the text into structured constraints before any tree runs.
    query = Query.from_doc(json.loads((FIXTURES / "queries" / "q-family.json").read_text()))
    print(f"query text: {query.text!r}")
    print(f"budget: {query.budget}\n")
    result = plan(query, catalog, backend, EngineConfig())
    show(result)

    kinds = [c["kind"] for c in result.constraint_set["constraints"]]
    print(f"\nconstraints in play: {kinds}")
    print(f"backend calls: {result.token_usage.call_count}")

    # Same catalog, but a budget below the cheapest combination. The
    # coordinator burns its rounds, attributes every failure to the
    # budget, and reports failure instead of overspending.
    print()
    broke = Query.from_doc(json.loads((FIXTURES / "queries" / "q-broke.json").read_text()))
    show(plan(broke, catalog, backend, EngineConfig()))


if __name__ == "__main__":
    main()
