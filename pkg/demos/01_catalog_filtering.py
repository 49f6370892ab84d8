"""Load a catalog and watch hard local constraints narrow each task's options.

Run from the repository root:

    python3 demos/01_catalog_filtering.py
"""

import json
from pathlib import Path

from bforest.catalog import CatalogError, filter_options, load_catalog_doc
from bforest.domain import Constraint, ConstraintKind, Query, Severity, TaskKind

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


def main() -> None:
    doc = json.loads((FIXTURES / "tiny.json").read_text())
    catalog = load_catalog_doc(doc)
    print("catalog loaded:")
    print(f"  {len(catalog.transport)} transport legs")
    print(f"  {len(catalog.accommodations)} accommodations")
    print(f"  {len(catalog.dining)} restaurants")
    print(f"  {len(catalog.attractions)} attractions")

    query = Query.from_doc(json.loads((FIXTURES / "queries" / "q-pair.json").read_text()))
    print(f"\nquery {query.id}: {query.origin} -> {query.destination}, "
          f"{query.start_date} to {query.end_date}, party of {query.party_size}")

    # With no locals the window filter alone applies: right cities, right
    # dates, enough seats or beds for the whole party.
    legs = filter_options(catalog, TaskKind.TRANSPORTATION, query, [])
    print(f"\ntransport options in the travel window: {[o.id for o in legs]}")

    # A hard transportation constraint removes whole modes before any
    # scoring happens. Soft preferences never filter; they only rerank.
    train_only = Constraint(
        id="demo-train",
        kind=ConstraintKind.TRANSPORTATION,
        severity=Severity.HARD,
        payload={"allowed": ["train"]},
    )
    legs = filter_options(catalog, TaskKind.TRANSPORTATION, query, [train_only])
    print(f"with a train-only constraint:           {[o.id for o in legs]}")

    rooms = filter_options(catalog, TaskKind.ACCOMMODATION, query, [])
    print(f"\naccommodations fitting the party:       {[o.id for o in rooms]}")
    entire = Constraint(
        id="demo-home",
        kind=ConstraintKind.ROOM_TYPE,
        severity=Severity.HARD,
        payload={"room_type": "entire_home"},
    )
    rooms = filter_options(catalog, TaskKind.ACCOMMODATION, query, [entire])
    print(f"restricted to entire homes:             {[o.id for o in rooms]}")

    # An empty result is a signal, not an error: it means this task is
    # locally infeasible and the coordinator should hear about it.
    impossible = Constraint(
        id="demo-none",
        kind=ConstraintKind.CUISINE,
        severity=Severity.HARD,
        payload={"cuisines": ["molecular"]},
    )
    tables = filter_options(catalog, TaskKind.DINING, query, [impossible])
    print(f"\nrestaurants serving 'molecular':        {tables} (empty means infeasible)")

    # Catalog validation is strict on the way in.
    try:
        load_catalog_doc({"schema": 999})
    except CatalogError as exc:
        print(f"\nbad catalog document rejected: {exc}")


if __name__ == "__main__":
    main()
