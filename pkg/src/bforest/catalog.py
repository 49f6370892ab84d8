"""The resource sandbox: every plan element must come from here.

A catalog is one JSON file with four arrays (transport, accommodations,
dining, attractions) and a schema version field. A CSV import shim maps
a directory of per-category CSV files onto the same structure.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Any, Iterable, Mapping

from .domain import (
    Constraint,
    ConstraintKind,
    Money,
    Query,
    Scope,
    Severity,
    TaskKind,
)

SCHEMA_VERSION = 1


class CatalogError(ValueError):
    """Catalog file is unreadable or violates the documented schema."""


class DuplicateId(CatalogError):
    pass


class NegativePrice(CatalogError):
    pass


@dataclass(frozen=True)
class TransportOption:
    id: str
    origin: str
    destination: str
    mode: str
    depart_date: date
    arrive_date: date
    price: Money


@dataclass(frozen=True)
class Accommodation:
    id: str
    city: str
    name: str
    price_per_night: Money
    room_type: str
    house_rules: tuple[str, ...]
    min_nights: int
    max_occupancy: int


@dataclass(frozen=True)
class Restaurant:
    id: str
    city: str
    name: str
    cuisines: tuple[str, ...]
    avg_cost: Money
    rating: float


@dataclass(frozen=True)
class Attraction:
    id: str
    city: str
    name: str
    price: Money


@dataclass(frozen=True)
class Catalog:
    transport: tuple[TransportOption, ...]
    accommodations: tuple[Accommodation, ...]
    dining: tuple[Restaurant, ...]
    attractions: tuple[Attraction, ...]
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        index: dict[TaskKind, dict[str, Any]] = {}
        for task, rows in (
            (TaskKind.TRANSPORTATION, self.transport),
            (TaskKind.ACCOMMODATION, self.accommodations),
            (TaskKind.DINING, self.dining),
            (TaskKind.ATTRACTIONS, self.attractions),
        ):
            by_id: dict[str, Any] = {}
            for row in rows:
                if row.id in by_id:
                    raise DuplicateId(f"duplicate {task.value} id {row.id!r}")
                by_id[row.id] = row
            index[task] = by_id
        self._index.update(index)

    def resolve(self, task: TaskKind, resource_id: str):
        """Look up a resource id within its category; None when absent."""
        return self._index[task].get(resource_id)

    def options_for(self, task: TaskKind) -> tuple:
        return {
            TaskKind.TRANSPORTATION: self.transport,
            TaskKind.ACCOMMODATION: self.accommodations,
            TaskKind.DINING: self.dining,
            TaskKind.ATTRACTIONS: self.attractions,
        }[task]


def _require(doc: Mapping[str, Any], key: str, where: str) -> Any:
    if key not in doc:
        raise CatalogError(f"{where}: missing field {key!r}")
    return doc[key]


def _price(doc: Mapping[str, Any], key: str, where: str) -> Money:
    value = int(_require(doc, key, where))
    if value < 0:
        raise NegativePrice(f"{where}: {key} is negative ({value})")
    return value


def load_catalog_doc(doc: Mapping[str, Any]) -> Catalog:
    """Build a validated Catalog from an already-parsed JSON document."""
    if doc.get("schema") != SCHEMA_VERSION:
        raise CatalogError(f"unsupported or missing schema version: {doc.get('schema')!r}")
    transport = []
    for i, row in enumerate(doc.get("transport", [])):
        where = f"transport[{i}]"
        transport.append(
            TransportOption(
                id=str(_require(row, "id", where)),
                origin=str(_require(row, "origin", where)),
                destination=str(_require(row, "destination", where)),
                mode=str(row.get("mode", "flight")),
                depart_date=date.fromisoformat(_require(row, "depart_date", where)),
                arrive_date=date.fromisoformat(row.get("arrive_date", _require(row, "depart_date", where))),
                price=_price(row, "price", where),
            )
        )
    accommodations = []
    for i, row in enumerate(doc.get("accommodations", [])):
        where = f"accommodations[{i}]"
        min_nights = int(row.get("min_nights", 1))
        if min_nights < 1:
            raise CatalogError(f"{where}: min_nights must be at least 1")
        accommodations.append(
            Accommodation(
                id=str(_require(row, "id", where)),
                city=str(_require(row, "city", where)),
                name=str(row.get("name", row["id"])),
                price_per_night=_price(row, "price_per_night", where),
                room_type=str(row.get("room_type", "entire_home")),
                house_rules=tuple(row.get("house_rules", [])),
                min_nights=min_nights,
                max_occupancy=int(row.get("max_occupancy", 2)),
            )
        )
    dining = []
    for i, row in enumerate(doc.get("dining", [])):
        where = f"dining[{i}]"
        dining.append(
            Restaurant(
                id=str(_require(row, "id", where)),
                city=str(_require(row, "city", where)),
                name=str(row.get("name", row["id"])),
                cuisines=tuple(row.get("cuisines", [])),
                avg_cost=_price(row, "avg_cost", where),
                rating=float(row.get("rating", 0.0)),
            )
        )
    attractions = []
    for i, row in enumerate(doc.get("attractions", [])):
        where = f"attractions[{i}]"
        attractions.append(
            Attraction(
                id=str(_require(row, "id", where)),
                city=str(_require(row, "city", where)),
                name=str(row.get("name", row["id"])),
                price=_price(row, "price", where),
            )
        )
    return Catalog(
        transport=tuple(transport),
        accommodations=tuple(accommodations),
        dining=tuple(dining),
        attractions=tuple(attractions),
    )


def load_catalog(path: str | Path) -> Catalog:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CatalogError(f"cannot read catalog {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CatalogError(
            f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return load_catalog_doc(doc)


def _hard(constraints: Iterable[Constraint], kind: ConstraintKind) -> Constraint | None:
    for c in constraints:
        if c.kind is kind and c.severity is Severity.HARD:
            return c
    return None


def _mode_allowed(mode: str, constraint: Constraint | None) -> bool:
    if constraint is None:
        return True
    allowed = constraint.payload.get("allowed")
    forbidden = constraint.payload.get("forbidden", [])
    if allowed is not None and mode not in allowed:
        return False
    return mode not in forbidden


def filter_options(
    catalog: Catalog,
    task: TaskKind,
    query: Query,
    locals_: list[Constraint] | tuple[Constraint, ...],
) -> list:
    """All options consistent with the query window and every hard local.

    Soft constraints never filter; they are scored later during rerank.
    An empty result is meaningful: it signals local infeasibility.
    """
    for c in locals_:
        if c.scope is not Scope.LOCAL or c.task is not task:
            raise ValueError(f"constraint {c.id} is not local to {task.value}")

    if task is TaskKind.TRANSPORTATION:
        mode_c = _hard(locals_, ConstraintKind.TRANSPORTATION)
        out = [
            o
            for o in catalog.transport
            if o.origin == query.origin
            and o.destination == query.destination
            and o.depart_date == query.start_date
            and _mode_allowed(o.mode, mode_c)
        ]
        back = [
            o
            for o in catalog.transport
            if o.origin == query.destination
            and o.destination == query.origin
            and o.depart_date == query.end_date
            and _mode_allowed(o.mode, mode_c)
        ]
        return sorted(out, key=lambda o: o.id) + sorted(back, key=lambda o: o.id)

    if task is TaskKind.ACCOMMODATION:
        rule_c = _hard(locals_, ConstraintKind.ROOM_RULE)
        type_c = _hard(locals_, ConstraintKind.ROOM_TYPE)
        kept = []
        for h in catalog.accommodations:
            if h.city != query.destination:
                continue
            if h.max_occupancy < query.party_size:
                continue
            # a stay shorter than the house minimum is a date-window mismatch
            if query.nights >= 1 and h.min_nights > query.nights:
                continue
            if rule_c is not None:
                required = set(rule_c.payload.get("rules", []))
                if not required <= set(h.house_rules):
                    continue
            if type_c is not None:
                allowed_types = type_c.payload.get("room_types")
                if allowed_types is None:
                    allowed_types = [type_c.payload.get("room_type")]
                if h.room_type not in allowed_types:
                    continue
            kept.append(h)
        return sorted(kept, key=lambda h: h.id)

    if task is TaskKind.DINING:
        cuisine_c = _hard(locals_, ConstraintKind.CUISINE)
        rating_c = _hard(locals_, ConstraintKind.MIN_RATING)
        kept = []
        for r in catalog.dining:
            if r.city != query.destination:
                continue
            if cuisine_c is not None:
                # cuisine names compare case-insensitively: extracted text
                # casing is not under our control
                wanted = {c.casefold() for c in cuisine_c.payload.get("cuisines", [])}
                if wanted and not wanted & {c.casefold() for c in r.cuisines}:
                    continue
            if rating_c is not None and r.rating < float(rating_c.payload.get("min_rating", 0)):
                continue
            kept.append(r)
        return sorted(kept, key=lambda r: r.id)

    if task is TaskKind.ATTRACTIONS:
        return sorted(
            (a for a in catalog.attractions if a.city == query.destination),
            key=lambda a: a.id,
        )

    raise ValueError(f"unknown task {task!r}")


# ---------- CSV import shim ----------

_CSV_FILES = {
    "transport.csv": "transport",
    "accommodations.csv": "accommodations",
    "dining.csv": "dining",
    "attractions.csv": "attractions",
}

_LIST_COLUMNS = {"house_rules", "cuisines"}
_INT_COLUMNS = {"price", "price_per_night", "avg_cost", "min_nights", "max_occupancy"}
_FLOAT_COLUMNS = {"rating"}


def import_csv_dir(path: str | Path) -> dict:
    """Read per-category CSV files and return a catalog JSON document.

    List-valued cells use ';' separators; money columns are integer minor
    units, exactly as in the JSON schema.
    """
    path = Path(path)
    doc: dict[str, Any] = {"schema": SCHEMA_VERSION}
    for filename, section in _CSV_FILES.items():
        file = path / filename
        rows: list[dict] = []
        if not file.exists():
            doc[section] = rows
            continue
        with file.open(newline="", encoding="utf-8") as fh:
            for raw in csv.DictReader(fh):
                row: dict[str, Any] = {}
                for key, value in raw.items():
                    if value is None or value == "":
                        continue
                    if key in _LIST_COLUMNS:
                        row[key] = [v.strip() for v in value.split(";") if v.strip()]
                    elif key in _INT_COLUMNS:
                        row[key] = int(value)
                    elif key in _FLOAT_COLUMNS:
                        row[key] = float(value)
                    else:
                        row[key] = value
                rows.append(row)
        doc[section] = rows
    return doc


def load_catalog_csv(path: str | Path) -> Catalog:
    return load_catalog_doc(import_csv_dir(path))
