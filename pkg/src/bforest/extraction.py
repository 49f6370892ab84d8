"""Turn a query into structured constraints and a forest layout.

Constraint routing is a static table rather than a generative call: every
constraint kind has a fixed task affinity, which keeps the partition
deterministic and testable.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from itertools import combinations

import jsonschema

from .domain import (
    Constraint,
    ConstraintKind,
    ConstraintSet,
    DependencyEdge,
    KIND_ROUTING,
    Query,
    Severity,
    TASK_ORDER,
    TaskKind,
    partition_constraints,
)
from .llm import LlmBackend, TokenUsage


class UnroutableConstraint(ValueError):
    """A constraint kind outside the routing table."""


class MalformedExtraction(RuntimeError):
    """Backend output failed schema validation twice in a row."""


_KIND_VALUES = sorted(k.value for k in ConstraintKind)

EXTRACTION_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "Constraint extraction output",
    "type": "object",
    "properties": {
        "constraints": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "kind": {"type": "string", "enum": _KIND_VALUES},
                    "severity": {"type": "string", "enum": ["hard", "soft"]},
                    "payload": {"type": "object"},
                },
                "required": ["kind", "payload"],
                "additionalProperties": False,
            },
        }
    },
    "required": ["constraints"],
    "additionalProperties": False,
}

_JSON_BLOCK = re.compile(r"\{.*\}", re.DOTALL)


def load_prompt(name: str) -> str:
    return resources.files("bforest").joinpath(f"prompts/{name}.txt").read_text(encoding="utf-8")


def _parse_json_object(text: str) -> dict:
    match = _JSON_BLOCK.search(text)
    if match is None:
        raise ValueError("no JSON object in backend reply")
    return json.loads(match.group(0))


def parse_query(query: Query, backend: LlmBackend, usage: TokenUsage | None = None) -> ConstraintSet:
    """Extract structured constraints from the query text.

    The returned set always contains the global budget constraint taken
    from the structured budget field; structured fields override anything
    the backend may claim. One automatic re-prompt on schema failure.
    """
    template = load_prompt("extract")
    prompt = template.replace("{query_text}", query.text)
    last_error: Exception | None = None
    doc: dict | None = None
    for attempt in range(2):
        if attempt:
            prompt = prompt + (
                "\nYour previous reply was not valid."
                " Return only a JSON object matching the schema."
            )
        text, used = backend.complete(prompt)
        if usage is not None:
            usage.add(used)
        try:
            candidate = _parse_json_object(text)
            jsonschema.validate(candidate, EXTRACTION_SCHEMA)
            doc = candidate
            break
        except (ValueError, jsonschema.ValidationError) as exc:
            last_error = exc
    if doc is None:
        raise MalformedExtraction(f"extraction output failed validation twice: {last_error}")

    constraints: list[Constraint] = [
        Constraint(
            id="budget",
            kind=ConstraintKind.BUDGET,
            severity=Severity.HARD,
            payload={"amount": query.budget},
        )
    ]
    counter: dict[str, int] = {}
    for entry in doc["constraints"]:
        kind = ConstraintKind(entry["kind"])
        if kind is ConstraintKind.BUDGET:
            continue  # the structured budget field wins
        counter[kind.value] = counter.get(kind.value, 0) + 1
        constraints.append(
            Constraint(
                id=f"x-{kind.value}-{counter[kind.value]}",
                kind=kind,
                severity=Severity(entry.get("severity", "hard")),
                payload=dict(entry["payload"]),
            )
        )
    return decouple_constraints(constraints)


def decouple_tasks(query: Query) -> list[TaskKind]:
    """The fixed four-way decomposition; every query gets all four tasks."""
    return list(TASK_ORDER)


def decouple_constraints(all_constraints: list[Constraint] | tuple[Constraint, ...]) -> ConstraintSet:
    """Partition constraints into per-task locals and globals."""
    for c in all_constraints:
        if c.kind not in KIND_ROUTING:
            raise UnroutableConstraint(f"constraint {c.id} has unknown kind {c.kind!r}")
    return partition_constraints(list(all_constraints))


@dataclass(frozen=True)
class TreeSpec:
    task: TaskKind
    locals: tuple[Constraint, ...]


@dataclass(frozen=True)
class ForestSpec:
    trees: tuple[TreeSpec, ...]
    globals: tuple[Constraint, ...]
    dependency_edges: tuple[DependencyEdge, ...]


def build_forest(query: Query, cs: ConstraintSet) -> ForestSpec:
    """One tree per task, all pairs linked through the shared budget."""
    tasks = decouple_tasks(query)
    trees = tuple(TreeSpec(task=t, locals=cs.locals_for(t)) for t in tasks)
    edges = tuple(DependencyEdge(a, b, 1.0) for a, b in combinations(tasks, 2))
    return ForestSpec(trees=trees, globals=cs.globals, dependency_edges=edges)
