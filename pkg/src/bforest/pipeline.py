"""End-to-end orchestration: parse, decouple, plan, coordinate, integrate.

plan() never raises: every failure path lands in a Failed result with a
reason string, so batch callers can keep going and the delivery rate
stays meaningful.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Any, Mapping

from .btree import BehaviorTree
from .catalog import Catalog
from .config import EngineConfig
from .coordination import GlobalState, allocate_budget, coordinate
from .domain import ConstraintSet, Plan, Query, canonical_json
from .extraction import MalformedExtraction, build_forest, load_prompt, parse_query
from .integration import InconsistentSubplans, integrate  # re-exported: part of this stage
from .llm import BackendError, LlmBackend, TokenUsage

__all__ = [
    "PlanResult",
    "plan",
    "integrate",
    "InconsistentSubplans",
]

DELIVERED = "delivered"
FAILED = "failed"


@dataclass(frozen=True)
class PlanResult:
    query_id: str
    status: str
    reason: str
    plan: Plan | None
    rounds_used: int
    violation_trace: tuple[dict, ...]
    token_usage: TokenUsage
    wall_time_s: float
    mode: str
    ablations: tuple[str, ...]
    constraint_set: dict | None = None
    llm_review: str | None = None

    @property
    def delivered(self) -> bool:
        return self.status == DELIVERED

    def to_doc(self) -> dict:
        return {
            "query_id": self.query_id,
            "status": self.status,
            "reason": self.reason,
            "plan": self.plan.to_doc() if self.plan else None,
            "rounds_used": self.rounds_used,
            "violation_trace": list(self.violation_trace),
            "token_usage": self.token_usage.to_doc(),
            "wall_time_s": self.wall_time_s,
            "mode": self.mode,
            "ablations": list(self.ablations),
            "constraint_set": self.constraint_set,
            "llm_review": self.llm_review,
        }

    def comparable_doc(self) -> dict:
        """The result minus run parameters that legitimately differ.

        Wall time is never deterministic and mode is an input, not an
        output; everything else must match between parallel and
        sequential runs of the same query.
        """
        doc = self.to_doc()
        doc.pop("wall_time_s")
        doc.pop("mode")
        return doc

    def comparable_json(self) -> str:
        return canonical_json(self.comparable_doc())

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "PlanResult":
        return cls(
            query_id=doc["query_id"],
            status=doc["status"],
            reason=doc.get("reason", ""),
            plan=Plan.from_doc(doc["plan"]) if doc.get("plan") else None,
            rounds_used=int(doc.get("rounds_used", 0)),
            violation_trace=tuple(doc.get("violation_trace", [])),
            token_usage=TokenUsage.from_doc(doc.get("token_usage", {})),
            wall_time_s=float(doc.get("wall_time_s", 0.0)),
            mode=doc.get("mode", "parallel"),
            ablations=tuple(doc.get("ablations", [])),
            constraint_set=doc.get("constraint_set"),
            llm_review=doc.get("llm_review"),
        )


def _failed(
    query: Query,
    reason: str,
    meter: TokenUsage,
    started: float,
    config: EngineConfig,
    cs: ConstraintSet | None,
    rounds_used: int = 0,
    trace: tuple[dict, ...] = (),
) -> PlanResult:
    return PlanResult(
        query_id=query.id,
        status=FAILED,
        reason=reason,
        plan=None,
        rounds_used=rounds_used,
        violation_trace=trace,
        token_usage=meter,
        wall_time_s=time.perf_counter() - started,
        mode=config.mode,
        ablations=tuple(sorted(config.ablations)),
        constraint_set=cs.to_doc() if cs else None,
    )


def plan(query: Query, catalog: Catalog, backend: LlmBackend, config: EngineConfig) -> PlanResult:
    """Plan one query end to end; returns a result, never raises."""
    started = time.perf_counter()
    meter = TokenUsage()
    cs: ConstraintSet | None = None
    try:
        cs = parse_query(query, backend, usage=meter)
        forest = build_forest(query, cs)
        trees = [BehaviorTree.standard(spec.task, spec.locals) for spec in forest.trees]
        state = GlobalState(
            total_budget=query.budget,
            allocations=allocate_budget(
                query.budget, [spec.task for spec in forest.trees], config.budget_shares
            ),
            edges=forest.dependency_edges,
            max_rounds=config.max_rounds,
        )
        outcome = coordinate(
            trees, state, catalog, query, backend, forest.globals, config, usage=meter
        )
    except BackendError as exc:
        return _failed(query, f"backend: {exc}", meter, started, config, cs)
    except MalformedExtraction as exc:
        return _failed(query, f"extraction: {exc}", meter, started, config, cs)
    except Exception as exc:  # contract: all failure paths land in Failed
        return _failed(query, f"error: {type(exc).__name__}: {exc}", meter, started, config, cs)

    if outcome.plan is None:
        return _failed(
            query,
            f"unsat: {outcome.reason}",
            meter,
            started,
            config,
            cs,
            rounds_used=outcome.rounds_used,
            trace=outcome.trace,
        )

    review: str | None = None
    if config.llm_verify:
        try:
            prompt = (
                load_prompt("verify")
                .replace("{plan_json}", canonical_json(outcome.plan.to_doc()))
                .replace("{query_text}", query.text)
            )
            review, used = backend.complete(prompt)
            meter.add(used)
        except BackendError:
            review = None  # advisory only, never affects the outcome

    return PlanResult(
        query_id=query.id,
        status=DELIVERED,
        reason="",
        plan=outcome.plan,
        rounds_used=outcome.rounds_used,
        violation_trace=outcome.trace,
        token_usage=meter,
        wall_time_s=time.perf_counter() - started,
        mode=config.mode,
        ablations=tuple(sorted(config.ablations)),
        constraint_set=cs.to_doc(),
        llm_review=review,
    )
