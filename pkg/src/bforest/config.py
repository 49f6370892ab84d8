"""Engine configuration: flat key-value JSON document, flag-overridable."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from .btree import HeuristicWeights
from .domain import TASK_ORDER, TaskKind
from .llm import HttpBackend, LlmBackend, MockBackend, load_mock_rules

ABLATIONS = ("no_coordination", "no_rerank", "no_heuristic")


class ConfigError(ValueError):
    pass


def default_budget_shares() -> dict[TaskKind, Fraction]:
    return {
        TaskKind.TRANSPORTATION: Fraction(30, 100),
        TaskKind.ACCOMMODATION: Fraction(35, 100),
        TaskKind.DINING: Fraction(20, 100),
        TaskKind.ATTRACTIONS: Fraction(15, 100),
    }


@dataclass(frozen=True)
class EngineConfig:
    max_rounds: int = 3
    pool_size: int = 5
    budget_shares: Mapping[TaskKind, Fraction] = field(default_factory=default_budget_shares)
    heuristic_weights: HeuristicWeights = field(default_factory=HeuristicWeights)
    backend_retries: int = 3
    regenerations_per_tree: int = 3
    attractions_per_person: bool = True
    mode: str = "parallel"
    ablations: frozenset[str] = frozenset()
    jobs: int | None = None
    llm_verify: bool = False

    def __post_init__(self) -> None:
        if self.mode not in ("parallel", "sequential"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        unknown = set(self.ablations) - set(ABLATIONS)
        if unknown:
            raise ConfigError(f"unknown ablation toggles: {sorted(unknown)}")
        if sum(self.budget_shares.values()) != 1:
            raise ConfigError("budget_shares must sum to exactly 1")
        if self.max_rounds < 1 or self.pool_size < 1:
            raise ConfigError("max_rounds and pool_size must be positive")

    def effective_weights(self) -> HeuristicWeights:
        if "no_heuristic" in self.ablations:
            return HeuristicWeights.zero()
        return self.heuristic_weights

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "EngineConfig":
        shares = default_budget_shares()
        for key, value in doc.get("budget_shares", {}).items():
            shares[TaskKind(key)] = Fraction(str(value))
        if set(shares) != set(TASK_ORDER):
            raise ConfigError("budget_shares must name exactly the four tasks")
        return cls(
            max_rounds=int(doc.get("max_rounds", 3)),
            pool_size=int(doc.get("pool_size", 5)),
            budget_shares=shares,
            heuristic_weights=HeuristicWeights.from_doc(doc.get("heuristic_weights", {})),
            backend_retries=int(doc.get("backend_retries", 3)),
            regenerations_per_tree=int(doc.get("regenerations_per_tree", 3)),
            attractions_per_person=bool(doc.get("attractions_per_person", True)),
            mode=str(doc.get("mode", "parallel")),
            ablations=frozenset(doc.get("ablations", [])),
            jobs=doc.get("jobs"),
            llm_verify=bool(doc.get("llm_verify", False)),
        )

    def with_overrides(self, **kwargs) -> "EngineConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs) if kwargs else self


def load_config(path: str | Path | None) -> dict:
    """The raw config document; engine and backend sections live side by side."""
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load config {path}: {exc}") from exc


def make_backend(backend_doc: Mapping[str, Any], latency_ms: float | None = None) -> LlmBackend:
    """Build the backend named by a config's "backend" section.

    An empty section means a plain deterministic mock. latency_ms, when
    given, overrides whatever the section says (bench injects it).
    """
    kind = backend_doc.get("kind", "mock")
    if kind == "mock":
        rules_path = backend_doc.get("rules")
        rules = load_mock_rules(rules_path) if rules_path else []
        return MockBackend(
            rules=rules,
            seed=int(backend_doc.get("seed", 0)),
            latency_ms=latency_ms if latency_ms is not None else backend_doc.get("latency_ms", 0),
            retry_limit=int(backend_doc.get("retry_limit", 3)),
        )
    if kind == "http":
        if "endpoint" not in backend_doc or "model" not in backend_doc:
            raise ConfigError("http backend needs endpoint and model")
        return HttpBackend(
            endpoint=backend_doc["endpoint"],
            model=backend_doc["model"],
            api_key_env=backend_doc.get("api_key_env", "BFOREST_API_KEY"),
            temperature=float(backend_doc.get("temperature", 0.7)),
            timeout=float(backend_doc.get("timeout_s", 30.0)),
            retry_limit=int(backend_doc.get("retry_limit", 3)),
            max_in_flight=int(backend_doc.get("max_in_flight", 8)),
        )
    raise ConfigError(f"unknown backend kind {kind!r}")
