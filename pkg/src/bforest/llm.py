"""Generative backends: a wire-level HTTP chat client and a rule-based mock.

The engine never trusts backend output; everything a backend proposes is
re-validated downstream. The mock exists so the full engine is testable
offline and byte-for-byte deterministic.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Protocol

import httpx


class BackendError(Exception):
    """Raised when a backend cannot produce a response."""


class BackendTimeout(BackendError):
    pass


@dataclass
class TokenUsage:
    input_tokens: int = 0
    output_tokens: int = 0
    call_count: int = 0
    # accumulators are shared across planting threads
    _lock: threading.Lock = field(
        default_factory=threading.Lock, repr=False, compare=False
    )

    def add(self, other: "TokenUsage") -> None:
        with self._lock:
            self.input_tokens += other.input_tokens
            self.output_tokens += other.output_tokens
            self.call_count += other.call_count

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return TokenUsage(
            self.input_tokens + other.input_tokens,
            self.output_tokens + other.output_tokens,
            self.call_count + other.call_count,
        )

    def to_doc(self) -> dict:
        return {
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "call_count": self.call_count,
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "TokenUsage":
        return cls(
            input_tokens=int(doc.get("input_tokens", 0)),
            output_tokens=int(doc.get("output_tokens", 0)),
            call_count=int(doc.get("call_count", 0)),
        )


class LlmBackend(Protocol):
    usage: TokenUsage

    def complete(self, prompt: str) -> tuple[str, TokenUsage]: ...


def _count_tokens(text: str) -> int:
    return len(text.split())


# ---------- mock backend ----------

@dataclass
class MockRule:
    pattern: str
    response: str
    times: int | None = None  # None: unlimited


def load_mock_rules(path: str | Path) -> list[MockRule]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    rows = doc.get("rules", []) if isinstance(doc, dict) else doc
    return [
        MockRule(
            pattern=row["pattern"],
            response=row["response"],
            times=row.get("times"),
        )
        for row in rows
    ]


# Keyword table driving the mock's default constraint extraction. Each row:
# (phrases, kind, severity, payload). First phrase hit wins per (kind, key).
_KEYWORD_TABLE: tuple[tuple[tuple[str, ...], str, str, dict], ...] = (
    (("italian",), "cuisine", "hard", {"cuisines": ["Italian"]}),
    (("chinese",), "cuisine", "hard", {"cuisines": ["Chinese"]}),
    (("mexican",), "cuisine", "hard", {"cuisines": ["Mexican"]}),
    (("french",), "cuisine", "hard", {"cuisines": ["French"]}),
    (("indian",), "cuisine", "hard", {"cuisines": ["Indian"]}),
    (("mediterranean",), "cuisine", "hard", {"cuisines": ["Mediterranean"]}),
    (("prefer an entire home", "prefer entire home"), "room_type", "soft", {"room_type": "entire_home"}),
    (("prefer a private room", "prefer private room"), "room_type", "soft", {"room_type": "private_room"}),
    (("entire home", "entire place"), "room_type", "hard", {"room_type": "entire_home"}),
    (("private room",), "room_type", "hard", {"room_type": "private_room"}),
    (("shared room",), "room_type", "hard", {"room_type": "shared_room"}),
    (("no flight", "no flights", "avoid flying"), "transportation", "hard", {"forbidden": ["flight"]}),
    (("no self-driving", "no driving"), "transportation", "hard", {"forbidden": ["self_driving"]}),
    (("train only",), "transportation", "hard", {"allowed": ["train"]}),
    (("smoking",), "room_rule", "hard", {"rules": ["smoking"]}),
    (("pets", "pet-friendly"), "room_rule", "hard", {"rules": ["pets"]}),
    (("children",), "room_rule", "hard", {"rules": ["children"]}),
    (("visitors",), "room_rule", "hard", {"rules": ["visitors"]}),
    (("highly rated", "well rated", "top rated"), "min_rating", "soft", {"min_rating": 4.0}),
)

_QUERY_BLOCK = re.compile(r"QUERY:\s*(.*?)\s*END QUERY", re.DOTALL)
_OPTIONS_BLOCK = re.compile(r"OPTIONS:\s*(.*?)\s*END OPTIONS", re.DOTALL)
_OPTION_LINE = re.compile(r"^- (\S+)", re.MULTILINE)
_K_LINE = re.compile(r"^K: (\d+)", re.MULTILINE)


def extract_constraints_from_text(text: str) -> list[dict]:
    """The deterministic keyword scan behind the mock's extraction replies.

    Exposed so tests can use the same table as an oracle.
    """
    lowered = text.lower()
    found: list[dict] = []
    merged: dict[tuple[str, str], dict] = {}
    for phrases, kind, severity, payload in _KEYWORD_TABLE:
        if not any(p in lowered for p in phrases):
            continue
        key = (kind, severity)
        if kind in ("cuisine", "room_rule") and key in merged:
            # merge list payloads of the same kind and severity
            target = merged[key]["payload"]
            for k, v in payload.items():
                target[k] = sorted(set(target.get(k, [])) | set(v))
            continue
        if any(e["kind"] == kind for e in found):
            continue  # first severity hit wins for scalar kinds
        entry = {"kind": kind, "severity": severity, "payload": json.loads(json.dumps(payload))}
        found.append(entry)
        merged[key] = entry
    return found


class MockBackend:
    """Deterministic stand-in for a generative model.

    Responds from an ordered rule table first; otherwise recognizes the
    engine's own prompt markers and produces schema-correct output. Token
    counts are whitespace token counts.
    """

    def __init__(
        self,
        rules: list[MockRule] | tuple[MockRule, ...] = (),
        seed: int = 0,
        latency_ms: float = 0,
        retry_limit: int = 3,
    ) -> None:
        self.rules = list(rules)
        self.seed = seed
        self.latency_ms = latency_ms
        self.retry_limit = retry_limit
        self.usage = TokenUsage()
        self._uses = [0] * len(self.rules)
        self._lock = threading.Lock()

    def complete(self, prompt: str) -> tuple[str, TokenUsage]:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        if self.latency_ms:
            time.sleep(self.latency_ms / 1000.0)
        text = self._respond(prompt)
        usage = TokenUsage(_count_tokens(prompt), _count_tokens(text), 1)
        with self._lock:
            self.usage.add(usage)
        return text, usage

    def _respond(self, prompt: str) -> str:
        with self._lock:
            for i, rule in enumerate(self.rules):
                if rule.pattern not in prompt:
                    continue
                if rule.times is not None and self._uses[i] >= rule.times:
                    continue
                self._uses[i] += 1
                return rule.response
        if "EXTRACT CONSTRAINTS" in prompt:
            match = _QUERY_BLOCK.search(prompt)
            text = match.group(1) if match else ""
            return json.dumps({"constraints": extract_constraints_from_text(text)})
        if "PROPOSE CANDIDATES" in prompt:
            match = _OPTIONS_BLOCK.search(prompt)
            ids = _OPTION_LINE.findall(match.group(1)) if match else []
            k_match = _K_LINE.search(prompt)
            k = int(k_match.group(1)) if k_match else len(ids)
            return json.dumps(ids[:k])
        if "VERIFY PLAN" in prompt:
            return "Plan reviewed: within budget and schedule as presented."
        return "OK"


# ---------- HTTP backend ----------

class HttpBackend:
    """Chat-completion client with bounded retries and token accounting.

    Retries transport failures and 5xx responses on a 250ms * 2^k
    jitterless backoff. call_count counts every attempt, including the
    failed ones.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key_env: str = "BFOREST_API_KEY",
        temperature: float = 0.7,
        timeout: float = 30.0,
        retry_limit: int = 3,
        max_in_flight: int = 8,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        if not 0.0 <= temperature <= 2.0:
            raise ValueError("temperature must be within [0, 2]")
        if retry_limit < 0:
            raise ValueError("retry_limit must be non-negative")
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.temperature = temperature
        self.retry_limit = retry_limit
        self.usage = TokenUsage()
        self._sem = threading.Semaphore(max_in_flight)
        self._lock = threading.Lock()
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def complete(self, prompt: str) -> tuple[str, TokenUsage]:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
        }
        headers = {}
        api_key = os.environ.get(self.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        last_error: Exception | None = None
        for attempt in range(self.retry_limit + 1):
            if attempt:
                time.sleep(0.25 * 2 ** (attempt - 1))
            with self._lock:
                self.usage.call_count += 1
            try:
                with self._sem:
                    response = self._client.post(self.endpoint, json=payload, headers=headers)
            except httpx.TimeoutException as exc:
                last_error = BackendTimeout(str(exc))
                continue
            except httpx.TransportError as exc:
                last_error = BackendError(str(exc))
                continue
            if response.status_code >= 500:
                last_error = BackendError(f"server error {response.status_code}")
                continue
            if response.status_code >= 400:
                raise BackendError(f"request rejected: {response.status_code} {response.text[:200]}")
            return self._parse(prompt, response)
        raise last_error if last_error is not None else BackendError("no attempts made")

    def _parse(self, prompt: str, response: httpx.Response) -> tuple[str, TokenUsage]:
        try:
            doc = response.json()
            text = doc["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, LookupError, TypeError) as exc:
            raise BackendError(f"malformed completion response: {exc}") from exc
        reported = doc.get("usage") or {}
        usage = TokenUsage(
            input_tokens=int(reported.get("prompt_tokens", _count_tokens(prompt))),
            output_tokens=int(reported.get("completion_tokens", _count_tokens(text))),
            call_count=1,
        )
        with self._lock:
            self.usage.input_tokens += usage.input_tokens
            self.usage.output_tokens += usage.output_tokens
        return text, usage

    def close(self) -> None:
        self._client.close()
