"""Chat-completion backends: an OpenAI-compatible HTTP client and a scripted fake.

This is the only module that performs network I/O.
"""
from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import httpx

logger = logging.getLogger(__name__)

API_KEY_ENV = "OPENAI_API_KEY"
BASE_URL_ENV = "OPENAI_BASE_URL"
DEFAULT_BASE_URL = "https://api.openai.com/v1"


class BackendError(RuntimeError):
    """Any failure to obtain a reply from a backend."""


class TransportError(BackendError):
    pass


class AuthError(BackendError):
    pass


class BackendTimeout(TransportError):
    pass


class RetryExhaustedError(BackendError):
    pass


class RequestRejected(BackendError):
    """Non-retryable 4xx response (malformed request, unknown model, ...)."""


class ScriptExhausted(BackendError):
    pass


class Backend(Protocol):
    def chat(self, system: str, user: str) -> str: ...


@dataclass
class BackendParams:
    model: str = "gpt-4o"
    base_url: str | None = None
    temperature: float = 1.0
    top_p: float = 0.95
    timeout: float = 60.0
    max_retries: int = 5
    backoff: float = 1.0
    max_in_flight: int = 4
    api_key_env: str = API_KEY_ENV

    def __post_init__(self):
        if not 0 <= self.top_p <= 1:
            raise ValueError("top_p must be in [0, 1]")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    def resolved_base_url(self) -> str:
        return (self.base_url or os.environ.get(BASE_URL_ENV) or DEFAULT_BASE_URL).rstrip("/")

    def api_key(self) -> str | None:
        return os.environ.get(self.api_key_env)


class ChatClient:
    """Minimal client for ``POST {base_url}/chat/completions``.

    Retries connection errors, timeouts, 429 and 5xx with exponential backoff;
    other 4xx responses fail immediately. The API key is read from the
    environment and never logged.
    """

    def __init__(self, params: BackendParams, transport: httpx.BaseTransport | None = None,
                 sleep=time.sleep):
        self.params = params
        key = params.api_key()
        if not key:
            raise AuthError(f"environment variable {params.api_key_env} is not set")
        self._http = httpx.Client(
            base_url=params.resolved_base_url(),
            headers={"Authorization": f"Bearer {key}"},
            timeout=params.timeout,
            transport=transport,
        )
        self._slots = threading.BoundedSemaphore(params.max_in_flight)
        self._sleep = sleep
        self._lock = threading.Lock()
        self.n_requests = 0
        self.usage_tokens = 0

    def request_body(self, system: str, user: str) -> dict:
        return {
            "model": self.params.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "temperature": self.params.temperature,
            "top_p": self.params.top_p,
        }

    def chat(self, system: str, user: str) -> str:
        body = self.request_body(system, user)
        last: Exception | None = None
        for attempt in range(self.params.max_retries + 1):
            if attempt:
                delay = self.params.backoff * 2 ** (attempt - 1)
                logger.warning("retrying chat request in %.1fs (%s)", delay, last)
                self._sleep(delay)
            try:
                with self._slots:
                    resp = self._http.post("/chat/completions", json=body)
            except httpx.TimeoutException as exc:
                last = BackendTimeout(str(exc))
                continue
            except httpx.TransportError as exc:
                last = TransportError(str(exc))
                continue
            with self._lock:
                self.n_requests += 1
            if resp.status_code in (401, 403):
                raise AuthError(f"authentication failed ({resp.status_code})")
            if resp.status_code == 429 or resp.status_code >= 500:
                last = TransportError(f"HTTP {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise RequestRejected(f"HTTP {resp.status_code}: {resp.text[:500]}")
            try:
                data = resp.json()
                text = data["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise RequestRejected(f"malformed response body: {exc}") from exc
            usage = data.get("usage") or {}
            with self._lock:
                self.usage_tokens += int(usage.get("total_tokens", 0) or 0)
            return text or ""
        raise RetryExhaustedError(
            f"chat request failed after {self.params.max_retries + 1} attempts: {last}"
        )

    def close(self):
        self._http.close()


def chat(params: BackendParams, system: str, user: str) -> str:
    """One-shot convenience wrapper around :class:`ChatClient`."""
    client = ChatClient(params)
    try:
        return client.chat(system, user)
    finally:
        client.close()


@dataclass
class ScriptRule:
    replies: list[str]
    match: str = ""
    cursor: int = 0


@dataclass
class ScriptedBackend:
    """Deterministic backend replaying canned replies.

    Rules are tried in order; the first whose ``match`` substring occurs in
    the user prompt answers with its next reply (an empty ``match`` matches
    everything, so a single such rule is plain round-robin). ``wrap``
    controls what happens when a rule runs out of replies.
    """

    rules: list[ScriptRule]
    wrap: bool = True
    calls: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self):
        self._lock = threading.Lock()

    @classmethod
    def round_robin(cls, replies, wrap: bool = True) -> "ScriptedBackend":
        return cls([ScriptRule(list(replies))], wrap=wrap)

    @classmethod
    def from_fixture(cls, fixture: dict | str | Path) -> "ScriptedBackend":
        """Build from ``{"wrap": bool, "rules": [{"match": str, "replies": [...]}]}``
        or from a ``{"features": [...]}`` feature script (see :func:`feature_script`)."""
        if not isinstance(fixture, dict):
            fixture = json.loads(Path(fixture).read_text())
        if "features" in fixture:
            return feature_script(fixture["features"], wrap=fixture.get("wrap", True))
        rules = [ScriptRule(list(r["replies"]), r.get("match", "")) for r in fixture["rules"]]
        return cls(rules, wrap=fixture.get("wrap", True))

    def chat(self, system: str, user: str) -> str:
        with self._lock:
            self.calls.append((system, user))
            for rule in self.rules:
                if rule.match in user:
                    if not rule.replies:
                        raise ScriptExhausted("rule has no replies")
                    if rule.cursor >= len(rule.replies):
                        if not self.wrap:
                            raise ScriptExhausted(f"script rule {rule.match!r} exhausted")
                        rule.cursor = 0
                    reply = rule.replies[rule.cursor]
                    rule.cursor += 1
                    return reply
        raise ScriptExhausted("no script rule matches the prompt")


CODE_PROMPT_MARKER = "has the following characteristics:\nFeature name: "


def feature_script(features, wrap: bool = True) -> ScriptedBackend:
    """Scripted backend that proposes ``features`` in turn.

    Each feature is a dict with ``name``, ``description``, ``code`` and an
    optional ``rationale``. Semantic prompts receive the JSON triplets
    round-robin; code prompts (recognised by the feature name they carry)
    receive the matching code string.
    """
    rules = []
    triplets = []
    for f in features:
        rules.append(ScriptRule([f["code"]], match=f"{CODE_PROMPT_MARKER}{f['name']}\n"))
        triplets.append(json.dumps({
            "rationale": f.get("rationale", ""),
            "description": f["description"],
            "name": f["name"],
        }))
    rules.append(ScriptRule(triplets))
    return ScriptedBackend(rules, wrap=wrap)


class FailingBackend:
    """Backend whose every call raises (used to exercise degradation paths)."""

    def __init__(self, exc: type[BackendError] = TransportError):
        self.exc = exc
        self.n_calls = 0

    def chat(self, system: str, user: str) -> str:
        self.n_calls += 1
        raise self.exc("backend unavailable")
