"""Generators: a chat-completion HTTP client and a deterministic scripted backend.

Script files are JSONL, one ``ScriptEntry`` per line::

    {"turn": 3, "response": "<think>...</think>..."}
    {"contains": "population", "response": "..."}
    {"purpose": "summary", "response": "summary text"}
    {"response": "..."}            # default: no predicate

The first entry whose predicates all hold fires.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Optional, Protocol, Sequence

logger = logging.getLogger(__name__)

STEP = "step"
SUMMARY = "summary"
SYSTEM_PROMPT_VERSION = "v1"


def load_system_prompt(version: str = SYSTEM_PROMPT_VERSION) -> str:
    return resources.files("contextreact").joinpath("prompts").joinpath(f"system_{version}.txt").read_text(encoding="utf-8")


@dataclass(frozen=True)
class BackendRequest:
    system_prompt: str
    rendered_context: str
    temperature: Optional[float] = None
    max_tokens: Optional[int] = None
    turn: int = 0  # 1-based across the whole episode
    purpose: str = STEP


class BackendError(RuntimeError):
    pass


class Backend(Protocol):
    def complete(self, req: BackendRequest) -> str: ...


@dataclass(frozen=True)
class ScriptEntry:
    response: str
    turn: Optional[int] = None
    contains: Optional[str] = None
    purpose: str = STEP

    @property
    def is_default(self) -> bool:
        return self.turn is None and self.contains is None

    def matches(self, req: BackendRequest) -> bool:
        if self.purpose != req.purpose:
            return False
        if self.turn is not None and self.turn != req.turn:
            return False
        if self.contains is not None and self.contains not in req.rendered_context:
            return False
        return True


class ScriptedBackend:
    """Pure function of (script, turn index, rendered context, purpose)."""

    name = "scripted"

    def __init__(self, entries: Sequence[ScriptEntry]):
        self.entries = tuple(entries)
        if not any(e.is_default and e.purpose == STEP for e in self.entries):
            raise ValueError("script needs a default entry (one with no turn/contains predicate)")

    @classmethod
    def load(cls, path) -> "ScriptedBackend":
        entries = []
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                if not line.strip():
                    continue
                try:
                    d = json.loads(line)
                    entries.append(
                        ScriptEntry(
                            response=d["response"],
                            turn=d.get("turn"),
                            contains=d.get("contains"),
                            purpose=d.get("purpose", STEP),
                        )
                    )
                except (json.JSONDecodeError, KeyError, TypeError) as e:
                    raise ValueError(f"{path}:{lineno}: bad script entry: {e}") from None
        return cls(entries)

    def complete(self, req: BackendRequest) -> str:
        for e in self.entries:
            if e.matches(req):
                return e.response
        raise BackendError(f"no script entry matches turn {req.turn} ({req.purpose})")


class CallableBackend:
    """Wraps ``fn(request) -> raw text``; used for rule-based policies."""

    def __init__(self, fn: Callable[[BackendRequest], str], name: str = "callable"):
        self.fn = fn
        self.name = name

    def complete(self, req: BackendRequest) -> str:
        return self.fn(req)


TRANSIENT_STATUS = {429, 500, 502, 503, 504}


class HttpBackend:
    """Chat-completion client (``POST {endpoint}/chat/completions``).

    Request: ``{"model", "messages": [system, user], "temperature"?, "max_tokens"?}``.
    Response: ``choices[0].message.content``. Transport errors and 429/5xx are
    retried up to ``max_attempts`` total attempts with exponential backoff.
    """

    name = "http"

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: Optional[str] = None,
        max_attempts: int = 3,
        backoff: float = 1.0,
        timeout: float = 120.0,
        client=None,
    ):
        import httpx

        if max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        endpoint = endpoint.rstrip("/")
        if not endpoint.endswith("/chat/completions"):
            endpoint += "/chat/completions"
        self.url = endpoint
        self.model = model
        self.api_key = api_key
        self.max_attempts = max_attempts
        self.backoff = backoff
        self._httpx = httpx
        self.client = client or httpx.Client(timeout=timeout)

    @classmethod
    def from_env(cls, **kwargs) -> "HttpBackend":
        endpoint = kwargs.pop("endpoint", None) or os.environ.get("CONTEXTREACT_ENDPOINT")
        if not endpoint:
            raise ValueError("no endpoint configured (set CONTEXTREACT_ENDPOINT)")
        return cls(
            endpoint,
            kwargs.pop("model", None) or os.environ.get("CONTEXTREACT_MODEL", "default"),
            api_key=kwargs.pop("api_key", None) or os.environ.get("CONTEXTREACT_API_KEY"),
            **kwargs,
        )

    def payload(self, req: BackendRequest) -> dict:
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": req.system_prompt},
                {"role": "user", "content": req.rendered_context},
            ],
        }
        if req.temperature is not None:
            body["temperature"] = req.temperature
        if req.max_tokens is not None:
            body["max_tokens"] = req.max_tokens
        return body

    def complete(self, req: BackendRequest) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = self.payload(req)
        last = ""
        for attempt in range(1, self.max_attempts + 1):
            try:
                resp = self.client.post(self.url, json=body, headers=headers)
            except self._httpx.TransportError as e:
                last = f"transport error: {e}"
            else:
                if resp.status_code == 200:
                    return self._content(resp)
                last = f"HTTP {resp.status_code}: {resp.text}"
                if resp.status_code not in TRANSIENT_STATUS:
                    raise BackendError(last)
            if attempt < self.max_attempts:
                delay = self.backoff * 2 ** (attempt - 1)
                logger.warning("backend attempt %d/%d failed (%s); retrying in %.1fs", attempt, self.max_attempts, last, delay)
                time.sleep(delay)
        raise BackendError(f"giving up after {self.max_attempts} attempts; last error: {last}")

    @staticmethod
    def _content(resp) -> str:
        try:
            content = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise BackendError(f"malformed chat-completion response: {e}: {resp.text[:500]}") from None
        if not isinstance(content, str):
            raise BackendError("chat-completion response has no text content")
        return content
