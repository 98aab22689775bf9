"""Tool registry, the built-in ``final_answer`` tool, HTTP search/fetch clients
and deterministic mock variants backed by a canned corpus.

Every call yields a ``ToolResult``: failures are rendered as observation text
with ``ok=False`` so the agent can see and react to them.
"""

from __future__ import annotations

import json
import logging
import random
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Optional

from .tokens import DEFAULT_ESTIMATOR, Estimator

logger = logging.getLogger(__name__)

TRUNCATION_MARKER = "\n[... truncated ...]"
DEFAULT_FETCH_CAP = 32_000
FINAL_ANSWER = "final_answer"


@dataclass(frozen=True)
class ToolCall:
    name: str
    arguments: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "arguments": self.arguments}

    @classmethod
    def from_dict(cls, d: Mapping) -> "ToolCall":
        return cls(d["name"], dict(d.get("arguments") or {}))


@dataclass(frozen=True)
class ToolResult:
    text: str
    ok: bool = True
    token_estimate: int = 0
    final: bool = False
    answer: Optional[str] = None


class ToolArgumentError(ValueError):
    pass


def truncate_bytes(text: str, cap: int) -> str:
    """Cut ``text`` to at most ``cap`` UTF-8 bytes plus the marker."""
    data = text.encode("utf-8")
    if len(data) <= cap:
        return text
    return data[:cap].decode("utf-8", errors="ignore") + TRUNCATION_MARKER


def _require_str(args: Mapping, key: str) -> str:
    value = args.get(key)
    if not isinstance(value, str) or not value.strip():
        raise ToolArgumentError(f"argument {key!r} must be a non-empty string")
    return value


def final_answer(args: Mapping) -> ToolResult:
    if "answer" not in args:
        raise ToolArgumentError("argument 'answer' is required")
    answer = str(args["answer"])
    return ToolResult(f"Final answer submitted: {answer}", final=True, answer=answer)


ToolFn = Callable[[Mapping], "ToolResult | str"]


class ToolRegistry:
    """Name -> callable mapping. ``final_answer`` is always registered."""

    def __init__(self, tools: Optional[Mapping[str, ToolFn]] = None, estimator: Estimator = DEFAULT_ESTIMATOR):
        self._tools: dict[str, ToolFn] = {FINAL_ANSWER: final_answer}
        self._tools.update(tools or {})
        self.estimator = estimator

    def register(self, name: str, fn: ToolFn) -> None:
        self._tools[name] = fn

    def names(self) -> list[str]:
        return sorted(self._tools)

    def get(self, name: str) -> Optional[ToolFn]:
        return self._tools.get(name)


def execute(call: ToolCall, registry: ToolRegistry) -> ToolResult:
    est = registry.estimator
    fn = registry.get(call.name)
    if fn is None:
        text = f"Error: unknown tool {call.name!r}. Valid tools: {', '.join(registry.names())}."
        return ToolResult(text, ok=False, token_estimate=est(text))
    try:
        out = fn(call.arguments if isinstance(call.arguments, Mapping) else {})
    except ToolArgumentError as e:
        text = f"Error: bad arguments for {call.name}: {e}"
        return ToolResult(text, ok=False, token_estimate=est(text))
    except Exception as e:  # tool failures are observations, never aborts
        logger.warning("tool %s failed: %s", call.name, e)
        text = f"Error: {call.name} failed: {type(e).__name__}: {e}"
        return ToolResult(text, ok=False, token_estimate=est(text))
    if isinstance(out, str):
        out = ToolResult(out)
    return ToolResult(out.text, out.ok, est(out.text), out.final, out.answer)


# --- mock corpus -----------------------------------------------------------

_TERM = re.compile(r"[a-z0-9]+")
_SYLLABLES = ("ba", "ke", "lo", "mi", "nu", "ra", "si", "to", "ve", "zu", "pa", "do", "gi", "fe", "ho")


def tokenize(text: str) -> list[str]:
    return _TERM.findall(text.lower())


def first_sentence(text: str, limit: int = 160) -> str:
    end = text.find(". ")
    out = text if end < 0 else text[: end + 1]
    return out[:limit]


def padding_text(seed: int, key: str, n_bytes: int) -> str:
    """Seeded filler words, reproducible for a given (seed, key)."""
    if n_bytes <= 0:
        return ""
    rng = random.Random(f"{seed}:{key}")
    words, size = [], 0
    while size < n_bytes:
        w = "".join(rng.choice(_SYLLABLES) for _ in range(rng.randint(2, 4)))
        words.append(w)
        size += len(w) + 1
    return " ".join(words)


@dataclass(frozen=True)
class Document:
    id: str
    title: str
    text: str


class MockCorpus:
    """Read-only canned corpus with a term index.

    ``padding_tokens`` pads each observation up to roughly that many tokens
    (4 bytes per token) to emulate verbose web pages.
    """

    def __init__(self, documents, padding_tokens: int = 2000, seed: int = 0, top_k: int = 5):
        self.documents: dict[str, Document] = {}
        for d in documents:
            if not isinstance(d, Document):
                d = Document(str(d["id"]), str(d.get("title", "")), str(d.get("text", "")))
            if d.id in self.documents:
                raise ValueError(f"duplicate document id {d.id!r}")
            self.documents[d.id] = d
        self.padding_tokens = padding_tokens
        self.seed = seed
        self.top_k = top_k
        self._order = {doc_id: i for i, doc_id in enumerate(self.documents)}
        self.index: dict[str, dict[str, int]] = {}
        for d in self.documents.values():
            for term in tokenize(d.title + " " + d.text):
                counts = self.index.setdefault(term, {})
                counts[d.id] = counts.get(d.id, 0) + 1

    @classmethod
    def load(cls, path, **kwargs) -> "MockCorpus":
        docs = []
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                if not line.strip():
                    continue
                try:
                    docs.append(json.loads(line))
                except json.JSONDecodeError as e:
                    raise ValueError(f"{path}:{lineno}: invalid JSON: {e}") from None
        return cls(docs, **kwargs)

    def rank(self, query: str) -> list[str]:
        scores: dict[str, int] = {}
        for term in tokenize(query):
            for doc_id, n in self.index.get(term, {}).items():
                scores[doc_id] = scores.get(doc_id, 0) + n
        return sorted(scores, key=lambda d: (-scores[d], self._order[d]))

    def pad(self, key: str, text: str) -> str:
        if not self.padding_tokens:
            return text
        missing = self.padding_tokens * 4 - len(text.encode("utf-8")) - 2
        if missing <= 0:
            return text
        return text + "\n\n" + padding_text(self.seed, key, missing)

    def search(self, query: str) -> str:
        hits = self.rank(query)[: self.top_k]
        if not hits:
            body = f'No results for "{query}".'
        else:
            lines = [f'Search results for "{query}":']
            for i, doc_id in enumerate(hits, 1):
                d = self.documents[doc_id]
                lines.append(f"{i}. [{doc_id}] {d.title} | {first_sentence(d.text)}")
            body = "\n".join(lines)
        return self.pad("search:" + query, body)

    def fetch(self, doc_id: str) -> str:
        d = self.documents.get(doc_id)
        if d is None:
            raise KeyError(f"no document {doc_id!r}")
        return self.pad("fetch:" + doc_id, f"Document {d.id}: {d.title}\n{d.text}")


def mock_registry(corpus: MockCorpus, fetch_cap: int = DEFAULT_FETCH_CAP, estimator: Estimator = DEFAULT_ESTIMATOR) -> ToolRegistry:
    def search(args):
        return corpus.search(_require_str(args, "query"))

    def fetch(args):
        ref = args.get("id") or args.get("url")
        if not isinstance(ref, str) or not ref:
            raise ToolArgumentError("argument 'id' (or 'url') must be a non-empty string")
        return truncate_bytes(corpus.fetch(ref), fetch_cap)

    return ToolRegistry({"search": search, "fetch": fetch}, estimator)


# --- HTTP tools ------------------------------------------------------------


def http_registry(
    search_url: Optional[str],
    fetch_cap: int = DEFAULT_FETCH_CAP,
    timeout: float = 30.0,
    client=None,
    estimator: Estimator = DEFAULT_ESTIMATOR,
) -> ToolRegistry:
    """Search via a JSON endpoint (``GET search_url?q=...`` returning
    ``{"results": [{"title", "url", "snippet"}]}``) and fetch arbitrary URLs."""
    import httpx

    client = client or httpx.Client(timeout=timeout, follow_redirects=True)

    def search(args):
        query = _require_str(args, "query")
        if not search_url:
            raise RuntimeError("no search endpoint configured")
        resp = client.get(search_url, params={"q": query})
        resp.raise_for_status()
        results = resp.json().get("results", [])
        if not results:
            return f'No results for "{query}".'
        lines = [f'Search results for "{query}":']
        for i, r in enumerate(results, 1):
            lines.append(f"{i}. [{r.get('url', '')}] {r.get('title', '')} | {r.get('snippet', '')}")
        return "\n".join(lines)

    def fetch(args):
        url = _require_str(args, "url")
        resp = client.get(url)
        resp.raise_for_status()
        return truncate_bytes(resp.text, fetch_cap)

    return ToolRegistry({"search": search, "fetch": fetch}, estimator)

