"""A deterministic, rule-based Context-ReAct policy for the demo corpora.

It reads nothing but the rendered view (and the request purpose), so as a
backend it is a pure function of the context, like a scripted model:

* fetch the best search hit that is not a known dead end;
* on a dead end, roll back to the search that led there;
* on a fact, snippet it, delete the spent search step, follow the lead;
* compress everything older than the ``keep_recent`` newest entries, carrying
  facts and dead ends forward in the summary;
* answer once every part of the code is visible.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Optional

from .backends import SUMMARY, BackendRequest
from .core import Compress, Delete, Rollback, Snippet
from .structured import StructuredOutput, render_output
from .tools import ToolCall

_ENTRY = re.compile(r"(?:^|\n\n)\[(\d+)\] ")
_SUMMARY_HEAD = re.compile(r"\[Steps (\d+)–(\d+) \| compressed\] ")
_ORIGINAL = re.compile(r"Step (\d+)\nReasoning: (.*?)\nTool call: (\S+)(?: (.*?))?\nObservation( \[snippet\])?: ", re.S)
FACT = re.compile(r"Fact: part (\d+) of (\w+) is (\w+)\.")
DEAD = re.compile(r"dead end: ([\w-]+)")
LEAD = re.compile(r"Lead: search (\w+)\.")
RETRY = re.compile(r"Retry search (\w+)\.")
HIT = re.compile(r"^\d+\. \[([\w-]+)\]", re.M)
QUESTION = re.compile(r"project (\w+)\? Join parts 1 to (\d+)")


@dataclass
class Entry:
    display: int
    kind: str  # "original" | "summary"
    text: str  # observation / summary content
    tool: Optional[str] = None
    args: Optional[dict] = None


def parse_view(text: str) -> tuple[str, list[Entry]]:
    """Split a rendered view into its header and entries."""
    text = text.split("\n\n[budget warning]", 1)[0]
    matches = list(_ENTRY.finditer(text))
    header = text[: matches[0].start()] if matches else text
    entries = []
    for m, nxt in zip(matches, matches[1:] + [None]):
        body = text[m.end() : nxt.start() if nxt else len(text)]
        display = int(m.group(1))
        s = _SUMMARY_HEAD.match(body)
        if s:
            entries.append(Entry(display, "summary", body[s.end() :]))
            continue
        o = _ORIGINAL.match(body)
        if o is None:
            entries.append(Entry(display, "original", body))
            continue
        tool = None if o.group(3) == "(none)" else o.group(3)
        try:
            args = json.loads(o.group(4)) if o.group(4) else {}
        except json.JSONDecodeError:
            args = {}
        entries.append(Entry(display, "original", body[o.end() :], tool, args))
    return header, entries


def known_facts(text: str, topic: str) -> dict[int, str]:
    return {int(p): code for p, t, code in FACT.findall(text) if t == topic}


def carried_summary(text: str, topic: str) -> str:
    """Facts and dead ends in ``text``, restated compactly."""
    facts = known_facts(text, topic)
    dead = sorted(set(DEAD.findall(text)))
    parts = [f"Fact: part {p} of {topic} is {facts[p]}." for p in sorted(facts)]
    parts += [f"dead end: {d}." for d in dead]
    return " ".join(parts) if parts else f"No facts about {topic} yet."


class ResearchPolicy:
    name = "policy"

    def __init__(self, keep_recent: int = 5):
        self.keep_recent = keep_recent

    def __call__(self, req: BackendRequest) -> str:
        return self.complete(req)

    def complete(self, req: BackendRequest) -> str:
        header, entries = parse_view(req.rendered_context)
        q = QUESTION.search(header)
        topic, parts = (q.group(1), int(q.group(2))) if q else ("", 0)
        if req.purpose == SUMMARY:
            return carried_summary(req.rendered_context, topic)
        return render_output(self.decide(header, entries, topic, parts, req.rendered_context))

    def decide(self, header, entries, topic, parts, view_text) -> StructuredOutput:
        facts = known_facts(view_text, topic)
        if parts and all(p in facts for p in range(1, parts + 1)):
            code = "-".join(facts[p] for p in range(1, parts + 1))
            return StructuredOutput(
                f"All {parts} parts of the {topic} code are in context.", [], "Context is sufficient.",
                ToolCall("final_answer", {"answer": code}),
            )

        dead = set(DEAD.findall(view_text))
        leads = LEAD.findall(view_text)
        fallback = leads[-1] if leads else topic
        ops: list = []
        n = len(entries)
        last = entries[-1] if entries else None
        prev = entries[-2] if n >= 2 else None
        prev_search = prev is not None and prev.kind == "original" and prev.tool == "search"
        protect = n + 1  # entries at or after this display index are targeted by other ops

        if last is None:
            think, call = f"Start by searching for {topic}.", ToolCall("search", {"query": topic})
        elif last.kind == "summary":
            retry = RETRY.findall(last.text)
            term = retry[-1] if retry else fallback
            think, call = f"Resume with a search for {term}.", ToolCall("search", {"query": term})
        elif last.tool == "fetch" and "Status: dead end" in last.text:
            doc = (last.args or {}).get("id", "?")
            k = prev.display if prev_search else last.display
            term = (prev.args or {}).get("query", fallback) if prev_search else fallback
            ops.append(Rollback(k, f"dead end: {doc}. Retry search {term}."))
            protect = k
            think, call = f"{doc} is a dead end; back up and retry {term}.", ToolCall("search", {"query": term})
        elif last.tool == "fetch" and FACT.search(last.text):
            ops.append(Snippet(last.display, "Fact: ", "."))
            protect = last.display
            if prev_search:
                ops.append(Delete(prev.display))
                protect = prev.display
            lead = LEAD.search(last.text)
            term = lead.group(1) if lead else topic
            think, call = f"Recorded a fact; follow the lead to {term}.", ToolCall("search", {"query": term})
        elif last.tool == "search":
            hits = [h for h in HIT.findall(last.text) if h not in dead]
            if hits:
                think, call = f"Open {hits[0]}.", ToolCall("fetch", {"id": hits[0]})
            else:
                ops.append(Delete(last.display))
                protect = last.display
                think, call = f"Nothing useful; search {topic} again.", ToolCall("search", {"query": topic})
        else:
            think, call = f"Continue with {fallback}.", ToolCall("search", {"query": fallback})

        older = n - self.keep_recent
        if older >= 1 and older < protect and (older >= 2 or entries[0].kind == "original"):
            span_text = "\n".join(e.text for e in entries[:older])
            ops.insert(0, Compress(1, older, carried_summary(span_text, topic)))

        motivation = "; ".join(type(op).__name__.lower() for op in ops) or "context is compact"
        return StructuredOutput(think, ops, motivation, call)
