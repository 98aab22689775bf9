"""Generators and builders shared by the test modules."""

from __future__ import annotations

import json
import random
import string

from contextreact.core import ORIGINAL, History, Step, apply_compress, apply_delete, apply_snippet
from contextreact.structured import StructuredOutput, render_output
from contextreact.tools import ToolCall

ALPHABET = string.ascii_letters + string.digits + " .,:;-_\n\t" + "éß中文🙂–"


def rand_text(rng: random.Random, lo: int = 0, hi: int = 40) -> str:
    return "".join(rng.choice(ALPHABET) for _ in range(rng.randint(lo, hi)))


def original(label: int, obs: str = "", reasoning: str = "", call: ToolCall | None = None) -> Step:
    return Step(id=0, kind=ORIGINAL, reasoning=reasoning or f"r{label}", tool_call=call or ToolCall("search", {"query": f"q{label}"}), observation=obs or f"o{label}", label=label)


def linear_history(n: int) -> History:
    h = History()
    for i in range(1, n + 1):
        h = h.append(original(i))
    return h


def random_history(rng: random.Random, max_len: int = 12, min_len: int = 0) -> History:
    """Originals with random text, then a few random rewrites so summaries,
    snippet-trimmed steps and id gaps all occur."""
    h = History()
    for i in range(1, rng.randint(min_len, max_len) + 1):
        call = rng.choice([None, ToolCall("search", {"query": rand_text(rng, 1, 8)}), ToolCall("fetch", {"id": f"d{i}"})])
        h = h.append(original(i, rand_text(rng, 1, 60), rand_text(rng, 1, 20), call))
    for _ in range(rng.randint(0, 3)):
        if len(h) < 2:
            break
        roll = rng.random()
        if roll < 0.5:
            a = rng.randint(1, len(h))
            b = rng.randint(a, len(h))
            h = apply_compress(h, a, b, rand_text(rng, 1, 30))
        elif roll < 0.7:
            h = apply_delete(h, rng.randint(1, len(h)))
        else:
            k = rng.randint(1, len(h))
            obs = h[k - 1].observation
            if len(obs) >= 2:
                h = apply_snippet(h, k, obs[0], obs[-1]) if obs.find(obs[-1], 1) >= 0 else h
    return h


def structural(h: History):
    """Everything about a history that two structurally equal values share."""
    return [(s.kind, s.reasoning, s.tool_call, s.observation, s.label, s.origin_span, s.snippet_applied) for s in h.steps]


def out(think: str, call: ToolCall, ops=(), motivation: str = "m") -> str:
    return render_output(StructuredOutput(think, list(ops), motivation, call))


def search(q: str, ops=()) -> str:
    return out(f"search {q}", ToolCall("search", {"query": q}), ops)


def answer(a: str, ops=()) -> str:
    return out("done", ToolCall("final_answer", {"answer": a}), ops)


def script_file(path, entries) -> str:
    """entries: list of dicts (ScriptEntry fields) -> JSONL path."""
    with open(path, "w", encoding="utf-8") as f:
        for e in entries:
            f.write(json.dumps(e, ensure_ascii=False) + "\n")
    return str(path)


TWELVE_DOCS = [
    {"id": "d1", "title": "One", "text": "alpha fact one. Lead: beta."},
    {"id": "d2", "title": "Two", "text": "beta fact two. Lead: gamma."},
    {"id": "d3", "title": "Three", "text": "gamma dead end."},
]


def twelve_turn_script():
    """Scripted episode touching every operator, op errors and a parse error;
    it answers on turn 12."""
    from contextreact.backends import ScriptedBackend, ScriptEntry
    from contextreact.core import Compress, Delete, Rollback, Snippet

    fetch = lambda d, ops=(): out(f"open {d}", ToolCall("fetch", {"id": d}), ops)  # noqa: E731
    by_turn = {
        1: search("alpha"),
        2: fetch("d1"),
        3: search("beta", [Snippet(2, "alpha fact", "one.")]),
        4: fetch("d2"),
        5: search("gamma", [Delete(1), Snippet(3, "beta", "two.")]),
        6: fetch("d3", [Compress(1, 2, "alpha is one; beta search done")]),
        7: search("gamma", [Rollback(4, "d3 is a dead end")]),
        8: search("delta", [Snippet(1, "zz", "q")]),
        9: "<think>oops</think><standard_tool_call>{broken</standard_tool_call>",
        10: search("epsilon", [Delete(99), Compress(2, 1, "x")]),
        11: fetch("d2", [Compress(4, 5, "")]),
        12: answer("one-two", [Delete(1)]),
    }
    return ScriptedBackend([ScriptEntry(r, turn=t) for t, r in by_turn.items()] + [ScriptEntry(search("fallback"))])


def run_twelve(path, **kw):
    from contextreact.loop import EpisodeConfig, fixed_clock, run_episode
    from contextreact.tools import MockCorpus, mock_registry

    kw.setdefault("max_rounds", 1)
    cfg = EpisodeConfig(
        question="What are the facts?",
        backend=twelve_turn_script(),
        tools=mock_registry(MockCorpus(TWELVE_DOCS, padding_tokens=200, seed=1)),
        trajectory_path=path,
        clock=fixed_clock,
        episode_id=kw.pop("episode_id", "twelve"),
        **kw,
    )
    return run_episode(cfg)
