"""Synthetic multi-hop corpora for desk-scale runs.

Each question asks for an access code made of ``parts`` pieces. Piece ``j``
sits in document ``{topic}-h{j}``, which also names the search term that leads
to piece ``j+1``. Some hops have a decoy document that outranks the real one
and is a dead end.
"""

from __future__ import annotations

import json
import random
import string
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class DemoQuestion:
    question: str
    answer: str
    topic: str


def question_text(topic: str, parts: int) -> str:
    return f"What is the access code of project {topic}? Join parts 1 to {parts} with hyphens."


def hop_term(topic: str, j: int) -> str:
    return topic if j == 1 else f"{topic}h{j}"


def build_chain(topic: str, hops: int, rng: random.Random, dead_every: int = 2) -> tuple[list[dict], list[str]]:
    docs, codes = [], []
    for j in range(1, hops + 1):
        term = hop_term(topic, j)
        code = "".join(rng.choice(string.ascii_uppercase + string.digits) for _ in range(4))
        codes.append(code)
        if dead_every and j % dead_every == 1:
            dead_id = f"{topic}-h{j}x"
            docs.append(
                {
                    "id": dead_id,
                    "title": f"{term} archive",
                    "text": f"Archive index for {term}. Status: dead end: {dead_id}. See {term} and {term}.",
                }
            )
        lead = f" Lead: search {hop_term(topic, j + 1)}." if j < hops else ""
        docs.append(
            {
                "id": f"{topic}-h{j}",
                "title": f"{term} record",
                "text": f"Record for {term}. Fact: part {j} of {topic} is {code}.{lead}",
            }
        )
    return docs, codes


def build_demo(n_questions: int = 20, parts: int = 3, seed: int = 0, dead_every: int = 2):
    """Returns (documents, questions)."""
    rng = random.Random(seed)
    docs, questions = [], []
    for i in range(1, n_questions + 1):
        topic = f"proj{i}"
        chain, codes = build_chain(topic, parts, rng, dead_every)
        docs.extend(chain)
        questions.append(DemoQuestion(question_text(topic, parts), "-".join(codes), topic))
    return docs, questions


def build_stress(hops: int = 200, seed: int = 0, dead_every: int = 5):
    """A chain longer than any run: the question is never answerable."""
    rng = random.Random(seed)
    docs, _ = build_chain("deep", hops, rng, dead_every)
    return docs, DemoQuestion(question_text("deep", hops + 1000), "", "deep")


def write_corpus(docs, path) -> None:
    Path(path).write_text("".join(json.dumps(d, ensure_ascii=False) + "\n" for d in docs), encoding="utf-8")


def write_questions(questions, path) -> None:
    Path(path).write_text("".join(f"{q.question}\t{q.answer}\n" for q in questions), encoding="utf-8")
