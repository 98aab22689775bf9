"""Write the demo corpus and questions, a stress corpus, and a scripted demo
episode (the rule-based policy's outputs for question 1, replayable by the
scripted backend) under data/."""

import argparse
import json
from pathlib import Path

from contextreact.backends import CallableBackend
from contextreact.demo import build_demo, build_stress, write_corpus, write_questions
from contextreact.loop import EpisodeConfig, fixed_clock, run_episode
from contextreact.policy import ResearchPolicy
from contextreact.structured import render_output, StructuredOutput
from contextreact.tools import MockCorpus, ToolCall, mock_registry


def record_script(docs, question, path, padding_tokens):
    tools = mock_registry(MockCorpus(docs, padding_tokens=padding_tokens))
    cfg = EpisodeConfig(question, CallableBackend(ResearchPolicy(), "policy"), tools, max_tool_calls=40, max_rounds=1, clock=fixed_clock)
    res = run_episode(cfg)
    fallback = render_output(StructuredOutput("Out of script; give up.", [], "nothing to manage", ToolCall("final_answer", {"answer": "unknown"})))
    lines = [{"turn": r.step, "response": r.raw_output} for r in res.records]
    lines.append({"response": fallback})
    Path(path).write_text("".join(json.dumps(l, ensure_ascii=False) + "\n" for l in lines), encoding="utf-8")
    return res


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data", type=Path)
    ap.add_argument("--questions", type=int, default=20)
    ap.add_argument("--parts", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--padding-tokens", type=int, default=2000)
    args = ap.parse_args()

    demo = args.out / "demo"
    demo.mkdir(parents=True, exist_ok=True)
    docs, questions = build_demo(args.questions, args.parts, args.seed)
    write_corpus(docs, demo / "corpus.jsonl")
    write_questions(questions, demo / "questions.tsv")
    res = record_script(docs, questions[0].question, demo / "script.jsonl", args.padding_tokens)
    print(f"scripted demo: {res.turns_used} turns, answer {res.answer} (expected {questions[0].answer})")

    stress = args.out / "stress"
    stress.mkdir(parents=True, exist_ok=True)
    docs, q = build_stress(seed=args.seed)
    write_corpus(docs, stress / "corpus.jsonl")
    write_questions([q], stress / "questions.tsv")
    print(f"wrote {demo} and {stress}")


if __name__ == "__main__":
    main()
