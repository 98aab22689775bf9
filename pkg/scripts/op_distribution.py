"""Meta-operation usage (usage-distribution analog) over trajectories.

With no arguments, runs the rule-based policy on the demo questions and a
stress chain first, then counts applied operations over all of them.
"""

import argparse
from pathlib import Path

from contextreact.backends import CallableBackend
from contextreact.demo import build_demo, build_stress
from contextreact.loop import EpisodeConfig, fixed_clock, run_episode
from contextreact.metrics import distribution_csv, op_distribution
from contextreact.policy import ResearchPolicy
from contextreact.tools import MockCorpus, mock_registry


def generate(out: Path, padding_tokens: int) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    docs, questions = build_demo(20)
    stress_docs, stress_q = build_stress()
    jobs = [(docs, q.question, 40, f"demo{i:02d}") for i, q in enumerate(questions, 1)]
    jobs.append((stress_docs, stress_q.question, 300, "stress"))
    paths = []
    for corpus_docs, question, steps, name in jobs:
        path = out / f"{name}.jsonl"
        path.unlink(missing_ok=True)
        cfg = EpisodeConfig(
            question, CallableBackend(ResearchPolicy(), "policy"), mock_registry(MockCorpus(corpus_docs, padding_tokens=padding_tokens)),
            max_tool_calls=steps, max_rounds=1, trajectory_path=path, clock=fixed_clock, episode_id=name, keep_records=False,
        )
        run_episode(cfg)
        paths.append(path)
    return paths


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("paths", nargs="*", type=Path)
    ap.add_argument("--out", type=Path, default=Path("runs/op-distribution"))
    ap.add_argument("--padding-tokens", type=int, default=2000)
    args = ap.parse_args()
    paths = args.paths or generate(args.out, args.padding_tokens)
    counts = op_distribution(paths)
    text = distribution_csv(counts)
    total = sum(counts.values()) or 1
    print(text, end="")
    for kind, n in counts.items():
        print(f"# {kind:<8} {100 * n / total:5.1f}%")


if __name__ == "__main__":
    main()
