"""Context growth over a long unanswerable search (growth-curve analog).

Runs the rule-based policy for ``--turns`` turns on stress chains under each
strategy and writes per-strategy growth CSVs plus the trajectories.
"""

import argparse
import time
from pathlib import Path

from contextreact.backends import CallableBackend
from contextreact.demo import build_stress
from contextreact.loop import EpisodeConfig, Strategy, fixed_clock, run_episode
from contextreact.metrics import growth_csv, growth_curve
from contextreact.policy import ResearchPolicy
from contextreact.tools import MockCorpus, mock_registry


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("runs/growth"))
    ap.add_argument("--turns", type=int, default=300)
    ap.add_argument("--episodes", type=int, default=3, help="one stress chain per seed")
    ap.add_argument("--padding-tokens", type=int, default=2000)
    ap.add_argument("--budget", type=int, default=15_000)
    ap.add_argument("--strategy", action="append", help="default: context-react and append-only")
    args = ap.parse_args()

    strategies = args.strategy or ["context-react", "append-only"]
    args.out.mkdir(parents=True, exist_ok=True)
    print("strategy,episodes,max_tokens,final_mean_tokens,seconds")
    for text in strategies:
        strategy = Strategy.parse(text)
        slug = strategy.describe().replace("(", "-").replace(")", "")
        paths = []
        start = time.perf_counter()
        for seed in range(args.episodes):
            docs, q = build_stress(seed=seed)
            path = args.out / slug / f"seed{seed}.jsonl"
            path.parent.mkdir(parents=True, exist_ok=True)
            path.unlink(missing_ok=True)
            tools = mock_registry(MockCorpus(docs, padding_tokens=args.padding_tokens, seed=seed))
            cfg = EpisodeConfig(
                q.question, CallableBackend(ResearchPolicy(), "policy"), tools, strategy=strategy,
                max_tool_calls=args.turns, max_rounds=1, token_budget=args.budget,
                trajectory_path=path, clock=fixed_clock, episode_id=f"{slug}-seed{seed}", keep_records=False,
            )
            run_episode(cfg)
            paths.append(path)
        rows = growth_curve(paths)
        (args.out / f"{slug}.csv").write_text(growth_csv(rows), encoding="utf-8")
        peak = max(r.mean_tokens for r in rows)
        print(f"{strategy.describe()},{args.episodes},{peak:.0f},{rows[-1].mean_tokens:.0f},{time.perf_counter() - start:.1f}")


if __name__ == "__main__":
    main()
