"""Strategy comparison on the demo benchmark (comparison-figure analog).

Thin wrapper over ``contextreact bench`` with the rule-based policy backend;
every strategy gets the same step budget and the same questions.
"""

import argparse
import sys

from contextreact.cli import main as cli_main

STRATEGIES = ["context-react", "append-only", "sliding-window(3)", "discard-all(6000)", "periodic-summary(6000)"]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--questions", default="data/demo/questions.tsv")
    ap.add_argument("--corpus", default="data/demo/corpus.jsonl")
    ap.add_argument("--max-steps", type=int, default=40)
    ap.add_argument("--out-dir", default="runs")
    ap.add_argument("--run-name", default="strategy-comparison")
    args = ap.parse_args()
    argv = ["bench", "--backend", "policy", "--questions", args.questions, "--corpus", args.corpus,
            "--max-steps", str(args.max_steps), "--out-dir", args.out_dir, "--run-name", args.run_name, "--overwrite"]
    for s in STRATEGIES:
        argv += ["--strategy", s]
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
