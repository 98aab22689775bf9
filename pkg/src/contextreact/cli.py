"""Command line: run, bench, replay, stats, export-sft.

Configuration is merged from, in increasing precedence: built-in defaults,
a ``key = value`` config file (``--config``), ``CONTEXTREACT_<KEY>``
environment variables, and command-line flags.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

from .backends import CallableBackend, HttpBackend, ScriptedBackend
from .loop import BACKEND_FAILURE, EpisodeConfig, Strategy, fixed_clock, run_episode, wall_clock
from .metrics import distribution_csv, export_sft, growth_csv, growth_curve, op_distribution, write_sft
from .policy import ResearchPolicy
from .replay import ReplayError, replay
from .store import TrajectoryFormatError, TrajectoryIOError
from .tokens import get_estimator
from .tools import MockCorpus, ToolRegistry, http_registry, mock_registry

log = logging.getLogger("contextreact")

ENV_PREFIX = "CONTEXTREACT_"


@dataclass
class CliConfig:
    backend: str = "scripted"  # scripted | http | policy
    script: Optional[str] = None
    endpoint: Optional[str] = None
    model: str = "default"
    api_key: Optional[str] = None
    max_attempts: int = 3
    temperature: Optional[float] = None
    strategy: str = "context-react"
    window: int = 8
    threshold: int = 32_000
    max_steps: int = 300
    max_rounds: int = 1
    token_budget: int = 15_000
    tools: str = "mock"  # mock | http
    corpus: Optional[str] = None
    padding_tokens: int = 2000
    seed: int = 0
    search_url: Optional[str] = None
    fetch_cap: int = 32_000
    estimator: str = "bytes/4"
    out_dir: str = "runs"
    run_name: Optional[str] = None
    clock: Optional[str] = None  # wall | fixed; default fixed for scripted/policy
    concurrency: int = 4

    def effective_clock(self) -> str:
        return self.clock or ("wall" if self.backend == "http" else "fixed")

    def echo(self) -> dict:
        d = asdict(self)
        if d["api_key"]:
            d["api_key"] = "***"
        d["clock"] = self.effective_clock()
        return d


_TYPES = {f.name: f.type for f in fields(CliConfig)}


def _coerce(key: str, value):
    if value is None or not isinstance(value, str):
        return value
    t = str(_TYPES[key])
    if "int" in t:
        return int(value)
    if "float" in t:
        return float(value)
    return value


def read_config_file(path) -> dict:
    cp = configparser.ConfigParser(interpolation=None)
    cp.read_string("[contextreact]\n" + Path(path).read_text(encoding="utf-8"))
    out = {}
    for key, value in cp["contextreact"].items():
        key = key.replace("-", "_")
        if key not in _TYPES:
            raise ValueError(f"{path}: unknown config key {key!r}")
        out[key] = _coerce(key, value)
    return out


def resolve_config(args: argparse.Namespace, environ=os.environ) -> CliConfig:
    merged: dict = {}
    if getattr(args, "config", None):
        merged.update(read_config_file(args.config))
    for key in _TYPES:
        env = environ.get(ENV_PREFIX + key.upper())
        if env is not None:
            merged[key] = _coerce(key, env)
    for key in _TYPES:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return CliConfig(**merged)


# --- wiring ----------------------------------------------------------------


def make_backend(cfg: CliConfig):
    if cfg.backend == "scripted":
        if not cfg.script:
            raise ValueError("--script is required for the scripted backend")
        return ScriptedBackend.load(cfg.script)
    if cfg.backend == "policy":
        return CallableBackend(ResearchPolicy(), "policy")
    if cfg.backend == "http":
        if not cfg.endpoint:
            raise ValueError("an endpoint is required for the http backend (--endpoint or CONTEXTREACT_ENDPOINT)")
        return HttpBackend(cfg.endpoint, cfg.model, api_key=cfg.api_key, max_attempts=cfg.max_attempts)
    raise ValueError(f"unknown backend {cfg.backend!r}")


def make_tools(cfg: CliConfig) -> ToolRegistry:
    est = get_estimator(cfg.estimator)
    if cfg.tools == "mock":
        docs = MockCorpus.load(cfg.corpus, padding_tokens=cfg.padding_tokens, seed=cfg.seed) if cfg.corpus else MockCorpus([], padding_tokens=cfg.padding_tokens, seed=cfg.seed)
        return mock_registry(docs, cfg.fetch_cap, est)
    if cfg.tools == "http":
        return http_registry(cfg.search_url, cfg.fetch_cap, estimator=est)
    raise ValueError(f"unknown tools {cfg.tools!r}")


def make_strategy(cfg: CliConfig, text: Optional[str] = None) -> Strategy:
    return Strategy.parse(text or cfg.strategy, window=cfg.window, threshold=cfg.threshold)


def episode_config(cfg: CliConfig, question, backend, tools, strategy, episode_id, path) -> EpisodeConfig:
    return EpisodeConfig(
        question=question,
        backend=backend,
        tools=tools,
        strategy=strategy,
        max_tool_calls=cfg.max_steps,
        max_rounds=cfg.max_rounds,
        token_budget=cfg.token_budget,
        estimator=get_estimator(cfg.estimator),
        temperature=cfg.temperature,
        episode_id=episode_id,
        trajectory_path=path,
        clock=fixed_clock if cfg.effective_clock() == "fixed" else wall_clock,
    )


def _digest(*parts) -> str:
    h = hashlib.sha1()
    for p in parts:
        h.update(str(p).encode("utf-8"))
        h.update(b"\0")
    return h.hexdigest()[:10]


def prepare_run_dir(cfg: CliConfig, default_name: str, overwrite: bool) -> Path:
    run_dir = Path(cfg.out_dir) / (cfg.run_name or default_name)
    if run_dir.exists() and any(run_dir.iterdir()):
        if not overwrite:
            raise FileExistsError(f"run directory {run_dir} is not empty (use --overwrite or --run-name)")
        for p in sorted(run_dir.rglob("*"), reverse=True):
            p.unlink() if p.is_file() else p.rmdir()
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir


def write_manifest(run_dir: Path, command: str, cfg: CliConfig, **extra) -> None:
    manifest = {"command": command, "config": cfg.echo(), **extra}
    (run_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def slug(strategy: Strategy) -> str:
    return strategy.describe().replace("(", "-").replace(")", "")


# --- commands --------------------------------------------------------------


def cmd_run(args, cfg: CliConfig) -> int:
    strategy = make_strategy(cfg)
    episode_id = "run-" + _digest(args.question, strategy.describe(), cfg.backend)
    run_dir = prepare_run_dir(cfg, episode_id, args.overwrite)
    path = run_dir / "trajectory.jsonl"
    ecfg = episode_config(cfg, args.question, make_backend(cfg), make_tools(cfg), strategy, episode_id, path)
    result = run_episode(ecfg)
    final_tokens = result.token_trace[-1] if result.token_trace else 0
    print(f"answer: {result.answer if result.answer is not None else '(none)'}")
    print(f"termination: {result.termination}")
    print(f"turns: {result.turns_used}")
    print(f"rounds: {result.rounds_used}")
    print(f"final_tokens: {final_tokens}")
    print(f"trajectory: {path}")
    write_manifest(
        run_dir, "run", cfg, question=args.question, files=["trajectory.jsonl"],
        result={"answer": result.answer, "termination": result.termination, "turns": result.turns_used,
                "rounds": result.rounds_used, "final_tokens": final_tokens},
    )
    if result.termination == BACKEND_FAILURE:
        print(f"error: backend failure: {result.error}", file=sys.stderr)
        return 1
    return 0


def read_questions(path) -> list[tuple[str, Optional[str]]]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        q, _, expected = line.partition("\t")
        out.append((q.strip(), expected.strip() if expected.strip() else None))
    return out


RESULT_FIELDS = ["index", "question", "expected", "answer", "correct", "termination", "turns", "rounds", "final_tokens", "max_tokens", "error"]
COMPARISON_FIELDS = ["strategy", "questions", "scored", "correct", "accuracy", "answered", "mean_turns", "mean_final_tokens", "max_tokens"]


def run_bench(cfg: CliConfig, questions, strategy: Strategy, out_dir: Path, backend, tools) -> list[dict]:
    out_dir.mkdir(parents=True, exist_ok=True)

    def one(item):
        idx, (q, expected) = item
        ecfg = episode_config(cfg, q, backend, tools, strategy, f"q{idx:03d}", out_dir / f"q{idx:03d}.jsonl")
        ecfg.keep_records = False
        row = {"index": idx, "question": q, "expected": expected or ""}
        try:
            r = run_episode(ecfg)
        except Exception as e:  # recorded, the bench carries on
            return {**row, "answer": "", "correct": "", "termination": "error", "turns": 0, "rounds": 0,
                    "final_tokens": 0, "max_tokens": 0, "error": f"{type(e).__name__}: {e}"}
        correct = "" if expected is None else int((r.answer or "").strip() == expected)
        return {**row, "answer": r.answer or "", "correct": correct, "termination": r.termination,
                "turns": r.turns_used, "rounds": r.rounds_used,
                "final_tokens": r.token_trace[-1] if r.token_trace else 0,
                "max_tokens": max(r.token_trace, default=0), "error": r.error or ""}

    with ThreadPoolExecutor(max_workers=max(1, cfg.concurrency)) as pool:
        rows = list(pool.map(one, enumerate(questions, 1)))  # map keeps question order
    write_csv(out_dir / "results.csv", RESULT_FIELDS, rows)
    return rows


def summarize_rows(strategy: Strategy, rows: list[dict]) -> dict:
    scored = [r for r in rows if r["correct"] != ""]
    correct = sum(int(r["correct"]) for r in scored)
    n = len(rows)
    return {
        "strategy": strategy.describe(),
        "questions": n,
        "scored": len(scored),
        "correct": correct,
        "accuracy": f"{correct / len(scored):.4f}" if scored else "",
        "answered": sum(r["termination"] == "answered" for r in rows),
        "mean_turns": f"{sum(r['turns'] for r in rows) / n:.2f}" if n else "",
        "mean_final_tokens": f"{sum(r['final_tokens'] for r in rows) / n:.2f}" if n else "",
        "max_tokens": max((r["max_tokens"] for r in rows), default=0),
    }


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=header, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def cmd_bench(args, cfg: CliConfig) -> int:
    questions = read_questions(args.questions)
    strategies = [make_strategy(cfg, s) for s in (args.strategies or [cfg.strategy])]
    name = "bench-" + _digest(Path(args.questions).read_text(encoding="utf-8"), *(s.describe() for s in strategies), cfg.backend)
    run_dir = prepare_run_dir(cfg, name, args.overwrite)
    backend, tools = make_backend(cfg), make_tools(cfg)
    summaries = []
    for s in strategies:
        rows = run_bench(cfg, questions, s, run_dir / slug(s), backend, tools)
        summaries.append(summarize_rows(s, rows))
    write_csv(run_dir / "comparison.csv", COMPARISON_FIELDS, summaries)
    w = csv.DictWriter(sys.stdout, fieldnames=COMPARISON_FIELDS, lineterminator="\n")
    w.writeheader()
    w.writerows(summaries)
    write_manifest(
        run_dir, "bench", cfg, questions=str(args.questions),
        strategies=[s.describe() for s in strategies], files=["comparison.csv"] + [f"{slug(s)}/results.csv" for s in strategies],
    )
    return 0


def expand_paths(paths) -> list[Path]:
    """Files as given; directories expand to the trajectory files under them."""
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            for f in sorted(p.rglob("*.jsonl")):
                with open(f, encoding="utf-8") as fh:
                    first = fh.readline()
                if '"type": "header"' in first or '"type":"header"' in first:
                    out.append(f)
        else:
            out.append(p)
    return out


def cmd_replay(args, cfg) -> int:
    status = 0
    for path in expand_paths(args.paths):
        try:
            turns = replay(path)
        except (ReplayError, TrajectoryFormatError) as e:
            print(f"FAIL {e}", file=sys.stderr)
            status = 1
            continue
        print(f"ok {path}: {len(turns)} turns replayed")
    return status


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_stats(args, cfg) -> int:
    paths = expand_paths(args.paths)
    if args.growth:
        _emit(growth_csv(growth_curve(paths)), args.output)
    else:
        _emit(distribution_csv(op_distribution(paths)), args.output)
    return 0


def cmd_export_sft(args, cfg) -> int:
    records = export_sft(expand_paths(args.paths))
    n = write_sft(records, args.output)
    print(f"wrote {n} SFT records to {args.output}")
    return 0


# --- parser ----------------------------------------------------------------


def _config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration (flags > environment > config file > defaults)")
    g.add_argument("--config", help="key = value config file")
    g.add_argument("--backend", choices=["scripted", "http", "policy"])
    g.add_argument("--script", help="JSONL script for the scripted backend")
    g.add_argument("--endpoint", help="chat-completion endpoint URL")
    g.add_argument("--model")
    g.add_argument("--max-attempts", dest="max_attempts", type=int)
    g.add_argument("--temperature", type=float)
    g.add_argument("--window", type=int, help="sliding-window size")
    g.add_argument("--threshold", type=int, help="token threshold for discard-all / periodic-summary")
    g.add_argument("--max-steps", dest="max_steps", type=int, help="max tool calls per round")
    g.add_argument("--max-rounds", dest="max_rounds", type=int, help="discard-all rounds (1 = single round)")
    g.add_argument("--token-budget", dest="token_budget", type=int)
    g.add_argument("--tools", choices=["mock", "http"])
    g.add_argument("--corpus", help="mock corpus JSONL of {id, title, text}")
    g.add_argument("--padding-tokens", dest="padding_tokens", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--search-url", dest="search_url")
    g.add_argument("--fetch-cap", dest="fetch_cap", type=int)
    g.add_argument("--estimator")
    g.add_argument("--out-dir", dest="out_dir")
    g.add_argument("--run-name", dest="run_name")
    g.add_argument("--clock", choices=["wall", "fixed"])
    g.add_argument("--concurrency", type=int)
    g.add_argument("--overwrite", action="store_true", help="clear an existing run directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contextreact", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one episode")
    p.add_argument("--question", required=True)
    p.add_argument("--strategy")
    _config_flags(p)
    p.set_defaults(func=cmd_run, needs_config=True)

    p = sub.add_parser("bench", help="run a question file under one or more strategies")
    p.add_argument("--questions", required=True, help="one question per line, optionally TAB expected answer")
    p.add_argument("--strategy", dest="strategies", action="append", help="repeatable; e.g. sliding-window(8)")
    _config_flags(p)
    p.set_defaults(func=cmd_bench, needs_config=True)

    p = sub.add_parser("replay", help="re-render every turn of trajectories and compare")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=cmd_replay, needs_config=False)

    p = sub.add_parser("stats", help="growth curve or meta-op distribution CSV")
    what = p.add_mutually_exclusive_group(required=True)
    what.add_argument("--growth", action="store_true")
    what.add_argument("--ops", action="store_true")
    p.add_argument("paths", nargs="+")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_stats, needs_config=False)

    p = sub.add_parser("export-sft", help="export (context, target) pairs from clean episodes")
    p.add_argument("paths", nargs="+")
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=cmd_export_sft, needs_config=False)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    cfg = None
    try:
        if args.needs_config:
            cfg = resolve_config(args)
            print("effective config: " + json.dumps(cfg.echo(), sort_keys=True), file=sys.stderr)
        return args.func(args, cfg)
    except (TrajectoryIOError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
