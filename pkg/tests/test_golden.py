"""Byte-exact golden files for every public text format.

Regenerate after an intentional format change with ``python tests/test_golden.py``.
"""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from contextreact.backends import ScriptedBackend, ScriptEntry  # noqa: E402
from contextreact.core import Compress, Delete, History, Rollback, Snippet, apply_batch, render_view  # noqa: E402
from contextreact.loop import EpisodeConfig, fixed_clock, run_episode, view_header  # noqa: E402
from contextreact.metrics import distribution_csv, export_sft, growth_csv, growth_curve, op_distribution  # noqa: E402
from contextreact.structured import StructuredOutput, render_output  # noqa: E402
from contextreact.tools import MockCorpus, ToolCall, mock_registry  # noqa: E402
from helpers import TWELVE_DOCS, answer, original, run_twelve, search  # noqa: E402

GOLDEN = Path(__file__).parent / "golden"


def golden_view() -> str:
    h = History()
    h = h.append(original(1, "Search results for \"founder\":\n1. [d1] Company history | Founded in 1998.", "Look for the founder.", ToolCall("search", {"query": "founder"})))
    h = h.append(original(2, "Document d1: Company history\nThe company was founded in 1998 by A. Person in a garage.", "Open the history page.", ToolCall("fetch", {"id": "d1"})))
    h = h.append(original(3, "No results.", "Try the archive.", ToolCall("search", {"query": "archive"})))
    h = h.append(original(4, "Document d9: paywalled", "Open d9.", ToolCall("fetch", {"id": "d9"})))
    h = apply_batch(h, [Snippet(2, "founded in", "garage."), Delete(3), Rollback(4, "d9 is paywalled; try the registry.")]).history
    h = apply_batch(h, [Compress(1, 1, "The founder search points at d1.")]).history
    return render_view(h, budget=40, header=view_header("Who founded the company?", 2, 5)).text + "\n"


def golden_output() -> str:
    x = StructuredOutput(
        "d9 was a dead end and the search results are spent.",
        [Compress(1, 2, "Founded in 1998 by A. Person (d1)."), Rollback(3, "d9 is paywalled.")],
        "Keep only the fact and the reason d9 failed.",
        ToolCall("search", {"query": "A. Person registry", "lang": "en"}),
    )
    return render_output(x) + "\n"


def clean_episode(path):
    backend = ScriptedBackend([ScriptEntry(search("alpha"), turn=1), ScriptEntry(search("beta", [Delete(1)]), turn=2), ScriptEntry(answer("one-two"))])
    cfg = EpisodeConfig("What are the facts?", backend, mock_registry(MockCorpus(TWELVE_DOCS, padding_tokens=0)),
                        max_rounds=1, trajectory_path=path, clock=fixed_clock, episode_id="clean")
    run_episode(cfg)


def build_all(out: Path) -> dict[str, Path]:
    out.mkdir(parents=True, exist_ok=True)
    files = {}

    def put(name, text):
        p = out / name
        p.write_text(text, encoding="utf-8")
        files[name] = p

    put("render_view.txt", golden_view())
    put("structured_output.txt", golden_output())
    for name in ("trajectory.jsonl", "clean.jsonl"):
        (out / name).unlink(missing_ok=True)
    run_twelve(out / "trajectory.jsonl")
    clean_episode(out / "clean.jsonl")
    files["trajectory.jsonl"] = out / "trajectory.jsonl"
    files["clean.jsonl"] = out / "clean.jsonl"
    trajs = [out / "trajectory.jsonl", out / "clean.jsonl"]
    put("growth.csv", growth_csv(growth_curve(trajs)))
    put("ops.csv", distribution_csv(op_distribution(trajs)))
    put("sft.jsonl", "".join(r.to_json() + "\n" for r in export_sft(trajs)))
    return files


NAMES = ["render_view.txt", "structured_output.txt", "trajectory.jsonl", "clean.jsonl", "growth.csv", "ops.csv", "sft.jsonl"]


@pytest.fixture(scope="module")
def fresh(tmp_path_factory):
    return build_all(tmp_path_factory.mktemp("golden"))


@pytest.mark.parametrize("name", NAMES)
def test_golden(fresh, name):
    assert fresh[name].read_bytes() == (GOLDEN / name).read_bytes()


def test_cli_stats_match_goldens(capsys):
    from contextreact.cli import main

    trajs = [str(GOLDEN / "trajectory.jsonl"), str(GOLDEN / "clean.jsonl")]
    assert main(["stats", "--growth", *trajs]) == 0
    assert capsys.readouterr().out == (GOLDEN / "growth.csv").read_text()
    assert main(["stats", "--ops", *trajs]) == 0
    assert capsys.readouterr().out == (GOLDEN / "ops.csv").read_text()


if __name__ == "__main__":
    for name, path in build_all(GOLDEN).items():
        print(f"wrote {path}")
