"""Aggregations over trajectory files and SFT export.

CSV schemas::

    growth:        turn,survivors,mean_tokens
    distribution:  op,count

SFT JSONL: ``{"context", "target", "episode_id", "turn_index"}``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from typing import Iterable

from .core import OP_KINDS
from .store import Trajectory, read_trajectory


def _load(paths_or_trajs) -> list[Trajectory]:
    return [t if isinstance(t, Trajectory) else read_trajectory(t) for t in paths_or_trajs]


@dataclass(frozen=True)
class GrowthRow:
    turn: int
    survivors: int
    mean_tokens: float


def growth_curve(paths) -> list[GrowthRow]:
    """Per turn index: episodes still running there, and their mean
    ``token_estimate_after``. Terminated episodes drop out of the mean."""
    series = [[r.token_estimate_after for r in t.turns] for t in _load(paths)]
    longest = max((len(s) for s in series), default=0)
    rows = []
    for i in range(longest):
        alive = [s[i] for s in series if len(s) > i]
        rows.append(GrowthRow(i + 1, len(alive), sum(alive) / len(alive)))
    return rows


def op_distribution(paths) -> dict[str, int]:
    """Applied meta-ops by kind. An empty batch counts as one skip; turns
    whose output failed to parse contribute nothing."""
    counts = dict.fromkeys(OP_KINDS, 0)
    for t in _load(paths):
        for rec in t.turns:
            if rec.parse_error is not None:
                continue
            if not rec.ops:
                counts["skip"] += 1
                continue
            for op in rec.ops:
                if op.get("status") == "applied":
                    counts[op["op"]] += 1
    return counts


def growth_csv(rows: Iterable[GrowthRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["turn", "survivors", "mean_tokens"])
    for r in rows:
        w.writerow([r.turn, r.survivors, f"{r.mean_tokens:.2f}"])
    return buf.getvalue()


def distribution_csv(counts: dict[str, int]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["op", "count"])
    for kind in OP_KINDS:
        w.writerow([kind, counts.get(kind, 0)])
    return buf.getvalue()


@dataclass(frozen=True)
class SftRecord:
    context: str
    target: str
    episode_id: str
    turn_index: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False)


def export_sft(paths) -> list[SftRecord]:
    """One record per turn; an episode with any unparseable turn is dropped whole."""
    by_episode: dict[str, list] = {}
    for t in _load(paths):
        for rec in t.turns:
            by_episode.setdefault(rec.episode_id, []).append(rec)
    out = []
    for episode_id, recs in by_episode.items():
        if any(r.parse_error is not None for r in recs):
            continue
        out.extend(SftRecord(r.rendered_view, r.raw_output, episode_id, r.step) for r in recs)
    return out


def write_sft(records: Iterable[SftRecord], path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(r.to_json() + "\n")
            n += 1
    return n
