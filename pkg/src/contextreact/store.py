"""Append-only JSONL trajectories.

Layout of one file (one episode)::

    {"type": "header", "schema": "contextreact.trajectory/1", "estimator": "bytes/4", ...}
    {"type": "turn", "episode_id": ..., "round": 1, "turn": 1, "step": 1, ...}
    ...
    {"type": "end", "termination": "answered", ...}
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable, Optional

SCHEMA = "contextreact.trajectory/1"


class TrajectoryFormatError(ValueError):
    def __init__(self, path, line: int, reason: str):
        super().__init__(f"{path}:{line}: {reason}")
        self.path = path
        self.line = line
        self.reason = reason


class TrajectoryIOError(OSError):
    pass


class DuplicateTurnError(ValueError):
    pass


@dataclass
class TurnRecord:
    episode_id: str
    round: int
    turn: int  # 1-based within the round
    step: int  # 1-based across the episode
    rendered_view: str
    raw_output: str
    ops: list[dict] = field(default_factory=list)  # wire form plus "status"
    errors: list[dict] = field(default_factory=list)  # {"index", "code", "message"}
    parse_error: Optional[str] = None
    warnings: list[str] = field(default_factory=list)
    tool_call: Optional[dict] = None
    tool_result: str = ""
    tool_ok: bool = True
    final: bool = False
    answer: Optional[str] = None
    strategy_event: Optional[dict] = None
    token_estimate_before: int = 0
    token_estimate_after: int = 0
    timestamp: str = ""

    @property
    def key(self) -> tuple[str, int, int]:
        return (self.episode_id, self.round, self.turn)

    def to_json(self) -> str:
        return json.dumps({"type": "turn", **asdict(self)}, ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: dict) -> "TurnRecord":
        names = {f.name for f in fields(cls)}
        missing = {"episode_id", "round", "turn", "step", "rendered_view", "raw_output"} - set(d)
        if missing:
            raise KeyError(f"turn record missing {sorted(missing)}")
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass
class Trajectory:
    path: Any
    header: Optional[dict] = None
    turns: list[TurnRecord] = field(default_factory=list)
    end: Optional[dict] = None
    turn_lines: list[int] = field(default_factory=list)

    @property
    def episode_id(self) -> Optional[str]:
        if self.header:
            return self.header.get("episode_id")
        return self.turns[0].episode_id if self.turns else None


class TrajectoryWriter:
    """One writer per file. Every line is flushed and fsynced on write."""

    def __init__(self, path, header: dict, fsync: bool = True):
        self.path = Path(path)
        self.fsync = fsync
        self._seen: set[tuple[str, int, int]] = set()
        self._last: dict[str, tuple[int, int, int]] = {}  # episode -> (round, turn, step)
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._f = open(self.path, "x", encoding="utf-8")
        except OSError as e:
            raise TrajectoryIOError(f"cannot create trajectory {self.path}: {e}") from e
        self._write({"type": "header", "schema": SCHEMA, **header})

    def _write(self, obj_or_line) -> None:
        line = obj_or_line if isinstance(obj_or_line, str) else json.dumps(obj_or_line, ensure_ascii=False)
        try:
            self._f.write(line + "\n")
            self._f.flush()
            if self.fsync:
                os.fsync(self._f.fileno())
        except OSError as e:
            raise TrajectoryIOError(f"write to {self.path} failed: {e}") from e

    def append_turn(self, rec: TurnRecord) -> None:
        if rec.key in self._seen:
            raise DuplicateTurnError(f"turn {rec.key} already recorded in {self.path}")
        rnd, turn, step = self._last.get(rec.episode_id, (1, 0, 0))
        dense = (rec.round == rnd and rec.turn == turn + 1) or (rec.round == rnd + 1 and rec.turn == 1)
        if not dense or rec.step != step + 1:
            raise DuplicateTurnError(
                f"turn {rec.key} (step {rec.step}) breaks density after round {rnd} turn {turn} step {step}"
            )
        self._write(rec.to_json())
        self._seen.add(rec.key)
        self._last[rec.episode_id] = (rec.round, rec.turn, rec.step)

    def finish(self, end: dict) -> None:
        self._write({"type": "end", **end})
        self.close()

    def close(self) -> None:
        if not self._f.closed:
            self._f.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_trajectory(path) -> Trajectory:
    traj = Trajectory(path)
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise TrajectoryFormatError(path, lineno, f"invalid JSON: {e.msg}") from None
            kind = obj.get("type") if isinstance(obj, dict) else None
            if kind == "header":
                if traj.header is not None or traj.turns:
                    raise TrajectoryFormatError(path, lineno, "header must be the first line and appear once")
                if obj.get("schema") != SCHEMA:
                    raise TrajectoryFormatError(path, lineno, f"unsupported schema {obj.get('schema')!r}")
                traj.header = obj
            elif kind == "turn":
                try:
                    traj.turns.append(TurnRecord.from_dict(obj))
                except (KeyError, TypeError) as e:
                    raise TrajectoryFormatError(path, lineno, f"bad turn record: {e}") from None
                traj.turn_lines.append(lineno)
            elif kind == "end":
                traj.end = obj
            else:
                raise TrajectoryFormatError(path, lineno, f"unknown record type {kind!r}")
    return traj


def read_all(paths: Iterable) -> list[Trajectory]:
    return [read_trajectory(p) for p in paths]
