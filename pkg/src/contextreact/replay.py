"""Offline reconstruction of every rendered view from a trajectory file alone."""

from __future__ import annotations

from dataclasses import dataclass

from .backends import BackendError
from .core import History, render_view
from .loop import CONTEXT_REACT, Strategy, apply_turn, view_header
from .store import TrajectoryFormatError, read_trajectory
from .structured import ParseError, parse_output
from .tokens import get_estimator


class ReplayError(Exception):
    def __init__(self, path, line: int, round_index: int, turn: int, step: int, reason: str):
        super().__init__(f"{path}:{line}: replay diverged at round {round_index} turn {turn} (step {step}): {reason}")
        self.path = path
        self.line = line
        self.round = round_index
        self.turn = turn
        self.step = step
        self.reason = reason


@dataclass(frozen=True)
class ReplayedTurn:
    round: int
    turn: int
    step: int
    view: str


def first_difference(a: str, b: str) -> int:
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return i
    return min(len(a), len(b))


def replay(path) -> list[ReplayedTurn]:
    traj = read_trajectory(path)
    if not traj.turns:
        return []
    hdr = traj.header
    if hdr is None:
        raise TrajectoryFormatError(path, traj.turn_lines[0], "turn records without a header")
    strategy = Strategy(**hdr["strategy"])
    estimator = get_estimator(hdr["estimator"])
    managed = strategy.name == CONTEXT_REACT
    budget = hdr.get("token_budget") if managed else None

    out: list[ReplayedTurn] = []
    h = History()
    cur_round = 1
    for rec, line in zip(traj.turns, traj.turn_lines):
        def fail(reason):
            return ReplayError(path, line, rec.round, rec.turn, rec.step, reason)

        if rec.round != cur_round:
            h, cur_round = h.cleared(), rec.round
        header = view_header(hdr["question"], rec.round, hdr["max_rounds"])
        view = render_view(h, budget, header=header, estimator=estimator).text
        if view != rec.rendered_view:
            off = first_difference(view, rec.rendered_view)
            raise fail(f"rendered view differs from the stored one at character {off}")
        out.append(ReplayedTurn(rec.round, rec.turn, rec.step, view))

        output = None
        if rec.parse_error is None:
            try:
                output = parse_output(rec.raw_output)
            except ParseError as e:
                raise fail(f"stored raw output no longer parses: {e}") from None
        event = rec.strategy_event

        def summarize(_h, event=event):
            if event and event.get("kind") == "summary":
                return event["text"]
            raise BackendError(event.get("error", "summary failed") if event else "no summary was recorded")

        fx = apply_turn(h, strategy, output, rec.tool_result, rec.turn, estimator=estimator, summarize=summarize, header=header)
        got = fx.event["kind"] if fx.event else None
        want = event["kind"] if event else None
        if got != want:
            raise fail(f"strategy event {got!r} does not match recorded {want!r}")
        h = fx.history
    return out
