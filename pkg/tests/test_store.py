import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contextreact.store import (
    SCHEMA,
    DuplicateTurnError,
    TrajectoryFormatError,
    TrajectoryIOError,
    TrajectoryWriter,
    TurnRecord,
    read_trajectory,
)


def rec(turn=1, round=1, step=None, episode="e", **kw):
    base = dict(
        episode_id=episode,
        round=round,
        turn=turn,
        step=turn if step is None else step,
        rendered_view=f"view {turn}",
        raw_output=f"raw {turn}",
        ops=[],
        errors=[],
        parse_error=None,
        warnings=[],
        tool_call={"name": "search", "arguments": {"query": "q"}},
        tool_result="res",
        tool_ok=True,
        final=False,
        answer=None,
        strategy_event=None,
        token_estimate_before=1,
        token_estimate_after=2,
        timestamp="1970-01-01T00:00:00+00:00",
    )
    base.update(kw)
    return TurnRecord(**base)


def test_first_turn_round_trip(tmp_path):
    p = tmp_path / "t.jsonl"
    r = rec(ops=[{"op": "delete", "k": 1, "status": "applied"}], warnings=["w"])
    with TrajectoryWriter(p, {"episode_id": "e", "estimator": "bytes/4"}) as w:
        w.append_turn(r)
    lines = p.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 2
    assert json.loads(lines[0]) == {"type": "header", "schema": SCHEMA, "episode_id": "e", "estimator": "bytes/4"}
    t = read_trajectory(p)
    assert t.turns == [r] and t.turn_lines == [2] and t.end is None


text = st.text(alphabet=st.characters(blacklist_categories=("Cs",)))


@settings(max_examples=100, deadline=None)
@given(view=text, raw=text, result=text, after=st.integers(0, 10**9))
def test_record_round_trip_any_text(tmp_path_factory, view, raw, result, after):
    p = tmp_path_factory.mktemp("rt") / "t.jsonl"
    r = rec(rendered_view=view, raw_output=raw, tool_result=result, token_estimate_after=after)
    with TrajectoryWriter(p, {}, fsync=False) as w:
        w.append_turn(r)
    assert read_trajectory(p).turns == [r]


def test_300_turns_dense(tmp_path):
    p = tmp_path / "t.jsonl"
    with TrajectoryWriter(p, {}, fsync=False) as w:
        for t in range(1, 301):
            w.append_turn(rec(t))
        w.finish({"termination": "step-limit"})
    traj = read_trajectory(p)
    assert [r.turn for r in traj.turns] == list(range(1, 301))
    assert traj.end["termination"] == "step-limit"


def test_duplicate_and_gaps_rejected(tmp_path):
    with TrajectoryWriter(tmp_path / "t.jsonl", {}, fsync=False) as w:
        w.append_turn(rec(1))
        with pytest.raises(DuplicateTurnError):
            w.append_turn(rec(1))
        with pytest.raises(DuplicateTurnError):
            w.append_turn(rec(3))
        with pytest.raises(DuplicateTurnError):
            w.append_turn(rec(2, round=2, step=2))  # new rounds restart at turn 1
        w.append_turn(rec(2))
        w.append_turn(rec(1, round=2, step=3))
    assert len(read_trajectory(tmp_path / "t.jsonl").turns) == 3


def test_existing_file_not_overwritten(tmp_path):
    p = tmp_path / "t.jsonl"
    p.write_text("keep\n")
    with pytest.raises(TrajectoryIOError):
        TrajectoryWriter(p, {})
    assert p.read_text() == "keep\n"


@pytest.mark.parametrize(
    "lines, bad_line",
    [
        (['{"type":"header","schema":"%s"}' % SCHEMA, "{not json"], 2),
        (['{"type":"header","schema":"other/9"}'], 1),
        (['{"type":"header","schema":"%s"}' % SCHEMA, '{"type":"turn","episode_id":"e"}'], 2),
        (['{"type":"header","schema":"%s"}' % SCHEMA, "", '{"type":"weird"}'], 3),
        (['{"type":"header","schema":"%s"}' % SCHEMA, '{"type":"header","schema":"%s"}' % SCHEMA], 2),
    ],
)
def test_malformed_lines_named(tmp_path, lines, bad_line):
    p = tmp_path / "t.jsonl"
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(TrajectoryFormatError) as e:
        read_trajectory(p)
    assert e.value.line == bad_line and f":{bad_line}:" in str(e.value)
