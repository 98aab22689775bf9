"""Episode runner for Context-ReAct and the baseline context strategies.

One turn: render the view, call the backend, parse the four-field output,
apply the meta-op batch (Context-ReAct only), run the tool call, append one
original step. Baselines ignore the model's meta-ops and reshape the history
by their own rule instead.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

from .backends import SUMMARY, Backend, BackendError, BackendRequest, load_system_prompt
from .core import ORIGINAL, BatchOutcome, History, Step, apply_batch, apply_compress, remediation_text, render_view
from .store import TrajectoryWriter, TurnRecord
from .structured import ParseError, StructuredOutput, op_to_wire, parse_output
from .tokens import DEFAULT_ESTIMATOR, Estimator
from .tools import ToolRegistry, execute

CONTEXT_REACT = "context-react"
APPEND_ONLY = "append-only"
SLIDING_WINDOW = "sliding-window"
DISCARD_ALL = "discard-all"
PERIODIC_SUMMARY = "periodic-summary"
STRATEGIES = (CONTEXT_REACT, APPEND_ONLY, SLIDING_WINDOW, DISCARD_ALL, PERIODIC_SUMMARY)

ANSWERED = "answered"
STEP_LIMIT = "step-limit"
ROUND_LIMIT = "round-limit"
BACKEND_FAILURE = "backend-failure"

FIXED_TIMESTAMP = "1970-01-01T00:00:00+00:00"


def wall_clock() -> str:
    return datetime.now(timezone.utc).isoformat()


def fixed_clock() -> str:
    return FIXED_TIMESTAMP


def load_summary_prompt() -> str:
    return resources.files("contextreact").joinpath("prompts").joinpath("summary_v1.txt").read_text(encoding="utf-8")


@dataclass(frozen=True)
class Strategy:
    name: str = CONTEXT_REACT
    window: int = 8  # sliding-window
    threshold: int = 32_000  # discard-all / periodic-summary, in estimator tokens

    def __post_init__(self):
        if self.name not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.name!r}; choose from {', '.join(STRATEGIES)}")
        if self.window < 1:
            raise ValueError("sliding-window size must be >= 1")
        if self.threshold < 1:
            raise ValueError("threshold must be >= 1")

    @classmethod
    def parse(cls, text: str, **defaults) -> "Strategy":
        """Accepts ``name``, ``name(n)`` or ``name:n``; ``n`` is the window or threshold."""
        m = re.fullmatch(r"\s*([a-z-]+)\s*(?:[(:]\s*(\d+)\s*\)?)?\s*", text)
        if not m:
            raise ValueError(f"cannot parse strategy {text!r}")
        name, arg = m.group(1), m.group(2)
        kw = dict(defaults)
        if arg is not None:
            kw["window" if name == SLIDING_WINDOW else "threshold"] = int(arg)
        return cls(name, **kw)

    def describe(self) -> str:
        if self.name == SLIDING_WINDOW:
            return f"{self.name}({self.window})"
        if self.name in (DISCARD_ALL, PERIODIC_SUMMARY):
            return f"{self.name}({self.threshold})"
        return self.name

    def to_dict(self) -> dict:
        return {"name": self.name, "window": self.window, "threshold": self.threshold}


@dataclass
class EpisodeConfig:
    question: str
    backend: Backend
    tools: ToolRegistry
    strategy: Strategy = field(default_factory=Strategy)
    max_tool_calls: int = 300
    max_rounds: int = 5
    token_budget: Optional[int] = 15_000
    system_prompt: Optional[str] = None
    estimator: Estimator = DEFAULT_ESTIMATOR
    temperature: Optional[float] = None
    max_output_tokens: Optional[int] = None
    episode_id: str = "episode-0"
    trajectory_path: Optional[Path] = None
    clock: Callable[[], str] = wall_clock
    keep_records: bool = True

    def __post_init__(self):
        if self.max_tool_calls < 1:
            raise ValueError("max_tool_calls must be >= 1")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if self.system_prompt is None:
            self.system_prompt = load_system_prompt()

    def header(self) -> dict:
        return {
            "episode_id": self.episode_id,
            "question": self.question,
            "strategy": self.strategy.to_dict(),
            "max_tool_calls": self.max_tool_calls,
            "max_rounds": self.max_rounds,
            "token_budget": self.token_budget,
            "estimator": self.estimator.name,
            "backend": getattr(self.backend, "name", type(self.backend).__name__),
        }


@dataclass
class EpisodeResult:
    answer: Optional[str]
    termination: str
    turns_used: int
    rounds_used: int
    trajectory: Optional[Path] = None
    history: History = field(default_factory=History)
    records: list[TurnRecord] = field(default_factory=list)
    token_trace: list[int] = field(default_factory=list)  # token_estimate_after per turn
    error: Optional[str] = None


def view_header(question: str, round_index: int, max_rounds: int) -> str:
    lines = [f"Question: {question}"]
    if max_rounds > 1:
        lines.append(f"Round {round_index} of {max_rounds}")
    return "\n".join(lines)


def parse_failure_text(err: ParseError) -> str:
    return (
        f"Error: your previous output could not be parsed ({err}). No tool was run and the context was not changed. "
        "Reply with <think>, <meta_tool_call>, <motivation> and <standard_tool_call> regions."
    )


# --- baseline strategies ---------------------------------------------------


def apply_strategy(
    h: History,
    strategy: Strategy,
    new_step: Step,
    *,
    estimator: Estimator = DEFAULT_ESTIMATOR,
    summarize: Optional[Callable[[History], str]] = None,
    header: str = "",
) -> tuple[History, Optional[dict]]:
    """Append ``new_step`` under a baseline rule; returns (history, event)."""
    name = strategy.name
    if name == CONTEXT_REACT:
        raise ValueError("context-react manages its context through the model's own meta-ops")
    event = None
    if name in (DISCARD_ALL, PERIODIC_SUMMARY) and len(h):
        size = estimator(render_view(h, header=header).text)
        if size > strategy.threshold:
            if name == DISCARD_ALL:
                h, event = h.cleared(), {"kind": "discard", "tokens": size}
            else:
                try:
                    if summarize is None:
                        raise BackendError("no summarizer configured")
                    text = summarize(h)
                    h = apply_compress(h, 1, len(h), text)
                    event = {"kind": "summary", "tokens": size, "text": text}
                except BackendError as e:
                    h = h.cleared()
                    event = {"kind": "summary-fallback", "tokens": size, "error": str(e)}
    h = h.append(new_step)
    if name == SLIDING_WINDOW and len(h) > strategy.window:
        h = History(h.steps[-strategy.window :], h.next_id)
    return h, event


# --- one turn --------------------------------------------------------------


@dataclass
class TurnEffects:
    outcome: BatchOutcome
    history: History
    observation: str
    event: Optional[dict]


def apply_turn(
    h: History,
    strategy: Strategy,
    output: Optional[StructuredOutput],
    tool_text: str,
    label: int,
    *,
    estimator: Estimator = DEFAULT_ESTIMATOR,
    summarize: Optional[Callable[[History], str]] = None,
    header: str = "",
) -> TurnEffects:
    """Deterministic part of a turn, shared by the live loop and replay.

    ``output`` is None when the raw output failed to parse; ``tool_text`` is
    then the parse-failure notice shown to the model.
    """
    if output is not None and strategy.name == CONTEXT_REACT:
        outcome = apply_batch(h, output.meta_ops)
    else:
        outcome = BatchOutcome(h)
    observation = tool_text
    remedy = remediation_text(outcome.errors)
    if remedy:
        observation = f"{observation}\n\n{remedy}"
    step = Step(
        id=0,
        kind=ORIGINAL,
        reasoning=output.think if output is not None else "",
        tool_call=output.tool_call if output is not None else None,
        observation=observation,
        label=label,
    )
    if strategy.name == CONTEXT_REACT:
        return TurnEffects(outcome, outcome.history.append(step), observation, None)
    new_h, event = apply_strategy(
        outcome.history, strategy, step, estimator=estimator, summarize=summarize, header=header
    )
    return TurnEffects(outcome, new_h, observation, event)


def _ops_summary(output: Optional[StructuredOutput], outcome: BatchOutcome, managed: bool) -> list[dict]:
    if output is None:
        return []
    failed = {e.index for e in outcome.errors}
    return [
        {**op_to_wire(op), "status": ("error" if i in failed else "applied") if managed else "ignored"}
        for i, op in enumerate(output.meta_ops)
    ]


def step_once(h: History, cfg: EpisodeConfig, *, round_index: int = 1, turn: int = 1, step: Optional[int] = None):
    """Run one turn; returns ``(new_history, TurnRecord)``.

    Raises ``BackendError`` when the generator fails; tool failures become
    observation text.
    """
    step = turn if step is None else step
    header = view_header(cfg.question, round_index, cfg.max_rounds)
    managed = cfg.strategy.name == CONTEXT_REACT
    # budget notices only where the model can act on them
    view = render_view(h, cfg.token_budget if managed else None, header=header, estimator=cfg.estimator)
    raw = cfg.backend.complete(
        BackendRequest(cfg.system_prompt, view.text, cfg.temperature, cfg.max_output_tokens, step)
    )

    output, parse_error, result = None, None, None
    try:
        output = parse_output(raw)
    except ParseError as e:
        parse_error = str(e)
        tool_text = parse_failure_text(e)
    if output is not None:
        result = execute(output.tool_call, cfg.tools)
        tool_text = result.text

    def summarize(hist: History) -> str:
        ctx = render_view(hist, header=header, estimator=cfg.estimator).text
        return cfg.backend.complete(
            BackendRequest(load_summary_prompt(), ctx, cfg.temperature, cfg.max_output_tokens, step, SUMMARY)
        )

    fx = apply_turn(
        h, cfg.strategy, output, tool_text, turn, estimator=cfg.estimator, summarize=summarize, header=header
    )
    after = render_view(fx.history, header=header, estimator=cfg.estimator).tokens
    rec = TurnRecord(
        episode_id=cfg.episode_id,
        round=round_index,
        turn=turn,
        step=step,
        rendered_view=view.text,
        raw_output=raw,
        ops=_ops_summary(output, fx.outcome, managed),
        errors=[{"index": e.index, "code": e.code, "message": e.message} for e in fx.outcome.errors],
        parse_error=parse_error,
        warnings=list(output.warnings) if output is not None else [],
        tool_call=output.tool_call.to_dict() if output is not None else None,
        tool_result=tool_text,
        tool_ok=result.ok if result is not None else False,
        final=bool(result and result.final),
        answer=result.answer if result is not None and result.final else None,
        strategy_event=fx.event,
        token_estimate_before=view.tokens,
        token_estimate_after=after,
        timestamp=cfg.clock(),
    )
    return fx.history, rec


def run_episode(cfg: EpisodeConfig) -> EpisodeResult:
    """Loop turns until ``final_answer``, the limits, or a backend failure.

    With ``max_rounds > 1``, exhausting ``max_tool_calls`` discards the whole
    context and starts a fresh round seeded only with the question.
    """
    writer = TrajectoryWriter(cfg.trajectory_path, cfg.header()) if cfg.trajectory_path is not None else None
    h = History()
    round_index, turn, step = 1, 0, 0
    records: list[TurnRecord] = []
    trace: list[int] = []
    answer, error = None, None
    while True:
        if turn == cfg.max_tool_calls:
            if round_index < cfg.max_rounds:
                round_index, turn, h = round_index + 1, 0, h.cleared()
                continue
            termination = ROUND_LIMIT if cfg.max_rounds > 1 else STEP_LIMIT
            break
        turn += 1
        step += 1
        try:
            h, rec = step_once(h, cfg, round_index=round_index, turn=turn, step=step)
        except BackendError as e:
            termination, error = BACKEND_FAILURE, str(e)
            turn -= 1
            step -= 1
            break
        except BaseException:
            if writer is not None:
                writer.close()
            raise
        if writer is not None:
            writer.append_turn(rec)
        if cfg.keep_records:
            records.append(rec)
        trace.append(rec.token_estimate_after)
        if rec.final:
            termination, answer = ANSWERED, rec.answer
            break
    result = EpisodeResult(
        answer=answer,
        termination=termination,
        turns_used=step,
        rounds_used=round_index,
        trajectory=writer.path if writer is not None else None,
        history=h,
        records=records,
        token_trace=trace,
        error=error,
    )
    if writer is not None:
        writer.finish(
            {
                "episode_id": cfg.episode_id,
                "termination": termination,
                "answer": answer,
                "turns_used": result.turns_used,
                "rounds_used": result.rounds_used,
                "error": error,
            }
        )
    return result
