"""Step history and the five context meta-operations.

Histories are immutable values. Every operator takes a ``History`` and
returns a new one; steps outside the targeted range are carried over as the
same objects, so frame conditions hold by construction.

Indices in operator arguments are 1-based *display* indices: position ``k``
is the ``k``-th entry of the view the model was shown.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import ClassVar, Iterator, Optional, Sequence, Union

from .tokens import DEFAULT_ESTIMATOR, Estimator
from .tools import ToolCall

ORIGINAL = "original"
SUMMARY = "summary"

# OpError codes
OUT_OF_RANGE = "out-of-range"
CONSUMED_REFERENCE = "consumed-reference"
ANCHOR_NOT_FOUND = "anchor-not-found"
ANCHORS_INVERTED = "anchors-inverted"
MALFORMED = "malformed"

REMEDIATION = {
    OUT_OF_RANGE: "Indices must refer to entries 1..N of the context you were shown.",
    CONSUMED_REFERENCE: "An earlier operation in the same batch already removed or replaced that entry; "
    "list operations so that their targets do not overlap.",
    ANCHOR_NOT_FOUND: "Both anchors must appear verbatim in the entry's observation, with suf after pre.",
    ANCHORS_INVERTED: "The suf anchor must occur after the pre anchor.",
    MALFORMED: "Check the operation's parameters against the operator documentation.",
}


@dataclass(frozen=True)
class Step:
    """One trajectory unit.

    ``label`` is the original turn number of an original step (what the view
    shows as "Step n"). ``origin_span`` records the first and last original
    labels a summary step replaced.
    """

    id: int
    kind: str = ORIGINAL
    reasoning: str = ""
    tool_call: Optional[ToolCall] = None
    observation: str = ""
    label: Optional[int] = None
    origin_span: Optional[tuple[int, int]] = None
    snippet_applied: bool = False

    def __post_init__(self):
        if self.kind == SUMMARY:
            if self.reasoning or self.tool_call is not None or self.origin_span is None:
                raise ValueError("summary step must have empty reasoning, no tool call, and an origin_span")
        elif self.kind == ORIGINAL:
            if self.origin_span is not None:
                raise ValueError("original step cannot carry an origin_span")
            if self.label is None:
                raise ValueError("original step needs a label")
        else:
            raise ValueError(f"unknown step kind {self.kind!r}")

    @property
    def span(self) -> tuple[int, int]:
        if self.kind == SUMMARY:
            return self.origin_span
        return (self.label, self.label)


@dataclass(frozen=True)
class History:
    steps: tuple[Step, ...] = ()
    next_id: int = 1

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self) -> Iterator[Step]:
        return iter(self.steps)

    def __getitem__(self, i):
        return self.steps[i]

    def ids(self) -> list[int]:
        return [s.id for s in self.steps]

    def position_of(self, step_id: int) -> Optional[int]:
        for i, s in enumerate(self.steps):
            if s.id == step_id:
                return i
        return None

    def append(self, step: Step) -> "History":
        """Append ``step`` under a fresh id (the id it carries is ignored)."""
        return History(self.steps + (replace(step, id=self.next_id),), self.next_id + 1)

    def cleared(self) -> "History":
        # ids are never reused within an episode, so the counter survives
        return History((), self.next_id)


# --- meta-operations -------------------------------------------------------


@dataclass(frozen=True)
class Skip:
    kind: ClassVar[str] = "skip"


@dataclass(frozen=True)
class Compress:
    a: int
    b: int
    sigma: str
    kind: ClassVar[str] = "compress"


@dataclass(frozen=True)
class Rollback:
    k: int
    sigma: str
    kind: ClassVar[str] = "rollback"


@dataclass(frozen=True)
class Snippet:
    k: int
    pre: str
    suf: str
    kind: ClassVar[str] = "snippet"


@dataclass(frozen=True)
class Delete:
    k: int
    kind: ClassVar[str] = "delete"


MetaOp = Union[Skip, Compress, Rollback, Snippet, Delete]
OP_KINDS = ("skip", "compress", "rollback", "snippet", "delete")


class OpError(Exception):
    def __init__(self, op: MetaOp, code: str, message: str, index: Optional[int] = None):
        super().__init__(f"{code}: {message}")
        self.op = op
        self.code = code
        self.message = message
        self.index = index

    @property
    def remediation(self) -> str:
        return REMEDIATION[self.code]

    def __eq__(self, other):
        if not isinstance(other, OpError):
            return NotImplemented
        return (self.op, self.code, self.message, self.index) == (other.op, other.code, other.message, other.index)

    def __hash__(self):
        return hash((self.code, self.message, self.index))

    def __repr__(self):
        return f"OpError({self.op!r}, {self.code!r}, {self.message!r}, index={self.index})"


@dataclass(frozen=True)
class BatchOutcome:
    history: History
    applied: tuple[MetaOp, ...] = ()
    errors: tuple[OpError, ...] = ()


# --- single operators (display indices) ------------------------------------


def _is_index(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _check_k(h: History, op: MetaOp, k) -> None:
    if not _is_index(k):
        raise OpError(op, MALFORMED, f"index {k!r} is not an integer")
    if not 1 <= k <= len(h):
        raise OpError(op, OUT_OF_RANGE, f"index {k} outside 1..{len(h)}")


def _check_range(h: History, op: MetaOp, a, b) -> None:
    if not (_is_index(a) and _is_index(b)):
        raise OpError(op, MALFORMED, f"range ({a!r}, {b!r}) is not a pair of integers")
    if not 1 <= a <= b <= len(h):
        raise OpError(op, OUT_OF_RANGE, f"range {a}..{b} invalid for 1..{len(h)} (need a <= b)")


def _replace_range(h: History, lo: int, hi: int, sigma: str) -> History:
    """Replace 0-based half-open ``steps[lo:hi]`` with one summary step.

    An empty summary drops the range outright and consumes no id.
    """
    steps = h.steps
    if sigma == "":
        return History(steps[:lo] + steps[hi:], h.next_id)
    span = (steps[lo].span[0], steps[hi - 1].span[1])
    summary = Step(id=h.next_id, kind=SUMMARY, observation=sigma, origin_span=span)
    return History(steps[:lo] + (summary,) + steps[hi:], h.next_id + 1)


def extract_snippet(text: str, pre: str, suf: str) -> Optional[str]:
    """Span from the first ``pre`` through the first ``suf`` that starts at or
    after the end of that ``pre``; both anchors included. ``None`` if absent."""
    start = text.find(pre)
    if start < 0:
        return None
    s = text.find(suf, start + len(pre))
    if s < 0:
        return None
    return text[start : s + len(suf)]


def _snippet_at(h: History, pos: int, op: Snippet) -> History:
    if not isinstance(op.pre, str) or not isinstance(op.suf, str) or not op.pre or not op.suf:
        raise OpError(op, MALFORMED, "snippet anchors pre and suf must be non-empty strings")
    step = h.steps[pos]
    if not step.observation:
        raise OpError(op, ANCHOR_NOT_FOUND, f"entry {pos + 1} has an empty observation")
    kept = extract_snippet(step.observation, op.pre, op.suf)
    if kept is None:
        if op.pre not in step.observation:
            msg = f"pre anchor {op.pre!r} not found in entry {pos + 1}"
        else:
            msg = f"suf anchor {op.suf!r} does not occur after pre anchor {op.pre!r} in entry {pos + 1}"
        raise OpError(op, ANCHOR_NOT_FOUND, msg)
    new = replace(step, observation=kept, snippet_applied=True)
    return History(h.steps[:pos] + (new,) + h.steps[pos + 1 :], h.next_id)


def apply_skip(h: History) -> History:
    return h


def apply_compress(h: History, a: int, b: int, sigma: str) -> History:
    op = Compress(a, b, sigma)
    _check_range(h, op, a, b)
    return _replace_range(h, a - 1, b, sigma)


def apply_rollback(h: History, k: int, sigma: str) -> History:
    op = Rollback(k, sigma)
    _check_k(h, op, k)
    return _replace_range(h, k - 1, len(h), sigma)


def apply_snippet(h: History, k: int, pre: str, suf: str) -> History:
    op = Snippet(k, pre, suf)
    _check_k(h, op, k)
    return _snippet_at(h, k - 1, op)


def apply_delete(h: History, k: int) -> History:
    _check_k(h, Delete(k), k)
    return History(h.steps[: k - 1] + h.steps[k:], h.next_id)


def apply_op(h: History, op: MetaOp) -> History:
    if isinstance(op, Skip):
        return apply_skip(h)
    if isinstance(op, Compress):
        return apply_compress(h, op.a, op.b, op.sigma)
    if isinstance(op, Rollback):
        return apply_rollback(h, op.k, op.sigma)
    if isinstance(op, Snippet):
        return apply_snippet(h, op.k, op.pre, op.suf)
    if isinstance(op, Delete):
        return apply_delete(h, op.k)
    raise TypeError(f"not a meta-operation: {op!r}")


# --- composite application -------------------------------------------------


def _resolve(snapshot: History, op: MetaOp) -> tuple[int, ...]:
    """Map an op's display indices onto persistent step ids of the snapshot."""
    if isinstance(op, Skip):
        return ()
    if isinstance(op, Compress):
        _check_range(snapshot, op, op.a, op.b)
        return (snapshot[op.a - 1].id, snapshot[op.b - 1].id)
    if isinstance(op, (Rollback, Snippet, Delete)):
        _check_k(snapshot, op, op.k)
        if isinstance(op, Rollback) and not isinstance(op.sigma, str):
            raise OpError(op, MALFORMED, "rollback summary must be a string")
        return (snapshot[op.k - 1].id,)
    raise OpError(op, MALFORMED, f"not a meta-operation: {op!r}")


def _apply_resolved(h: History, op: MetaOp, ids: tuple[int, ...]) -> History:
    positions = [h.position_of(i) for i in ids]
    if any(p is None for p in positions):
        raise OpError(op, CONSUMED_REFERENCE, "target entry was consumed by an earlier operation in this batch")
    if isinstance(op, Skip):
        return h
    if isinstance(op, Compress):
        if not isinstance(op.sigma, str):
            raise OpError(op, MALFORMED, "compress summary must be a string")
        return _replace_range(h, positions[0], positions[1] + 1, op.sigma)
    if isinstance(op, Rollback):
        return _replace_range(h, positions[0], len(h), op.sigma)
    if isinstance(op, Snippet):
        return _snippet_at(h, positions[0], op)
    pos = positions[0]
    return History(h.steps[:pos] + h.steps[pos + 1 :], h.next_id)


def apply_batch(h: History, ops: Sequence[MetaOp]) -> BatchOutcome:
    """Apply ``ops`` in order; indices are read against ``h`` as shown.

    Failing ops are collected, never raised; they leave the history as it was
    before that op.
    """
    resolved = []
    for i, op in enumerate(ops):
        try:
            resolved.append(_resolve(h, op))
        except OpError as e:
            e.index = i
            resolved.append(e)
    cur = h
    applied, errors = [], []
    for i, (op, item) in enumerate(zip(ops, resolved)):
        if isinstance(item, OpError):
            errors.append(item)
            continue
        try:
            cur = _apply_resolved(cur, op, item)
        except OpError as e:
            e.index = i
            errors.append(e)
            continue
        applied.append(op)
    return BatchOutcome(cur, tuple(applied), tuple(errors))


def describe_op(op: MetaOp) -> str:
    if isinstance(op, Compress):
        return f"compress from={op.a} to={op.b}"
    if isinstance(op, (Rollback, Delete)):
        return f"{op.kind} k={op.k}"
    if isinstance(op, Snippet):
        return f"snippet k={op.k}"
    return op.kind


def remediation_text(errors: Sequence[OpError]) -> str:
    """Text appended to the next observation so the policy can self-correct."""
    if not errors:
        return ""
    lines = ["[meta-op errors]"]
    for e in errors:
        pos = "" if e.index is None else f"op {e.index + 1} "
        lines.append(f"- {pos}({describe_op(e.op)}) {e.code}: {e.message}. {e.remediation}")
    return "\n".join(lines)


# --- rendering -------------------------------------------------------------


@dataclass(frozen=True)
class RenderedView:
    text: str
    numbering: tuple[tuple[int, int], ...] = field(default=())  # (display index, step id)
    tokens: int = 0
    over_budget: bool = False


def format_tool_call(call: Optional[ToolCall]) -> str:
    if call is None:
        return "(none)"
    return f"{call.name} {json.dumps(call.arguments, ensure_ascii=False, sort_keys=True)}"


def render_step(display: int, step: Step) -> str:
    if step.kind == SUMMARY:
        a, b = step.origin_span
        return f"[{display}] [Steps {a}–{b} | compressed] {step.observation}"
    marker = " [snippet]" if step.snippet_applied else ""
    return (
        f"[{display}] Step {step.label}\n"
        f"Reasoning: {step.reasoning}\n"
        f"Tool call: {format_tool_call(step.tool_call)}\n"
        f"Observation{marker}: {step.observation}"
    )


def budget_notice(tokens: int, budget: int) -> str:
    return (
        f"[budget warning] The context above is about {tokens} tokens, over the {budget}-token budget. "
        "Consider compress, snippet, delete or rollback."
    )


def render_view(
    h: History,
    budget: Optional[int] = None,
    *,
    header: str = "",
    estimator: Estimator = DEFAULT_ESTIMATOR,
) -> RenderedView:
    """Render ``h`` as the text the model conditions on.

    Entries are numbered 1..len(h) and separated by blank lines. ``header``
    (question, round marker) goes first. If ``budget`` is set and the body
    exceeds it, a budget notice is appended; nothing is ever truncated.
    """
    parts = [header] if header else []
    parts.extend(render_step(i, s) for i, s in enumerate(h.steps, start=1))
    text = "\n\n".join(parts)
    numbering = tuple((i, s.id) for i, s in enumerate(h.steps, start=1))
    over = False
    if budget is not None:
        body_tokens = estimator(text)
        if body_tokens > budget:
            over = True
            text = text + "\n\n" + budget_notice(body_tokens, budget)
    return RenderedView(text, numbering, estimator(text), over)
