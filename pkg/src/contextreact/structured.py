"""Four-field structured model output: parsing and canonical rendering.

Wire grammar (regions may appear in any order in input; canonical output
fixes the order below)::

    <think>...</think>
    <meta_tool_call>[{"op": "compress", "from": 1, "to": 4, "summary": "..."}, ...]</meta_tool_call>
    <motivation>...</motivation>
    <standard_tool_call>{"name": "search", "arguments": {...}}</standard_tool_call>

Region bodies are captured byte-for-byte. ``from``/``to`` are the first and
last display indices of a Compress range.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Optional

from .core import Compress, Delete, MetaOp, Rollback, Skip, Snippet
from .tools import ToolCall

TAGS = ("think", "meta_tool_call", "motivation", "standard_tool_call")
_TAG_RE = re.compile(r"<(/?)(" + "|".join(TAGS) + r")>")

OP_FIELDS = {
    "skip": (),
    "compress": ("from", "to", "summary"),
    "rollback": ("k", "summary"),
    "snippet": ("k", "pre", "suf"),
    "delete": ("k",),
}


class ParseError(ValueError):
    def __init__(self, position: int, reason: str):
        super().__init__(f"parse error at offset {position}: {reason}")
        self.position = position
        self.reason = reason


@dataclass
class StructuredOutput:
    think: str
    meta_ops: list[MetaOp]
    motivation: str
    tool_call: ToolCall
    warnings: list[str] = field(default_factory=list, compare=False)


# --- meta-op wire objects --------------------------------------------------


def op_to_wire(op: MetaOp) -> dict:
    if isinstance(op, Skip):
        return {"op": "skip"}
    if isinstance(op, Compress):
        return {"op": "compress", "from": op.a, "to": op.b, "summary": op.sigma}
    if isinstance(op, Rollback):
        return {"op": "rollback", "k": op.k, "summary": op.sigma}
    if isinstance(op, Snippet):
        return {"op": "snippet", "k": op.k, "pre": op.pre, "suf": op.suf}
    if isinstance(op, Delete):
        return {"op": "delete", "k": op.k}
    raise TypeError(f"not a meta-operation: {op!r}")


def _index(value: Any, name: str, pos: int) -> int:
    if isinstance(value, bool):
        raise ParseError(pos, f"non-numeric index {name}={value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str) and value.strip().lstrip("-").isdigit():
        return int(value.strip())
    raise ParseError(pos, f"non-numeric index {name}={value!r}")


def _text(value: Any, name: str, pos: int) -> str:
    if not isinstance(value, str):
        raise ParseError(pos, f"field {name!r} must be a string, got {type(value).__name__}")
    return value


def op_from_wire(obj: Any, pos: int = 0, warnings: Optional[list] = None) -> MetaOp:
    if not isinstance(obj, dict):
        raise ParseError(pos, f"meta-operation must be an object, got {type(obj).__name__}")
    kind = obj.get("op")
    if kind not in OP_FIELDS:
        raise ParseError(pos, f"unknown op discriminator {kind!r}")
    required = OP_FIELDS[kind]
    missing = [f for f in required if f not in obj]
    if missing:
        raise ParseError(pos, f"{kind} is missing field(s) {', '.join(missing)}")
    extra = sorted(set(obj) - set(required) - {"op"})
    if extra and warnings is not None:
        warnings.append(f"ignored unknown field(s) {', '.join(extra)} in {kind} op")
    if kind == "skip":
        return Skip()
    if kind == "compress":
        return Compress(_index(obj["from"], "from", pos), _index(obj["to"], "to", pos), _text(obj["summary"], "summary", pos))
    if kind == "rollback":
        return Rollback(_index(obj["k"], "k", pos), _text(obj["summary"], "summary", pos))
    if kind == "snippet":
        return Snippet(_index(obj["k"], "k", pos), _text(obj["pre"], "pre", pos), _text(obj["suf"], "suf", pos))
    return Delete(_index(obj["k"], "k", pos))


# --- parsing ---------------------------------------------------------------


def _regions(raw: str) -> dict[str, tuple[int, int]]:
    """Locate each tagged region as (body_start, body_end)."""
    found: dict[str, tuple[int, int]] = {}
    open_tag: Optional[str] = None
    open_at = body_start = 0
    for m in _TAG_RE.finditer(raw):
        closing, tag = m.group(1) == "/", m.group(2)
        if not closing:
            if open_tag is not None:
                raise ParseError(m.start(), f"<{tag}> opened inside <{open_tag}> (nested regions are not allowed)")
            if tag in found:
                raise ParseError(m.start(), f"duplicate <{tag}> region")
            open_tag, open_at, body_start = tag, m.start(), m.end()
        else:
            if open_tag != tag:
                raise ParseError(m.start(), f"unbalanced </{tag}>" + (f" while <{open_tag}> is open" if open_tag else ""))
            found[tag] = (body_start, m.start())
            open_tag = None
    if open_tag is not None:
        raise ParseError(open_at, f"<{open_tag}> is never closed")
    return found


def _json(body: str, offset: int, what: str):
    try:
        return json.loads(body)
    except json.JSONDecodeError as e:
        raise ParseError(offset + e.pos, f"malformed {what} JSON: {e.msg}") from None


def parse_output(raw: str) -> StructuredOutput:
    regions = _regions(raw)
    warnings: list[str] = []

    covered, last = [], 0
    for start, end in sorted(regions.values()):
        covered.append(raw[last:start])
        last = end
    covered.append(raw[last:])
    stray = _TAG_RE.sub("", "".join(covered))
    if stray.strip():
        warnings.append("ignored text outside tagged regions")

    for tag in ("think", "standard_tool_call"):
        if tag not in regions:
            raise ParseError(len(raw), f"missing <{tag}> region")

    think = raw[slice(*regions["think"])]

    if "motivation" in regions:
        motivation = raw[slice(*regions["motivation"])]
    else:
        motivation = ""
        warnings.append("missing <motivation> region")

    if "meta_tool_call" in regions:
        start, end = regions["meta_tool_call"]
        body = _json(raw[start:end], start, "meta_tool_call")
        if isinstance(body, dict):
            warnings.append("meta_tool_call body was a single object, not a list")
            body = [body]
        if not isinstance(body, list):
            raise ParseError(start, "meta_tool_call body must be a JSON array of operation objects")
        meta_ops = [op_from_wire(obj, start, warnings) for obj in body]
    else:
        meta_ops = [Skip()]
        warnings.append("missing <meta_tool_call> region; treated as skip")

    start, end = regions["standard_tool_call"]
    call = _json(raw[start:end], start, "standard_tool_call")
    if not isinstance(call, dict) or not isinstance(call.get("name"), str) or not call["name"]:
        raise ParseError(start, 'standard_tool_call must be an object with a string "name"')
    args = call.get("arguments", {})
    if "arguments" not in call:
        warnings.append("standard_tool_call has no arguments; using {}")
    if not isinstance(args, dict):
        raise ParseError(start, '"arguments" must be an object')
    extra = sorted(set(call) - {"name", "arguments"})
    if extra:
        warnings.append(f"ignored unknown field(s) {', '.join(extra)} in standard_tool_call")

    return StructuredOutput(think, meta_ops, motivation, ToolCall(call["name"], args), warnings)


# --- rendering -------------------------------------------------------------


def _dumps(obj, sort_keys=False) -> str:
    # "<" only occurs inside JSON strings; escaping it keeps tag lookalikes in
    # summaries or arguments from closing a region early
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"), sort_keys=sort_keys).replace("<", "\\u003c")


def render_meta_ops(ops) -> str:
    return _dumps([op_to_wire(op) for op in ops])


def render_tool_call(call: ToolCall) -> str:
    return '{"name":' + _dumps(call.name) + ',"arguments":' + _dumps(call.arguments, sort_keys=True) + "}"


def render_output(x: StructuredOutput) -> str:
    return (
        f"<think>{x.think}</think>\n"
        f"<meta_tool_call>{render_meta_ops(x.meta_ops)}</meta_tool_call>\n"
        f"<motivation>{x.motivation}</motivation>\n"
        f"<standard_tool_call>{render_tool_call(x.tool_call)}</standard_tool_call>"
    )
