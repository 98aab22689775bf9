"""Context-ReAct runtime: an agent loop whose model co-generates context
meta-operations (skip, compress, rollback, snippet, delete) with each tool call."""

from .core import (
    BatchOutcome,
    Compress,
    Delete,
    History,
    MetaOp,
    OpError,
    Rollback,
    Skip,
    Snippet,
    Step,
    apply_batch,
    apply_compress,
    apply_delete,
    apply_rollback,
    apply_skip,
    apply_snippet,
    render_view,
)
from .structured import ParseError, StructuredOutput, parse_output, render_output
from .tools import ToolCall, ToolResult

__version__ = "0.1.0"
