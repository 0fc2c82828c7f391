"""Pulling tagged programs out of completion text and classifying them.

Every completion lands in exactly one of four buckets: no code at all, a
syntax error, a runtime error, or an executed answer. The Code%/NoErr%
statistics aggregate these buckets over a corpus.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .engine import Evaluator, Limits
from .errors import EvalError
from .parser import LexError, ParseError, parse_program
from .syntax import SourceSpan
from .values import Value

OPEN_TAG = "<neurosymtag>"
CLOSE_TAG = "</neurosymtag>"

_TAGGED = re.compile(re.escape(OPEN_TAG) + r"(.*?)" + re.escape(CLOSE_TAG), re.DOTALL)


@dataclass(frozen=True)
class CompletionRecord:
    id: str
    prompt_id: str
    completion_text: str
    prompt_token_len: int = 0
    output_token_len: int = 0


# Outcome variants
NO_CODE = "no_code"
SYNTAX_ERROR = "syntax_error"
RUNTIME_ERROR = "runtime_error"
EXECUTED = "executed"


@dataclass(frozen=True)
class Outcome:
    kind: str
    extracted_source: Optional[str] = None
    answer: Optional[Value] = None
    error_kind: Optional[str] = None  # EvalError kind for runtime errors
    message: Optional[str] = None
    span: Optional[SourceSpan] = None
    eval_steps_used: int = 0

    @property
    def has_code(self) -> bool:
        return self.kind != NO_CODE

    @property
    def error_free(self) -> bool:
        return self.kind == EXECUTED


def extract_tagged_code(text: str) -> list[str]:
    """Contents of each well-formed tag pair, in order and trimmed. An
    unmatched opening tag salvages the remainder of the text as one block
    (covers truncated generations)."""
    blocks = [m.group(1).strip() for m in _TAGGED.finditer(text)]
    last_close = text.rfind(CLOSE_TAG)
    tail_open = text.rfind(OPEN_TAG)
    if tail_open != -1 and tail_open > last_close:
        blocks.append(text[tail_open + len(OPEN_TAG):].strip())
    return blocks


def classify_completion(record: CompletionRecord, limits: Optional[Limits] = None) -> Outcome:
    """Classify one completion: the last tagged block is authoritative
    (chat models revise earlier drafts)."""
    blocks = extract_tagged_code(record.completion_text)
    if not blocks:
        return Outcome(NO_CODE)
    source = blocks[-1]
    try:
        program = parse_program(source)
    except (LexError, ParseError) as err:
        return Outcome(SYNTAX_ERROR, extracted_source=source, message=err.message, span=err.span)
    evaluator = Evaluator(limits=limits)
    try:
        answer = evaluator.run(program)
    except EvalError as err:
        return Outcome(RUNTIME_ERROR, extracted_source=source, error_kind=err.kind,
                       message=err.message, eval_steps_used=evaluator.steps_used)
    return Outcome(EXECUTED, extracted_source=source, answer=answer,
                   eval_steps_used=evaluator.steps_used)
