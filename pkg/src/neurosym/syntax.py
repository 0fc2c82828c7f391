"""Lexer for the symbolic mini-language."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SourceSpan:
    start_offset: int
    end_offset: int
    line: int  # 1-based, of start
    column: int  # 1-based, of start


# Token kinds
INT = "int"
REAL = "real"
STRING = "string"
IDENT = "ident"
SLOT = "slot"
OP = "op"
OPEN = "open"  # value is one of: paren, bracket, brace, assoc
CLOSE = "close"
EOF = "eof"


@dataclass(frozen=True)
class Token:
    kind: str
    value: object  # int magnitude, float, str text, operator symbol, delim kind, slot index
    span: SourceSpan


class LexError(Exception):
    def __init__(self, span: SourceSpan, message: str):
        super().__init__(f"{message} at line {span.line}, column {span.column}")
        self.span = span
        self.message = message


# Longest match first.
_MULTI_OPS = [":=", "==", "!=", "<=", ">=", "->", "&&", "||"]
_SINGLE_OPS = set("=<>+-*/^&;,")

_DELIMS = {
    "(": (OPEN, "paren"),
    ")": (CLOSE, "paren"),
    "[": (OPEN, "bracket"),
    "]": (CLOSE, "bracket"),
    "{": (OPEN, "brace"),
    "}": (CLOSE, "brace"),
}

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


def tokenize(source: str) -> list[Token]:
    """Lex `source` into tokens. Comments `(* ... *)` (nesting allowed) and
    whitespace are skipped. Raises LexError on unterminated strings/comments
    or illegal characters."""
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    def span_from(start: int, start_line: int, start_col: int) -> SourceSpan:
        return SourceSpan(start, i, start_line, start_col)

    def advance(k: int = 1) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if i < n and source[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = source[i]
        start, start_line, start_col = i, line, col

        if c.isspace():
            advance()
            continue

        # Comments, which may nest.
        if source.startswith("(*", i):
            depth = 1
            advance(2)
            while depth > 0:
                if i >= n:
                    raise LexError(span_from(start, start_line, start_col), "unterminated comment")
                if source.startswith("(*", i):
                    depth += 1
                    advance(2)
                elif source.startswith("*)", i):
                    depth -= 1
                    advance(2)
                else:
                    advance()
            continue

        if c == '"':
            advance()
            chars: list[str] = []
            while True:
                if i >= n:
                    raise LexError(span_from(start, start_line, start_col), "unterminated string")
                ch = source[i]
                if ch == '"':
                    advance()
                    break
                if ch == "\\":
                    advance()
                    if i >= n:
                        raise LexError(span_from(start, start_line, start_col), "unterminated string")
                    esc = source[i]
                    if esc not in _ESCAPES:
                        raise LexError(span_from(i, line, col), f"bad escape \\{esc}")
                    chars.append(_ESCAPES[esc])
                    advance()
                else:
                    chars.append(ch)
                    advance()
            tokens.append(Token(STRING, "".join(chars), span_from(start, start_line, start_col)))
            continue

        if c.isdigit():
            while i < n and source[i].isdigit():
                advance()
            # A dot followed by optional digits makes it a real literal.
            if i < n and source[i] == "." and not source.startswith("..", i):
                advance()
                while i < n and source[i].isdigit():
                    advance()
                text = source[start:i]
                tokens.append(Token(REAL, float(text), span_from(start, start_line, start_col)))
            else:
                tokens.append(Token(INT, int(source[start:i]), span_from(start, start_line, start_col)))
            continue

        if c.isalpha() or c == "_":
            while i < n and (source[i].isalnum() or source[i] == "_"):
                advance()
            tokens.append(Token(IDENT, source[start:i], span_from(start, start_line, start_col)))
            continue

        if c == "#":
            advance()
            if i < n and source[i].isdigit():
                d0 = i
                while i < n and source[i].isdigit():
                    advance()
                index = int(source[d0:i])
                if index < 1:
                    raise LexError(span_from(start, start_line, start_col), "slot index must be >= 1")
            else:
                index = 1
            tokens.append(Token(SLOT, index, span_from(start, start_line, start_col)))
            continue

        # `<|` and `|>` are single association delimiters, never `<`,`|` pairs.
        if source.startswith("<|", i):
            advance(2)
            tokens.append(Token(OPEN, "assoc", span_from(start, start_line, start_col)))
            continue
        if source.startswith("|>", i):
            advance(2)
            tokens.append(Token(CLOSE, "assoc", span_from(start, start_line, start_col)))
            continue

        matched = False
        for op in _MULTI_OPS:
            if source.startswith(op, i):
                advance(len(op))
                tokens.append(Token(OP, op, span_from(start, start_line, start_col)))
                matched = True
                break
        if matched:
            continue

        if c in _DELIMS:
            kind, delim = _DELIMS[c]
            advance()
            tokens.append(Token(kind, delim, span_from(start, start_line, start_col)))
            continue

        if c in _SINGLE_OPS:
            advance()
            tokens.append(Token(OP, c, span_from(start, start_line, start_col)))
            continue

        raise LexError(SourceSpan(start, start + 1, start_line, start_col), f"illegal character {c!r}")

    return tokens
