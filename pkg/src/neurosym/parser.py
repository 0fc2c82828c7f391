"""Precedence-climbing parser producing Expr trees."""

from __future__ import annotations

from . import syntax
from .ast import Apply, Assoc, Expr, Integer, ListExpr, PureFn, Real, Slot, Str, Sym, is_head
from .syntax import LexError, SourceSpan, Token, tokenize

__all__ = ["ParseError", "LexError", "parse_program"]


class ParseError(Exception):
    def __init__(self, span: SourceSpan, message: str):
        super().__init__(f"{message} at line {span.line}, column {span.column}")
        self.span = span
        self.message = message


# Binding powers, loosest to tightest. Application `f[...]` binds tightest.
SEMI = 10
ASSIGN = 20
RULE = 30
AMP = 40
OR = 50
AND = 60
CMP = 70
ADD = 80
MUL = 90
UNARY = 100
POW = 110
CALL = 120

# infix operator -> (binding power, canonical head, right-assoc)
_INFIX = {
    ":=": (ASSIGN, "SetDelayed", True),
    "=": (ASSIGN, "Set", True),
    "->": (RULE, "Rule", True),
    "||": (OR, "Or", False),
    "&&": (AND, "And", False),
    "==": (CMP, "Equal", False),
    "!=": (CMP, "Unequal", False),
    "<": (CMP, "Less", False),
    "<=": (CMP, "LessEqual", False),
    ">": (CMP, "Greater", False),
    ">=": (CMP, "GreaterEqual", False),
    "+": (ADD, "Plus", False),
    "-": (ADD, "Subtract", False),
    "*": (MUL, "Times", False),
    "/": (MUL, "Divide", False),
    "^": (POW, "Power", True),
}


class _Parser:
    def __init__(self, tokens: list[Token], source_len: int):
        self.tokens = tokens
        self.pos = 0
        self.eof_span = SourceSpan(source_len, source_len, 1, 1)
        if tokens:
            last = tokens[-1].span
            self.eof_span = SourceSpan(last.end_offset, last.end_offset, last.line, last.column)

    def peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def advance(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseError(self.eof_span, "unexpected end of input")
        self.pos += 1
        return tok

    def expect_close(self, delim: str) -> None:
        tok = self.peek()
        if tok is None or tok.kind != syntax.CLOSE or tok.value != delim:
            span = tok.span if tok else self.eof_span
            raise ParseError(span, f"expected closing {delim}")
        self.advance()

    # --- grammar ---

    def parse_expr(self, min_bp: int) -> Expr:
        left = self.parse_prefix()
        while True:
            tok = self.peek()
            if tok is None:
                return left
            if tok.kind == syntax.OP and tok.value == ";" and SEMI >= min_bp:
                left = self.parse_compound(left)
                continue
            if tok.kind == syntax.OP and tok.value == "&" and AMP >= min_bp:
                self.advance()
                left = PureFn(left)
                continue
            if tok.kind == syntax.OP and tok.value in _INFIX:
                bp, head, right_assoc = _INFIX[tok.value]
                if bp < min_bp:
                    return left
                self.advance()
                rhs = self.parse_expr(bp if right_assoc else bp + 1)
                left = Apply(Sym(head), (left, rhs))
                continue
            if tok.kind == syntax.OPEN and tok.value == "bracket" and CALL >= min_bp:
                self.advance()
                args = self.parse_sequence("bracket")
                left = Apply(left, tuple(args))
                continue
            return left

    def parse_compound(self, first: Expr) -> Expr:
        # `a; b; c` is one n-ary CompoundExpression; a trailing `;` appends Null.
        stmts = [first]
        while True:
            tok = self.peek()
            if tok is None or tok.kind != syntax.OP or tok.value != ";":
                break
            self.advance()
            nxt = self.peek()
            if nxt is None or nxt.kind == syntax.CLOSE or (nxt.kind == syntax.OP and nxt.value == ","):
                stmts.append(Sym("Null"))
                break
            stmts.append(self.parse_expr(SEMI + 1))
        return Apply(Sym("CompoundExpression"), tuple(stmts))

    def parse_prefix(self) -> Expr:
        tok = self.advance()
        if tok.kind == syntax.INT:
            return Integer(tok.value)
        if tok.kind == syntax.REAL:
            return Real(tok.value)
        if tok.kind == syntax.STRING:
            return Str(tok.value)
        if tok.kind == syntax.IDENT:
            return Sym(tok.value)
        if tok.kind == syntax.SLOT:
            return Slot(tok.value)
        if tok.kind == syntax.OP and tok.value == "-":
            return Apply(Sym("Minus"), (self.parse_expr(UNARY),))
        if tok.kind == syntax.OPEN:
            if tok.value == "paren":
                inner = self.parse_expr(0)
                self.expect_close("paren")
                return inner
            if tok.value == "brace":
                return ListExpr(tuple(self.parse_sequence("brace")))
            if tok.value == "assoc":
                pairs = self.parse_sequence("assoc")
                for p in pairs:
                    if not is_head(p, "Rule"):
                        raise ParseError(tok.span, "association entries must be `key -> value` rules")
                return Assoc(tuple(pairs))
        raise ParseError(tok.span, f"unexpected token {tok.value!r}")

    def parse_sequence(self, delim: str) -> list[Expr]:
        items: list[Expr] = []
        tok = self.peek()
        if tok is not None and tok.kind == syntax.CLOSE and tok.value == delim:
            self.advance()
            return items
        while True:
            items.append(self.parse_expr(0))
            tok = self.peek()
            if tok is not None and tok.kind == syntax.OP and tok.value == ",":
                self.advance()
                continue
            self.expect_close(delim)
            return items


def parse_program(source: str) -> Expr:
    """Parse `source` into a single Expr. Top-level statements separated by
    `;` become one CompoundExpression. Raises LexError/ParseError on bad
    input (both classify as syntax errors downstream)."""
    tokens = tokenize(source)
    parser = _Parser(tokens, len(source))
    if parser.peek() is None:
        raise ParseError(parser.eof_span, "empty program")
    expr = parser.parse_expr(0)
    trailing = parser.peek()
    if trailing is not None:
        raise ParseError(trailing.span, f"unexpected trailing token {trailing.value!r}")
    return expr
