"""Canonical text rendering of Expr trees.

`parse_program(format_expr(e))` is structurally `e` for every tree the
parser can produce; parentheses are emitted only where precedence demands.
"""

from __future__ import annotations

from decimal import Decimal

from .ast import Apply, Assoc, Expr, Integer, ListExpr, PureFn, Real, Slot, Str, Sym
from .parser import ADD, AMP, AND, ASSIGN, CALL, CMP, MUL, OR, POW, RULE, SEMI, UNARY, _INFIX

_ATOM = 1000

# head name -> (symbol, binding power, right-assoc)
_INFIX_BY_HEAD = {head: (op, bp, ra) for op, (bp, head, ra) in _INFIX.items()}

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t"}


def _prec(e: Expr) -> int:
    if isinstance(e, Apply) and isinstance(e.head, Sym):
        name = e.head.name
        if name == "CompoundExpression":
            return SEMI
        if name == "Minus" and len(e.args) == 1:
            return UNARY
        if name in _INFIX_BY_HEAD and len(e.args) == 2:
            return _INFIX_BY_HEAD[name][1]
        return CALL
    if isinstance(e, Apply):
        return CALL
    if isinstance(e, PureFn):
        return AMP
    if isinstance(e, (Integer, Real)) and e.value < 0:
        return UNARY  # programmatically built negative literal
    return _ATOM


def _child(e: Expr, min_prec: int) -> str:
    text = format_expr(e)
    if _prec(e) < min_prec:
        return f"({text})"
    return text


def _format_real(x: float) -> str:
    s = repr(x)
    if "e" in s or "E" in s:
        s = format(Decimal(s), "f")
    if "." not in s and s.lstrip("-").isdigit():
        s += ".0"
    return s


def format_expr(e: Expr) -> str:
    if isinstance(e, Integer):
        return str(e.value)
    if isinstance(e, Real):
        return _format_real(e.value)
    if isinstance(e, Str):
        return '"' + "".join(_ESCAPES.get(c, c) for c in e.value) + '"'
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Slot):
        return "#" if e.index == 1 else f"#{e.index}"
    if isinstance(e, ListExpr):
        return "{" + ", ".join(format_expr(x) for x in e.items) + "}"
    if isinstance(e, Assoc):
        return "<|" + ", ".join(format_expr(p) for p in e.pairs) + "|>"
    if isinstance(e, PureFn):
        return _child(e.body, AMP + 1) + " &"
    if isinstance(e, Apply):
        if isinstance(e.head, Sym):
            name = e.head.name
            if name == "CompoundExpression" and len(e.args) >= 2:
                parts = [_child(a, SEMI + 1) for a in e.args]
                if isinstance(e.args[-1], Sym) and e.args[-1].name == "Null":
                    return "; ".join(parts[:-1]) + ";"
                return "; ".join(parts)
            if name == "Minus" and len(e.args) == 1:
                return "-" + _child(e.args[0], UNARY + 1)
            if name in _INFIX_BY_HEAD and len(e.args) == 2:
                op, bp, right_assoc = _INFIX_BY_HEAD[name]
                lhs = _child(e.args[0], bp if not right_assoc else bp + 1)
                rhs = _child(e.args[1], bp + 1 if not right_assoc else bp)
                return f"{lhs} {op} {rhs}"
        head = _child(e.head, CALL)
        return head + "[" + ", ".join(format_expr(a) for a in e.args) + "]"
    raise TypeError(f"not an Expr: {e!r}")
