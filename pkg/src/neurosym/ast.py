"""Expression tree for the symbolic mini-language.

All infix syntax normalizes to ``Apply`` of a canonical head symbol
(``a + b`` becomes ``Apply(Sym("Plus"), (a, b))``), so the evaluator and
printer only ever deal with a handful of node shapes.  Parsing never
evaluates anything: ``2/4`` stays ``Divide[2, 4]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True)
class Integer:
    value: int  # arbitrary precision, sign folded in by the parser


@dataclass(frozen=True)
class Real:
    value: float


@dataclass(frozen=True)
class Str:
    value: str


@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class Slot:
    index: int  # >= 1; bare `#` is Slot(1)


@dataclass(frozen=True)
class ListExpr:
    items: tuple["Expr", ...]


@dataclass(frozen=True)
class Assoc:
    # Each pair is an Apply(Sym("Rule"), (key, value)) node, order preserved.
    pairs: tuple["Expr", ...]


@dataclass(frozen=True)
class Apply:
    head: "Expr"
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class PureFn:
    body: "Expr"


Expr = Union[Integer, Real, Str, Sym, Slot, ListExpr, Assoc, Apply, PureFn]


def apply_head(name: str, *args: Expr) -> Apply:
    return Apply(Sym(name), tuple(args))


def is_head(e: Expr, name: str) -> bool:
    return isinstance(e, Apply) and isinstance(e.head, Sym) and e.head.name == name
