"""Evaluation results: exact numbers, strings, lists, associations.

Exactness is the load-bearing invariant here: integer/rational arithmetic
never silently becomes floating point, and a rational with denominator 1
canonicalizes to an integer. `3/5` computed from counts must compare equal
to the literal `3/5` in an option table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union


@dataclass(frozen=True)
class IntVal:
    value: int


@dataclass(frozen=True)
class RatVal:
    num: int
    den: int  # > 1, gcd(|num|, den) == 1; den == 1 canonicalizes to IntVal


@dataclass(frozen=True)
class RealVal:
    value: float


@dataclass(frozen=True)
class BoolVal:
    value: bool


@dataclass(frozen=True)
class StrVal:
    value: str


@dataclass(frozen=True)
class SymVal:
    name: str


@dataclass(frozen=True)
class ListVal:
    items: tuple["Value", ...]


@dataclass(frozen=True)
class AssocVal:
    # Insertion-ordered, unique keys: a later equal key overwrites in place.
    pairs: tuple[tuple["Value", "Value"], ...]

    def lookup(self, key: "Value") -> Optional["Value"]:
        for k, v in self.pairs:
            if k == key:
                return v
        return None

    def keys(self) -> tuple["Value", ...]:
        return tuple(k for k, _ in self.pairs)

    def values(self) -> tuple["Value", ...]:
        return tuple(v for _, v in self.pairs)


@dataclass(frozen=True)
class InertVal:
    head: str
    args: tuple["Value", ...]


@dataclass(frozen=True)
class FnVal:
    body: object  # Expr body of a pure function
    env: object = field(compare=False, default=None)


@dataclass(frozen=True)
class NullVal:
    pass


NULL = NullVal()

Value = Union[
    IntVal, RatVal, RealVal, BoolVal, StrVal, SymVal,
    ListVal, AssocVal, InertVal, FnVal, NullVal,
]

# Heads that carry symbolic arithmetic residue (unbound symbols flowing
# through +,*,... produce these instead of erroring).
ARITH_HEADS = frozenset({"Plus", "Subtract", "Times", "Divide", "Power", "Minus"})


def make_rational(num: int, den: int) -> Value:
    """Normalized exact rational; den must be nonzero."""
    if den == 0:
        raise ZeroDivisionError("rational with zero denominator")
    if den < 0:
        num, den = -num, -den
    g = math.gcd(num, den)
    num //= g
    den //= g
    if den == 1:
        return IntVal(num)
    return RatVal(num, den)


def from_fraction(f: Fraction) -> Value:
    return make_rational(f.numerator, f.denominator)


def as_fraction(v: Value) -> Optional[Fraction]:
    """Exact rational content, or None (RealVal is deliberately excluded)."""
    if isinstance(v, IntVal):
        return Fraction(v.value)
    if isinstance(v, RatVal):
        return Fraction(v.num, v.den)
    return None


def is_exact(v: Value) -> bool:
    return isinstance(v, (IntVal, RatVal))


def is_numeric(v: Value) -> bool:
    return isinstance(v, (IntVal, RatVal, RealVal))


def as_float(v: Value) -> float:
    if isinstance(v, IntVal):
        return float(v.value)
    if isinstance(v, RatVal):
        return v.num / v.den
    if isinstance(v, RealVal):
        return v.value
    raise TypeError(f"not numeric: {v!r}")


def contains_symbol(v: Value) -> bool:
    """True when the value carries symbolic residue (SymVal or FnVal
    anywhere); such a value is not a reportable ground answer."""
    if isinstance(v, (SymVal, FnVal)):
        return True
    if isinstance(v, ListVal):
        return any(contains_symbol(x) for x in v.items)
    if isinstance(v, AssocVal):
        return any(contains_symbol(k) or contains_symbol(x) for k, x in v.pairs)
    if isinstance(v, InertVal):
        return any(contains_symbol(x) for x in v.args)
    return False


def value_to_text(v: Value) -> str:
    """Render a value in mini-language surface syntax."""
    if isinstance(v, IntVal):
        return str(v.value)
    if isinstance(v, RatVal):
        return f"{v.num}/{v.den}"
    if isinstance(v, RealVal):
        return repr(v.value)
    if isinstance(v, BoolVal):
        return "True" if v.value else "False"
    if isinstance(v, StrVal):
        escaped = v.value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(v, SymVal):
        return v.name
    if isinstance(v, ListVal):
        return "{" + ", ".join(value_to_text(x) for x in v.items) + "}"
    if isinstance(v, AssocVal):
        inner = ", ".join(f"{value_to_text(k)} -> {value_to_text(x)}" for k, x in v.pairs)
        return "<|" + inner + "|>"
    if isinstance(v, InertVal):
        return v.head + "[" + ", ".join(value_to_text(x) for x in v.args) + "]"
    if isinstance(v, FnVal):
        return "<pure function>"
    if isinstance(v, NullVal):
        return "Null"
    raise TypeError(f"not a Value: {v!r}")
