"""Polynomial solving and canonical simplification.

Both operations work on a sparse multivariate polynomial form: a map from
exponent tuples (one slot per variable, alphabetical order) to rational
coefficients. Solving covers univariate degree <= 2 and 2x2 linear
systems; anything else raises UnknownOperation so it surfaces as a
runtime failure rather than a silent wrong answer.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional, Union

from .ast import Apply, Expr, Integer, ListExpr, Real, Sym, is_head
from .errors import EvalError
from .values import (
    AssocVal, IntVal, InertVal, ListVal, RatVal, RealVal, StrVal, SymVal, Value,
    as_fraction, from_fraction, is_exact,
)

Poly = dict[tuple[int, ...], Fraction]


def _unknown(msg: str) -> EvalError:
    return EvalError(EvalError.UNKNOWN_OPERATION, msg, location="Solve/Simplify")


# --- polynomial arithmetic ---

def _p_const(c: Fraction, nvars: int) -> Poly:
    return {(0,) * nvars: c} if c != 0 else {}

def _p_var(index: int, nvars: int) -> Poly:
    exps = [0] * nvars
    exps[index] = 1
    return {tuple(exps): Fraction(1)}

def _p_add(a: Poly, b: Poly) -> Poly:
    out = dict(a)
    for m, c in b.items():
        s = out.get(m, Fraction(0)) + c
        if s == 0:
            out.pop(m, None)
        else:
            out[m] = s
    return out

def _p_neg(a: Poly) -> Poly:
    return {m: -c for m, c in a.items()}

def _p_mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = tuple(x + y for x, y in zip(ma, mb))
            s = out.get(m, Fraction(0)) + ca * cb
            if s == 0:
                out.pop(m, None)
            else:
                out[m] = s
    return out

def _p_pow(a: Poly, n: int, nvars: int) -> Poly:
    out = _p_const(Fraction(1), nvars)
    for _ in range(n):
        out = _p_mul(out, a)
    return out

def _p_degree(a: Poly) -> int:
    return max((sum(m) for m in a), default=0)

def _p_const_value(a: Poly) -> Optional[Fraction]:
    if not a:
        return Fraction(0)
    if len(a) == 1:
        (m, c), = a.items()
        if sum(m) == 0:
            return c
    return None


# --- conversion: symbolic Value trees -> Poly ---

def value_to_poly(v: Value, names: tuple[str, ...]) -> Poly:
    nvars = len(names)
    if isinstance(v, IntVal):
        return _p_const(Fraction(v.value), nvars)
    if isinstance(v, RatVal):
        return _p_const(Fraction(v.num, v.den), nvars)
    if isinstance(v, RealVal):
        # Binary64 literals are carried exactly as rationals.
        return _p_const(Fraction(v.value), nvars)
    if isinstance(v, SymVal):
        if v.name in names:
            return _p_var(names.index(v.name), nvars)
        raise _unknown(f"symbol {v.name} is not a solve variable")
    if isinstance(v, InertVal):
        if v.head == "Plus":
            out = _p_const(Fraction(0), nvars)
            for a in v.args:
                out = _p_add(out, value_to_poly(a, names))
            return out
        if v.head == "Subtract" and len(v.args) == 2:
            return _p_add(value_to_poly(v.args[0], names), _p_neg(value_to_poly(v.args[1], names)))
        if v.head == "Times":
            out = _p_const(Fraction(1), nvars)
            for a in v.args:
                out = _p_mul(out, value_to_poly(a, names))
            return out
        if v.head == "Minus" and len(v.args) == 1:
            return _p_neg(value_to_poly(v.args[0], names))
        if v.head == "Divide" and len(v.args) == 2:
            den = _p_const_value(value_to_poly(v.args[1], names))
            if den is None:
                raise _unknown("division by a non-constant expression")
            if den == 0:
                raise EvalError(EvalError.DIVISION_BY_ZERO, "division by zero", location="Simplify")
            num = value_to_poly(v.args[0], names)
            return {m: c / den for m, c in num.items()}
        if v.head == "Power" and len(v.args) == 2:
            exp = v.args[1]
            if not isinstance(exp, IntVal) or exp.value < 0:
                raise _unknown("exponent must be a nonnegative integer")
            return _p_pow(value_to_poly(v.args[0], names), exp.value, len(names))
        raise _unknown(f"non-polynomial head {v.head}")
    raise _unknown(f"non-polynomial value {type(v).__name__}")


def _symbols_in_value(v: Value, acc: set[str]) -> None:
    if isinstance(v, SymVal):
        acc.add(v.name)
    elif isinstance(v, InertVal):
        for a in v.args:
            _symbols_in_value(a, acc)
    elif isinstance(v, ListVal):
        for a in v.items:
            _symbols_in_value(a, acc)


# --- canonical rebuild ---

def _monomial_order(item):
    m, _ = item
    return (-sum(m), tuple(-e for e in m))


def _sorted_terms(poly: Poly):
    return sorted(poly.items(), key=_monomial_order)


def poly_to_value(poly: Poly, names: tuple[str, ...]) -> Value:
    terms = _sorted_terms(poly)
    if not terms:
        return IntVal(0)

    def term_value(m, c: Fraction) -> Value:
        factors: list[Value] = []
        for name, e in zip(names, m):
            if e == 1:
                factors.append(SymVal(name))
            elif e > 1:
                factors.append(InertVal("Power", (SymVal(name), IntVal(e))))
        if not factors:
            return from_fraction(c)
        mono: Value = factors[0]
        for f in factors[1:]:
            mono = InertVal("Times", (mono, f))
        if c == 1:
            return mono
        return InertVal("Times", (from_fraction(c), mono))

    first_m, first_c = terms[0]
    acc = term_value(first_m, first_c)
    for m, c in terms[1:]:
        if c < 0:
            acc = InertVal("Subtract", (acc, term_value(m, -c)))
        else:
            acc = InertVal("Plus", (acc, term_value(m, c)))
    return acc


def poly_to_expr(poly: Poly, names: tuple[str, ...]) -> Expr:
    return _value_to_expr(poly_to_value(poly, names))


def _value_to_expr(v: Value) -> Expr:
    if isinstance(v, IntVal):
        return Integer(v.value) if v.value >= 0 else Apply(Sym("Minus"), (Integer(-v.value),))
    if isinstance(v, RatVal):
        num = Integer(abs(v.num))
        frac = Apply(Sym("Divide"), (num, Integer(v.den)))
        return Apply(Sym("Minus"), (frac,)) if v.num < 0 else frac
    if isinstance(v, RealVal):
        return Real(v.value) if v.value >= 0 else Apply(Sym("Minus"), (Real(-v.value),))
    if isinstance(v, SymVal):
        return Sym(v.name)
    if isinstance(v, InertVal):
        return Apply(Sym(v.head), tuple(_value_to_expr(a) for a in v.args))
    raise _unknown(f"cannot render {type(v).__name__} as an expression")


def _expr_to_value(e: Expr) -> Value:
    if isinstance(e, Integer):
        return IntVal(e.value)
    if isinstance(e, Real):
        return RealVal(e.value)
    if isinstance(e, Sym):
        return SymVal(e.name)
    if isinstance(e, Apply) and isinstance(e.head, Sym):
        return InertVal(e.head.name, tuple(_expr_to_value(a) for a in e.args))
    raise _unknown("unsupported expression shape")


# --- simplify ---

def simplify_value(v: Value) -> Value:
    """Canonical form: exact numbers normalize; polynomial residue expands
    and collects like terms, ordered by total degree then symbol order."""
    if is_exact(v) or isinstance(v, RealVal):
        return v
    syms: set[str] = set()
    _symbols_in_value(v, syms)
    names = tuple(sorted(syms))
    poly = value_to_poly(v, names)
    return poly_to_value(poly, names)


def simplify(x: Union[Expr, Value]) -> Union[Expr, Value]:
    """Library entry point; accepts either an Expr or a Value and returns
    the same kind. Idempotent."""
    if isinstance(x, (IntVal, RatVal, RealVal, SymVal, InertVal)):
        return simplify_value(x)
    return _value_to_expr(simplify_value(_expr_to_value(x)))


# --- solve ---

def _exact_sqrt(f: Fraction) -> Optional[Fraction]:
    if f < 0:
        return None
    rn, rd = math.isqrt(f.numerator), math.isqrt(f.denominator)
    if rn * rn == f.numerator and rd * rd == f.denominator:
        return Fraction(rn, rd)
    return None


def _solution(names: tuple[str, ...], vals: list[Value]) -> AssocVal:
    # String keys keep solution sets ground (a SymVal key would read as
    # unresolved symbolic residue in a final answer).
    return AssocVal(tuple((StrVal(n), v) for n, v in zip(names, vals)))


def _solve_univariate(poly: Poly, name: str) -> list[Value]:
    degree = _p_degree(poly)
    if degree > 2:
        raise _unknown("degree above 2 is not supported")
    c = poly.get((0,), Fraction(0))
    b = poly.get((1,), Fraction(0))
    a = poly.get((2,), Fraction(0))
    if degree == 0:
        if c == 0:
            raise _unknown("underdetermined equation")
        return []  # inconsistent
    if a == 0:
        return [from_fraction(-c / b)]
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    root = _exact_sqrt(disc)
    if root is not None:
        r1 = from_fraction((-b - root) / (2 * a))
        r2 = from_fraction((-b + root) / (2 * a))
        if r1 == r2:
            return [r1]
        lo, hi = sorted([(-b - root) / (2 * a), (-b + root) / (2 * a)])
        return [from_fraction(lo), from_fraction(hi)]
    s = math.sqrt(float(disc))
    r1 = (float(-b) - s) / float(2 * a)
    r2 = (float(-b) + s) / float(2 * a)
    lo, hi = sorted([r1, r2])
    return [RealVal(lo), RealVal(hi)]


def _solve_linear_2x2(p1: Poly, p2: Poly) -> Optional[list[list[Fraction]]]:
    """Solve {p1 = 0, p2 = 0} linear in two variables. Returns a list of
    solutions (possibly empty for inconsistency); None means parametric."""
    def coeffs(p: Poly):
        if _p_degree(p) > 1:
            raise _unknown("system equations must be linear")
        return (p.get((1, 0), Fraction(0)), p.get((0, 1), Fraction(0)), p.get((0, 0), Fraction(0)))

    a1, b1, c1 = coeffs(p1)
    a2, b2, c2 = coeffs(p2)
    det = a1 * b2 - a2 * b1
    if det != 0:
        x = (-c1 * b2 + c2 * b1) / det
        y = (-a1 * c2 + a2 * c1) / det
        return [[x, y]]
    # Singular: either dependent (parametric) or inconsistent.
    for a, b, c in ((a1, b1, c1), (a2, b2, c2)):
        if a == 0 and b == 0 and c != 0:
            return []
    r1, r2 = (a1, b1, c1), (a2, b2, c2)
    cross_ok = all(r1[i] * r2[j] == r1[j] * r2[i] for i in range(3) for j in range(3))
    if cross_ok:
        return None
    return []


def solve_polys(polys: list[Poly], names: tuple[str, ...]) -> ListVal:
    if len(names) == 1:
        if len(polys) != 1:
            raise _unknown("one unknown requires exactly one equation")
        roots = _solve_univariate(polys[0], names[0])
        return ListVal(tuple(_solution(names, [r]) for r in roots))
    if len(names) == 2:
        if len(polys) != 2:
            raise _unknown("two unknowns require exactly two equations")
        sols = _solve_linear_2x2(polys[0], polys[1])
        if sols is None:
            raise _unknown("underdetermined system")
        return ListVal(tuple(_solution(names, [from_fraction(x), from_fraction(y)]) for x, y in sols))
    raise _unknown("at most two unknowns are supported")


def solve(equations: list[Expr], unknowns: list[str]) -> ListVal:
    """Solve `lhs == rhs` equations for the named unknowns over the
    rationals/reals."""
    names = tuple(unknowns)
    polys = []
    for eq in equations:
        if not (is_head(eq, "Equal") and len(eq.args) == 2):
            raise _unknown("equations must have the form lhs == rhs")
        lhs = value_to_poly(_expr_to_value(eq.args[0]), names)
        rhs = value_to_poly(_expr_to_value(eq.args[1]), names)
        polys.append(_p_add(lhs, _p_neg(rhs)))
    return solve_polys(polys, names)


def solve_builtin(evaluator, args: tuple[Expr, ...]) -> ListVal:
    """The Solve special form: Solve[eqn, x] or Solve[{e1, e2}, {x, y}].
    Symbols bound in the environment are substituted by evaluating each
    equation side with the unknowns shadowed as unbound locals."""
    if len(args) != 2:
        raise EvalError(EvalError.BAD_ARG_COUNT, "Solve expects [equations, unknowns]", location="Solve")
    eq_exprs = list(args[0].items) if isinstance(args[0], ListExpr) else [args[0]]
    var_exprs = list(args[1].items) if isinstance(args[1], ListExpr) else [args[1]]
    names = []
    for v in var_exprs:
        if not isinstance(v, Sym):
            raise _unknown("unknowns must be symbols")
        names.append(v.name)
    names = tuple(names)

    evaluator.env.push({n: ("unbound", None) for n in names})
    try:
        polys = []
        for eq in eq_exprs:
            if not (is_head(eq, "Equal") and len(eq.args) == 2):
                raise _unknown("equations must have the form lhs == rhs")
            lhs = value_to_poly(evaluator.eval(eq.args[0]), names)
            rhs = value_to_poly(evaluator.eval(eq.args[1]), names)
            polys.append(_p_add(lhs, _p_neg(rhs)))
    finally:
        evaluator.env.pop()
    return solve_polys(polys, names)
