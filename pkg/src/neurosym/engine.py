"""Resource-limited evaluator for parsed mini-language programs.

Evaluation is deterministic and sandboxed: a step budget, recursion-depth
cap, list-length cap, and wall-clock budget bound every run, so untrusted
model-generated programs can be executed safely in-process.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .ast import Apply, Assoc, Expr, Integer, ListExpr, PureFn, Real, Slot, Str, Sym, is_head
from .errors import EvalError
from .parser import parse_program
from .values import (
    ARITH_HEADS, NULL, AssocVal, BoolVal, FnVal, IntVal, ListVal, RatVal, RealVal,
    StrVal, SymVal, InertVal, NullVal, Value, as_fraction, as_float, contains_symbol,
    from_fraction, is_exact, is_numeric, make_rational,
)

# Relative tolerance for Equal between exact and floating-point operands.
EQUAL_REL_TOL = 1e-9


@dataclass(frozen=True)
class Limits:
    max_steps: int = 100_000
    max_depth: int = 512
    max_list_len: int = 100_000
    wall_clock_budget_ms: int = 2_000

    def __post_init__(self):
        for name in ("max_steps", "max_depth", "max_list_len", "wall_clock_budget_ms"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


# Bindings: ("value", Value) | ("delayed", Expr) | ("unbound", None)
Binding = tuple


class Environment:
    """Stack of lexical scopes; globals at the bottom, innermost lookup first."""

    def __init__(self):
        self.scopes: list[dict[str, Binding]] = [{}]

    def push(self, scope: Optional[dict] = None) -> None:
        self.scopes.append(scope if scope is not None else {})

    def pop(self) -> None:
        self.scopes.pop()

    def lookup(self, name: str) -> Optional[Binding]:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def assign(self, name: str, binding: Binding) -> None:
        # Rebind where declared; otherwise create a global.
        for scope in reversed(self.scopes):
            if name in scope:
                scope[name] = binding
                return
        self.scopes[0][name] = binding

    def declare(self, name: str, binding: Binding) -> None:
        self.scopes[-1][name] = binding

    def global_names(self) -> set[str]:
        return set(self.scopes[0])


def _bad_args(head: str, why: str) -> EvalError:
    return EvalError(EvalError.BAD_ARG_TYPE, why, location=head)


def _wrong_count(head: str, expected: str, got: int) -> EvalError:
    return EvalError(EvalError.BAD_ARG_COUNT, f"expected {expected} arguments, got {got}", location=head)


def _is_symbolic_operand(v: Value) -> bool:
    return isinstance(v, SymVal) or (isinstance(v, InertVal) and v.head in ARITH_HEADS)


def exact_sqrt(f: Fraction) -> Optional[Fraction]:
    """Exact square root of a nonnegative rational, or None."""
    if f < 0:
        return None
    rn = math.isqrt(f.numerator)
    rd = math.isqrt(f.denominator)
    if rn * rn == f.numerator and rd * rd == f.denominator:
        return Fraction(rn, rd)
    return None


def sqrt_value(f: Fraction) -> Value:
    root = exact_sqrt(f)
    if root is not None:
        return from_fraction(root)
    return RealVal(math.sqrt(float(f)))


class Evaluator:
    def __init__(self, env: Optional[Environment] = None, limits: Optional[Limits] = None):
        self.env = env if env is not None else Environment()
        self.limits = limits if limits is not None else Limits()
        self.steps_used = 0
        self.depth = 0
        self.slot_frames: list[tuple[Value, ...]] = []
        self._start = time.monotonic()

    # --- bookkeeping ---

    def _tick(self) -> None:
        self.steps_used += 1
        if self.steps_used > self.limits.max_steps:
            raise EvalError(EvalError.LIMIT_EXCEEDED, "step budget exhausted", limit="max_steps")
        if self.steps_used % 1024 == 0:
            elapsed_ms = (time.monotonic() - self._start) * 1000.0
            if elapsed_ms > self.limits.wall_clock_budget_ms:
                raise EvalError(EvalError.LIMIT_EXCEEDED, "wall clock budget exhausted", limit="wall_clock")

    def run(self, program: Expr) -> Value:
        """Evaluate a whole program, applying the `f := Module[...];`
        convention (a Null result with top-level definitions resolves to
        the last defined symbol) and rejecting symbolic final answers."""
        self._start = time.monotonic()
        try:
            result = self.eval(program)
        except RecursionError:
            raise EvalError(EvalError.LIMIT_EXCEEDED, "recursion depth exhausted", limit="max_depth")
        if isinstance(result, NullVal):
            name = _last_defined_name(program)
            if name is not None:
                result = self.eval(Sym(name))
        if contains_symbol(result):
            raise EvalError(EvalError.NON_GROUND_RESULT, "final value contains unresolved symbols")
        return result

    # --- core dispatch ---

    def eval(self, e: Expr) -> Value:
        self._tick()
        self.depth += 1
        if self.depth > self.limits.max_depth:
            self.depth -= 1
            raise EvalError(EvalError.LIMIT_EXCEEDED, "evaluation depth exhausted", limit="max_depth")
        try:
            return self._eval(e)
        finally:
            self.depth -= 1

    def _eval(self, e: Expr) -> Value:
        if isinstance(e, Integer):
            return IntVal(e.value)
        if isinstance(e, Real):
            return RealVal(e.value)
        if isinstance(e, Str):
            return StrVal(e.value)
        if isinstance(e, Slot):
            return self._eval_slot(e)
        if isinstance(e, Sym):
            return self._eval_symbol(e.name)
        if isinstance(e, ListExpr):
            if len(e.items) > self.limits.max_list_len:
                raise EvalError(EvalError.LIMIT_EXCEEDED, "list too long", limit="max_list_len")
            return ListVal(tuple(self.eval(x) for x in e.items))
        if isinstance(e, Assoc):
            return self._eval_assoc(e)
        if isinstance(e, PureFn):
            return FnVal(e.body)
        if isinstance(e, Apply):
            return self._eval_apply(e)
        raise EvalError(EvalError.BAD_ARG_TYPE, f"cannot evaluate {e!r}")

    def _eval_slot(self, e: Slot) -> Value:
        if not self.slot_frames:
            raise EvalError(EvalError.BAD_ARG_TYPE, "slot used outside a pure function")
        frame = self.slot_frames[-1]
        if e.index > len(frame):
            raise EvalError(EvalError.BAD_ARG_COUNT, f"slot #{e.index} has no argument")
        return frame[e.index - 1]

    def _eval_symbol(self, name: str) -> Value:
        if name == "True":
            return BoolVal(True)
        if name == "False":
            return BoolVal(False)
        if name == "Null":
            return NULL
        binding = self.env.lookup(name)
        if binding is None or binding[0] == "unbound":
            return SymVal(name)
        kind, payload = binding
        if kind == "value":
            return payload
        return self.eval(payload)  # delayed: re-evaluated at each lookup

    def _eval_assoc(self, e: Assoc) -> Value:
        pairs: list[tuple[Value, Value]] = []
        for rule in e.pairs:
            assert is_head(rule, "Rule")
            key = self.eval(rule.args[0])
            val = self.eval(rule.args[1])
            for i, (k, _) in enumerate(pairs):
                if k == key:
                    pairs[i] = (key, val)  # overwrite, keep original position
                    break
            else:
                pairs.append((key, val))
        return AssocVal(tuple(pairs))

    def _eval_apply(self, e: Apply) -> Value:
        if isinstance(e.head, Sym):
            name = e.head.name
            special = _SPECIAL_FORMS.get(name)
            if special is not None:
                return special(self, e.args)
            builtin = _BUILTINS.get(name)
            if builtin is not None:
                args = [self.eval(a) for a in e.args]
                return builtin(self, name, args)
            # User symbol applied: pure function or association lookup.
            target = self._eval_symbol(name)
            if isinstance(target, SymVal):
                raise EvalError(EvalError.UNKNOWN_OPERATION, f"unknown operation {name}", location=name)
            return self._apply_value(target, [self.eval(a) for a in e.args])
        target = self.eval(e.head)
        return self._apply_value(target, [self.eval(a) for a in e.args])

    def _apply_value(self, target: Value, args: list[Value]) -> Value:
        if isinstance(target, FnVal):
            return self.apply_function(target, args)
        if isinstance(target, AssocVal):
            if len(args) != 1:
                raise _wrong_count("association", "1", len(args))
            found = target.lookup(args[0])
            if found is None:
                return InertVal("Missing", (args[0],))
            return found
        raise _bad_args("application", f"cannot apply {type(target).__name__}")

    def apply_function(self, fn: FnVal, args: list[Value]) -> Value:
        self.slot_frames.append(tuple(args))
        try:
            return self.eval(fn.body)
        finally:
            self.slot_frames.pop()


def _last_defined_name(program: Expr) -> Optional[str]:
    stmts = program.args if is_head(program, "CompoundExpression") else (program,)
    name = None
    for s in stmts:
        if (is_head(s, "Set") or is_head(s, "SetDelayed")) and len(s.args) == 2 and isinstance(s.args[0], Sym):
            name = s.args[0].name
    return name


# --------------------------------------------------------------------------
# Special forms (receive unevaluated argument Exprs)
# --------------------------------------------------------------------------

def _sf_compound(ev: Evaluator, args: tuple[Expr, ...]) -> Value:
    result: Value = NULL
    for a in args:
        result = ev.eval(a)
    return result


def _sf_set(ev: Evaluator, args: tuple[Expr, ...]) -> Value:
    if len(args) != 2 or not isinstance(args[0], Sym):
        raise _bad_args("Set", "left side of = must be a symbol")
    value = ev.eval(args[1])
    ev.env.assign(args[0].name, ("value", value))
    return value


def _sf_set_delayed(ev: Evaluator, args: tuple[Expr, ...]) -> Value:
    if len(args) != 2 or not isinstance(args[0], Sym):
        raise _bad_args("SetDelayed", "left side of := must be a symbol")
    ev.env.assign(args[0].name, ("delayed", args[1]))
    return NULL


def _sf_if(ev: Evaluator, args: tuple[Expr, ...]) -> Value:
    if len(args) not in (2, 3):
        raise _wrong_count("If", "2 or 3", len(args))
    cond = ev.eval(args[0])
    if not isinstance(cond, BoolVal):
        raise _bad_args("If", "condition must be True or False")
    if cond.value:
        return ev.eval(args[1])
    return ev.eval(args[2]) if len(args) == 3 else NULL


def _sf_and(ev: Evaluator, args: tuple[Expr, ...]) -> Value:
    for a in args:
        v = ev.eval(a)
        if not isinstance(v, BoolVal):
            raise _bad_args("And", "operands must be True or False")
        if not v.value:
            return BoolVal(False)
    return BoolVal(True)


def _sf_or(ev: Evaluator, args: tuple[Expr, ...]) -> Value:
    for a in args:
        v = ev.eval(a)
        if not isinstance(v, BoolVal):
            raise _bad_args("Or", "operands must be True or False")
        if v.value:
            return BoolVal(True)
    return BoolVal(False)


def _sf_module(ev: Evaluator, args: tuple[Expr, ...]) -> Value:
    if not args or not isinstance(args[0], ListExpr):
        raise _bad_args("Module", "first argument must be a {locals} list")
    scope: dict[str, Binding] = {}
    for decl in args[0].items:
        if isinstance(decl, Sym):
            scope[decl.name] = ("unbound", None)
        elif is_head(decl, "Set") and len(decl.args) == 2 and isinstance(decl.args[0], Sym):
            scope[decl.args[0].name] = ("value", ev.eval(decl.args[1]))
        else:
            raise _bad_args("Module", "locals must be symbols or symbol = value")
    ev.env.push(scope)
    try:
        result: Value = NULL
        for body in args[1:]:
            result = ev.eval(body)
        return result
    finally:
        ev.env.pop()


def _sf_solve(ev: Evaluator, args: tuple[Expr, ...]) -> Value:
    from . import algebra
    return algebra.solve_builtin(ev, args)


def _sf_simplify(ev: Evaluator, args: tuple[Expr, ...]) -> Value:
    from . import algebra
    if len(args) != 1:
        raise _wrong_count("Simplify", "1", len(args))
    return algebra.simplify_value(ev.eval(args[0]))


_SPECIAL_FORMS: dict[str, Callable] = {
    "CompoundExpression": _sf_compound,
    "Set": _sf_set,
    "SetDelayed": _sf_set_delayed,
    "If": _sf_if,
    "And": _sf_and,
    "Or": _sf_or,
    "Module": _sf_module,
    "Solve": _sf_solve,
    "Simplify": _sf_simplify,
}


# --------------------------------------------------------------------------
# Builtins (receive evaluated Values)
# --------------------------------------------------------------------------

def _thread_lists(head: str, op: Callable[[list[Value]], Value], args: list[Value]) -> Value:
    """Elementwise threading of arithmetic over lists, with scalar broadcast."""
    lengths = {len(a.items) for a in args if isinstance(a, ListVal)}
    if not lengths:
        return op(args)
    if len(lengths) != 1:
        raise _wrong_count(head, "lists of equal length", min(lengths))
    (n,) = lengths
    out = []
    for i in range(n):
        row = [a.items[i] if isinstance(a, ListVal) else a for a in args]
        out.append(_thread_lists(head, op, row))
    return ListVal(tuple(out))


def _numeric2(head: str, a: Value, b: Value,
              exact_fn: Callable[[Fraction, Fraction], Fraction],
              float_fn: Callable[[float, float], float]) -> Value:
    if _is_symbolic_operand(a) or _is_symbolic_operand(b):
        return InertVal(head, (a, b))
    if not (is_numeric(a) and is_numeric(b)):
        raise _bad_args(head, "operands must be numeric")
    if is_exact(a) and is_exact(b):
        return from_fraction(exact_fn(as_fraction(a), as_fraction(b)))
    return RealVal(float_fn(as_float(a), as_float(b)))


def _b_plus(ev, head, args):
    if not args:
        return IntVal(0)
    def op(vals):
        acc = vals[0]
        for v in vals[1:]:
            acc = _numeric2("Plus", acc, v, lambda x, y: x + y, lambda x, y: x + y)
        return acc
    return _thread_lists(head, op, args)


def _b_times(ev, head, args):
    if not args:
        return IntVal(1)
    def op(vals):
        acc = vals[0]
        for v in vals[1:]:
            acc = _numeric2("Times", acc, v, lambda x, y: x * y, lambda x, y: x * y)
        return acc
    return _thread_lists(head, op, args)


def _b_subtract(ev, head, args):
    if len(args) != 2:
        raise _wrong_count(head, "2", len(args))
    return _thread_lists(head, lambda v: _numeric2("Subtract", v[0], v[1], lambda x, y: x - y, lambda x, y: x - y), args)


def _divide_scalar(a: Value, b: Value) -> Value:
    if _is_symbolic_operand(a) or _is_symbolic_operand(b):
        return InertVal("Divide", (a, b))
    if not (is_numeric(a) and is_numeric(b)):
        raise _bad_args("Divide", "operands must be numeric")
    if is_exact(a) and is_exact(b):
        fb = as_fraction(b)
        if fb == 0:
            raise EvalError(EvalError.DIVISION_BY_ZERO, "division by zero", location="Divide")
        return from_fraction(as_fraction(a) / fb)
    xb = as_float(b)
    if xb == 0.0:
        raise EvalError(EvalError.DIVISION_BY_ZERO, "division by zero", location="Divide")
    return RealVal(as_float(a) / xb)


def _b_divide(ev, head, args):
    if len(args) != 2:
        raise _wrong_count(head, "2", len(args))
    return _thread_lists(head, lambda v: _divide_scalar(v[0], v[1]), args)


def _power_scalar(a: Value, b: Value) -> Value:
    if _is_symbolic_operand(a) or _is_symbolic_operand(b):
        return InertVal("Power", (a, b))
    if not (is_numeric(a) and is_numeric(b)):
        raise _bad_args("Power", "operands must be numeric")
    if is_exact(a) and isinstance(b, IntVal):
        fa = as_fraction(a)
        if b.value < 0 and fa == 0:
            raise EvalError(EvalError.DIVISION_BY_ZERO, "zero to a negative power", location="Power")
        return from_fraction(fa ** b.value)
    if is_exact(a) and isinstance(b, RatVal):
        # Try an exact root for half-integer exponents; otherwise go float.
        fa = as_fraction(a)
        if b.den == 2 and fa >= 0:
            root = exact_sqrt(fa)
            if root is not None:
                return from_fraction(root ** b.num)
    xa, xb = as_float(a), as_float(b)
    if xa < 0 and not float(xb).is_integer():
        raise _bad_args("Power", "negative base with fractional exponent")
    if xa == 0 and xb < 0:
        raise EvalError(EvalError.DIVISION_BY_ZERO, "zero to a negative power", location="Power")
    return RealVal(xa ** xb)


def _b_power(ev, head, args):
    if len(args) != 2:
        raise _wrong_count(head, "2", len(args))
    return _thread_lists(head, lambda v: _power_scalar(v[0], v[1]), args)


def _b_minus(ev, head, args):
    if len(args) != 1:
        raise _wrong_count(head, "1", len(args))
    def op(vals):
        (v,) = vals
        if _is_symbolic_operand(v):
            return InertVal("Minus", (v,))
        if is_exact(v):
            return from_fraction(-as_fraction(v))
        if isinstance(v, RealVal):
            return RealVal(-v.value)
        raise _bad_args("Minus", "operand must be numeric")
    return _thread_lists(head, op, args)


def _numeric1(head: str, args: list[Value], exact_fn, float_fn) -> Value:
    if len(args) != 1:
        raise _wrong_count(head, "1", len(args))
    def op(vals):
        (v,) = vals
        if is_exact(v):
            return exact_fn(as_fraction(v))
        if isinstance(v, RealVal):
            return float_fn(v.value)
        raise _bad_args(head, "operand must be numeric")
    return _thread_lists(head, op, args)


def _b_abs(ev, head, args):
    return _numeric1(head, args, lambda f: from_fraction(abs(f)), lambda x: RealVal(abs(x)))


def _b_sqrt(ev, head, args):
    def exact(f: Fraction) -> Value:
        if f < 0:
            raise _bad_args("Sqrt", "negative argument")
        return sqrt_value(f)
    def real(x: float) -> Value:
        if x < 0:
            raise _bad_args("Sqrt", "negative argument")
        return RealVal(math.sqrt(x))
    return _numeric1(head, args, exact, real)


def _b_floor(ev, head, args):
    return _numeric1(head, args, lambda f: IntVal(math.floor(f)), lambda x: IntVal(math.floor(x)))


def _b_ceiling(ev, head, args):
    return _numeric1(head, args, lambda f: IntVal(math.ceil(f)), lambda x: IntVal(math.ceil(x)))


def _b_round(ev, head, args):
    # Half to even, matching round() on Fraction.
    return _numeric1(head, args, lambda f: IntVal(round(f)), lambda x: IntVal(round(x)))


def _b_mod(ev, head, args):
    if len(args) != 2:
        raise _wrong_count(head, "2", len(args))
    def op(vals):
        a, b = vals
        if not (is_numeric(a) and is_numeric(b)):
            raise _bad_args("Mod", "operands must be numeric")
        if is_exact(a) and is_exact(b):
            fb = as_fraction(b)
            if fb == 0:
                raise EvalError(EvalError.DIVISION_BY_ZERO, "Mod by zero", location="Mod")
            return from_fraction(as_fraction(a) % fb)
        xb = as_float(b)
        if xb == 0.0:
            raise EvalError(EvalError.DIVISION_BY_ZERO, "Mod by zero", location="Mod")
        return RealVal(as_float(a) % xb)
    return _thread_lists(head, op, args)


def _int_args(head: str, args: list[Value]) -> list[int]:
    out = []
    for a in args:
        if not isinstance(a, IntVal):
            raise _bad_args(head, "operands must be integers")
        out.append(a.value)
    return out


def _b_gcd(ev, head, args):
    if not args:
        raise _wrong_count(head, "at least 1", 0)
    return IntVal(math.gcd(*_int_args(head, args)))


def _b_lcm(ev, head, args):
    if not args:
        raise _wrong_count(head, "at least 1", 0)
    return IntVal(math.lcm(*_int_args(head, args)))


def _numeric_key(head: str, v: Value):
    if not is_numeric(v):
        raise _bad_args(head, "operands must be numeric")
    return as_fraction(v) if is_exact(v) else Fraction(v.value)


def _b_max(ev, head, args):
    items = list(args[0].items) if len(args) == 1 and isinstance(args[0], ListVal) else args
    if not items:
        raise _wrong_count(head, "at least 1", 0)
    return max(items, key=lambda v: _numeric_key(head, v))


def _b_min(ev, head, args):
    items = list(args[0].items) if len(args) == 1 and isinstance(args[0], ListVal) else args
    if not items:
        raise _wrong_count(head, "at least 1", 0)
    return min(items, key=lambda v: _numeric_key(head, v))


def _require_list(head: str, args: list[Value], count: int = 1) -> ListVal:
    if len(args) != count:
        raise _wrong_count(head, str(count), len(args))
    if not isinstance(args[0], ListVal):
        raise _bad_args(head, "first argument must be a list")
    return args[0]


def _b_total(ev, head, args):
    lst = _require_list(head, args)
    return _b_plus(ev, "Plus", list(lst.items)) if lst.items else IntVal(0)


def _b_mean(ev, head, args):
    lst = _require_list(head, args)
    if not lst.items:
        raise _bad_args(head, "empty list")
    total = _b_plus(ev, "Plus", list(lst.items))
    return _divide_scalar(total, IntVal(len(lst.items)))


def _b_length(ev, head, args):
    if len(args) != 1:
        raise _wrong_count(head, "1", len(args))
    v = args[0]
    if isinstance(v, ListVal):
        return IntVal(len(v.items))
    if isinstance(v, AssocVal):
        return IntVal(len(v.pairs))
    if isinstance(v, InertVal):
        return IntVal(len(v.args))
    raise _bad_args(head, "argument must be a list or association")


def _b_count(ev, head, args):
    if len(args) != 2:
        raise _wrong_count(head, "2", len(args))
    lst = args[0]
    if not isinstance(lst, ListVal):
        raise _bad_args(head, "first argument must be a list")
    return IntVal(sum(1 for x in lst.items if values_equal(x, args[1])))


def _b_first(ev, head, args):
    lst = _require_list(head, args)
    if not lst.items:
        raise _bad_args(head, "empty list")
    return lst.items[0]


def _b_last(ev, head, args):
    lst = _require_list(head, args)
    if not lst.items:
        raise _bad_args(head, "empty list")
    return lst.items[-1]


def _call_predicate(ev: Evaluator, head: str, fn: Value, x: Value) -> bool:
    if not isinstance(fn, FnVal):
        raise _bad_args(head, "predicate must be a pure function")
    result = ev.apply_function(fn, [x])
    if not isinstance(result, BoolVal):
        raise _bad_args(head, "predicate must return True or False")
    return result.value


def _b_select(ev, head, args):
    if len(args) != 2:
        raise _wrong_count(head, "2", len(args))
    lst = args[0]
    if not isinstance(lst, ListVal):
        raise _bad_args(head, "first argument must be a list")
    return ListVal(tuple(x for x in lst.items if _call_predicate(ev, head, args[1], x)))


def _b_select_first(ev, head, args):
    if len(args) not in (2, 3):
        raise _wrong_count(head, "2 or 3", len(args))
    lst = args[0]
    if not isinstance(lst, ListVal):
        raise _bad_args(head, "first argument must be a list")
    for x in lst.items:
        if _call_predicate(ev, head, args[1], x):
            return x
    return args[2] if len(args) == 3 else SymVal("None")


def _b_map(ev, head, args):
    if len(args) != 2:
        raise _wrong_count(head, "2", len(args))
    fn, lst = args
    if not isinstance(lst, ListVal):
        raise _bad_args(head, "second argument must be a list")
    if not isinstance(fn, FnVal):
        raise _bad_args(head, "first argument must be a pure function")
    return ListVal(tuple(ev.apply_function(fn, [x]) for x in lst.items))


def _b_keys(ev, head, args):
    if len(args) != 1 or not isinstance(args[0], AssocVal):
        raise _bad_args(head, "argument must be an association")
    return ListVal(args[0].keys())


def _b_values(ev, head, args):
    if len(args) != 1 or not isinstance(args[0], AssocVal):
        raise _bad_args(head, "argument must be an association")
    return ListVal(args[0].values())


def euclidean_distance(p: Value, q: Value) -> Value:
    """sqrt of the summed squared differences; exact when the radicand is a
    perfect square of a rational."""
    if not (isinstance(p, ListVal) and isinstance(q, ListVal)):
        raise _bad_args("EuclideanDistance", "arguments must be lists")
    if len(p.items) != len(q.items) or not p.items:
        raise _wrong_count("EuclideanDistance", "equal-length nonempty lists", len(q.items))
    exact_sum = Fraction(0)
    float_sum = 0.0
    seen_real = False
    for a, b in zip(p.items, q.items):
        if not (is_numeric(a) and is_numeric(b)):
            raise _bad_args("EuclideanDistance", "entries must be numeric")
        if is_exact(a) and is_exact(b) and not seen_real:
            exact_sum += (as_fraction(a) - as_fraction(b)) ** 2
        else:
            if not seen_real:
                float_sum = float(exact_sum)
                seen_real = True
            float_sum += (as_float(a) - as_float(b)) ** 2
    if seen_real:
        return RealVal(math.sqrt(float_sum))
    return sqrt_value(exact_sum)


def _b_euclidean(ev, head, args):
    if len(args) != 2:
        raise _wrong_count(head, "2", len(args))
    return euclidean_distance(args[0], args[1])


def _approx_equal(x: float, y: float) -> bool:
    return abs(x - y) <= EQUAL_REL_TOL * max(1.0, abs(x), abs(y))


def values_equal(a: Value, b: Value) -> bool:
    """Structural equality with exact-vs-real relative tolerance."""
    if is_numeric(a) and is_numeric(b):
        if is_exact(a) and is_exact(b):
            return as_fraction(a) == as_fraction(b)
        return _approx_equal(as_float(a), as_float(b))
    if isinstance(a, ListVal) and isinstance(b, ListVal):
        return len(a.items) == len(b.items) and all(values_equal(x, y) for x, y in zip(a.items, b.items))
    if isinstance(a, AssocVal) and isinstance(b, AssocVal):
        return len(a.pairs) == len(b.pairs) and all(
            values_equal(ka, kb) and values_equal(va, vb)
            for (ka, va), (kb, vb) in zip(a.pairs, b.pairs))
    if isinstance(a, InertVal) and isinstance(b, InertVal):
        return a.head == b.head and len(a.args) == len(b.args) and all(
            values_equal(x, y) for x, y in zip(a.args, b.args))
    return a == b


def _comparable(head: str, a: Value, b: Value) -> None:
    if contains_symbol(a) or contains_symbol(b):
        raise _bad_args(head, "cannot compare symbolic values")


def _b_equal(ev, head, args):
    if len(args) != 2:
        raise _wrong_count(head, "2", len(args))
    _comparable(head, args[0], args[1])
    return BoolVal(values_equal(args[0], args[1]))


def _b_unequal(ev, head, args):
    if len(args) != 2:
        raise _wrong_count(head, "2", len(args))
    _comparable(head, args[0], args[1])
    return BoolVal(not values_equal(args[0], args[1]))


def _ordering(head: str, args: list[Value], cmp: Callable[[float, float], bool],
              exact_cmp: Callable[[Fraction, Fraction], bool]) -> Value:
    if len(args) != 2:
        raise _wrong_count(head, "2", len(args))
    a, b = args
    if not (is_numeric(a) and is_numeric(b)):
        raise _bad_args(head, "operands must be numeric")
    if is_exact(a) and is_exact(b):
        return BoolVal(exact_cmp(as_fraction(a), as_fraction(b)))
    return BoolVal(cmp(as_float(a), as_float(b)))


def _b_not(ev, head, args):
    if len(args) != 1:
        raise _wrong_count(head, "1", len(args))
    if not isinstance(args[0], BoolVal):
        raise _bad_args(head, "operand must be True or False")
    return BoolVal(not args[0].value)


def numeric_approximation(v: Value) -> Value:
    """Deep conversion of exact numbers to floating point (the N builtin)."""
    if isinstance(v, IntVal):
        return RealVal(float(v.value))
    if isinstance(v, RatVal):
        return RealVal(v.num / v.den)
    if isinstance(v, ListVal):
        return ListVal(tuple(numeric_approximation(x) for x in v.items))
    if isinstance(v, AssocVal):
        return AssocVal(tuple((k, numeric_approximation(x)) for k, x in v.pairs))
    if isinstance(v, InertVal):
        return InertVal(v.head, tuple(numeric_approximation(x) for x in v.args))
    return v


def _b_n(ev, head, args):
    if len(args) != 1:
        raise _wrong_count(head, "1", len(args))
    return numeric_approximation(args[0])


def _b_inert(ev, head, args):
    return InertVal(head, tuple(args))


_BUILTINS: dict[str, Callable] = {
    "Plus": _b_plus,
    "Subtract": _b_subtract,
    "Times": _b_times,
    "Divide": _b_divide,
    "Power": _b_power,
    "Minus": _b_minus,
    "Abs": _b_abs,
    "Sqrt": _b_sqrt,
    "Floor": _b_floor,
    "Ceiling": _b_ceiling,
    "Round": _b_round,
    "Mod": _b_mod,
    "GCD": _b_gcd,
    "LCM": _b_lcm,
    "Max": _b_max,
    "Min": _b_min,
    "Total": _b_total,
    "Mean": _b_mean,
    "Length": _b_length,
    "Count": _b_count,
    "First": _b_first,
    "Last": _b_last,
    "Select": _b_select,
    "SelectFirst": _b_select_first,
    "Map": _b_map,
    "Keys": _b_keys,
    "Values": _b_values,
    "EuclideanDistance": _b_euclidean,
    "Equal": _b_equal,
    "Unequal": _b_unequal,
    "Less": lambda ev, h, a: _ordering(h, a, lambda x, y: x < y, lambda x, y: x < y),
    "LessEqual": lambda ev, h, a: _ordering(h, a, lambda x, y: x <= y, lambda x, y: x <= y),
    "Greater": lambda ev, h, a: _ordering(h, a, lambda x, y: x > y, lambda x, y: x > y),
    "GreaterEqual": lambda ev, h, a: _ordering(h, a, lambda x, y: x >= y, lambda x, y: x >= y),
    "Not": _b_not,
    "N": _b_n,
    "Rule": _b_inert,
    "Circle": _b_inert,
    "Point": _b_inert,
    "Line": _b_inert,
    "Polygon": _b_inert,
    "Missing": _b_inert,
}


# --------------------------------------------------------------------------
# Entry points
# --------------------------------------------------------------------------

def evaluate(program: Expr, env: Optional[Environment] = None, limits: Optional[Limits] = None) -> Value:
    """Evaluate a parsed program under fresh or given environment/limits."""
    return Evaluator(env, limits).run(program)


def run_source(source: str, limits: Optional[Limits] = None) -> Value:
    """Parse and evaluate a program from source text."""
    return evaluate(parse_program(source), limits=limits)
