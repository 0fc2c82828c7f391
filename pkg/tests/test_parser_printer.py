import pytest
from hypothesis import given, settings, strategies as st

from neurosym.ast import Apply, Assoc, Integer, ListExpr, PureFn, Real, Slot, Str, Sym
from neurosym.parser import ParseError, parse_program
from neurosym.printer import format_expr


def roundtrip(source: str):
    tree = parse_program(source)
    again = parse_program(format_expr(tree))
    assert again == tree
    return tree


def head(e):
    assert isinstance(e, Apply) and isinstance(e.head, Sym)
    return e.head.name


def test_precedence_arithmetic():
    assert parse_program("1 + 2 * 3") == Apply(
        Sym("Plus"), (Integer(1), Apply(Sym("Times"), (Integer(2), Integer(3)))))
    assert parse_program("(1 + 2) * 3") == Apply(
        Sym("Times"), (Apply(Sym("Plus"), (Integer(1), Integer(2))), Integer(3)))


def test_power_is_right_associative():
    assert parse_program("2 ^ 3 ^ 2") == Apply(
        Sym("Power"), (Integer(2), Apply(Sym("Power"), (Integer(3), Integer(2)))))


def test_subtraction_is_left_associative():
    assert parse_program("10 - 3 - 2") == Apply(
        Sym("Subtract"), (Apply(Sym("Subtract"), (Integer(10), Integer(3))), Integer(2)))


def test_unary_minus_binds_tighter_than_times_operand():
    tree = parse_program("-2 + 3")
    assert head(tree) == "Plus"
    assert tree.args[0] == Apply(Sym("Minus"), (Integer(2),))


def test_comparison_and_logic_layering():
    tree = parse_program("a < b && c == d || e")
    assert head(tree) == "Or"
    assert head(tree.args[0]) == "And"


def test_rule_is_right_associative_and_looser_than_logic():
    tree = parse_program("a -> b -> c")
    assert head(tree) == "Rule"
    assert head(tree.args[1]) == "Rule"


def test_set_and_set_delayed():
    assert head(parse_program("x = 1")) == "Set"
    assert head(parse_program("f := 1")) == "SetDelayed"
    tree = parse_program("x = y = 2")
    assert head(tree) == "Set" and head(tree.args[1]) == "Set"


def test_compound_expression_and_trailing_semicolon():
    tree = parse_program("a; b; c")
    assert head(tree) == "CompoundExpression" and len(tree.args) == 3
    trailing = parse_program("a;")
    assert trailing.args[-1] == Sym("Null")


def test_application_and_nesting():
    tree = parse_program("f[x, g[y]]")
    assert head(tree) == "f"
    assert head(tree.args[1]) == "g"


def test_list_and_assoc_literals():
    tree = parse_program("{1, 2, 3}")
    assert isinstance(tree, ListExpr) and len(tree.items) == 3
    assoc = parse_program('<|"a" -> 1, "b" -> 2|>')
    assert isinstance(assoc, Assoc) and len(assoc.pairs) == 2
    for pair in assoc.pairs:
        assert head(pair) == "Rule"


def test_assoc_entries_must_be_rules():
    with pytest.raises(ParseError):
        parse_program("<|1, 2|>")


def test_pure_function_postfix():
    tree = parse_program("# + 1 &")
    assert isinstance(tree, PureFn)
    assert head(tree.body) == "Plus"
    assert tree.body.args[0] == Slot(1)


def test_pure_function_applied():
    tree = parse_program("(#^2 &)[3]")
    assert isinstance(tree.head, PureFn)


def test_empty_input_is_a_parse_error():
    with pytest.raises(ParseError):
        parse_program("")
    with pytest.raises(ParseError):
        parse_program("(* only a comment *)")


def test_trailing_tokens_rejected():
    with pytest.raises(ParseError):
        parse_program("1 2")
    with pytest.raises(ParseError):
        parse_program("f[1]]")


def test_error_carries_span():
    with pytest.raises(ParseError) as err:
        parse_program("1 +")
    assert err.value.span is not None


def test_roundtrip_on_representative_programs():
    programs = [
        "1 + 2 * 3 - 4 / 5",
        "-x ^ 2",
        "2 ^ 3 ^ 2",
        "(1 + 2) * 3",
        "f := Module[{x, y}, x = 1; y = 2; x + y]",
        "Select[{1, 2, 3, 4}, # > 2 &]",
        'result = If[EuclideanDistance[{0, 0}, p] < 5, "A", "B"]',
        '<|"key" -> {1, 2}, "other" -> "text"|>',
        "Solve[x ^ 2 == 4, x]",
        "a && b || c == d",
        "x = 1; y = x + 1; y",
        "Map[#1 + #2 &, {1, 2}]",
        "3.25 + 0.5",
    ]
    for src in programs:
        roundtrip(src)


# ---- property: print-then-parse is the identity on generated trees ----

_names = st.sampled_from(["x", "y", "z", "foo", "Total"])


def _exprs():
    leaves = st.one_of(
        st.integers(min_value=-50, max_value=50).map(lambda n: Integer(abs(n)) if n >= 0
                                                     else Apply(Sym("Minus"), (Integer(-n),))),
        _names.map(Sym),
        st.text(alphabet="abc xyz", max_size=6).map(Str),
    )

    def extend(children):
        binop = st.sampled_from(["Plus", "Subtract", "Times", "Divide", "Power"])
        return st.one_of(
            st.tuples(binop, children, children).map(lambda t: Apply(Sym(t[0]), (t[1], t[2]))),
            st.lists(children, min_size=0, max_size=3).map(lambda xs: ListExpr(tuple(xs))),
            st.tuples(_names, st.lists(children, min_size=0, max_size=3)).map(
                lambda t: Apply(Sym(t[0]), tuple(t[1]))),
        )

    return st.recursive(leaves, extend, max_leaves=12)


@settings(max_examples=150, deadline=None)
@given(_exprs())
def test_print_parse_identity(tree):
    assert parse_program(format_expr(tree)) == tree


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=0.0, max_value=1e9, allow_nan=False, allow_infinity=False))
def test_real_literals_roundtrip_exactly(x):
    tree = parse_program(format_expr(Real(x)))
    assert tree == Real(x)
