"""Expression language: parsing, typing, and evaluation vs a naive oracle."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linetwin.bpmn import (
    BoolOp,
    Compare,
    EvalError,
    ExprError,
    Literal,
    Not,
    VarRef,
    evaluate,
    evaluate_condition,
    parse_expr,
    type_check,
)


def test_comparison():
    assert evaluate_condition(parse_expr("count >= 2"), {"count": 3}) is True
    assert evaluate_condition(parse_expr("count >= 2"), {"count": 1}) is False


def test_boolean_ops():
    expr = parse_expr("done and not error")
    assert evaluate_condition(expr, {"done": True, "error": False}) is True
    assert evaluate_condition(expr, {"done": True, "error": True}) is False


def test_text_equality_and_unicode_operators():
    assert evaluate_condition(parse_expr("station = 'punch'"), {"station": "punch"}) is True
    assert evaluate_condition(parse_expr("n ≠ 4"), {"n": 5}) is True
    assert evaluate_condition(parse_expr("n ≤ 4 and n ≥ 2"), {"n": 3}) is True


def test_parentheses_and_precedence():
    expr = parse_expr("a or b and c")  # and binds tighter
    assert evaluate(expr, {"a": False, "b": True, "c": False}) is False
    expr = parse_expr("(a or b) and c")
    assert evaluate(expr, {"a": False, "b": True, "c": True}) is True


def test_missing_variable_is_error_not_false():
    with pytest.raises(EvalError):
        evaluate(parse_expr("ghost"), {})


def test_type_check_rejects_mixed_comparison():
    with pytest.raises(ExprError):
        type_check(parse_expr("count > 'three'"), {"count": "integer"})
    with pytest.raises(ExprError):
        type_check(parse_expr("name < 'x'"), {"name": "text"})
    assert type_check(parse_expr("count > 3"), {"count": "integer"}) == "boolean"


def test_parse_errors():
    for bad in ("", "1 +", "and and", "(a", "a ==", "'unterminated"):
        with pytest.raises(ExprError):
            parse_expr(bad)


# -- randomized equivalence against an independent naive evaluator ----------

def naive_eval(expr, values):
    """Straight recursive oracle, written independently of the engine code."""
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, VarRef):
        if expr.name not in values:
            raise KeyError(expr.name)
        return values[expr.name]
    if isinstance(expr, Not):
        return not naive_eval(expr.operand, values)
    if isinstance(expr, BoolOp):
        left, right = naive_eval(expr.left, values), naive_eval(expr.right, values)
        return (left and right) if expr.op == "and" else (left or right)
    left, right = naive_eval(expr.left, values), naive_eval(expr.right, values)
    if expr.op == "==":
        return left == right
    if expr.op == "!=":
        return left != right
    if expr.op == "<":
        return left < right
    if expr.op == "<=":
        return left <= right
    if expr.op == ">":
        return left > right
    return left >= right


_VARS = {"a": "boolean", "b": "boolean", "x": "integer", "y": "integer"}


def _expr_strategy():
    literals = st.one_of(
        st.booleans().map(Literal),
        st.integers(-50, 50).map(Literal),
    )
    variables = st.sampled_from([VarRef("a"), VarRef("b"), VarRef("x"), VarRef("y")])
    base = st.one_of(literals, variables)

    def extend(children):
        int_side = st.one_of(st.integers(-50, 50).map(Literal),
                             st.sampled_from([VarRef("x"), VarRef("y")]))
        bool_side = st.one_of(st.booleans().map(Literal),
                              st.sampled_from([VarRef("a"), VarRef("b")]),
                              children)
        return st.one_of(
            st.tuples(st.sampled_from(["<", "<=", ">", ">=", "==", "!="]), int_side, int_side)
            .map(lambda t: Compare(t[0], t[1], t[2])),
            st.tuples(st.sampled_from(["and", "or"]), bool_side, bool_side)
            .map(lambda t: BoolOp(t[0], t[1], t[2])),
            bool_side.map(Not),
        )

    return st.recursive(base, extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(_expr_strategy(), st.integers(-50, 50), st.integers(-50, 50), st.booleans(), st.booleans())
def test_randomized_equivalence_with_oracle(expr, x, y, a, b):
    values = {"a": a, "b": b, "x": x, "y": y}
    try:
        expected = naive_eval(expr, values)
        well_typed = True
        try:
            type_check(expr, _VARS)
        except ExprError:
            well_typed = False
    except (TypeError, KeyError):
        well_typed = False
        expected = None
    if not well_typed:
        return  # only well-typed expressions have defined semantics
    assert evaluate(expr, values) == expected


@settings(max_examples=200, deadline=None)
@given(_expr_strategy())
def test_round_trip_through_text(expr):
    try:
        type_check(expr, _VARS)
    except ExprError:
        return
    text = _render(expr)
    assert parse_expr(text) == expr


def _render(expr) -> str:
    if isinstance(expr, Literal):
        if isinstance(expr.value, bool):
            return "true" if expr.value else "false"
        if isinstance(expr.value, str):
            return f"'{expr.value}'"
        return str(expr.value)
    if isinstance(expr, VarRef):
        return expr.name
    if isinstance(expr, Not):
        return f"not ({_render(expr.operand)})"
    if isinstance(expr, BoolOp):
        return f"({_render(expr.left)}) {expr.op} ({_render(expr.right)})"
    return f"({_render(expr.left)}) {expr.op} ({_render(expr.right)})"
