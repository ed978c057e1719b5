"""Minimal condition expression language for gateway flows and task params.

Literals (boolean, integer, quoted text), variable references, comparisons
and boolean operators. Both ASCII (<=, !=) and typographic (≤, ≠) operator
spellings are accepted. Evaluation is strict: a missing variable is an
error, never false.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

BOOLEAN = "boolean"
INTEGER = "integer"
TEXT = "text"


class ExprError(Exception):
    pass


class EvalError(Exception):
    pass


@dataclass(frozen=True)
class Literal:
    value: bool | int | str


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class Compare:
    op: str  # == != < <= > >=
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class BoolOp:
    op: str  # and | or
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


Expr = Literal | VarRef | Compare | BoolOp | Not

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>-?\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<str>'[^']*'|\"[^\"]*\")"
    r"|(?P<op><=|>=|==|!=|≤|≥|≠|=|<|>|\(|\)))"
)

_OP_CANON = {"=": "==", "≠": "!=", "≤": "<=", "≥": ">="}
_KEYWORDS = {"and", "or", "not", "true", "false"}


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            rest = text[pos:].strip()
            if not rest:
                break
            raise ExprError(f"unexpected input at {rest[:20]!r}")
        pos = match.end()
        if match.lastgroup == "num":
            tokens.append(("num", match.group("num")))
        elif match.lastgroup == "name":
            name = match.group("name")
            lowered = name.lower()
            tokens.append((lowered, name) if lowered in _KEYWORDS else ("name", name))
        elif match.lastgroup == "str":
            tokens.append(("str", match.group("str")[1:-1]))
        else:
            op = match.group("op")
            tokens.append(("op", _OP_CANON.get(op, op)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, str]]):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self):
        token = self.peek()
        self.pos += 1
        return token

    def expect_op(self, op: str):
        kind, value = self.take()
        if kind != "op" or value != op:
            raise ExprError(f"expected {op!r}, found {value!r}")

    def parse(self) -> Expr:
        expr = self.parse_or()
        if self.pos != len(self.tokens):
            raise ExprError(f"trailing input after expression: {self.tokens[self.pos:]!r}")
        return expr

    def parse_or(self) -> Expr:
        left = self.parse_and()
        while self.peek()[0] == "or":
            self.take()
            left = BoolOp("or", left, self.parse_and())
        return left

    def parse_and(self) -> Expr:
        left = self.parse_not()
        while self.peek()[0] == "and":
            self.take()
            left = BoolOp("and", left, self.parse_not())
        return left

    def parse_not(self) -> Expr:
        if self.peek()[0] == "not":
            self.take()
            return Not(self.parse_not())
        return self.parse_comparison()

    def parse_comparison(self) -> Expr:
        left = self.parse_atom()
        kind, value = self.peek()
        if kind == "op" and value in ("==", "!=", "<", "<=", ">", ">="):
            self.take()
            return Compare(value, left, self.parse_atom())
        return left

    def parse_atom(self) -> Expr:
        kind, value = self.take()
        if kind == "num":
            return Literal(int(value))
        if kind == "str":
            return Literal(value)
        if kind == "true":
            return Literal(True)
        if kind == "false":
            return Literal(False)
        if kind == "name":
            return VarRef(value)
        if kind == "op" and value == "(":
            inner = self.parse_or()
            self.expect_op(")")
            return inner
        raise ExprError(f"unexpected token {value!r}")


def parse_expr(text: str) -> Expr:
    tokens = _tokenize(text)
    if not tokens:
        raise ExprError("empty expression")
    return _Parser(tokens).parse()


def _kind_of_value(value) -> str:
    if isinstance(value, bool):
        return BOOLEAN
    if isinstance(value, int):
        return INTEGER
    if isinstance(value, str):
        return TEXT
    raise EvalError(f"unsupported value type {type(value).__name__}")


def type_check(expr: Expr, variables: dict[str, str]) -> str:
    """Infer the expression's kind; raises ExprError on type violations."""
    if isinstance(expr, Literal):
        return _kind_of_value(expr.value)
    if isinstance(expr, VarRef):
        kind = variables.get(expr.name)
        if kind is None:
            raise ExprError(f"unknown variable {expr.name!r}")
        return kind
    if isinstance(expr, Compare):
        left = type_check(expr.left, variables)
        right = type_check(expr.right, variables)
        if left != right:
            raise ExprError(f"cannot compare {left} with {right}")
        if expr.op in ("<", "<=", ">", ">=") and left != INTEGER:
            raise ExprError(f"ordering comparison requires integers, got {left}")
        return BOOLEAN
    if isinstance(expr, BoolOp):
        for side in (expr.left, expr.right):
            if type_check(side, variables) != BOOLEAN:
                raise ExprError(f"{expr.op} requires boolean operands")
        return BOOLEAN
    if isinstance(expr, Not):
        if type_check(expr.operand, variables) != BOOLEAN:
            raise ExprError("not requires a boolean operand")
        return BOOLEAN
    raise ExprError(f"unknown expression node {expr!r}")


def evaluate(expr: Expr, values: dict) -> bool | int | str:
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, VarRef):
        if expr.name not in values:
            raise EvalError(f"variable {expr.name!r} is not defined")
        return values[expr.name]
    if isinstance(expr, Compare):
        left = evaluate(expr.left, values)
        right = evaluate(expr.right, values)
        if _kind_of_value(left) != _kind_of_value(right):
            raise EvalError(f"cannot compare {type(left).__name__} with {type(right).__name__}")
        if expr.op == "==":
            return left == right
        if expr.op == "!=":
            return left != right
        if not isinstance(left, int) or isinstance(left, bool):
            raise EvalError("ordering comparison requires integers")
        if expr.op == "<":
            return left < right
        if expr.op == "<=":
            return left <= right
        if expr.op == ">":
            return left > right
        return left >= right
    if isinstance(expr, BoolOp):
        left = evaluate(expr.left, values)
        if not isinstance(left, bool):
            raise EvalError(f"{expr.op} requires boolean operands")
        # strict evaluation: both sides are checked even when short-circuitable
        right = evaluate(expr.right, values)
        if not isinstance(right, bool):
            raise EvalError(f"{expr.op} requires boolean operands")
        return (left and right) if expr.op == "and" else (left or right)
    if isinstance(expr, Not):
        operand = evaluate(expr.operand, values)
        if not isinstance(operand, bool):
            raise EvalError("not requires a boolean operand")
        return not operand
    raise EvalError(f"unknown expression node {expr!r}")


def evaluate_condition(expr: Expr, values: dict) -> bool:
    result = evaluate(expr, values)
    if not isinstance(result, bool):
        raise EvalError("condition did not evaluate to a boolean")
    return result
