from .engine import CommandDispatcher, ExecutionPolicy, execute
from .exprs import (
    BoolOp,
    Compare,
    EvalError,
    Expr,
    ExprError,
    Literal,
    Not,
    VarRef,
    evaluate,
    evaluate_condition,
    parse_expr,
    type_check,
)
from .model import BpmnNode, BpmnProcess, Lane, RunEntry, RunLog, SequenceFlow
from .parser import BpmnParseError, parse_bpmn, parse_bpmn_detailed
from .validate import validate_process

__all__ = [
    "BoolOp",
    "BpmnNode",
    "BpmnParseError",
    "BpmnProcess",
    "Compare",
    "CommandDispatcher",
    "EvalError",
    "ExecutionPolicy",
    "Expr",
    "ExprError",
    "Lane",
    "Literal",
    "Not",
    "RunEntry",
    "RunLog",
    "SequenceFlow",
    "VarRef",
    "evaluate",
    "evaluate_condition",
    "execute",
    "parse_bpmn",
    "parse_bpmn_detailed",
    "parse_expr",
    "type_check",
    "validate_process",
]
