"""Safe arithmetic expressions in chart variables.

Expressions use ``+ - * / ^``, parentheses, numeric literals, the constant
``pi`` and the functions ``exp, log, sqrt, sin, cos, tan, tanh, cosh, sinh,
abs``.  They are parsed once and compiled into a numpy-vectorised callable.
"""
from __future__ import annotations

import ast
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

FUNCTIONS: dict[str, Callable] = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "abs": np.abs,
}
CONSTANTS = {"pi": np.pi}

_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_UNARYOPS = (ast.UAdd, ast.USub)


class ExpressionError(ValueError):
    """Raised for malformed or disallowed expressions."""


def _check(node: ast.AST, variables: tuple[str, ...]) -> None:
    if isinstance(node, ast.Expression):
        _check(node.body, variables)
    elif isinstance(node, ast.BinOp):
        if not isinstance(node.op, _BINOPS):
            raise ExpressionError(f"operator {type(node.op).__name__} not allowed")
        _check(node.left, variables)
        _check(node.right, variables)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, _UNARYOPS):
            raise ExpressionError(f"operator {type(node.op).__name__} not allowed")
        _check(node.operand, variables)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
            raise ExpressionError(f"unknown function {ast.unparse(node.func)!r}")
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"{node.func.id} takes exactly one argument")
        _check(node.args[0], variables)
    elif isinstance(node, ast.Name):
        if node.id not in variables and node.id not in CONSTANTS:
            raise ExpressionError(f"unknown name {node.id!r}")
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
            raise ExpressionError(f"literal {node.value!r} not allowed")
    else:
        raise ExpressionError(f"syntax {type(node).__name__} not allowed")


@dataclass(frozen=True)
class Expression:
    """A compiled scalar expression; call with one array per variable."""

    source: str
    variables: tuple[str, ...] = ("x", "y")
    _fn: Callable = field(repr=False, compare=False, default=None)

    def __call__(self, *args):
        if len(args) != len(self.variables):
            raise TypeError(f"expected {len(self.variables)} arguments, got {len(args)}")
        env = dict(zip(self.variables, (np.asarray(a, dtype=float) for a in args)))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self._fn(**env)
        return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(*env.values()).shape).copy()


def parse(source: str, variables: tuple[str, ...] = ("x", "y")) -> Expression:
    """Parse ``source`` into a vectorised :class:`Expression`.

    ``^`` is exponentiation.  Raises :class:`ExpressionError` on any syntax
    error or on names outside ``variables``, the constants and the function
    whitelist.
    """
    if not isinstance(source, str) or not source.strip():
        raise ExpressionError("empty expression")
    text = source.replace("^", "**")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {source!r}: {exc.msg}") from None
    _check(tree, variables)
    code = compile(tree, "<expression>", "eval")
    namespace = {"__builtins__": {}, **FUNCTIONS, **CONSTANTS}

    def fn(**env):
        return eval(code, namespace, env)

    return Expression(source, tuple(variables), fn)
