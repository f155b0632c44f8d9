"""Small safe math-expression language for user-supplied models.

Expressions are parsed with ``ast`` and interpreted against a whitelist of
arithmetic operations and dual-aware math functions, so user configs can be
differentiated like built-in models."""

from __future__ import annotations

import ast
import math

from . import dual as dm


class ExpressionError(ValueError):
    pass


_FUNCS = {
    "sin": dm.sin, "cos": dm.cos, "tan": dm.tan,
    "exp": dm.exp, "log": dm.log, "sqrt": dm.sqrt,
    "atan": dm.atan, "asin": dm.asin, "acos": dm.acos,
    "sinh": dm.sinh, "cosh": dm.cosh, "tanh": dm.tanh,
    "atanh": dm.atanh, "abs": abs,
}

_CONSTS = {"pi": math.pi, "e": math.e}

_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a ** b,
}

_UNARYOPS = {ast.USub: lambda a: -a, ast.UAdd: lambda a: a}


def _check(node, variables):
    if isinstance(node, ast.Expression):
        _check(node.body, variables)
    elif isinstance(node, ast.BinOp):
        if type(node.op) not in _BINOPS:
            raise ExpressionError(f"operator {type(node.op).__name__} not allowed")
        _check(node.left, variables)
        _check(node.right, variables)
    elif isinstance(node, ast.UnaryOp):
        if type(node.op) not in _UNARYOPS:
            raise ExpressionError(f"operator {type(node.op).__name__} not allowed")
        _check(node.operand, variables)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
            raise ExpressionError("only whitelisted function calls allowed")
        if node.keywords:
            raise ExpressionError("keyword arguments not allowed")
        for a in node.args:
            _check(a, variables)
    elif isinstance(node, ast.Name):
        if node.id not in variables and node.id not in _CONSTS:
            raise ExpressionError(f"unknown name {node.id!r}")
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            raise ExpressionError("only numeric literals allowed")
    else:
        raise ExpressionError(f"syntax {type(node).__name__} not allowed")


def _eval(node, env):
    if isinstance(node, ast.Expression):
        return _eval(node.body, env)
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, env),
                                      _eval(node.right, env))
    if isinstance(node, ast.UnaryOp):
        return _UNARYOPS[type(node.op)](_eval(node.operand, env))
    if isinstance(node, ast.Call):
        return _FUNCS[node.func.id](*[_eval(a, env) for a in node.args])
    if isinstance(node, ast.Name):
        return env[node.id] if node.id in env else _CONSTS[node.id]
    if isinstance(node, ast.Constant):
        return node.value
    raise ExpressionError(f"syntax {type(node).__name__} not allowed")


def compile_expression(src, variables, constants=None):
    """Callable(env_values...) -> value for a validated expression string.

    ``variables`` is the ordered argument list; ``constants`` are extra
    fixed name bindings (model parameters)."""
    constants = dict(constants or {})
    names = list(variables) + list(constants)
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as e:
        raise ExpressionError(f"cannot parse {src!r}: {e}") from None
    _check(tree, set(names))

    def fn(values):
        env = dict(constants)
        env.update(zip(variables, values))
        return _eval(tree, env)

    fn.source = src
    return fn


def compile_vector(sources, variables, constants=None):
    fns = [compile_expression(s, variables, constants) for s in sources]
    return lambda values: [f(values) for f in fns]


def compile_matrix(sources, variables, constants=None):
    rows = [[compile_expression(s, variables, constants) for s in row]
            for row in sources]
    return lambda values: [[f(values) for f in row] for row in rows]
