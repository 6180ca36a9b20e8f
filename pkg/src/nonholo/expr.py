"""Arithmetic expressions for scenario files.

Supports ``+ - * / ^`` (``**`` also accepted), parentheses, numbers, the
functions ``sin cos tan exp ln log sqrt abs sinh cosh tanh atan`` and the
constants ``pi`` and ``e``. Expressions are checked against a whitelist of
syntax nodes and names, then compiled once.
"""

import ast
import math

__all__ = ["ExpressionError", "compile_expr"]


class ExpressionError(ValueError):
    pass


FUNCTIONS = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "ln": math.log,
    "log": math.log,
    "sqrt": math.sqrt,
    "abs": abs,
    "sinh": math.sinh,
    "cosh": math.cosh,
    "tanh": math.tanh,
    "atan": math.atan,
}
CONSTANTS = {"pi": math.pi, "e": math.e}

_ALLOWED = (
    ast.Expression,
    ast.BinOp,
    ast.UnaryOp,
    ast.Call,
    ast.Name,
    ast.Load,
    ast.Constant,
    ast.Add,
    ast.Sub,
    ast.Mult,
    ast.Div,
    ast.Pow,
    ast.USub,
    ast.UAdd,
)


def compile_expr(text, variables):
    """Compile ``text`` into a function of the given variable names (positional)."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        value = float(text)
        return lambda *args: value
    if not isinstance(text, str):
        raise ExpressionError(f"expected an expression string, got {text!r}")
    variables = list(variables)
    clash = set(variables) & (set(FUNCTIONS) | set(CONSTANTS))
    if clash:
        raise ExpressionError(f"variable names shadow built-ins: {sorted(clash)}")
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED):
            raise ExpressionError(f"unsupported syntax {type(node).__name__} in {text!r}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ExpressionError(f"unsupported literal {node.value!r} in {text!r}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                raise ExpressionError(f"unknown function in {text!r}")
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError(f"functions take exactly one argument in {text!r}")
        if isinstance(node, ast.Name) and node.id not in FUNCTIONS and node.id not in CONSTANTS and node.id not in variables:
            raise ExpressionError(f"unknown name {node.id!r} in {text!r}")
    code = compile(tree, "<expr>", "eval")
    env = {"__builtins__": {}, **FUNCTIONS, **CONSTANTS}

    def evaluate(*args):
        if len(args) != len(variables):
            raise ExpressionError(f"expected {len(variables)} arguments, got {len(args)}")
        try:
            return float(eval(code, env, dict(zip(variables, args))))
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise ArithmeticError(f"evaluating {text!r} at {dict(zip(variables, args))}: {exc}") from None

    evaluate.source = text
    return evaluate
