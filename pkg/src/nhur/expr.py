"""Restricted expression language for scenario files.

Expressions are parsed with ``ast`` and only arithmetic, comparisons, boolean
logic, subscripts, names and calls to whitelisted functions are evaluated.
``*`` between two operators is the matrix product; ``X**k`` is a matrix power.
Complex literals may be written ``0.5i`` or ``0.5j``.
"""
import ast
import operator
import re

import numpy as np

_IMAG = re.compile(r"(?<![\w.])((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)i\b")


class ExpressionError(ValueError):
    pass


def parse_complex(text):
    """Parse ``"a+bi"`` style complex numbers (also accepts plain numbers)."""
    if isinstance(text, (int, float, complex)) and not isinstance(text, bool):
        return complex(text)
    if not isinstance(text, str):
        raise ExpressionError(f"not a complex number: {text!r}")
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise ExpressionError(f"not a complex number: {text!r}") from None


_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Div: operator.truediv,
    ast.MatMult: operator.matmul,
}
_CMPOPS = {
    ast.Eq: operator.eq,
    ast.NotEq: operator.ne,
    ast.Lt: operator.lt,
    ast.LtE: operator.le,
    ast.Gt: operator.gt,
    ast.GtE: operator.ge,
}


def _is_matrix(v):
    return isinstance(v, np.ndarray) and v.ndim == 2


def _mul(a, b):
    if _is_matrix(a) and _is_matrix(b):
        return a @ b
    return a * b


def _pow(a, k):
    if _is_matrix(a):
        if not float(k).is_integer() or k < 0:
            raise ExpressionError("operator powers must be non-negative integers")
        return np.linalg.matrix_power(a, int(k))
    return a**k


class Evaluator:
    """Evaluate expressions against ``resolve(name)`` and a function table."""

    def __init__(self, resolve, functions):
        self.resolve = resolve
        self.functions = functions

    def __call__(self, text):
        if not isinstance(text, str):
            raise ExpressionError(f"expression must be a string, got {text!r}")
        source = _IMAG.sub(r"\1j", text)
        try:
            tree = ast.parse(source, mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
        return self._eval(tree.body, text)

    def _eval(self, node, text):
        ev = lambda n: self._eval(n, text)  # noqa: E731
        if isinstance(node, ast.Constant):
            if isinstance(node.value, (int, float, complex, str, bool)):
                return node.value
        elif isinstance(node, ast.Name):
            return self.resolve(node.id)
        elif isinstance(node, ast.BinOp):
            left, right = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Mult):
                return _mul(left, right)
            if isinstance(node.op, ast.Pow):
                return _pow(left, right)
            if type(node.op) in _BINOPS:
                return _BINOPS[type(node.op)](left, right)
        elif isinstance(node, ast.UnaryOp):
            v = ev(node.operand)
            if isinstance(node.op, ast.USub):
                return -v
            if isinstance(node.op, ast.UAdd):
                return v
            if isinstance(node.op, ast.Not):
                return not v
        elif isinstance(node, ast.BoolOp):
            if isinstance(node.op, ast.And):
                return all(bool(ev(v)) for v in node.values)
            return any(bool(ev(v)) for v in node.values)
        elif isinstance(node, ast.Compare):
            left = ev(node.left)
            for op, comp in zip(node.ops, node.comparators):
                fn = _CMPOPS.get(type(op))
                if fn is None:
                    raise ExpressionError(f"unsupported comparison in {text!r}")
                right = ev(comp)
                if not bool(fn(left, right)):
                    return False
                left = right
            return True
        elif isinstance(node, ast.Subscript):
            index = node.slice
            if isinstance(index, ast.Tuple):
                return ev(node.value)[tuple(ev(e) for e in index.elts)]
            return ev(node.value)[ev(index)]
        elif isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
            fn = self.functions.get(node.func.id)
            if fn is None:
                raise ExpressionError(f"unknown function {node.func.id!r} in {text!r}")
            return fn(*[ev(a) for a in node.args])
        raise ExpressionError(f"unsupported syntax {type(node).__name__} in {text!r}")
