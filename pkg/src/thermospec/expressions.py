"""A small formula language in one variable ``x``.

Grammar: numbers, ``x``, ``pi``, ``e``, ``inf``, the operators ``+ - * / **``,
the functions ``log``, ``exp``, ``abs``, ``sqrt`` and
``where(<comparison>, a, b)`` for piecewise definitions. Formulas are parsed
with :mod:`ast` and never passed to ``eval``.

Each formula can be evaluated pointwise (numpy, vectorised) or over an
interval, in which case it returns an enclosure ``(lo, hi)`` of its range.
Interval evaluation does not use directed rounding; enclosures are widened by
a few ulps at the end.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field

import numpy as np

_FUNCS = {"log", "exp", "abs", "sqrt", "where"}
_CONSTS = {"pi": math.pi, "e": math.e, "inf": math.inf}
_CMP = {ast.Lt: np.less, ast.LtE: np.less_equal, ast.Gt: np.greater, ast.GtE: np.greater_equal}


class FormulaError(ValueError):
    pass


def _check(node: ast.AST) -> None:
    if isinstance(node, ast.Expression):
        _check(node.body)
    elif isinstance(node, ast.BinOp):
        if not isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)):
            raise FormulaError(f"operator {type(node.op).__name__} not allowed")
        _check(node.left)
        _check(node.right)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.USub, ast.UAdd)):
            raise FormulaError(f"operator {type(node.op).__name__} not allowed")
        _check(node.operand)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS or node.keywords:
            raise FormulaError("only log, exp, abs, sqrt and where(...) may be called")
        nargs = 3 if node.func.id == "where" else 1
        if len(node.args) != nargs:
            raise FormulaError(f"{node.func.id} takes {nargs} argument(s)")
        if node.func.id == "where":
            cond = node.args[0]
            if not (isinstance(cond, ast.Compare) and len(cond.ops) == 1 and type(cond.ops[0]) in _CMP):
                raise FormulaError("where() needs a single comparison <, <=, > or >= as first argument")
            _check(cond.left)
            _check(cond.comparators[0])
            node_args = node.args[1:]
        else:
            node_args = node.args
        for a in node_args:
            _check(a)
    elif isinstance(node, ast.Name):
        if node.id != "x" and node.id not in _CONSTS:
            raise FormulaError(f"unknown name {node.id!r}")
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
            raise FormulaError(f"bad constant {node.value!r}")
    else:
        raise FormulaError(f"syntax {type(node).__name__} not allowed")


def _point(node: ast.AST, x):
    if isinstance(node, ast.Expression):
        return _point(node.body, x)
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return x if node.id == "x" else _CONSTS[node.id]
    if isinstance(node, ast.UnaryOp):
        v = _point(node.operand, x)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp):
        a = _point(node.left, x)
        b = _point(node.right, x)
        op = node.op
        if isinstance(op, ast.Add):
            return a + b
        if isinstance(op, ast.Sub):
            return a - b
        if isinstance(op, ast.Mult):
            return a * b
        if isinstance(op, ast.Div):
            return np.divide(a, b)
        return np.power(a, b)
    if isinstance(node, ast.Call):
        name = node.func.id
        if name == "where":
            cond = node.args[0]
            c = _CMP[type(cond.ops[0])](_point(cond.left, x), _point(cond.comparators[0], x))
            return np.where(c, _point(node.args[1], x), _point(node.args[2], x))
        v = _point(node.args[0], x)
        return {"log": np.log, "exp": np.exp, "abs": np.abs, "sqrt": np.sqrt}[name](v)
    raise FormulaError("unreachable")


# Interval evaluation: every interval is a pair of equal-shape float arrays.


def _const(v: float, like: np.ndarray):
    c = np.full_like(like, v)
    return c, c


def _mul(a, b):
    prods = []
    for u in a:
        for v in b:
            with np.errstate(invalid="ignore"):
                p = u * v
            # 0 * inf is 0 for enclosures of bounded factors
            prods.append(np.where(np.isnan(p), 0.0, p))
    return np.minimum.reduce(prods), np.maximum.reduce(prods)


def _ipow(a, p: float):
    lo, hi = a
    if float(p).is_integer():
        n = int(p)
        if n == 0:
            return _const(1.0, lo)
        if n < 0:
            return _idiv(_const(1.0, lo), _ipow(a, -n))
        with np.errstate(over="ignore"):
            u, v = lo**n, hi**n
        small, big = np.minimum(u, v), np.maximum(u, v)
        if n % 2 == 0:
            small = np.where((lo <= 0) & (hi >= 0), 0.0, small)
        return small, big
    if np.any(lo < 0):
        raise FormulaError("non-integer power of a possibly negative base")
    with np.errstate(divide="ignore", over="ignore"):
        u, v = np.power(lo, p), np.power(hi, p)
    return np.minimum(u, v), np.maximum(u, v)


def _idiv(a, b):
    lo, hi = b
    safe_lo = np.where(lo == 0, 1.0, lo)
    safe_hi = np.where(hi == 0, 1.0, hi)
    # reciprocal of [lo, hi], unbounded on the side where an endpoint is 0
    r_lo = np.where(hi == 0, -np.inf, 1.0 / safe_hi)
    r_hi = np.where(lo == 0, np.inf, 1.0 / safe_lo)
    full = ((lo < 0) & (hi > 0)) | ((lo == 0) & (hi == 0))
    q_lo, q_hi = _mul(a, (np.where(full, -np.inf, r_lo), np.where(full, np.inf, r_hi)))
    return np.where(full, -np.inf, q_lo), np.where(full, np.inf, q_hi)


def _interval(node: ast.AST, iv):
    if isinstance(node, ast.Expression):
        return _interval(node.body, iv)
    if isinstance(node, ast.Constant):
        return _const(float(node.value), iv[0])
    if isinstance(node, ast.Name):
        if node.id == "x":
            return iv
        return _const(_CONSTS[node.id], iv[0])
    if isinstance(node, ast.UnaryOp):
        lo, hi = _interval(node.operand, iv)
        return (-hi, -lo) if isinstance(node.op, ast.USub) else (lo, hi)
    if isinstance(node, ast.BinOp):
        a = _interval(node.left, iv)
        b = _interval(node.right, iv)
        op = node.op
        if isinstance(op, ast.Pow):
            if np.any(b[0] != b[1]) or np.unique(b[0]).size > 1:
                if np.any(a[0] < 0):
                    raise FormulaError("variable exponent needs a nonnegative base")
                return _iexp(_mul(b, _ilog(a)))
            return _ipow(a, float(b[0].flat[0]) if b[0].size else 1.0)
        if isinstance(op, ast.Add):
            return a[0] + b[0], a[1] + b[1]
        if isinstance(op, ast.Sub):
            return a[0] - b[1], a[1] - b[0]
        if isinstance(op, ast.Mult):
            return _mul(a, b)
        return _idiv(a, b)
    if isinstance(node, ast.Call):
        name = node.func.id
        if name == "where":
            cond = node.args[0]
            left = _interval(cond.left, iv)
            right = _interval(cond.comparators[0], iv)
            op = type(cond.ops[0])
            if op in (ast.Gt, ast.GtE):
                left, right = right, left
                strict = op is ast.Gt
            else:
                strict = op is ast.Lt
            # condition reads left < right (or <=)
            if strict:
                always = left[1] < right[0]
                never = left[0] >= right[1]
            else:
                always = left[1] <= right[0]
                never = left[0] > right[1]
            t = _interval(node.args[1], iv)
            f = _interval(node.args[2], iv)
            lo = np.where(always, t[0], np.where(never, f[0], np.minimum(t[0], f[0])))
            hi = np.where(always, t[1], np.where(never, f[1], np.maximum(t[1], f[1])))
            return lo, hi
        a = _interval(node.args[0], iv)
        if name == "log":
            return _ilog(a)
        if name == "exp":
            return _iexp(a)
        if name == "sqrt":
            if np.any(a[1] < 0):
                raise FormulaError("sqrt of a negative interval")
            return np.sqrt(np.maximum(a[0], 0.0)), np.sqrt(a[1])
        lo, hi = a
        return (np.where(lo >= 0, lo, np.where(hi <= 0, -hi, 0.0)),
                np.where(lo >= 0, hi, np.where(hi <= 0, -lo, np.maximum(-lo, hi))))
    raise FormulaError("unreachable")


def _ilog(a):
    lo, hi = a
    if np.any(hi < 0):
        raise FormulaError("log of a negative interval")
    with np.errstate(divide="ignore"):
        return np.log(np.maximum(lo, 0.0)), np.log(hi)


def _iexp(a):
    with np.errstate(over="ignore"):
        return np.exp(a[0]), np.exp(a[1])


def _widen(lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    fin_lo, fin_hi = np.isfinite(lo), np.isfinite(hi)
    lo = np.where(fin_lo, lo - 4 * np.spacing(np.abs(np.where(fin_lo, lo, 0.0))) - 1e-300, lo)
    hi = np.where(fin_hi, hi + 4 * np.spacing(np.abs(np.where(fin_hi, hi, 0.0))) + 1e-300, hi)
    return lo, hi


@dataclass(frozen=True)
class Formula:
    """A parsed formula in ``x``; callable on floats or numpy arrays."""

    source: str
    _tree: ast.Expression = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        try:
            tree = ast.parse(self.source.strip(), mode="eval")
        except SyntaxError as exc:
            raise FormulaError(f"cannot parse {self.source!r}: {exc.msg}") from None
        _check(tree)
        object.__setattr__(self, "_tree", tree)

    def __call__(self, x):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = _point(self._tree, np.asarray(x, dtype=float))
        out = np.asarray(out, dtype=float)
        if out.shape != np.shape(x):
            out = np.broadcast_to(out, np.shape(x)).copy()
        return out if out.ndim else float(out)

    def enclose(self, lo: float, hi: float) -> tuple[float, float]:
        """Enclosure of the range of the formula over ``[lo, hi]``."""
        a, b = self.enclose_many(np.array([lo], dtype=float), np.array([hi], dtype=float))
        return float(a[0]), float(b[0])

    def enclose_many(self, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Elementwise enclosures over the intervals ``[lo[i], hi[i]]``."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if np.any(lo > hi):
            raise ValueError("interval with lo > hi")
        return _widen(*_interval(self._tree, (lo, hi)))

    def is_constant(self) -> bool:
        return "x" not in {n.id for n in ast.walk(self._tree) if isinstance(n, ast.Name)}
