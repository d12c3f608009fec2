"""Safe expression grammar for state-dependent coefficients.

Configs refer to coefficients like gamma(x) or m(x) as strings, e.g.
``"0.6 + 0.2*sin(x)"``.  The grammar is deliberately small: numeric literals,
the state (``x`` or components ``x1..xd``), ``r`` for |x|, arithmetic
(+ - * / **), and the functions sin, cos, exp, sqrt, abs, log1p, tanh.
Division is allowed (rational functions); anything else is rejected at
compile time with the offending construct named.

Compiled expressions evaluate with numpy semantics, so they broadcast over
arrays of states; that is what lets the path schemes call gamma(X) on a
vector of particles per step.
"""

from __future__ import annotations

import ast

import numpy as np

from .errors import ConfigError

_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "log1p": np.log1p,
    "tanh": np.tanh,
}

_CONSTANTS = {"pi": np.pi, "e": np.e}

_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


def _compile_node(node, dim, extra=()):
    if isinstance(node, ast.Expression):
        return _compile_node(node.body, dim, extra)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            v = float(node.value)
            return lambda comps: v
        raise ConfigError(f"non-numeric literal {node.value!r} in expression")
    if isinstance(node, ast.Name):
        name = node.id
        if name in _CONSTANTS:
            v = _CONSTANTS[name]
            return lambda comps: v
        if name in extra:
            k = dim + extra.index(name)
            return lambda comps: comps[k]
        if name == "x":
            if dim != 1:
                raise ConfigError("bare 'x' only valid for d=1; use x1..xd")
            return lambda comps: comps[0]
        if name == "r":
            if dim == 1:
                return lambda comps: np.abs(comps[0])
            return lambda comps: np.sqrt(sum(c * c for c in comps[:dim]))
        if name.startswith("x") and name[1:].isdigit():
            k = int(name[1:])
            if not 1 <= k <= dim:
                raise ConfigError(f"component '{name}' out of range for d={dim}")
            return lambda comps: comps[k - 1]
        raise ConfigError(f"unknown name '{name}' in expression")
    if isinstance(node, ast.BinOp):
        if type(node.op) not in _BINOPS:
            raise ConfigError(f"operator {type(node.op).__name__} not in grammar")
        op = _BINOPS[type(node.op)]
        left = _compile_node(node.left, dim, extra)
        right = _compile_node(node.right, dim, extra)
        return lambda comps: op(left(comps), right(comps))
    if isinstance(node, ast.UnaryOp):
        if isinstance(node.op, ast.USub):
            inner = _compile_node(node.operand, dim, extra)
            return lambda comps: -inner(comps)
        if isinstance(node.op, ast.UAdd):
            return _compile_node(node.operand, dim, extra)
        raise ConfigError(f"operator {type(node.op).__name__} not in grammar")
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.keywords:
            raise ConfigError("only plain calls f(arg) allowed in expressions")
        fname = node.func.id
        if fname not in _FUNCS:
            raise ConfigError(f"function '{fname}' not in grammar")
        if len(node.args) != 1:
            raise ConfigError(f"'{fname}' takes one argument")
        fn = _FUNCS[fname]
        arg = _compile_node(node.args[0], dim, extra)
        return lambda comps: fn(arg(comps))
    raise ConfigError(f"construct {type(node).__name__} not in expression grammar")


class Expr:
    """A compiled coefficient expression, callable on states.

    Accepts a scalar (d=1), a length-d vector, or an (n, d) array of states;
    returns a scalar or length-n array accordingly.  Picklable: only the
    source survives pickling and the closure is rebuilt lazily.
    """

    def __init__(self, source: str, dim: int = 1, extra: tuple = ()):
        self.source = source
        self.dim = dim
        self.extra = tuple(extra)
        self._fn = None
        self._build()

    def _build(self):
        try:
            tree = ast.parse(self.source, mode="eval")
        except SyntaxError as e:
            raise ConfigError(f"cannot parse expression {self.source!r}: {e.msg}") from None
        self._fn = _compile_node(tree, self.dim, self.extra)

    def __call__(self, x):
        if self._fn is None:
            self._build()
        arr = np.asarray(x, dtype=float)
        width = self.dim + len(self.extra)
        if self.extra:
            arr = np.atleast_2d(arr)
            if arr.shape[-1] != width:
                raise ConfigError(
                    f"expected {width} columns (state plus {self.extra}), got {arr.shape[-1]}"
                )
            comps = [arr[..., k] for k in range(width)]
        elif arr.ndim == 0:
            comps = [arr]
        elif arr.ndim == 1 and self.dim == 1 and arr.shape[0] != 1:
            # a batch of scalar states
            comps = [arr]
        else:
            if arr.shape[-1] != self.dim:
                raise ConfigError(
                    f"state has {arr.shape[-1]} components, expression expects d={self.dim}"
                )
            comps = [arr[..., k] for k in range(self.dim)]
        out = self._fn(comps)
        return out + np.zeros_like(comps[0])

    def __getstate__(self):
        return {"source": self.source, "dim": self.dim, "extra": self.extra}

    def __setstate__(self, state):
        self.source = state["source"]
        self.dim = state["dim"]
        self.extra = tuple(state.get("extra", ()))
        self._fn = None

    def __repr__(self):
        return f"Expr({self.source!r}, dim={self.dim})"


def as_coefficient(value, dim: int = 1):
    """Coerce a config value (number, expression string, or callable) to a callable."""
    if callable(value):
        return value
    if isinstance(value, str):
        return Expr(value, dim)
    if isinstance(value, (int, float)):
        v = float(value)

        def const(x, _v=v):
            arr = np.asarray(x, dtype=float)
            if arr.ndim <= 1 and (dim == 1 and arr.ndim <= 1 or arr.ndim == 1):
                if dim == 1 and arr.ndim == 1 and arr.shape[0] != 1:
                    return np.full(arr.shape[0], _v)
                if dim > 1 and arr.ndim == 1:
                    return _v
            if arr.ndim == 2:
                return np.full(arr.shape[0], _v)
            return _v

        return const
    raise ConfigError(f"cannot interpret coefficient {value!r}")
