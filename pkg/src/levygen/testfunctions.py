"""Catalog of probe functions with derivative and decay oracles.

Each entry records what the operator and seminorm machinery needs to know
about f: its gradient and Hessian where they exist in closed form, whether
it vanishes at infinity, a radial decay envelope sup_{|y| >= r} |f(y)|, a
declared oscillation wavenumber for trigonometric entries, and, for the
Holder family, the exact order and constant at a reference point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ContractError
from .expressions import Expr

__all__ = [
    "TestFunction",
    "gaussian",
    "bump",
    "power_envelope",
    "cosine",
    "holder_pair",
    "quadratic_cutoff",
    "from_expression",
    "linear_combination",
]


@dataclass
class TestFunction:
    f: Callable
    g: Optional[Callable] = None
    h: Optional[Callable] = None
    vanishes: bool = True
    name: str = "f"
    d: int = 1
    osc_freq: float = 0.0
    envelope: Optional[Callable] = None   # r -> sup over |y| >= r of |f(y)|
    holder_order: Optional[Callable] = None
    holder_constant: Optional[float] = None
    holder_anchor: Optional[np.ndarray] = None

    def __post_init__(self):
        if not isinstance(self.d, int) or self.d < 1:
            raise ContractError("probe functions need an integer dimension >= 1")
        if not callable(self.f):
            raise ContractError("probe function needs a callable f")

    def __call__(self, x):
        return self.f(x)


def _rows(x, d):
    arr = np.asarray(x, dtype=float)
    if d == 1 and (arr.ndim == 0 or (arr.ndim == 1 and arr.shape[0] != 1)):
        return arr.reshape(-1, 1), arr.ndim == 0
    return np.atleast_2d(arr), arr.ndim == 1


def _scalar_out(vals, single):
    return float(vals[0]) if single else vals


def gaussian(d: int = 1) -> TestFunction:
    """f(y) = exp(-|y|^2)."""

    def f(x):
        rows, single = _rows(x, d)
        return _scalar_out(np.exp(-np.sum(rows * rows, axis=1)), single)

    def g(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return -2.0 * x * math.exp(-float(x @ x))

    def h(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        e = math.exp(-float(x @ x))
        return (4.0 * np.outer(x, x) - 2.0 * np.eye(d)) * e

    return TestFunction(f, g, h, True, "gaussian", d,
                        envelope=lambda r: math.exp(-max(r, 0.0) ** 2))


def bump(d: int = 1, radius: float = 1.0) -> TestFunction:
    """Smooth compactly supported bump, f(0) = 1, support |y| < radius."""
    R2 = radius * radius

    def f(x):
        rows, single = _rows(x, d)
        t = np.sum(rows * rows, axis=1) / R2
        out = np.zeros(rows.shape[0])
        inside = t < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside]))
        return _scalar_out(out, single)

    def g(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = float(x @ x) / R2
        if t >= 1.0:
            return np.zeros(d)
        fx = math.exp(1.0 - 1.0 / (1.0 - t))
        return -(2.0 / R2) * fx * x / (1.0 - t) ** 2

    def h(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = float(x @ x) / R2
        if t >= 1.0:
            return np.zeros((d, d))
        fx = math.exp(1.0 - 1.0 / (1.0 - t))
        w = (1.0 - t) ** -2
        gv = -(2.0 / R2) * fx * w * x
        dw = (4.0 / R2) * (1.0 - t) ** -3 * x
        return -(2.0 / R2) * (w * np.outer(x, gv) + fx * np.outer(x, dw)
                              + fx * w * np.eye(d))

    return TestFunction(f, g, h, True, "bump", d,
                        envelope=lambda r: 1.0 if r < radius else 0.0)


def power_envelope(beta: float, d: int = 1) -> TestFunction:
    """f(y) = |y|^beta exp(-|y|^2): Holder order beta at 0 with constant 1."""
    if beta <= 0:
        raise ContractError("power envelope needs beta > 0")
    peak = math.sqrt(beta / 2.0)
    peak_val = peak ** beta * math.exp(-peak * peak)

    def f(x):
        rows, single = _rows(x, d)
        u = np.linalg.norm(rows, axis=1)
        return _scalar_out(u ** beta * np.exp(-u * u), single)

    g = None
    if beta > 1:
        def g(x):
            x = np.atleast_1d(np.asarray(x, dtype=float))
            u = float(np.linalg.norm(x))
            if u == 0.0:
                return np.zeros(d)
            return x * math.exp(-u * u) * (beta * u ** (beta - 2.0) - 2.0 * u ** beta)

    def env(r):
        r = max(r, 0.0)
        if r <= peak:
            return peak_val
        return r ** beta * math.exp(-r * r)

    return TestFunction(f, g, None, True, f"power_envelope({beta})", d,
                        envelope=env,
                        holder_order=(lambda x, _b=beta: _b),
                        holder_constant=1.0,
                        holder_anchor=np.zeros(d))


def holder_pair(alpha0: float, d: int = 1) -> TestFunction:
    """Alias of power_envelope with the seminorm metadata front and center."""
    return power_envelope(alpha0, d)


def cosine(xi0, d: int = 1) -> TestFunction:
    """f(y) = cos(xi0 . y); bounded, does not vanish at infinity."""
    xi0 = np.atleast_1d(np.asarray(xi0, dtype=float))
    if xi0.shape[0] != d:
        raise ContractError(f"xi0 must have {d} components")
    freq = float(np.linalg.norm(xi0))

    def f(x):
        rows, single = _rows(x, d)
        return _scalar_out(np.cos(rows @ xi0), single)

    def g(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return -math.sin(float(x @ xi0)) * xi0

    def h(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return -math.cos(float(x @ xi0)) * np.outer(xi0, xi0)

    return TestFunction(f, g, h, False, f"cos({freq:g})", d, osc_freq=freq,
                        envelope=lambda r: 1.0)


def _smootherstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (u * (6.0 * u - 15.0) + 10.0)


def _smootherstep_d(u):
    u = np.clip(u, 0.0, 1.0)
    return 30.0 * u * u * (u - 1.0) ** 2


def quadratic_cutoff(d: int = 1, flat_radius: float = 2.0,
                     support_radius: float = 3.0) -> TestFunction:
    """f(y) = |y|^2 inside |y| <= flat_radius, smoothly cut to 0 by support_radius."""
    width = support_radius - flat_radius

    def s(u):
        return 1.0 - _smootherstep((u - flat_radius) / width)

    def sd(u):
        return -_smootherstep_d((u - flat_radius) / width) / width

    def f(x):
        rows, single = _rows(x, d)
        u = np.linalg.norm(rows, axis=1)
        return _scalar_out(u * u * s(u), single)

    def g(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        u = float(np.linalg.norm(x))
        if u == 0.0:
            return np.zeros(d)
        return x * (2.0 * s(u) + u * sd(u))

    return TestFunction(f, g, None, True, "quadratic_cutoff", d,
                        envelope=lambda r: 0.0 if r >= support_radius
                        else support_radius ** 2)


def from_expression(source: str, d: int = 1, vanishes: bool = False,
                    envelope: Optional[Callable] = None) -> TestFunction:
    """Probe function from the coefficient grammar; no derivative oracles."""
    e = Expr(source, d)

    def f(x):
        return e(x)

    return TestFunction(f, None, None, vanishes, source, d, envelope=envelope)


def linear_combination(a: float, tf1: TestFunction, b: float,
                       tf2: TestFunction) -> TestFunction:
    """a f1 + b f2 with derivative oracles combined where both exist."""
    if tf1.d != tf2.d:
        raise ContractError("cannot combine test functions of different dimension")

    def f(x):
        return a * np.asarray(tf1.f(x)) + b * np.asarray(tf2.f(x))

    g = None
    if tf1.g is not None and tf2.g is not None:
        g = lambda x: a * np.asarray(tf1.g(x)) + b * np.asarray(tf2.g(x))
    h = None
    if tf1.h is not None and tf2.h is not None:
        h = lambda x: a * np.asarray(tf1.h(x)) + b * np.asarray(tf2.h(x))
    env = None
    if tf1.envelope is not None and tf2.envelope is not None:
        env = lambda r: abs(a) * tf1.envelope(r) + abs(b) * tf2.envelope(r)
    return TestFunction(f, g, h, tf1.vanishes and tf2.vanishes,
                        f"{a:g}*{tf1.name}+{b:g}*{tf2.name}", tf1.d,
                        osc_freq=max(tf1.osc_freq, tf2.osc_freq), envelope=env)
