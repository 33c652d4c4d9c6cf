"""Order-3 derivative jets of immersions.

Two routes produce a :class:`Jet`:

* exact: the immersion is written once in terms of :class:`Taylor`, a truncated
  bivariate Taylor polynomial (total degree 3) that propagates derivatives
  through arithmetic and elementary functions;
* finite differences: :func:`fd_jet` samples a plain evaluator on a stencil.

Everything is vectorised: chart coordinates may be arrays of any common shape
and the jet arrays carry that shape as leading batch axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, StencilError

MAX_ORDER = 3

# monomials u^i v^j with i + j <= 3, graded
_MONOMIALS = [(n - j, j) for n in range(MAX_ORDER + 1) for j in range(n + 1)]
_INDEX = {m: k for k, m in enumerate(_MONOMIALS)}
_NCOEF = len(_MONOMIALS)

_PRODUCT = np.zeros((_NCOEF, _NCOEF * _NCOEF))
for _a, (_i1, _j1) in enumerate(_MONOMIALS):
    for _b, (_i2, _j2) in enumerate(_MONOMIALS):
        if _i1 + _i2 + _j1 + _j2 <= MAX_ORDER:
            _PRODUCT[_INDEX[(_i1 + _i2, _j1 + _j2)], _a * _NCOEF + _b] = 1.0


class ChartPoint(NamedTuple):
    """Chart coordinates; fields may be scalars or broadcastable arrays."""

    u: float
    v: float


class Taylor:
    """Truncated Taylor polynomial in the chart offsets (du, dv).

    ``c[k]`` is the coefficient of the k-th monomial of ``_MONOMIALS``, i.e.
    ``d^(i+j) f / du^i dv^j / (i! j!)``.  Trailing axes of ``c`` are batch axes.
    """

    __slots__ = ("c",)
    __array_priority__ = 100

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=float)

    @classmethod
    def constant(cls, value, like=None):
        value = np.asarray(value, dtype=float)
        if like is not None:
            value = np.broadcast_to(value, like.c.shape[1:])
        c = np.zeros((_NCOEF,) + value.shape)
        c[0] = value
        return cls(c)

    @classmethod
    def variable(cls, value, axis: int):
        """The coordinate function u (axis 0) or v (axis 1) expanded at ``value``."""
        value = np.asarray(value, dtype=float)
        c = np.zeros((_NCOEF,) + value.shape)
        c[0] = value
        c[_INDEX[(1, 0)] if axis == 0 else _INDEX[(0, 1)]] = 1.0
        return cls(c)

    @classmethod
    def from_univariate(cls, derivs, axis: int):
        """Lift a function of one chart coordinate given its derivatives 0..3."""
        d0 = np.asarray(derivs[0], dtype=float)
        c = np.zeros((_NCOEF,) + d0.shape)
        for n, dn in enumerate(derivs[: MAX_ORDER + 1]):
            key = (n, 0) if axis == 0 else (0, n)
            c[_INDEX[key]] = np.asarray(dn, dtype=float) / math.factorial(n)
        return cls(c)

    @property
    def value(self) -> np.ndarray:
        return self.c[0]

    def _coerce(self, other):
        if isinstance(other, Taylor):
            return other
        return Taylor.constant(other, like=self)

    def __add__(self, other):
        if isinstance(other, Taylor):
            return Taylor(self.c + other.c)
        c = self.c.copy()
        c[0] = c[0] + other
        return Taylor(c)

    __radd__ = __add__

    def __neg__(self):
        return Taylor(-self.c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Taylor):
            return Taylor(self.c * np.asarray(other, dtype=float))
        a, b = np.broadcast_arrays(self.c, other.c)
        outer = a[:, None] * b[None, :]
        outer = outer.reshape((_NCOEF * _NCOEF,) + a.shape[1:])
        return Taylor(np.tensordot(_PRODUCT, outer, axes=(1, 0)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Taylor):
            return self * other.reciprocal()
        return Taylor(self.c / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, int) and p >= 0:
            out = Taylor.constant(1.0, like=self)
            for _ in range(p):
                out = out * self
            return out
        x = self.value
        return self.compose(
            x**p, p * x ** (p - 1), p * (p - 1) * x ** (p - 2), p * (p - 1) * (p - 2) * x ** (p - 3)
        )

    def compose(self, f0, f1, f2, f3):
        """g(self) for a scalar function g with derivatives ``f0..f3`` at ``self.value``."""
        delta = Taylor(self.c.copy())
        delta.c[0] = 0.0
        d2 = delta * delta
        d3 = d2 * delta
        out = f1 * delta + (f2 / 2.0) * d2 + (f3 / 6.0) * d3
        out.c[0] = f0
        return out

    def reciprocal(self):
        x = self.value
        return self.compose(1 / x, -1 / x**2, 2 / x**3, -6 / x**4)

    def sqrt(self):
        s = np.sqrt(self.value)
        return self.compose(s, 0.5 / s, -0.25 / s**3, 0.375 / s**5)

    def exp(self):
        e = np.exp(self.value)
        return self.compose(e, e, e, e)

    def log(self):
        x = self.value
        return self.compose(np.log(x), 1 / x, -1 / x**2, 2 / x**3)

    def sin(self):
        s, c = np.sin(self.value), np.cos(self.value)
        return self.compose(s, c, -s, -c)

    def cos(self):
        s, c = np.sin(self.value), np.cos(self.value)
        return self.compose(c, -s, -c, s)

    def sinh(self):
        s, c = np.sinh(self.value), np.cosh(self.value)
        return self.compose(s, c, s, c)

    def cosh(self):
        s, c = np.sinh(self.value), np.cosh(self.value)
        return self.compose(c, s, c, s)

    def tanh(self):
        t = np.tanh(self.value)
        s2 = 1 - t**2
        return self.compose(t, s2, -2 * t * s2, s2 * (6 * t**2 - 2))

    def sech(self):
        s = 1 / np.cosh(self.value)
        t = np.tanh(self.value)
        return self.compose(s, -s * t, s * t**2 - s**3, -s * t**3 + 5 * s**3 * t)


def _fn(name):
    def apply(x):
        if isinstance(x, Taylor):
            return getattr(x, name)()
        return getattr(np, name)(x)

    apply.__name__ = name
    return apply


# elementwise functions usable on both Taylor objects and plain arrays
sin, cos, sinh, cosh, tanh, exp, sqrt, log = (
    _fn(n) for n in ("sin", "cos", "sinh", "cosh", "tanh", "exp", "sqrt", "log")
)


def sech(x):
    if isinstance(x, Taylor):
        return x.sech()
    return 1.0 / np.cosh(x)


@dataclass(frozen=True)
class Jet:
    """Value and chart partials of a map into R^N.

    Shapes: ``value`` (..., N), ``d1`` (..., N, 2), ``d2`` (..., N, 2, 2),
    ``d3`` (..., N, 2, 2, 2).  Arrays above ``order`` are ``None``.
    """

    value: np.ndarray
    d1: np.ndarray | None = None
    d2: np.ndarray | None = None
    d3: np.ndarray | None = None
    order: int = 0

    @property
    def dim(self) -> int:
        return self.value.shape[-1]

    def at(self, index):
        """Jet at one batch index (or slice) of a batched jet."""
        pick = lambda a: None if a is None else a[index]
        return Jet(pick(self.value), pick(self.d1), pick(self.d2), pick(self.d3), self.order)


def jet_from_taylor(components, order: int = MAX_ORDER) -> Jet:
    """Stack scalar Taylor components into a :class:`Jet`."""
    batch = np.broadcast_shapes(*(c.c.shape[1:] for c in components if isinstance(c, Taylor)))
    cs = []
    for comp in components:
        if not isinstance(comp, Taylor):
            comp = Taylor.constant(np.broadcast_to(np.asarray(comp, float), batch))
        cs.append(np.broadcast_to(comp.c, (_NCOEF,) + batch))
    c = np.stack(cs, axis=-1)  # (10, ..., N)

    def coef(i, j):
        return c[_INDEX[(i, j)]]

    value = np.array(coef(0, 0))
    d1 = d2 = d3 = None
    if order >= 1:
        d1 = np.stack([coef(1, 0), coef(0, 1)], axis=-1)
    if order >= 2:
        uu, uv, vv = 2 * coef(2, 0), coef(1, 1), 2 * coef(0, 2)
        d2 = np.stack([np.stack([uu, uv], -1), np.stack([uv, vv], -1)], -2)
    if order >= 3:
        uuu, uuv, uvv, vvv = 6 * coef(3, 0), 2 * coef(2, 1), 2 * coef(1, 2), 6 * coef(0, 3)
        d3 = np.empty(value.shape + (2, 2, 2))
        for i in range(2):
            for j in range(2):
                for k in range(2):
                    d3[..., i, j, k] = (uuu, uuv, uvv, vvv)[i + j + k]
    return Jet(value, d1, d2, d3, order)


# ---------------------------------------------------------------------------
# finite differences

DEFAULT_H = 1e-3
H_FLOOR = 1e-5

# order-4 central weights on offsets -2..2
_W1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_W2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
# order-2 central weights on offsets -2..2
_W1_O2 = np.array([0.0, -0.5, 0.0, 0.5, 0.0])
_W2_O2 = np.array([0.0, 1.0, -2.0, 1.0, 0.0])
_W3_O2 = np.array([-0.5, 1.0, 0.0, -1.0, 0.5])
_DELTA = np.array([0.0, 0.0, 1.0, 0.0, 0.0])


def fd_jet(
    evaluator: Callable,
    p,
    h: float = DEFAULT_H,
    domain=None,
    h_floor: float = H_FLOOR,
) -> Jet:
    """Order-3 jet by central differences on a 5x5 stencil.

    d1 and d2 use fourth-order stencils (truncation O(h^4)); d3 uses
    second-order stencils (O(h^2)).  ``evaluator(u, v)`` must broadcast over
    arrays and return shape (..., N).  With ``domain`` given, the step is
    shrunk so the stencil stays inside; below ``h_floor`` a
    :class:`StencilError` is raised.
    """
    if not h > 0:
        raise ValueError("step size must be positive")
    u, v = (np.asarray(x, dtype=float) for x in p)
    u, v = np.broadcast_arrays(u, v)
    hs = np.full(u.shape, float(h))
    if domain is not None:
        (u0, u1), (v0, v1) = domain
        room = np.min(np.stack([u - u0, u1 - u, v - v0, v1 - v]), axis=0)
        if np.any(room <= 0):
            raise DomainError("point outside chart domain")
        hs = np.minimum(hs, room / 3.0)
    if np.any(hs < h_floor):
        raise StencilError(f"finite-difference step fell below the floor {h_floor:g}")

    offsets = np.arange(-2, 3)
    samples = np.stack(
        [np.stack([np.asarray(evaluator(u + a * hs, v + b * hs), float) for b in offsets]) for a in offsets]
    )  # (5, 5, ..., N)
    hN = hs[..., None]

    def apply(wu, wv, power):
        return np.einsum("a,b,ab...->...", wu, wv, samples) / hN**power

    value = samples[2, 2]
    d1 = np.stack([apply(_W1, _DELTA, 1), apply(_DELTA, _W1, 1)], axis=-1)
    uu, uv, vv = apply(_W2, _DELTA, 2), apply(_W1, _W1, 2), apply(_DELTA, _W2, 2)
    d2 = np.stack([np.stack([uu, uv], -1), np.stack([uv, vv], -1)], -2)
    third = (
        apply(_W3_O2, _DELTA, 3),
        apply(_W2_O2, _W1_O2, 3),
        apply(_W1_O2, _W2_O2, 3),
        apply(_DELTA, _W3_O2, 3),
    )
    d3 = np.empty(value.shape + (2, 2, 2))
    for i in range(2):
        for j in range(2):
            for k in range(2):
                d3[..., i, j, k] = third[i + j + k]
    return Jet(value, d1, d2, d3, 3)


def truncate(jet: Jet, order: int) -> Jet:
    return Jet(
        jet.value,
        jet.d1 if order >= 1 else None,
        jet.d2 if order >= 2 else None,
        jet.d3 if order >= 3 else None,
        min(order, jet.order),
    )


def eval_jet(surface, p, order: int = MAX_ORDER, mode: str = "auto", h: float = DEFAULT_H) -> Jet:
    """Jet of ``surface`` at chart point(s) ``p``.

    ``mode="auto"`` uses the exact route when the family registers one and
    falls back to :func:`fd_jet`; ``"analytic"`` and ``"fd"`` force a route.
    """
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"jet order must be in 0..{MAX_ORDER}")
    if order > surface.smoothness:
        raise ValueError(f"family {surface.family!r} supports jets up to order {surface.smoothness}")
    u, v = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in p))
    surface.check_point(u, v)
    if mode == "analytic" and surface.taylor_map is None:
        raise ValueError(f"family {surface.family!r} has no exact jets")
    if mode in ("auto", "analytic") and surface.taylor_map is not None:
        if order == 0:
            return Jet(np.asarray(surface.evaluate(u, v), dtype=float))
        comps = surface.taylor_map(Taylor.variable(u, 0), Taylor.variable(v, 1))
        return jet_from_taylor(comps, order)
    if mode not in ("auto", "fd"):
        raise ValueError(f"unknown jet mode {mode!r}")
    return truncate(fd_jet(surface.evaluate, (u, v), h=h, domain=surface.domain), order)
