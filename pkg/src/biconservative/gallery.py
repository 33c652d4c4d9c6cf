"""Parametric surface families with exact jets.

Each family map is written once against :mod:`biconservative.jets`
primitives, so the same code evaluates plain values (arrays) and
propagates derivative jets (:class:`~biconservative.jets.Taylor`).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np
from scipy.optimize import brentq

from . import jets as J
from .ambient import AmbientSpace
from .errors import ConstraintError, DomainError
from .frenet import CurveSpec, integrate_frenet_curve

CONSTRAINT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SurfaceSpec:
    family: str
    params: Mapping[str, float]
    domain: tuple[tuple[float, float], tuple[float, float]]
    ambient: AmbientSpace
    taylor_map: Callable | None = None
    value_map: Callable | None = None
    isothermal: bool = False
    smoothness: int = 3
    curve: CurveSpec | None = field(default=None, repr=False)

    def evaluate(self, u, v) -> np.ndarray:
        """Immersion values, shape (..., N)."""
        if self.value_map is not None:
            return np.asarray(self.value_map(u, v), dtype=float)
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        comps = self.taylor_map(u, v)
        return np.stack([np.broadcast_to(np.asarray(c, float), u.shape) for c in comps], axis=-1)

    def check_point(self, u, v):
        (u0, u1), (v0, v1) = self.domain
        u, v = np.asarray(u), np.asarray(v)
        inside = (u > u0) & (u < u1) & (v > v0) & (v < v1)
        if not np.all(inside):
            bad = np.argwhere(~np.atleast_1d(inside))[0]
            uu, vv = np.atleast_1d(u)[tuple(bad)], np.atleast_1d(v)[tuple(bad)]
            raise DomainError(f"point (u={uu:.6g}, v={vv:.6g}) outside chart domain {self.domain}")

    def describe(self) -> dict:
        return {
            "family": self.family,
            "params": {k: float(self.params[k]) for k in sorted(self.params)},
            "ambient": self.ambient.describe(),
            "domain": [list(map(float, self.domain[0])), list(map(float, self.domain[1]))],
        }


@dataclass(frozen=True)
class Family:
    name: str
    defaults: dict
    build: Callable  # (params, enforce) -> (taylor_map, ambient, default domain, isothermal, curve)
    validate_domain: Callable | None = None
    summary: str = ""


FAMILIES: dict[str, Family] = {}

ALIASES = {
    "cone": "cone_r3",
    "s3": "s3_example",
    "sphere": "round_sphere",
    "cylinder": "circular_cylinder",
    "clifford_torus": "clifford_torus_s3",
    "monge": "monge_patch",
    "helix_cylinder": "cylinder_over_curve_r4",
    "paraboloid": "paraboloid_conformal",
}


def resolve_family(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in FAMILIES:
        known = sorted(set(FAMILIES) | set(ALIASES))
        raise ConstraintError(f"unknown surface family {name!r}; known: {', '.join(known)}")
    return name


def _register(name, defaults, summary, validate_domain=None):
    def deco(fn):
        FAMILIES[name] = Family(name, defaults, fn, validate_domain, summary)
        return fn

    return deco


def _require(cond, msg):
    if not cond:
        raise ConstraintError(msg)


# ---------------------------------------------------------------------------
# families


def cone_constraint(p) -> float:
    return p["alpha"] ** 2 + p["k"] ** 2 * p["beta"] ** 2 - p["k"] ** 2


def s3_constraint(p) -> float:
    return p["beta"] ** 2 * (p["k"] ** 2 - 1) - (p["k"] ** 2 - p["alpha"] ** 2 - 1)


def _cone_domain_check(p, domain):
    (_, _), (v0, v1) = domain
    worst = min(1 - p["alpha"] * v0, 1 - p["alpha"] * v1)
    _require(worst > 0, "domain touches the cone apex (1 - alpha v = 0)")


@_register("cone_r3", {"k": 1.0, "alpha": 0.8, "beta": 0.6}, "flat cone in R^3 with holomorphic Q", _cone_domain_check)
def _cone(p, enforce):
    k, a, b = p["k"], p["alpha"], p["beta"]
    _require(k > 0, "cone needs k > 0")
    if enforce:
        _require(a * a <= k * k, f"no real beta satisfies alpha^2 + k^2 beta^2 = k^2 with alpha^2 = {a * a:g} > k^2 = {k * k:g}")
        _require(abs(cone_constraint(p)) <= CONSTRAINT_TOL, f"alpha^2 + k^2 beta^2 = k^2 violated by {cone_constraint(p):.3g}")
        _require(a != 0, "cone needs alpha != 0")

    def X(u, v):
        r = (1 - a * v) / k
        return [r * J.cos(k * u), r * J.sin(k * u), b * v]

    # keep 1 - alpha v >= 0.25 on the default domain
    w = 0.5 if abs(a) * 0.5 <= 0.75 else 0.75 / abs(a)
    return X, AmbientSpace.euclidean(3), ((0.0, 2 * math.pi / k), (-w, w)), False, None


def _s3_domain_check(p, domain):
    # X_u = (cos v - alpha sin v) P'(u) degenerates where tan v = 1/alpha
    (_, _), (v0, v1) = domain
    a = p["alpha"]
    vstar = math.atan2(1.0, a)
    for n in range(-3, 4):
        z = vstar + n * math.pi
        _require(not (v0 <= z <= v1), f"domain contains the singular line v = {z:.6g}")


@_register("s3_example", {"k": 2.0, "alpha": 1.0, "beta": math.sqrt(2.0 / 3.0)}, "non-CMC surface in S^3 with holomorphic Q", _s3_domain_check)
def _s3_example(p, enforce):
    k, a, b = p["k"], p["alpha"], p["beta"]
    _require(k > 1, "s3_example needs k > 1")
    if enforce:
        _require(k > math.sqrt(1 + a * a), "s3_example needs k > sqrt(1 + alpha^2)")
        _require(a != 0, "s3_example needs alpha != 0")
        _require(abs(s3_constraint(p)) <= CONSTRAINT_TOL, f"beta^2 (k^2 - 1) = k^2 - alpha^2 - 1 violated by {s3_constraint(p):.3g}")
    s = math.sqrt(k * k - 1)

    def X(u, v):
        cu, su = J.cos(k * u), J.sin(k * u)
        cv, sv = J.cos(v), J.sin(v)
        comps = [
            (cu * cv - a * cu * sv) / k,
            (su * cv - a * su * sv) / k,
            (s * cv + (a / s) * sv) / k,
            b * sv,
        ]
        if not enforce:
            # off the constraint the raw map leaves S^3; use its radial projection
            norm = J.sqrt(sum(c * c for c in comps))
            comps = [c / norm for c in comps]
        return comps

    w = min(0.5, 0.75 * abs(math.atan2(1.0, a)))
    return X, AmbientSpace.sphere(3, 1.0), ((0.0, 2 * math.pi / k), (-w, w)), False, None


@_register("round_sphere", {"radius": 1.0, "mercator": 0.0}, "round sphere in R^3 (latitude or Mercator chart)")
def _round_sphere(p, enforce):
    r = p["radius"]
    _require(r > 0, "radius must be positive")
    if p.get("mercator", 0.0):

        def X(u, v):
            s = J.sech(v)
            return [r * J.cos(u) * s, r * J.sin(u) * s, r * J.tanh(v)]

        return X, AmbientSpace.euclidean(3), ((0.0, 2 * math.pi), (-2.0, 2.0)), True, None

    def X(u, v):
        cv = J.cos(v)
        return [r * J.cos(u) * cv, r * J.sin(u) * cv, r * J.sin(v)]

    return X, AmbientSpace.euclidean(3), ((0.0, 2 * math.pi), (-1.2, 1.2)), False, None


@_register("circular_cylinder", {"radius": 1.0}, "circular cylinder in R^3 (isothermal)")
def _cylinder(p, enforce):
    r = p["radius"]
    _require(r > 0, "radius must be positive")

    def X(u, v):
        return [r * J.cos(u / r), r * J.sin(u / r), v]

    return X, AmbientSpace.euclidean(3), ((0.0, 2 * math.pi * r), (-1.0, 1.0)), True, None


@_register("catenoid", {"a": 1.0}, "minimal catenoid in R^3 (isothermal)")
def _catenoid(p, enforce):
    a = p["a"]
    _require(a > 0, "catenoid needs a > 0")

    def X(u, v):
        ch = J.cosh(v)
        return [a * ch * J.cos(u), a * ch * J.sin(u), a * v]

    return X, AmbientSpace.euclidean(3), ((0.0, 2 * math.pi), (-1.0, 1.0)), True, None


@_register("clifford_torus_s3", {"r1": 0.6, "r2": 0.8, "radius": 1.0}, "flat CMC torus in S^3 (isothermal)")
def _clifford(p, enforce):
    r1, r2, R = p["r1"], p["r2"], p["radius"]
    _require(r1 > 0 and r2 > 0 and R > 0, "radii must be positive")
    if enforce:
        gap = r1 * r1 + r2 * r2 - R * R
        _require(abs(gap) <= CONSTRAINT_TOL, f"r1^2 + r2^2 = radius^2 violated by {gap:.3g}")

    def X(u, v):
        return [r1 * J.cos(u / r1), r1 * J.sin(u / r1), r2 * J.cos(v / r2), r2 * J.sin(v / r2)]

    return X, AmbientSpace.sphere(3, R), ((0.0, 2 * math.pi * r1), (0.0, 2 * math.pi * r2)), True, None


_MONGE_KEY = re.compile(r"^c(\d)(\d)$")


@_register("monge_patch", {"c20": 1.0, "c04": 1.0}, "graph (u, v, sum c_ij u^i v^j) in R^3")
def _monge(p, enforce):
    terms = []
    for key, val in p.items():
        m = _MONGE_KEY.match(key)
        _require(m is not None, f"monge_patch parameters are named cIJ, got {key!r}")
        if val:
            terms.append((int(m.group(1)), int(m.group(2)), float(val)))

    def X(u, v):
        h = 0.0 * u
        for i, j, c in terms:
            h = h + c * (u**i) * (v**j)
        return [u + 0.0 * v, v + 0.0 * u, h]

    return X, AmbientSpace.euclidean(3), ((-0.5, 0.5), (-0.5, 0.5)), False, None


def paraboloid_arclength(rho, c: float = 1.0):
    """Conformal parameter s(rho) = int sqrt(1 + c^2 rho^2) / rho d rho of z = c rho^2 / 2."""
    x = c * np.asarray(rho, dtype=float)
    w = np.sqrt(1 + x * x)
    return w + np.log(x / (1 + w))


def _paraboloid_radius(s, c):
    """Invert :func:`paraboloid_arclength` (strictly increasing) elementwise."""
    s = np.asarray(s, dtype=float)
    out = np.empty(s.shape)
    flat = out.reshape(-1)
    for n, target in enumerate(s.reshape(-1)):
        lo, hi = 1e-8, 1.0
        while paraboloid_arclength(hi, c) < target:
            hi *= 2
        flat[n] = brentq(lambda r: paraboloid_arclength(r, c) - target, lo, hi, xtol=1e-15, rtol=1e-15)
    # one Newton polish: ds/drho = sqrt(1 + c^2 rho^2) / rho
    return out - (paraboloid_arclength(out, c) - s) * out / np.sqrt(1 + (c * out) ** 2)


@_register("paraboloid_conformal", {"c": 1.0}, "paraboloid of revolution in an isothermal chart")
def _paraboloid(p, enforce):
    c = p["c"]
    _require(c > 0, "paraboloid needs c > 0")

    def rho_jet(s):
        if not isinstance(s, J.Taylor):
            return _paraboloid_radius(s, c)
        r = _paraboloid_radius(s.value, c)
        # rho' = F(rho) = rho (1 + c^2 rho^2)^(-1/2)
        q = 1 + (c * r) ** 2
        F = r / np.sqrt(q)
        F1 = q ** -1.5
        F2 = -3 * c * c * r * q ** -2.5
        derivs = [r, F, F1 * F, F2 * F * F + F1 * F1 * F]
        lifted = J.Taylor.from_univariate(derivs, 0)
        # compose with the offset in s (s is the u coordinate here)
        delta = s - s.value
        return _compose_univariate(lifted, delta)

    def X(u, v):
        r = rho_jet(u)
        return [r * J.cos(v), r * J.sin(v), 0.5 * c * r * r]

    lo, hi = paraboloid_arclength(0.5, c), paraboloid_arclength(2.0, c)
    return X, AmbientSpace.euclidean(3), ((float(lo), float(hi)), (-1.5, 1.5)), True, None


def _compose_univariate(lifted, delta):
    """Re-expand a univariate-in-u jet along the Taylor offset ``delta`` of u."""
    # lifted holds f^(n)/n! in the pure-u slots; f(u0 + delta) = sum f^(n)/n! delta^n
    coeffs = [lifted.c[J._INDEX[(n, 0)]] for n in range(4)]
    out = J.Taylor.constant(coeffs[0], like=delta)
    power = J.Taylor.constant(1.0, like=delta)
    for n in range(1, 4):
        power = power * delta
        out = out + coeffs[n] * power
    return out


def _curve_surface_map(curve: CurveSpec, a: float):
    def X(u, v):
        if isinstance(u, J.Taylor):
            derivs = curve.curve_jet(u.value)
            comps = []
            for n in range(3):
                lifted = J.Taylor.from_univariate([d[..., n] for d in derivs], 0)
                comps.append(_compose_univariate(lifted, u - u.value))
        else:
            g = curve.curve_jet(u)[0]
            comps = [g[..., 0], g[..., 1], g[..., 2]]
        return comps + [v + a]

    return X


@_register(
    "cylinder_over_curve_r4",
    {"k": 1.0, "tau": 0.5, "tau_amp": 0.0, "a": 0.0, "length": 2 * math.pi, "steps": 2000.0},
    "(gamma(u), v + a) in R^4 over a Frenet curve, tau(u) = tau + tau_amp sin u",
)
def _cylinder_over_curve(p, enforce):
    t0, t1 = p["tau"], p["tau_amp"]
    tau = (lambda u: t0 + t1 * np.sin(u)) if t1 else t0
    curve = integrate_frenet_curve(p["k"], tau, (0.0, p["length"]), int(p["steps"]))
    return _curve_surface_map(curve, p["a"]), AmbientSpace.euclidean(4), ((0.0, p["length"]), (-1.0, 1.0)), True, curve


# ---------------------------------------------------------------------------


def make_surface(
    family: str,
    params: Mapping[str, float] | None = None,
    domain=None,
    enforce_constraints: bool = True,
) -> SurfaceSpec:
    """Validated :class:`SurfaceSpec` for a gallery family.

    ``enforce_constraints=False`` keeps only the admissibility conditions
    (used by the parameter fitter to move off the constraint manifold).
    """
    family = resolve_family(family)
    fam = FAMILIES[family]
    if family == "monge_patch" and params:
        full = dict(params)
    else:
        full = dict(fam.defaults)
        unknown = set(params or {}) - set(fam.defaults)
        if unknown:
            raise ConstraintError(f"unknown parameters for {family}: {sorted(unknown)}")
        full.update(params or {})
    full = {k: float(v) for k, v in full.items()}
    taylor_map, ambient, default_domain, iso, curve = fam.build(full, enforce_constraints)
    dom = default_domain if domain is None else tuple(tuple(map(float, d)) for d in domain)
    (u0, u1), (v0, v1) = dom
    if not (u1 > u0 and v1 > v0):
        raise DomainError("empty chart domain")
    if curve is not None:
        c0, c1 = curve.u_range
        if u0 < c0 or u1 > c1:
            raise DomainError("domain extends past the integrated curve")
    if fam.validate_domain is not None:
        fam.validate_domain(full, dom)
    return SurfaceSpec(
        family=family,
        params=MappingProxyType(full),
        domain=dom,
        ambient=ambient,
        taylor_map=taylor_map,
        isothermal=iso,
        curve=curve,
    )


def custom_surface(
    value_map: Callable,
    domain,
    ambient: AmbientSpace,
    taylor_map: Callable | None = None,
    smoothness: int = 3,
    name: str = "custom",
) -> SurfaceSpec:
    """Wrap a user map.  Without ``taylor_map`` jets come from finite differences."""
    return SurfaceSpec(
        family=name,
        params=MappingProxyType({}),
        domain=tuple(tuple(map(float, d)) for d in domain),
        ambient=ambient,
        taylor_map=taylor_map,
        value_map=value_map,
        smoothness=smoothness,
    )


def cylinder_over_curve(curve: CurveSpec, a: float = 0.0, v_range=(-1.0, 1.0)) -> SurfaceSpec:
    """The R^4 surface (gamma(u), v + a) over an integrated Frenet curve."""
    return SurfaceSpec(
        family="cylinder_over_curve_r4",
        params=MappingProxyType({"k": curve.k, "a": float(a)}),
        domain=(curve.u_range, tuple(map(float, v_range))),
        ambient=AmbientSpace.euclidean(4),
        taylor_map=_curve_surface_map(curve, float(a)),
        isothermal=True,
        curve=curve,
    )


def is_proper(surface: SurfaceSpec) -> bool:
    """False for curve cylinders over torsion-free curves (those are PMC)."""
    if surface.curve is None:
        return True
    return not surface.curve.torsion_free


_SOLVABLE = {
    "cone_r3": ("k", "alpha", "beta"),
    "s3_example": ("k", "alpha", "beta"),
    "clifford_torus_s3": ("r1", "r2", "radius"),
}


def solve_family_constraint(family: str, known: Mapping[str, float]) -> dict:
    """Complete a constrained family's parameters from all but one.

    The nonnegative root is returned; when the equation has two real roots
    the second one is listed under ``"roots"``.
    """
    family = ALIASES.get(family, family)
    if family not in _SOLVABLE:
        raise ConstraintError(f"family {family!r} has no parameter constraint")
    names = _SOLVABLE[family]
    free = [n for n in names if n not in known]
    if len(free) != 1:
        raise ConstraintError(f"exactly one of {names} must be left free, got free={free}")
    x = free[0]
    p = {k: float(v) for k, v in known.items()}

    def root(radicand, denom=1.0):
        if radicand < 0 or denom <= 0:
            raise ConstraintError(f"no real {x} satisfies the {family} constraint")
        return math.sqrt(radicand / denom)

    if family == "cone_r3":
        k, a, b = p.get("k"), p.get("alpha"), p.get("beta")
        if x == "beta":
            val = root(k * k - a * a, k * k)
        elif x == "alpha":
            val = root(k * k * (1 - b * b))
        else:
            val = root(a * a, 1 - b * b)
        p[x] = val
        if p["alpha"] == 0:
            raise ConstraintError("the cone requires alpha != 0")
    elif family == "s3_example":
        k, a, b = p.get("k"), p.get("alpha"), p.get("beta")
        if x == "beta":
            val = root(k * k - a * a - 1, k * k - 1)
        elif x == "alpha":
            val = root(k * k - 1 - b * b * (k * k - 1))
        else:
            val = root(a * a + 1 - b * b, 1 - b * b)
        p[x] = val
        if p["alpha"] == 0:
            raise ConstraintError("s3_example requires alpha != 0")
        if not p["k"] > math.sqrt(1 + p["alpha"] ** 2):
            raise ConstraintError("s3_example requires k > sqrt(1 + alpha^2)")
    else:
        r1, r2, R = p.get("r1"), p.get("r2"), p.get("radius")
        if x == "radius":
            val = root(r1 * r1 + r2 * r2)
        elif x == "r1":
            val = root(R * R - r2 * r2)
        else:
            val = root(R * R - r1 * r1)
        p[x] = val
    if val > 0 and not (family == "cone_r3" and x == "k") and not (family == "s3_example" and x == "k"):
        p["roots"] = (val, -val)
    return p
