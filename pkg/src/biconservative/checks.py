"""Scripted verification checks, one per geometric statement.

Each check evaluates residual fields on fixed surfaces and grids and
compares maxima (or minima) against thresholds.  Checks whose hypothesis
is a residual condition (for instance Div S2 = 0) are gated: when the gate
fails on a surface that case is NOT-APPLICABLE rather than a failure.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .analysis import GridSpec, evaluate_grid
from .gallery import SurfaceSpec, is_proper, make_surface
from .geometry import ToleranceSet, codim_one_data, covector_norm, dbar, local_geometry, residual_record
from .jets import eval_jet

PASS, FAIL, NA = "PASS", "FAIL", "NOT-APPLICABLE"


@dataclass
class Metric:
    name: str
    value: float
    threshold: float
    relation: str  # "<=" or ">="
    location: tuple[float, float] | None = None

    @property
    def ok(self) -> bool:
        if math.isnan(self.value):
            return False
        return self.value <= self.threshold if self.relation == "<=" else self.value >= self.threshold

    @property
    def severity(self) -> float:
        """Value relative to its threshold; above 1 means failing."""
        v, t = abs(self.value), abs(self.threshold)
        if self.relation == "<=":
            return v / t if t else math.inf
        return t / v if v else math.inf

    def line(self) -> str:
        loc = "" if self.location is None else f" at (u={self.location[0]:.4g}, v={self.location[1]:.4g})"
        return f"{self.name} = {self.value:.3e} {self.relation} {self.threshold:.1e}{loc}"


@dataclass
class CaseResult:
    label: str
    verdict: str
    metrics: list[Metric] = field(default_factory=list)
    note: str = ""


@dataclass
class CheckResult:
    id: str
    title: str
    verdict: str
    cases: list[CaseResult]

    @property
    def worst(self) -> Metric | None:
        ms = [m for c in self.cases if c.verdict != NA for m in c.metrics]
        return max(ms, key=lambda m: m.severity) if ms else None

    def summary(self) -> str:
        w = self.worst
        tail = f"; worst {w.line()}" if w is not None else ""
        return f"{self.id:16s}{self.verdict:15s} {self.title}{tail}"


# ---------------------------------------------------------------------------
# evaluation helpers


class _Sample:
    """Residual fields of one surface on one grid."""

    def __init__(self, surface: SurfaceSpec, grid: GridSpec):
        self.surface, self.grid = surface, grid
        self.rec, self.chart, self.lg, (self.U, self.V) = evaluate_grid(surface, grid, "analytic")

    def loc(self, index) -> tuple[float, float]:
        return float(self.U[index]), float(self.V[index])

    def max(self, name, values, threshold, mask=None) -> Metric:
        vals = np.where(mask, values, -np.inf) if mask is not None else values
        i = np.unravel_index(np.argmax(vals), vals.shape)
        return Metric(name, float(vals[i]), threshold, "<=", self.loc(i))

    def min(self, name, values, threshold, mask=None) -> Metric:
        vals = np.where(mask, values, np.inf) if mask is not None else values
        i = np.unravel_index(np.argmin(vals), vals.shape)
        return Metric(name, float(vals[i]), threshold, ">=", self.loc(i))

    def codim_one(self) -> dict:
        return codim_one_data(self.lg)


def _case(label: str, metrics: list[Metric], note: str = "") -> CaseResult:
    return CaseResult(label, PASS if all(m.ok for m in metrics) else FAIL, metrics, note)


def _na(label: str, gate: Metric) -> CaseResult:
    return CaseResult(label, NA, [gate], "hypothesis does not hold: " + gate.line())


def _aggregate(cases: list[CaseResult]) -> str:
    verdicts = {c.verdict for c in cases}
    if FAIL in verdicts:
        return FAIL
    return PASS if PASS in verdicts else NA


def _helix(tau_amp: float = 0.0, tau: float = 0.5) -> SurfaceSpec:
    return make_surface("cylinder_over_curve_r4", {"k": 1.0, "tau": tau, "tau_amp": tau_amp})


def _sample(cache: dict, key: str, build: Callable[[], SurfaceSpec], grid: GridSpec) -> _Sample:
    k = (key, grid)
    if k not in cache:
        cache[k] = _Sample(build(), grid)
    return cache[k]


G32, G64, G128 = GridSpec(32, 32), GridSpec(64, 64), GridSpec(128, 128)

# label -> builder; the codimension-one and biconservative rosters used below
SURFACES: dict[str, Callable[[], SurfaceSpec]] = {
    "sphere r=2": lambda: make_surface("round_sphere", {"radius": 2.0}),
    "sphere r=2 (Mercator)": lambda: make_surface("round_sphere", {"radius": 2.0, "mercator": 1.0}),
    "unit cylinder": lambda: make_surface("circular_cylinder", {"radius": 1.0}),
    "catenoid": lambda: make_surface("catenoid"),
    "clifford torus": lambda: make_surface("clifford_torus_s3"),
    "cone k=1 a=0.8 b=0.6": lambda: make_surface("cone_r3", {"k": 1.0, "alpha": 0.8, "beta": 0.6}),
    "s3 example k=2 a=1": lambda: make_surface("s3_example", {"k": 2.0, "alpha": 1.0, "beta": math.sqrt(2 / 3)}),
    "monge u^2+v^4": lambda: make_surface("monge_patch", {"c20": 1.0, "c04": 1.0}),
    "paraboloid (conformal)": lambda: make_surface("paraboloid_conformal"),
    "helix cylinder tau=0.5": lambda: _helix(),
    "helix cylinder tau=0.5+0.2sin": lambda: _helix(0.2),
    "circle cylinder tau=0": lambda: _helix(tau=0.0),
}

CODIM_ONE = ["sphere r=2", "unit cylinder", "cone k=1 a=0.8 b=0.6", "s3 example k=2 a=1", "monge u^2+v^4", "paraboloid (conformal)", "clifford torus"]
BICONSERVATIVE = ["unit cylinder", "helix cylinder tau=0.5", "helix cylinder tau=0.5+0.2sin", "sphere r=2 (Mercator)", "clifford torus", "catenoid"]


def _targets(default: list[str], surface: SurfaceSpec | None, cache: dict, grid: GridSpec, grids: dict | None = None):
    if surface is not None:
        yield surface.family, _Sample(surface, grid)
        return
    for label in default:
        yield label, _sample(cache, label, SURFACES[label], (grids or {}).get(label, grid))


# ---------------------------------------------------------------------------
# checks


def check_codim_one(tol, cache, surface=None):
    """Codimension one: W = 4 A(grad f); f constant gives W = 0; W = 0 gives A(grad f) = 0."""
    cases = []
    for label, s in _targets(CODIM_ONE, surface, cache, G32):
        if s.surface.ambient.codim != 1:
            cases.append(CaseResult(label, NA, [], "not a hypersurface of the ambient"))
            continue
        c1 = s.codim_one()
        gap = s.rec.W - 4 * c1["AgradF"]
        gap_n = covector_norm(s.lg.shape.metric, gap)
        metrics = [s.max("|W - 4 A(grad f)|", gap_n, 1e-8)]
        if np.max(c1["gradf_norm"]) <= tol.zero:
            metrics.append(s.max("|W| (f constant)", s.rec.W_norm, tol.zero))
        if np.max(s.rec.W_norm) <= tol.zero:
            metrics.append(s.max("|A(grad f)| (W = 0)", c1["AgradF_norm"], tol.zero))
        cases.append(_case(label, metrics))
    return cases


def check_gauss(tol, cache, surface=None):
    """Codimension one: where K != c, W = 0 iff grad f = 0; non-constant f with W = 0 forces K = c."""
    cases = []
    for label, s in _targets(CODIM_ONE, surface, cache, G32):
        if s.surface.ambient.codim != 1:
            cases.append(CaseResult(label, NA, [], "not a hypersurface of the ambient"))
            continue
        c = s.surface.ambient.curvature
        c1 = s.codim_one()
        dK = np.abs(s.rec.gaussK - c)
        moving = c1["gradf_norm"] > tol.nonzero
        metrics = []
        if np.all(moving) and np.max(s.rec.W_norm) <= tol.zero:
            metrics.append(s.max("|K - c| (f non-constant, W = 0)", dK, tol.zero))
        generic = moving & (dK > tol.nonzero)
        if np.any(generic):
            metrics.append(s.min("|W| where K != c and grad f != 0", s.rec.W_norm, tol.nonzero, generic))
        flat = ~moving
        if np.any(flat):
            metrics.append(s.max("|W| where grad f = 0", s.rec.W_norm, tol.nonzero, flat))
        cases.append(_case(label, metrics) if metrics else CaseResult(label, NA, [], "no point meets the hypotheses"))
    return cases


def _cone_metrics(s: _Sample, tol) -> list[Metric]:
    c1 = s.codim_one()
    return [
        s.max("|K|", np.abs(s.rec.gaussK), 1e-6),
        s.max("|W|", s.rec.W_norm, 1e-6),
        s.max("|A(grad f)|", c1["AgradF_norm"], 1e-6),
        s.min("|grad f|", c1["gradf_norm"], 1e-3),
        s.min("|Div S2|", s.rec.divS2_norm, 1e-2),
    ]


def check_cone(tol, cache, surface=None):
    """Flat cone: Q holomorphic, K = 0, f non-constant, not biconservative."""
    if surface is not None:
        return [_case(surface.family, _cone_metrics(_Sample(surface, G64), tol))]
    s = _sample(cache, "cone k=1 a=0.8 b=0.6", SURFACES["cone k=1 a=0.8 b=0.6"], G64)
    return [_case("cone k=1 a=0.8 b=0.6", _cone_metrics(s, tol))]


def _s3_metrics(s: _Sample) -> list[Metric]:
    c1 = s.codim_one()
    return [
        s.max("| |X| - 1 |", s.rec.extras.get("sphere_gap", np.zeros_like(s.U)), 1e-9),
        s.max("|W|", s.rec.W_norm, 1e-5),
        s.min("|grad f|", c1["gradf_norm"], 1e-3),
        s.max("|K - 1|", np.abs(s.rec.gaussK - 1.0), 1e-6),
    ]


def check_s3_example(tol, cache, surface=None):
    """Surface in S^3(1): Q holomorphic, non-constant mean curvature, flat induced metric relative to c."""
    if surface is not None:
        return [_case(surface.family, _s3_metrics(_Sample(surface, G64)))]
    label = "s3 example k=2 a=1"
    return [_case(label, _s3_metrics(_sample(cache, label, SURFACES[label], G64)))]


def _bicons_gate(s: _Sample, tol) -> Metric:
    return s.max("|Div S2|", s.rec.divS2_norm, tol.zero)


def check_divfree_holomorphy(tol, cache, surface=None):
    """Div S2 = 0: S2(dz, dz) holomorphic iff trace S2 constant (zero sets, and the d-bar identity)."""
    cases = []
    default = ["unit cylinder", "helix cylinder tau=0.5", "helix cylinder tau=0.5+0.2sin", "sphere r=2 (Mercator)", "clifford torus"]
    # the cylinder runs on the fine grid the d-bar identity is stated for
    for label, s in _targets(default, surface, cache, G64, {"unit cylinder": G128}):
        gate = _bicons_gate(s, tol)
        if not gate.ok:
            cases.append(_na(label, gate))
            continue
        dt = 4 * s.lg.dH2
        dt_n = covector_norm(s.lg.shape.metric, dt)
        mismatch = (s.rec.W_norm <= tol.zero) != (dt_n <= tol.zero)
        metrics = [Metric("zero-set mismatches (W vs d trace)", float(np.sum(mismatch)), 0.0, "<=")]
        if s.chart.verified:
            lam2 = s.chart.lam**2
            lhs = 8 * dbar(4 * s.rec.Q, s.grid.spacing(s.surface.domain))
            rhs = -lam2 * dt[..., 0] + 1j * lam2 * dt[..., 1]
            err = np.abs(lhs - rhs)
            inner = ~np.isnan(err)
            metrics.append(s.max("|8 dbar S2(dz,dz) - (-l^2 t_x + i l^2 t_y)|", np.where(inner, err, 0.0), 1e-3, inner))
        cases.append(_case(label, metrics))
    return cases


def check_divfree_codazzi(tol, cache, surface=None):
    """Div S2 = 0: S2 is a Codazzi tensor iff trace S2 is constant."""
    cases = []
    default = ["unit cylinder", "helix cylinder tau=0.5", "helix cylinder tau=0.5+0.2sin", "sphere r=2", "clifford torus", "catenoid"]
    for label, s in _targets(default, surface, cache, G64):
        gate = _bicons_gate(s, tol)
        if not gate.ok:
            cases.append(_na(label, gate))
            continue
        mismatch = (s.rec.codazzi <= tol.zero) != (s.rec.gradH2_norm <= tol.zero)
        metrics = [Metric("zero-set mismatches (Codazzi vs d|H|^2)", float(np.sum(mismatch)), 0.0, "<=")]
        const = s.rec.gradH2_norm <= tol.zero
        if np.any(const):
            metrics.append(s.max("Codazzi residual where |H| constant", s.rec.codazzi, 1e-8, const))
        cases.append(_case(label, metrics))
    return cases


def check_biconservative_holomorphy(tol, cache, surface=None):
    """Biconservative: Q holomorphic iff |H| constant (pointwise, with a 10x margin)."""
    cases = []
    loose = tol.nonzero
    for label, s in _targets(BICONSERVATIVE, surface, cache, G64):
        gate = _bicons_gate(s, tol)
        if not gate.ok:
            cases.append(_na(label, gate))
            continue
        cmc = s.rec.gradH2_norm <= tol.zero
        hol = s.rec.W_norm <= tol.zero
        metrics = []
        if np.any(cmc):
            metrics.append(s.max("|W| where |H| constant", s.rec.W_norm, loose, cmc))
        if np.any(hol):
            metrics.append(s.max("|grad |H|^2| where W = 0", s.rec.gradH2_norm, loose, hol))
        cases.append(_case(label, metrics))
    if surface is None:
        cases.append(_monge_control(tol))
    return cases


MONGE_CONTROL = {"c20": 0.5, "c02": -1.5, "c30": 0.1}


def _monge_control(tol) -> CaseResult:
    """Graph whose Div S2 vanishes at the origin while |H| does not have a critical point there."""
    s = make_surface("monge_patch", MONGE_CONTROL)
    rec = residual_record(local_geometry(s.ambient, eval_jet(s, (0.0, 0.0))))
    at = (0.0, 0.0)
    metrics = [
        Metric("|Div S2| at origin", float(rec.divS2_norm), tol.zero, "<=", at),
        Metric("|grad |H|^2| at origin", float(rec.gradH2_norm), 1e-2, ">=", at),
        Metric("|W| at origin", float(rec.W_norm), 1e-3, ">=", at),
    ]
    return _case("monge control " + ",".join(f"{k}={v}" for k, v in MONGE_CONTROL.items()), metrics)


def _curve_metrics(s: _Sample, tol) -> list[Metric]:
    curve = s.surface.curve
    k = curve.k
    U = s.U
    N = curve.curve_jet(U)[2] / k
    H = s.lg.shape.H
    Hgap = np.linalg.norm(H[..., :3] - 0.5 * k * N, axis=-1) + np.abs(H[..., 3])
    tau = np.asarray(curve.tau(U), dtype=float) * np.ones_like(U)
    metrics = [
        s.max("| |H| - k/2 |", np.abs(s.rec.absH - k / 2), 1e-6),
        s.max("|H - (k/2) N(u)|", Hgap, 1e-6),
        s.max("|pmc - k tau(u)/2|", np.abs(s.rec.pmc - k * np.abs(tau) / 2), 1e-5),
        s.max("|Div S2|", s.rec.divS2_norm, 1e-5),
        s.max("|W|", s.rec.W_norm, 1e-5),
        s.max("|trace A4|", s.rec.extras["traceA4"], 1e-10),
        s.max("|K|", np.abs(s.rec.gaussK), 1e-6),
    ]
    if is_proper(s.surface):
        metrics.append(s.min("pmc (proper)", s.rec.pmc, tol.nonzero))
    else:
        metrics.append(s.max("pmc (torsion-free curve)", s.rec.pmc, tol.zero))
    return metrics


def check_r4_cylinders(tol, cache, surface=None):
    """(gamma(u), v + a) over a constant-curvature curve: CMC |H| = k/2, biconservative, |nabla-perp H| = k tau / 2."""
    if surface is not None:
        if surface.curve is None:
            return [CaseResult(surface.family, NA, [], "not a cylinder over a Frenet curve")]
        return [_case(surface.family, _curve_metrics(_Sample(surface, G64), tol))]
    cases = []
    for label in ["helix cylinder tau=0.5", "helix cylinder tau=0.5+0.2sin", "circle cylinder tau=0"]:
        s = _sample(cache, label, SURFACES[label], G64)
        cases.append(_case(label, _curve_metrics(s, tol)))
    return cases


CHECKS: dict[str, tuple[str, Callable]] = {
    "codim1": ("holomorphic Q and A(grad f) in codimension one", check_codim_one),
    "gauss": ("holomorphic Q with non-constant f forces K = c", check_gauss),
    "cone": ("flat cone with holomorphic Q", check_cone),
    "s3": ("non-CMC surface in S^3 with holomorphic Q", check_s3_example),
    "divfree-holo": ("divergence-free S2: holomorphy iff constant trace", check_divfree_holomorphy),
    "divfree-codazzi": ("divergence-free S2: Codazzi iff constant trace", check_divfree_codazzi),
    "bicons-holo": ("biconservative: holomorphic Q iff |H| constant", check_biconservative_holomorphy),
    "r4-cylinders": ("CMC proper biconservative cylinders in R^4", check_r4_cylinders),
}


def run_check(check_id: str, surface: SurfaceSpec | None = None, tol: ToleranceSet | None = None, cache: dict | None = None) -> CheckResult:
    if check_id not in CHECKS:
        raise KeyError(f"unknown check {check_id!r}; known: {', '.join(CHECKS)}")
    title, fn = CHECKS[check_id]
    cases = fn(tol or ToleranceSet.profile("strict"), {} if cache is None else cache, surface)
    return CheckResult(check_id, title, _aggregate(cases), cases)


def run_suite(ids: list[str] | None = None, tol: ToleranceSet | None = None) -> list[CheckResult]:
    cache: dict = {}
    return [run_check(i, tol=tol, cache=cache) for i in (ids or list(CHECKS))]


def junit_xml(results: list[CheckResult]) -> str:
    suite = ET.Element(
        "testsuite",
        name="biconservative-checks",
        tests=str(len(results)),
        failures=str(sum(r.verdict == FAIL for r in results)),
        skipped=str(sum(r.verdict == NA for r in results)),
    )
    for r in results:
        tc = ET.SubElement(suite, "testcase", classname="checks", name=r.id)
        detail = "\n".join(f"[{c.verdict}] {c.label}: " + "; ".join(m.line() for m in c.metrics) for c in r.cases)
        if r.verdict == FAIL:
            ET.SubElement(tc, "failure", message=r.summary()).text = detail
        elif r.verdict == NA:
            ET.SubElement(tc, "skipped", message="hypotheses not met").text = detail
        else:
            ET.SubElement(tc, "system-out").text = detail
    return ET.tostring(suite, encoding="unicode")
