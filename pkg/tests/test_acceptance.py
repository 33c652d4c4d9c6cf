"""Acceptance criteria, one test each, at their stated tolerances.

Every test records a single ``AC<n> PASS|FAIL ...`` line, printed in the
pytest terminal summary.  ``python3 tests/test_acceptance.py`` prints the
same lines without pytest.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from biconservative.analysis import GridSpec, analyze, evaluate_grid, report_json
from biconservative.errors import ConvergenceError
from biconservative.fit import FitProblem, fit
from biconservative.gallery import FAMILIES, make_surface, solve_family_constraint
from biconservative.geometry import codim_one_data, covector_norm, dbar, residual_record, local_geometry
from biconservative.jets import eval_jet


def _fmt(checks: dict[str, tuple[float, str, float]]) -> tuple[bool, str]:
    ok = True
    parts = []
    for name, (value, rel, thr) in checks.items():
        good = value <= thr if rel == "<=" else value >= thr
        ok &= bool(good)
        parts.append(f"{name}={value:.2e}{rel}{thr:.0e}{'' if good else ' (!)'}")
    return ok, ", ".join(parts)


def ac1():
    s = make_surface("cone_r3", {"k": 1.0, "alpha": 0.8, "beta": 0.6})
    rec, _, lg, _ = evaluate_grid(s, GridSpec(64, 64))
    c1 = codim_one_data(lg)
    return _fmt({
        "max|K|": (np.max(np.abs(rec.gaussK)), "<=", 1e-6),
        "max|W|": (np.max(rec.W_norm), "<=", 1e-6),
        "max|A grad f|": (np.max(c1["AgradF_norm"]), "<=", 1e-6),
        "min|grad f|": (np.min(c1["gradf_norm"]), ">=", 1e-3),
        "min|Div S2|": (np.min(rec.divS2_norm), ">=", 1e-2),
    })


def ac2():
    s = make_surface("round_sphere", {"radius": 2.0})
    rec, _, lg, _ = evaluate_grid(s, GridSpec(32, 32))
    residuals = max(
        np.max(getattr(rec, f)) for f in ("divS2_norm", "W_norm", "codazzi", "pmc", "pseudoUmb", "gradH2_norm", "route_gap")
    )
    s2_gap = np.max(np.abs(lg.s2.components - 0.5 * lg.shape.metric.matrix))
    return _fmt({
        "max||H|-0.5|": (np.max(np.abs(rec.absH - 0.5)), "<=", 1e-9),
        "max|K-0.25|": (np.max(np.abs(rec.gaussK - 0.25)), "<=", 1e-9),
        "max residual": (residuals, "<=", 1e-9),
        "max|S2-g/2|": (s2_gap, "<=", 1e-9),
    })


def ac3():
    checks = {}
    for tag, amp in (("const", 0.0), ("sin", 0.2)):
        s = make_surface("cylinder_over_curve_r4", {"k": 1.0, "tau": 0.5, "tau_amp": amp})
        rec, _, _, (U, _) = evaluate_grid(s, GridSpec(64, 64))
        tau = 0.5 + amp * np.sin(U)
        checks[f"{tag}: max||H|-0.5|"] = (np.max(np.abs(rec.absH - 0.5)), "<=", 1e-6)
        if amp == 0.0:
            checks[f"{tag}: max|pmc-0.25|"] = (np.max(np.abs(rec.pmc - 0.25)), "<=", 1e-6)
        else:
            checks[f"{tag}: max|pmc-k tau/2|"] = (np.max(np.abs(rec.pmc - tau / 2)), "<=", 1e-5)
        checks[f"{tag}: max|Div S2|"] = (np.max(rec.divS2_norm), "<=", 1e-5)
        checks[f"{tag}: max|W|"] = (np.max(rec.W_norm), "<=", 1e-5)
    return _fmt(checks)


def ac4():
    checks = {}
    for label, s in (
        ("cylinder", make_surface("circular_cylinder")),
        ("helix", make_surface("cylinder_over_curve_r4", {"k": 1.0, "tau": 0.5})),
    ):
        rec, _, _, _ = evaluate_grid(s, GridSpec(64, 64))
        hyp = (rec.divS2_norm <= 1e-6) & (rec.gradH2_norm <= 1e-6)
        checks[f"{label}: points meeting hypothesis"] = (float(np.sum(hyp)), ">=", float(hyp.size))
        checks[f"{label}: max|W| there"] = (float(np.max(np.where(hyp, rec.W_norm, 0.0))), "<=", 1e-5)
    m = make_surface("monge_patch", {"c20": 0.5, "c02": -1.5, "c30": 0.1})
    rec = residual_record(local_geometry(m.ambient, eval_jet(m, (0.0, 0.0))))
    checks["monge: |Div S2|"] = (float(rec.divS2_norm), "<=", 1e-6)
    checks["monge: |grad|H|^2|"] = (float(rec.gradH2_norm), ">=", 1e-2)
    checks["monge: |W|"] = (float(rec.W_norm), ">=", 1e-3)
    return _fmt(checks)


def ac5():
    s = make_surface("circular_cylinder", {"radius": 1.0})
    grid = GridSpec(128, 128)
    rec, chart, lg, _ = evaluate_grid(s, grid)
    lam2 = chart.lam**2
    dt = 4 * lg.dH2
    lhs = 8 * dbar(4 * rec.Q, grid.spacing(s.domain))
    rhs = -lam2 * dt[..., 0] + 1j * lam2 * dt[..., 1]
    err = np.abs(lhs - rhs)
    return _fmt({
        "isothermal": (float(chart.verified), ">=", 1.0),
        "max|8 dbar S2(dz,dz) - rhs|": (float(np.nanmax(err)), "<=", 1e-3),
        "max Codazzi(S2)": (float(np.max(rec.codazzi)), "<=", 1e-8),
    })


def ac6():
    s = make_surface("paraboloid_conformal")
    grid = GridSpec(128, 128)
    rec, chart, lg, _ = evaluate_grid(s, grid)
    a = codim_one_data(lg)["AgradF"]
    lam2 = chart.lam**2
    lhs = 8 * dbar(rec.Q, grid.spacing(s.domain))
    rhs = 2 * lam2 * a[..., 0] - 2j * lam2 * a[..., 1]
    return _fmt({
        "isothermal": (float(chart.verified), ">=", 1.0),
        "max|8 dbar Q - rhs|": (float(np.nanmax(np.abs(lhs - rhs))), "<=", 1e-3),
        "max|rhs| (non-vacuous)": (float(np.max(np.abs(rhs))), ">=", 1e-2),
    })


def ac7():
    s = make_surface("s3_example", {"k": 2.0, "alpha": 1.0, "beta": math.sqrt(2 / 3)})
    rec, _, lg, _ = evaluate_grid(s, GridSpec())
    c1 = codim_one_data(lg)
    return _fmt({
        "max||X|-1|": (float(np.max(rec.extras["sphere_gap"])), "<=", 1e-9),
        "max|W|": (float(np.max(rec.W_norm)), "<=", 1e-5),
        "min|grad f|": (float(np.min(c1["gradf_norm"])), ">=", 1e-3),
    })


GALLERY = [
    ("round_sphere", {"radius": 2.0}),
    ("round_sphere", {"radius": 2.0, "mercator": 1.0}),
    ("circular_cylinder", {}),
    ("catenoid", {}),
    ("clifford_torus_s3", {}),
    ("cone_r3", {}),
    ("s3_example", {}),
    ("monge_patch", {}),
    ("monge_patch", {"c20": 0.5, "c02": -1.5, "c30": 0.1}),
    ("paraboloid_conformal", {}),
    ("cylinder_over_curve_r4", {}),
    ("cylinder_over_curve_r4", {"tau_amp": 0.2}),
]


def ac8():
    assert {f for f, _ in GALLERY} == set(FAMILIES)
    worst_a = worst_fd = 0.0
    for family, params in GALLERY:
        s = make_surface(family, params)
        worst_a = max(worst_a, float(np.max(evaluate_grid(s, GridSpec(32, 32), "analytic")[0].route_gap)))
        worst_fd = max(worst_fd, float(np.max(evaluate_grid(s, GridSpec(16, 16), "fd")[0].route_gap)))
    return _fmt({"analytic route gap": (worst_a, "<=", 1e-6), "fd route gap": (worst_fd, "<=", 1e-3)})


def ac9():
    checks = {}
    cases = [
        ("cone_r3", {"k": 1.0, "alpha": 0.8}, [0.42, 0.5, 0.55, 0.65, 0.78]),
        ("s3_example", {"k": 2.0, "alpha": 1.0}, [0.6, 0.7, 0.75, 0.9, 1.0]),
    ]
    for family, fixed, inits in cases:
        target = solve_family_constraint(family, fixed)["beta"]
        worst = 0.0
        for b0 in inits:
            try:
                params, _ = fit(FitProblem(family, ("beta",), fixed, "W"), {"beta": b0}, verify_grid=None)
                err = abs(params["beta"] - target)
            except ConvergenceError:
                err = math.inf
            worst = max(worst, err)
        checks[f"{family}: worst |beta - {target:.4f}|"] = (worst, "<=", 1e-3)
    return _fmt(checks)


def ac10():
    s = make_surface("cone_r3")
    a = report_json(analyze(s, GridSpec(64, 64)))
    b = report_json(analyze(make_surface("cone_r3"), GridSpec(64, 64)))
    flips = 0
    for family, params in GALLERY:
        sf = make_surface(family, params)
        coarse = analyze(sf, GridSpec(16, 16)).flags
        fine = analyze(sf, GridSpec(32, 32)).flags
        flips += coarse != fine
    return _fmt({"byte-identical JSON": (float(a == b), ">=", 1.0), "flag flips under grid doubling": (float(flips), "<=", 0.0)})


CRITERIA = {
    1: ("cone witness", ac1),
    2: ("sphere control", ac2),
    3: ("helix cylinders are CMC biconservative, pmc = k tau/2", ac3),
    4: ("holomorphy iff CMC on biconservative surfaces; Monge control", ac4),
    5: ("d-bar identity and Codazzi on the unit cylinder", ac5),
    6: ("codimension-one d-bar identity on the conformal paraboloid", ac6),
    7: ("surface in S^3", ac7),
    8: ("covariant vs space-form Div S2", ac8),
    9: ("parameter recovery by fitting", ac9),
    10: ("determinism and grid refinement", ac10),
}


def run(n: int) -> tuple[bool, str]:
    title, fn = CRITERIA[n]
    ok, detail = fn()
    return ok, f"AC{n} {'PASS' if ok else 'FAIL'} {title}: {detail}"


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_acceptance(n, acceptance_log):
    ok, line = run(n)
    acceptance_log.append(line)
    print(line)
    assert ok, line


if __name__ == "__main__":
    for n in sorted(CRITERIA):
        print(run(n)[1])
