import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from biconservative.analysis import GridSpec, evaluate_grid
from biconservative.errors import ConstraintError, DomainError
from biconservative.frenet import integrate_frenet_curve
from biconservative.gallery import (
    ALIASES,
    FAMILIES,
    cylinder_over_curve,
    is_proper,
    make_surface,
    paraboloid_arclength,
    resolve_family,
    solve_family_constraint,
)
from biconservative.jets import eval_jet


def test_every_family_builds_with_defaults():
    for name in FAMILIES:
        s = make_surface(name)
        (u0, u1), (v0, v1) = s.domain
        x = s.evaluate(0.5 * (u0 + u1), 0.5 * (v0 + v1))
        assert x.shape == (s.ambient.embedding_dim,)
        assert s.describe()["family"] == name


def test_aliases_resolve():
    for alias, name in ALIASES.items():
        assert resolve_family(alias) == name
        assert make_surface(alias).family == name
    with pytest.raises(ConstraintError):
        resolve_family("torus_of_revolution")


def test_parameter_validation():
    with pytest.raises(ConstraintError, match="no real beta"):
        make_surface("cone_r3", {"k": 1.0, "alpha": 2.0})
    with pytest.raises(ConstraintError):
        make_surface("cone_r3", {"beta": 0.5})
    with pytest.raises(ConstraintError):
        make_surface("cone_r3", {"gamma": 1.0})
    with pytest.raises(ConstraintError):
        make_surface("s3_example", {"beta": 0.7})
    with pytest.raises(ConstraintError):
        make_surface("clifford_torus_s3", {"r1": 0.5})
    with pytest.raises(ConstraintError):
        make_surface("monge_patch", {"a20": 1.0})
    with pytest.raises(ConstraintError):
        make_surface("round_sphere", {"radius": -1.0})


def test_domain_errors():
    with pytest.raises(DomainError):
        make_surface("catenoid", domain=((0, 1), (1, 1)))
    with pytest.raises(ConstraintError, match="apex"):
        make_surface("cone_r3", domain=((0, 1), (0.0, 1.3)))
    with pytest.raises(ConstraintError, match="singular line"):
        make_surface("s3_example", domain=((0, 1), (0.0, 0.9)))
    with pytest.raises(DomainError):
        make_surface("cylinder_over_curve_r4", domain=((0.0, 7.0), (-1, 1)))
    s = make_surface("catenoid")
    with pytest.raises(DomainError):
        s.check_point(0.0, 3.0)
    s.check_point(np.array([0.1, 1.0]), np.array([0.0, 0.5]))


def test_solve_cone_constraint():
    assert solve_family_constraint("cone", {"k": 1.0, "alpha": 0.8})["beta"] == pytest.approx(0.6, abs=1e-15)
    assert solve_family_constraint("cone_r3", {"k": 1.0, "beta": 0.6})["alpha"] == pytest.approx(0.8, abs=1e-15)
    assert solve_family_constraint("cone_r3", {"alpha": 0.8, "beta": 0.6})["k"] == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ConstraintError, match="alpha != 0"):
        solve_family_constraint("cone_r3", {"k": 1.0, "beta": 1.0})
    with pytest.raises(ConstraintError):
        solve_family_constraint("cone_r3", {"k": 1.0, "alpha": 2.0})
    with pytest.raises(ConstraintError):
        solve_family_constraint("cone_r3", {"k": 1.0})
    with pytest.raises(ConstraintError):
        solve_family_constraint("catenoid", {"a": 1.0})


def test_solve_s3_and_clifford_constraints():
    assert solve_family_constraint("s3", {"k": 2.0, "alpha": 1.0})["beta"] == pytest.approx(math.sqrt(2 / 3), abs=1e-15)
    assert solve_family_constraint("s3", {"k": 2.0, "alpha": 1.0})["beta"] == pytest.approx(0.816497, abs=1e-6)
    assert solve_family_constraint("clifford_torus", {"r1": 0.6, "radius": 1.0})["r2"] == pytest.approx(0.8, abs=1e-15)


@given(st.floats(0.2, 3.0), st.floats(0.05, 0.99))
def test_solved_cone_parameters_are_accepted(k, ratio):
    p = solve_family_constraint("cone_r3", {"k": k, "alpha": ratio * k})
    s = make_surface("cone_r3", {n: p[n] for n in ("k", "alpha", "beta")})
    assert s.params["beta"] == pytest.approx(math.sqrt(1 - ratio * ratio))


def test_isothermal_flags_match_metric():
    for name in FAMILIES:
        for params in ({}, {"mercator": 1.0}) if name == "round_sphere" else ({},):
            s = make_surface(name, params)
            (u0, u1), (v0, v1) = s.domain
            jet = eval_jet(s, (0.3 * u0 + 0.7 * u1, 0.6 * v0 + 0.4 * v1), 1)
            g = np.einsum("ni,nj->ij", jet.d1, jet.d1)
            conformal = abs(g[0, 0] - g[1, 1]) <= 1e-8 * g[0, 0] and abs(g[0, 1]) <= 1e-8 * g[0, 0]
            if s.isothermal:
                assert conformal, name
            elif name in ("cone_r3", "round_sphere", "monge_patch"):
                assert not conformal, name


@pytest.mark.parametrize("rho", [0.05, 0.3, 1.0, 2.5])
@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_paraboloid_arclength_against_quadrature(rho, c):
    # z = c r^2 / 2: isothermal coordinate s = int sqrt(1 + c^2 r^2) / r dr, anchored at r = 1/c
    integrand = lambda r: math.sqrt(1 + c * c * r * r) / r  # noqa: E731
    ref = 1.0 / c
    want = quad(integrand, ref, rho, epsabs=1e-13, epsrel=1e-13)[0] + paraboloid_arclength(ref, c)
    assert paraboloid_arclength(rho, c) == pytest.approx(want, abs=1e-11)


def test_paraboloid_chart_is_conformal_on_grid():
    s = make_surface("paraboloid_conformal")
    U, V = GridSpec(12, 12).mesh(s.domain)
    jet = eval_jet(s, (U, V), 1)
    g = np.einsum("...ni,...nj->...ij", jet.d1, jet.d1)
    assert np.max(np.abs(g[..., 0, 0] - g[..., 1, 1])) <= 1e-12
    assert np.max(np.abs(g[..., 0, 1])) <= 1e-12
    # and it lies on z = c rho^2 / 2
    X = jet.value
    np.testing.assert_allclose(X[..., 2], 0.5 * (X[..., 0] ** 2 + X[..., 1] ** 2), atol=1e-12)


def test_properness():
    assert is_proper(make_surface("cylinder_over_curve_r4", {"tau": 0.5}))
    assert not is_proper(make_surface("cylinder_over_curve_r4", {"tau": 0.0}))
    assert is_proper(make_surface("cone_r3"))
    circle = cylinder_over_curve(integrate_frenet_curve(1.0, 0.0), 0.3)
    assert not is_proper(circle)
    assert circle.evaluate(0.0, 0.0)[3] == pytest.approx(0.3)


def test_cone_grid_invariants():
    rec, _, _, (_, V) = evaluate_grid(make_surface("cone_r3"), GridSpec(24, 24))
    assert np.max(np.abs(rec.gaussK)) <= 1e-12
    assert np.max(rec.W_norm) <= 1e-12
    # |H| = beta / (2 (1 - alpha v)) along the generators
    np.testing.assert_allclose(rec.absH, 0.6 / (2 * (1 - 0.8 * V)), rtol=1e-12)


def test_s3_example_grid_invariants():
    rec, _, _, _ = evaluate_grid(make_surface("s3_example"), GridSpec(24, 24))
    assert np.max(rec.extras["sphere_gap"]) <= 1e-14
    assert np.max(rec.W_norm) <= 1e-10
    assert np.min(rec.gradH2_norm) > 1e-3


def test_s3_off_constraint_is_projected():
    s = make_surface("s3_example", {"beta": 0.7}, enforce_constraints=False)
    x = s.evaluate(0.3, 0.1)
    assert np.linalg.norm(x) == pytest.approx(1.0, abs=1e-15)
