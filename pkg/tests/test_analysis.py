import csv
import json

import numpy as np
import pytest

from biconservative.analysis import (
    BASE_COLUMNS,
    GridSpec,
    analyze,
    emit_field_csv,
    emit_report,
    evaluate_grid,
    load_report,
    report_csv,
    report_json,
)
from biconservative.errors import GeometryError, NotImmersionError
from biconservative.ambient import AmbientSpace
from biconservative.gallery import custom_surface, make_surface


def test_grid_spec():
    g = GridSpec.parse("64X32", 0.1)
    assert (g.nu, g.nv, g.margin) == (64, 32, 0.1)
    us, vs = g.axes(((0, 1), (0, 2)))
    assert us[0] == pytest.approx(0.1) and us[-1] == pytest.approx(0.9)
    assert vs[0] == pytest.approx(0.2) and len(vs) == 32
    assert g.refined() == GridSpec(128, 64, 0.1)
    for bad in ("64", "axb", "4x64"):
        with pytest.raises(ValueError):
            GridSpec.parse(bad)
    with pytest.raises(ValueError):
        GridSpec(8, 8, 0.5)


def test_sphere_report():
    rep = analyze(make_surface("round_sphere", {"radius": 2.0}), GridSpec(16, 16))
    assert rep.flags == ["biconservative", "cmc_local", "pmc", "pseudo_umbilic", "q_holomorphic"]
    assert abs(rep.fields["absH"]["max"] - 0.5) <= 1e-9 and abs(rep.fields["absH"]["min"] - 0.5) <= 1e-9
    assert rep.grid["isothermal"] is False
    assert "Q_re" not in rep.fields


def test_cone_report_has_only_holomorphy():
    rep = analyze(make_surface("cone"), GridSpec(16, 16))
    assert rep.flags == ["q_holomorphic"]
    assert rep.fields["divS2_norm"]["min"] > 1e-2
    assert set(rep.fields) >= set(BASE_COLUMNS) | {"f", "gradf_norm", "AgradF_norm"}


def test_helix_report():
    rep = analyze(make_surface("cylinder_over_curve_r4"), GridSpec(16, 16))
    assert rep.flags == ["biconservative", "cmc_local", "q_holomorphic"]
    assert rep.fields["pmc"]["max"] == pytest.approx(0.25, abs=1e-8)
    assert rep.grid["isothermal"] is True
    assert abs(rep.fields["Q_re"]["mean"]) > 1e-2


def test_flag_requires_every_sample():
    # gradient of |H|^2 is zero only on v = 0 for the paraboloid-like Monge patch
    rep = analyze(make_surface("monge_patch", {"c20": 1.0, "c02": 1.0}), GridSpec(9, 9))
    assert rep.fields["gradH2_norm"]["min"] <= 1e-12
    assert "cmc_local" not in rep.flags


def test_json_round_trip(tmp_path):
    rep = analyze(make_surface("catenoid"), GridSpec(8, 8))
    path = tmp_path / "r.json"
    emit_report(rep, "json", path)
    back = load_report(path)
    assert back.to_dict() == json.loads(report_json(rep))
    assert back.flags == rep.flags and back.fields == rep.fields
    with pytest.raises(KeyError):
        back.column("absH")
    with pytest.raises(ValueError):
        emit_report(rep, "xml", path)


def test_json_is_deterministic_and_sorted():
    a = report_json(analyze(make_surface("cone_r3"), GridSpec(12, 12)))
    b = report_json(analyze(make_surface("cone_r3"), GridSpec(12, 12)))
    assert a == b
    data = json.loads(a)
    assert list(data) == sorted(data)
    assert data["surface"]["params"] == {"alpha": 0.8, "beta": 0.6, "k": 1.0}


def test_csv_table(tmp_path):
    rep = analyze(make_surface("circular_cylinder"), GridSpec(32, 32))
    rows = list(csv.reader(report_csv(rep).splitlines()))
    assert len(rows) == 32 * 32 + 1
    header = rows[0]
    assert header[:2] == ["u", "v"] and set(BASE_COLUMNS) <= set(header)
    assert "Q_re" in header and "Q_im" in header
    q = np.array([float(r[header.index("Q_re")]) for r in rows[1:]])
    np.testing.assert_allclose(q, 0.125, atol=1e-14)
    emit_report(rep, "csv", tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text() == report_csv(rep)


def read_field(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["u", "v", "value"]
    return np.array(rows[1:], dtype=float)


def test_field_csv(tmp_path):
    cone = analyze(make_surface("cone_r3"), GridSpec(10, 12))
    emit_field_csv(cone, "W_norm", tmp_path / "w.csv")
    emit_field_csv(cone, "absH", tmp_path / "h.csv")
    w = read_field(tmp_path / "w.csv")
    assert w.shape == (120, 3) and np.max(w[:, 2]) <= 1e-6
    h = read_field(tmp_path / "h.csv").reshape(10, 12, 3)
    # |H| grows towards the apex at v = 1/alpha
    assert np.all(np.diff(h[:, :, 2], axis=1) > 0)
    sphere = analyze(make_surface("round_sphere", {"radius": 2.0}), GridSpec(6, 6))
    emit_field_csv(sphere, "gaussK", tmp_path / "k.csv")
    np.testing.assert_allclose(read_field(tmp_path / "k.csv")[:, 2], 0.25, rtol=1e-12)
    with pytest.raises(KeyError):
        emit_field_csv(sphere, "nope", tmp_path / "x.csv")


@pytest.mark.parametrize("family,params", [("cone_r3", {}), ("cylinder_over_curve_r4", {"tau_amp": 0.2}), ("s3_example", {})])
def test_refinement_keeps_flags(family, params):
    s = make_surface(family, params)
    g = GridSpec(10, 10)
    assert analyze(s, g).flags == analyze(s, g.refined()).flags


def test_fd_jets_converge_with_step():
    # polynomials of low degree are differentiated exactly, so use a transcendental map
    s = make_surface("catenoid")
    exact, _, _, _ = evaluate_grid(s, GridSpec(6, 6))
    errs = []
    for h in (4e-2, 2e-2, 1e-2):
        fd, _, _, _ = evaluate_grid(s, GridSpec(6, 6), "fd", h)
        errs.append(np.max(np.abs(fd.divS2_norm - exact.divS2_norm)))
    # second-order stencil: halving h cuts the error by four
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


def test_fd_report_uses_fd_profile():
    rep = analyze(make_surface("circular_cylinder"), GridSpec(8, 8), jets="fd")
    assert rep.tolerances["profile"] == "fd" and rep.grid["h"] == 1e-3
    assert "biconservative" in rep.flags


def test_failure_reports_location():
    s = custom_surface(
        lambda u, v: np.stack([u, u * u, v * v], -1),
        ((-1, 1), (-1, 1)),
        AmbientSpace.euclidean(3),
        taylor_map=lambda u, v: [u, u * u, v * v],
    )
    with pytest.raises(NotImmersionError, match=r"\(u=.*, v=0\)"):
        evaluate_grid(s, GridSpec(5, 5))
    assert issubclass(NotImmersionError, GeometryError)
