"""Grid analysis of a surface: per-point residual table, statistics, flags, reports."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .ambient import sphere_gap
from .errors import GeometryError
from .gallery import SurfaceSpec
from .geometry import (
    FLAGS,
    ResidualRecord,
    ToleranceSet,
    isothermal_chart,
    local_geometry,
    residual_record,
)
from .jets import DEFAULT_H, eval_jet

# field whose universal smallness defines each flag
FLAG_FIELDS = {
    "minimal": "absH",
    "cmc_local": "gradH2_norm",
    "pmc": "pmc",
    "pseudo_umbilic": "pseudoUmb",
    "biconservative": "divS2_norm",
    "q_holomorphic": "W_norm",
}
BASE_COLUMNS = ("absH", "gaussK", "divS2_norm", "W_norm", "codazzi", "pmc", "pseudoUmb", "gradH2_norm", "route_gap")
ISO_TOL = {"analytic": 1e-8, "auto": 1e-8, "fd": 1e-4}


@dataclass(frozen=True)
class GridSpec:
    """Uniform nu x nv grid; ``margin`` is the fraction of each side left out."""

    nu: int = 32
    nv: int = 32
    margin: float = 0.02

    def __post_init__(self):
        if self.nu < 5 or self.nv < 5:
            raise ValueError("grid needs at least 5 points per direction")
        if not 0 < self.margin < 0.5:
            raise ValueError("margin must lie in (0, 0.5)")

    def axes(self, domain) -> tuple[np.ndarray, np.ndarray]:
        (u0, u1), (v0, v1) = domain
        mu, mv = self.margin * (u1 - u0), self.margin * (v1 - v0)
        return np.linspace(u0 + mu, u1 - mu, self.nu), np.linspace(v0 + mv, v1 - mv, self.nv)

    def spacing(self, domain) -> tuple[float, float]:
        us, vs = self.axes(domain)
        return float(us[1] - us[0]), float(vs[1] - vs[0])

    def mesh(self, domain):
        us, vs = self.axes(domain)
        return np.meshgrid(us, vs, indexing="ij")

    def refined(self) -> "GridSpec":
        return GridSpec(2 * self.nu, 2 * self.nv, self.margin)

    @classmethod
    def parse(cls, text: str, margin: float = 0.02) -> "GridSpec":
        try:
            nu, nv = (int(x) for x in text.lower().split("x"))
        except ValueError as exc:
            raise ValueError(f"grid must look like 64x64, got {text!r}") from exc
        return cls(nu, nv, margin)


@dataclass
class AnalysisReport:
    surface: dict
    grid: dict
    tolerances: dict
    fields: dict
    flags: list
    version: str = __version__
    table: dict | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "surface": self.surface,
            "grid": self.grid,
            "tolerances": self.tolerances,
            "fields": self.fields,
            "flags": list(self.flags),
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AnalysisReport":
        return cls(**{k: data[k] for k in ("surface", "grid", "tolerances", "fields", "flags", "version")})

    def column(self, name: str) -> np.ndarray:
        if self.table is None:
            raise KeyError("report was loaded without its per-point table")
        if name not in self.table:
            raise KeyError(f"unknown field {name!r}; available: {', '.join(self.table)}")
        return self.table[name]


def _field_stats(values: np.ndarray, U: np.ndarray, V: np.ndarray) -> dict:
    flat = values.reshape(-1)
    i = int(np.argmax(flat))
    j = int(np.argmin(flat))
    return {
        "max": float(flat[i]),
        "mean": float(np.mean(flat)),
        "min": float(flat[j]),
        "argmax": [float(U.reshape(-1)[i]), float(V.reshape(-1)[i])],
        "argmin": [float(U.reshape(-1)[j]), float(V.reshape(-1)[j])],
    }


def _locate_failure(surface: SurfaceSpec, U, V, mode, h):
    for u, v in zip(U.reshape(-1), V.reshape(-1)):
        try:
            local_geometry(surface.ambient, eval_jet(surface, (u, v), 3, mode=mode, h=h))
        except GeometryError as exc:
            return f"(u={u:.6g}, v={v:.6g}): {exc}"
    return "unknown point"


def evaluate_grid(surface: SurfaceSpec, grid: GridSpec, jets: str = "analytic", h: float = DEFAULT_H):
    """Residual record over the grid plus the isothermal verdict and the sampled mesh."""
    U, V = grid.mesh(surface.domain)
    try:
        jet = eval_jet(surface, (U, V), 3, mode=jets, h=h)
        lg = local_geometry(surface.ambient, jet)
    except GeometryError as exc:
        where = _locate_failure(surface, U, V, jets, h)
        raise type(exc)(f"{exc} at {where}") from exc
    chart = isothermal_chart(lg.shape.metric, ISO_TOL[jets])
    rec = residual_record(lg, chart)
    if surface.ambient.is_sphere:
        rec.extras["sphere_gap"] = sphere_gap(surface.ambient, jet)
    return rec, chart, lg, (U, V)


def grid_table(rec: ResidualRecord, U, V) -> dict:
    table = {"u": U, "v": V}
    for name in BASE_COLUMNS:
        table[name] = np.asarray(getattr(rec, name))
    if rec.Q is not None:
        table["Q_re"] = rec.Q.real
        table["Q_im"] = rec.Q.imag
    for name in sorted(rec.extras):
        table[name] = np.asarray(rec.extras[name])
    return table


def analyze(
    surface: SurfaceSpec,
    grid: GridSpec | None = None,
    tol: ToleranceSet | None = None,
    jets: str = "analytic",
    h: float = DEFAULT_H,
) -> AnalysisReport:
    """Evaluate every residual on the grid and aggregate.

    A grid flag is set only if its pointwise condition holds at every sample.
    """
    grid = grid or GridSpec()
    tol = tol or ToleranceSet.profile("fd" if jets == "fd" else "strict")
    rec, chart, _, (U, V) = evaluate_grid(surface, grid, jets, h)
    table = grid_table(rec, U, V)
    fields = {name: _field_stats(vals, U, V) for name, vals in table.items() if name not in ("u", "v")}
    flags = sorted(f for f in FLAGS if fields[FLAG_FIELDS[f]]["max"] <= tol.zero)
    grid_info = {
        "nu": grid.nu,
        "nv": grid.nv,
        "margin": grid.margin,
        "spacing": list(grid.spacing(surface.domain)),
        "jets": jets,
        "isothermal": chart.verified,
    }
    if jets == "fd":
        grid_info["h"] = h
    tolerances = {
        "profile": tol.name,
        "zero": tol.zero,
        "nonzero": tol.nonzero,
        "flag_fields": dict(FLAG_FIELDS),
    }
    return AnalysisReport(surface.describe(), grid_info, tolerances, fields, flags, __version__, table)


# ---------------------------------------------------------------------------
# serialisation


def _fmt(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    return format(x, ".17g")


def _encode(obj) -> str:
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = sorted(obj.items())
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON with sorted keys and 17-significant-digit floats (byte-stable)."""
    return _encode(obj) + "\n"


def report_json(report: AnalysisReport) -> str:
    return dumps(report.to_dict())


def report_csv(report: AnalysisReport) -> str:
    table = report.table
    if table is None:
        raise ValueError("report has no per-point table")
    cols = list(table)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    flat = [np.asarray(table[c]).reshape(-1) for c in cols]
    for row in zip(*flat):
        w.writerow([_fmt(float(x)) for x in row])
    return buf.getvalue()


def emit_report(report: AnalysisReport, fmt: str, path) -> None:
    if fmt == "json":
        text = report_json(report)
    elif fmt == "csv":
        text = report_csv(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def emit_field_csv(report: AnalysisReport, field_name: str, path) -> None:
    """Three-column u,v,value table for heatmaps."""
    values = report.column(field_name).reshape(-1)
    U, V = report.table["u"].reshape(-1), report.table["v"].reshape(-1)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["u", "v", "value"])
        for u, v, x in zip(U, V, values):
            w.writerow([_fmt(float(u)), _fmt(float(v)), _fmt(float(x))])


def load_report(path) -> AnalysisReport:
    with open(path, encoding="utf-8") as fh:
        return AnalysisReport.from_dict(json.load(fh))
