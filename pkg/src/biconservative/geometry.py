"""Pointwise extrinsic geometry of a surface in a space form.

All functions are vectorised over leading batch axes of the input jets.
Index conventions: chart indices i, j, k in {0, 1} = {u, v}; ambient index n.
``dg[..., i, j, k]`` is the k-th chart derivative of g_ij and
``christoffel[..., m, i, j]`` is Gamma^m_ij.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .ambient import (
    AmbientSpace,
    ambient_hessian,
    ambient_third,
    normal_projector,
    tangent_normal_split,
)
from .errors import GeometryError, NotImmersionError, NotIsothermalError
from .jets import Jet, eval_jet

FLAGS = ("minimal", "cmc_local", "pmc", "pseudo_umbilic", "biconservative", "q_holomorphic")


@dataclass(frozen=True)
class Metric2:
    g11: np.ndarray
    g12: np.ndarray
    g22: np.ndarray
    det: np.ndarray
    inverse: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return np.stack([np.stack([self.g11, self.g12], -1), np.stack([self.g12, self.g22], -1)], -2)


@dataclass(frozen=True)
class ShapeData:
    """Second-order extrinsic data at one or many points.

    ``B`` holds the second fundamental form in the normal frame,
    shape (..., m, 2, 2); ``B_ambient`` the same as ambient vectors,
    shape (..., N, 2, 2).  ``A_H`` and the ``A_per_normal`` entries are
    mixed (1,1) tensors: row = upper index.
    """

    metric: Metric2
    normal_frame: np.ndarray
    B: np.ndarray
    B_ambient: np.ndarray
    H: np.ndarray
    mean_curv_norm: np.ndarray
    A_H: np.ndarray
    A_per_normal: np.ndarray
    curvature: float = 0.0


@dataclass(frozen=True)
class S2Tensor:
    components: np.ndarray
    trace_g: np.ndarray


@dataclass(frozen=True)
class IsothermalChart:
    verified: bool
    lam: np.ndarray
    tol: float = 1e-8


@dataclass
class ResidualRecord:
    """Residual fields at one point or over a grid (arrays share the batch shape)."""

    absH: np.ndarray
    divS2: np.ndarray
    divS2_norm: np.ndarray
    W: np.ndarray
    W_norm: np.ndarray
    codazzi: np.ndarray
    pmc: np.ndarray
    pseudoUmb: np.ndarray
    gradH2: np.ndarray
    gradH2_norm: np.ndarray
    gaussK: np.ndarray
    route_gap: np.ndarray
    Q: np.ndarray | None = None
    extras: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ToleranceSet:
    name: str = "strict"
    zero: float = 1e-6
    nonzero_factor: float = 10.0

    @property
    def nonzero(self) -> float:
        return self.zero * self.nonzero_factor

    @classmethod
    def profile(cls, name: str) -> "ToleranceSet":
        if name == "strict":
            return cls("strict", 1e-6)
        if name == "fd":
            return cls("fd", 1e-3)
        raise ValueError(f"unknown tolerance profile {name!r}")


# ---------------------------------------------------------------------------
# second order


def first_form(jet: Jet) -> Metric2:
    if jet.order < 1:
        raise GeometryError("first_form needs a jet of order >= 1")
    g = np.einsum("...ni,...nj->...ij", jet.d1, jet.d1)
    det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] ** 2
    if np.any(det <= 0) or np.any(g[..., 0, 0] <= 0):
        raise NotImmersionError("degenerate first fundamental form")
    inv = np.stack(
        [np.stack([g[..., 1, 1], -g[..., 0, 1]], -1), np.stack([-g[..., 0, 1], g[..., 0, 0]], -1)], -2
    ) / det[..., None, None]
    return Metric2(g[..., 0, 0], g[..., 0, 1], g[..., 1, 1], det, inv)


def second_form(space: AmbientSpace, jet: Jet) -> ShapeData:
    if jet.order < 2:
        raise GeometryError("second_form needs a jet of order >= 2")
    metric = first_form(jet)
    ginv = metric.inverse
    P = normal_projector(space, jet)
    B_amb = np.einsum("...ab,...bij->...aij", P, ambient_hessian(space, jet))
    H = 0.5 * np.einsum("...ij,...nij->...n", ginv, B_amb)
    _, frame = tangent_normal_split(space, jet, mean_curvature=H)
    B = np.einsum("...an,...nij->...aij", frame, B_amb)
    A_per_normal = np.einsum("...ik,...akj->...aij", ginv, B)
    hB = np.einsum("...nij,...n->...ij", B_amb, H)
    A_H = ginv @ hB
    return ShapeData(
        metric=metric,
        normal_frame=frame,
        B=B,
        B_ambient=B_amb,
        H=H,
        mean_curv_norm=np.linalg.norm(H, axis=-1),
        A_H=A_H,
        A_per_normal=A_per_normal,
        curvature=space.curvature,
    )


def gauss_curvature(space: AmbientSpace, sd: ShapeData) -> np.ndarray:
    B = sd.B_ambient
    inner = np.einsum("...n,...n->...", B[..., 0, 0], B[..., 1, 1]) - np.einsum(
        "...n,...n->...", B[..., 0, 1], B[..., 0, 1]
    )
    return space.curvature + inner / sd.metric.det


def stress_bienergy(sd: ShapeData) -> S2Tensor:
    g = sd.metric.matrix
    h2 = sd.mean_curv_norm**2
    S = -2 * h2[..., None, None] * g + 4 * g @ sd.A_H
    S = 0.5 * (S + np.swapaxes(S, -1, -2))
    return S2Tensor(S, 4 * h2)


def pseudo_umbilicity(sd: ShapeData) -> np.ndarray:
    """g-norm of A_H - |H|^2 Id (vanishes exactly at pseudo-umbilical points)."""
    M = sd.A_H - (sd.mean_curv_norm**2)[..., None, None] * np.eye(2)
    return np.sqrt(np.maximum(np.einsum("...ij,...ji->...", M, M), 0.0))


def covector_norm(metric: Metric2, w: np.ndarray) -> np.ndarray:
    return np.sqrt(np.maximum(np.einsum("...i,...ij,...j->...", w, metric.inverse, w), 0.0))


def orthonormal_frame(metric: Metric2) -> np.ndarray:
    """Chart components E[..., i, a] of a g-orthonormal basis e_a (Gram-Schmidt from d_u)."""
    s11 = np.sqrt(metric.g11)
    e1 = np.stack([1 / s11, np.zeros_like(s11)], -1)
    w = np.stack([-metric.g12 / metric.g11, np.ones_like(s11)], -1)
    e2 = w / np.sqrt(metric.det / metric.g11)[..., None]
    return np.stack([e1, e2], -1)


# ---------------------------------------------------------------------------
# third order


@dataclass(frozen=True)
class LocalGeometry:
    """Everything the residuals need at a point: second-order data plus derivatives."""

    shape: ShapeData
    s2: S2Tensor
    dg: np.ndarray
    christoffel: np.ndarray
    dH: np.ndarray  # (..., N, 2) chart derivatives of H
    perp_dH: np.ndarray  # (..., N, 2) normal connection of H
    dH2: np.ndarray  # (..., 2)
    nabla_S2: np.ndarray  # (..., 2, 2, 2), [k, i, j] = (nabla_k S2)_ij
    gaussK: np.ndarray


def local_geometry(space: AmbientSpace, jet: Jet) -> LocalGeometry:
    if jet.order < 3:
        raise GeometryError("third-order quantities need a jet of order 3")
    sd = second_form(space, jet)
    s2 = stress_bienergy(sd)
    X, X1, X2 = jet.value, jet.d1, jet.d2
    ginv = sd.metric.inverse
    H = sd.H
    Y = ambient_hessian(space, jet)
    Y3 = ambient_third(space, jet)

    dg = np.einsum("...nik,...nj->...ijk", X2, X1)
    dg = dg + np.swapaxes(dg, -3, -2)
    low = 0.5 * (
        np.einsum("...jli->...lij", dg) + np.einsum("...ilj->...lij", dg) - np.einsum("...ijl->...lij", dg)
    )
    gamma = np.einsum("...ml,...lij->...mij", ginv, low)
    dginv = -np.einsum("...ai,...ijk,...jb->...abk", ginv, dg, ginv)

    # H = P h with h = (1/2) g^ij Y_ij; differentiate both factors
    P = normal_projector(space, jet)
    h = 0.5 * np.einsum("...ij,...nij->...n", ginv, Y)
    dh = 0.5 * (np.einsum("...ijk,...nij->...nk", dginv, Y) + np.einsum("...ij,...nijk->...nk", ginv, Y3))
    # tangent projector T = X1 g^-1 X1^T
    t1 = np.einsum("...aik,...ij,...bj->...abk", X2, ginv, X1)
    dT = t1 + np.swapaxes(t1, -3, -2) + np.einsum("...ai,...ijk,...bj->...abk", X1, dginv, X1)
    dP = -dT
    if space.is_sphere:
        xs = np.einsum("...ak,...b->...abk", X1, X) / space.radius**2
        dP = dP - xs - np.swapaxes(xs, -3, -2)
    dH = np.einsum("...abk,...b->...ak", dP, h) + np.einsum("...ab,...bk->...ak", P, dh)
    perp_dH = np.einsum("...ab,...bk->...ak", P, dH)
    dH2 = 2 * np.einsum("...n,...nk->...k", H, dH)

    g = sd.metric.matrix
    h2 = sd.mean_curv_norm**2
    S = s2.components
    dS = (
        -2 * np.einsum("...k,...ij->...ijk", dH2, g)
        - 2 * h2[..., None, None, None] * dg
        + 4 * (np.einsum("...nijk,...n->...ijk", Y3, H) + np.einsum("...nij,...nk->...ijk", Y, dH))
    )
    nabla = (
        np.einsum("...ijk->...kij", dS)
        - np.einsum("...mki,...mj->...kij", gamma, S)
        - np.einsum("...mkj,...im->...kij", gamma, S)
    )
    return LocalGeometry(
        shape=sd,
        s2=s2,
        dg=dg,
        christoffel=gamma,
        dH=dH,
        perp_dH=perp_dH,
        dH2=dH2,
        nabla_S2=nabla,
        gaussK=gauss_curvature(space, sd),
    )


def div_S2_from(lg: LocalGeometry, method: Literal["covariant", "spaceform"] = "covariant") -> np.ndarray:
    """Div S2 as a covector (..., 2) from precomputed local geometry."""
    ginv = lg.shape.metric.inverse
    if method == "covariant":
        return np.einsum("...ki,...kij->...j", ginv, lg.nabla_S2)
    if method == "spaceform":
        # (1/2) Div S2 = 2 trace A_{perp-nabla H}(.) + grad |H|^2
        trace_term = np.einsum("...ik,...nkj,...ni->...j", ginv, lg.shape.B_ambient, lg.perp_dH)
        return 2 * (2 * trace_term + lg.dH2)
    raise ValueError(f"unknown method {method!r}")


def holomorphy_from(lg: LocalGeometry) -> np.ndarray:
    """W = Div S2 - (1/2) d(trace S2); trace S2 = 4|H|^2."""
    return div_S2_from(lg) - 2 * lg.dH2


def codazzi_from(lg: LocalGeometry, nabla_T: np.ndarray | None = None) -> np.ndarray:
    """max |(nabla_X T)(Y,Z) - (nabla_Y T)(X,Z)| over a g-orthonormal basis."""
    C = lg.nabla_S2 if nabla_T is None else nabla_T
    E = orthonormal_frame(lg.shape.metric)
    Co = np.einsum("...ka,...ib,...jc,...kij->...abc", E, E, E, C)
    diff = Co - np.swapaxes(Co, -3, -2)
    return np.max(np.abs(diff), axis=(-3, -2, -1))


def pmc_from(lg: LocalGeometry) -> np.ndarray:
    """g-norm of the normal-bundle derivative of H."""
    G = np.einsum("...ij,...ni,...nj->...", lg.shape.metric.inverse, lg.perp_dH, lg.perp_dH)
    return np.sqrt(np.maximum(G, 0.0))


def codim_one_data(lg: LocalGeometry) -> dict:
    """f = <H, eta>, grad f and A(grad f) (lowered covectors) in codimension one."""
    sd = lg.shape
    if sd.normal_frame.shape[-2] != 1:
        raise GeometryError("codimension-one quantities need a hypersurface of the ambient")
    eta = sd.normal_frame[..., 0, :]
    f = np.einsum("...n,...n->...", sd.H, eta)
    df = np.einsum("...nk,...n->...k", lg.dH, eta)
    ginv = sd.metric.inverse
    grad_f = np.einsum("...ij,...j->...i", ginv, df)
    A = sd.A_per_normal[..., 0, :, :]
    a_grad = np.einsum("...ij,...j->...i", A, grad_f)
    a_grad_low = np.einsum("...ij,...j->...i", sd.metric.matrix, a_grad)
    return {
        "f": f,
        "df": df,
        "gradf_norm": covector_norm(sd.metric, df),
        "AgradF": a_grad_low,
        "AgradF_norm": covector_norm(sd.metric, a_grad_low),
    }


# ---------------------------------------------------------------------------
# Hopf function


def isothermal_chart(metric: Metric2, tol: float = 1e-8) -> IsothermalChart:
    g11 = metric.g11
    ok = bool(np.all(np.abs(g11 - metric.g22) <= tol * g11) and np.all(np.abs(metric.g12) <= tol * g11))
    lam = np.sqrt(0.5 * (metric.g11 + metric.g22))
    return IsothermalChart(ok, lam, tol)


def hopf_Q(sd: ShapeData, chart: IsothermalChart) -> np.ndarray:
    """Q = <B(d_z, d_z), H> in an isothermal chart (complex, batched)."""
    if not chart.verified:
        raise NotIsothermalError("Q is only defined here in a verified isothermal chart")
    hB = np.einsum("...nij,...n->...ij", sd.B_ambient, sd.H)
    return 0.25 * (hB[..., 0, 0] - hB[..., 1, 1] - 2j * hB[..., 0, 1])


def hopf_from_s2(s2: S2Tensor) -> np.ndarray:
    """S2(d_z, d_z) / 4, the same number as :func:`hopf_Q` in isothermal charts."""
    S = s2.components
    return 0.0625 * (S[..., 0, 0] - S[..., 1, 1] - 2j * S[..., 0, 1])


_D1_4 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def dbar(field_grid: np.ndarray, spacing) -> np.ndarray:
    """(1/2)(d_x + i d_y) of a gridded field by fourth-order central differences.

    Axis 0 of the grid is x (= u), axis 1 is y (= v).  The two outermost rows
    and columns have no centred stencil and are returned as NaN.
    """
    F = np.asarray(field_grid)
    if F.shape[0] < 5 or F.shape[1] < 5:
        raise GeometryError("grid too coarse: need at least 5 points per direction")
    hx, hy = spacing
    out = np.full(F.shape, np.nan + 0j, dtype=complex)
    nx, ny = F.shape[:2]
    fx = sum(w * F[2 + s : nx - 2 + s, 2 : ny - 2] for w, s in zip(_D1_4, range(-2, 3))) / hx
    fy = sum(w * F[2 : nx - 2, 2 + s : ny - 2 + s] for w, s in zip(_D1_4, range(-2, 3))) / hy
    out[2 : nx - 2, 2 : ny - 2] = 0.5 * (fx + 1j * fy)
    return out


def dbar_Q(q_grid: np.ndarray, chart: IsothermalChart, spacing) -> np.ndarray:
    """d-bar of the Hopf function sampled on a uniform isothermal grid."""
    if not chart.verified:
        raise NotIsothermalError("d-bar needs a verified isothermal chart")
    return dbar(q_grid, spacing)


# ---------------------------------------------------------------------------
# pointwise API on surfaces


def _point_geometry(space, surface, p, mode="auto"):
    return local_geometry(space, eval_jet(surface, p, 3, mode=mode))


def div_S2(space: AmbientSpace, surface, p, method: str = "covariant", mode: str = "auto") -> np.ndarray:
    return div_S2_from(_point_geometry(space, surface, p, mode), method)


def holomorphy_residual(space: AmbientSpace, surface, p, mode: str = "auto") -> np.ndarray:
    return holomorphy_from(_point_geometry(space, surface, p, mode))


def codazzi_residual(space: AmbientSpace, surface, p, T: str = "S2", mode: str = "auto") -> np.ndarray:
    if T != "S2":
        raise NotImplementedError("only T = S2 is supported")
    return codazzi_from(_point_geometry(space, surface, p, mode))


def pmc_residual(space: AmbientSpace, surface, p, mode: str = "auto") -> np.ndarray:
    return pmc_from(_point_geometry(space, surface, p, mode))


def residual_record(lg: LocalGeometry, chart: IsothermalChart | None = None) -> ResidualRecord:
    sd = lg.shape
    div = div_S2_from(lg, "covariant")
    div_sf = div_S2_from(lg, "spaceform")
    W = div - 2 * lg.dH2
    rec = ResidualRecord(
        absH=sd.mean_curv_norm,
        divS2=div,
        divS2_norm=covector_norm(sd.metric, div),
        W=W,
        W_norm=covector_norm(sd.metric, W),
        codazzi=codazzi_from(lg),
        pmc=pmc_from(lg),
        pseudoUmb=pseudo_umbilicity(sd),
        gradH2=lg.dH2,
        gradH2_norm=covector_norm(sd.metric, lg.dH2),
        gaussK=lg.gaussK,
        route_gap=covector_norm(sd.metric, div - div_sf),
    )
    if chart is not None and chart.verified:
        rec.Q = hopf_Q(sd, chart)
    codim = sd.normal_frame.shape[-2]
    if codim == 1:
        c1 = codim_one_data(lg)
        rec.extras.update(f=c1["f"], gradf_norm=c1["gradf_norm"], AgradF_norm=c1["AgradF_norm"])
    elif codim == 2:
        # trace of A_4 with E3 along H; meaningless where H vanishes
        rec.extras["traceA4"] = np.abs(np.trace(sd.A_per_normal[..., 1, :, :], axis1=-2, axis2=-1))
    return rec


def classify_point(rec: ResidualRecord, tol: ToleranceSet) -> set[str]:
    """Flags of a single-point record."""
    z = tol.zero
    checks = {
        "minimal": rec.absH,
        "cmc_local": rec.gradH2_norm,
        "pmc": rec.pmc,
        "pseudo_umbilic": rec.pseudoUmb,
        "biconservative": rec.divS2_norm,
        "q_holomorphic": rec.W_norm,
    }
    return {name for name, val in checks.items() if bool(np.all(np.asarray(val) <= z))}
