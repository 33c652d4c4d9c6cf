"""Ambient space forms and the tangent/normal split of an immersed surface.

Spheres are handled extrinsically: S^n(r) sits in R^(n+1) and its Levi-Civita
connection is the flat derivative followed by removal of the radial part.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import GeometryError, NotImmersionError
from .jets import Jet

RANK_TOL = 1e-10


@dataclass(frozen=True)
class AmbientSpace:
    kind: Literal["euclidean", "sphere"]
    dim: int
    radius: float | None = None

    def __post_init__(self):
        if self.kind not in ("euclidean", "sphere"):
            raise GeometryError(f"unsupported ambient kind {self.kind!r}")
        if not 2 <= self.dim <= 4:
            raise GeometryError("ambient dimension must be 2, 3 or 4")
        if self.kind == "sphere":
            if self.radius is None or not self.radius > 0:
                raise GeometryError("sphere radius must be positive")
        elif self.radius is not None:
            raise GeometryError("euclidean space takes no radius")

    @classmethod
    def euclidean(cls, dim: int) -> "AmbientSpace":
        return cls("euclidean", dim)

    @classmethod
    def sphere(cls, dim: int, radius: float = 1.0) -> "AmbientSpace":
        return cls("sphere", dim, float(radius))

    @property
    def is_sphere(self) -> bool:
        return self.kind == "sphere"

    @property
    def curvature(self) -> float:
        return 1.0 / self.radius**2 if self.is_sphere else 0.0

    @property
    def embedding_dim(self) -> int:
        return self.dim + 1 if self.is_sphere else self.dim

    @property
    def codim(self) -> int:
        return self.dim - 2

    def describe(self) -> dict:
        out = {"kind": self.kind, "dim": self.dim, "curvature": self.curvature}
        if self.is_sphere:
            out["radius"] = self.radius
        return out


def sphere_gap(space: AmbientSpace, jet: Jet) -> np.ndarray:
    """| |X| - r | for sphere ambients, zero otherwise."""
    if not space.is_sphere:
        return np.zeros(jet.value.shape[:-1])
    return np.abs(np.linalg.norm(jet.value, axis=-1) - space.radius)


def _check_dim(space: AmbientSpace, jet: Jet):
    if jet.dim != space.embedding_dim:
        raise GeometryError(
            f"map has {jet.dim} components but the ambient embeds in R^{space.embedding_dim}"
        )


def normal_projector(space: AmbientSpace, jet: Jet) -> np.ndarray:
    """Orthogonal projector of R^N onto the normal space of M inside N."""
    _check_dim(space, jet)
    X1 = jet.d1
    g = np.einsum("...ni,...nj->...ij", X1, X1)
    det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] ** 2
    scale = g[..., 0, 0] * g[..., 1, 1]
    if np.any(det <= RANK_TOL * np.maximum(scale, 1e-300)):
        raise NotImmersionError("d1 is rank deficient: not an immersion at some point")
    ginv = np.linalg.inv(g)
    N = jet.dim
    P = np.eye(N) - np.einsum("...ai,...ij,...bj->...ab", X1, ginv, X1)
    if space.is_sphere:
        X = jet.value
        P = P - np.einsum("...a,...b->...ab", X, X) / space.radius**2
    return P


def _pivot_column(P: np.ndarray) -> np.ndarray:
    """Unit vector along the column of P with the largest norm (batched)."""
    norms = np.linalg.norm(P, axis=-2)
    idx = np.argmax(norms, axis=-1)
    col = np.take_along_axis(P, idx[..., None, None], axis=-1)[..., 0]
    return col / np.linalg.norm(col, axis=-1, keepdims=True)


def _orient(space: AmbientSpace, jet: Jet, leading: list, last: np.ndarray) -> np.ndarray:
    """Flip ``last`` so that det[(X/r), X_u, X_v, *leading, last] > 0."""
    cols = []
    if space.is_sphere:
        cols.append(jet.value / space.radius)
    cols += [jet.d1[..., 0], jet.d1[..., 1], *leading, last]
    det = np.linalg.det(np.stack(cols, axis=-1))
    return np.where((det < 0)[..., None], -last, last)


def tangent_normal_split(space: AmbientSpace, jet: Jet, mean_curvature: np.ndarray | None = None):
    """Tangent basis and an orthonormal normal frame at each point.

    Returns ``(tangent, frame)`` with ``tangent`` of shape (..., 2, N) (the
    rows are X_u, X_v) and ``frame`` of shape (..., m, N), m = codimension.

    Codimension 1: the unit normal making (X/r,) X_u, X_v, eta positively
    oriented.  Codimension 2: E3 = H/|H| when ``mean_curvature`` is given and
    nonzero, E4 completing an oriented frame; otherwise pivoted Gram-Schmidt
    on the normal projector.
    """
    if jet.order < 1:
        raise GeometryError("tangent_normal_split needs a jet of order >= 1")
    P = normal_projector(space, jet)
    tangent = np.swapaxes(jet.d1, -1, -2)
    m = space.codim
    if m == 0:
        return tangent, np.zeros(P.shape[:-2] + (0, jet.dim))
    if m == 1:
        eta = _orient(space, jet, [], _pivot_column(P))
        return tangent, eta[..., None, :]

    frame = []
    Q = P
    if mean_curvature is not None:
        H = np.asarray(mean_curvature, float)
        hn = np.linalg.norm(H, axis=-1, keepdims=True)
        first = np.where(hn > RANK_TOL, H / np.where(hn > RANK_TOL, hn, 1.0), _pivot_column(P))
    else:
        first = _pivot_column(P)
    for a in range(m):
        e = first if a == 0 else _pivot_column(Q)
        if a == m - 1:
            e = _orient(space, jet, frame, e)
        frame.append(e)
        Q = Q - np.einsum("...a,...b->...ab", e, e)
    return tangent, np.stack(frame, axis=-2)


def ambient_hessian(space: AmbientSpace, jet: Jet) -> np.ndarray:
    """Ambient covariant Hessian of the immersion, shape (..., N, 2, 2).

    Euclidean: the flat second partials.  Sphere: d2 + (g_ij / r^2) X, i.e.
    the flat Hessian with its radial part removed.
    """
    if jet.order < 2:
        raise GeometryError("ambient_hessian needs a jet of order >= 2")
    _check_dim(space, jet)
    if not space.is_sphere:
        return jet.d2
    g = np.einsum("...ni,...nj->...ij", jet.d1, jet.d1)
    return jet.d2 + np.einsum("...ij,...n->...nij", g, jet.value) / space.radius**2


def ambient_third(space: AmbientSpace, jet: Jet) -> np.ndarray:
    """Chart derivative of :func:`ambient_hessian`, shape (..., N, 2, 2, 2); last index differentiates."""
    if jet.order < 3:
        raise GeometryError("ambient_third needs a jet of order 3")
    _check_dim(space, jet)
    if not space.is_sphere:
        return jet.d3
    X, X1, X2 = jet.value, jet.d1, jet.d2
    g = np.einsum("...ni,...nj->...ij", X1, X1)
    dg = np.einsum("...nik,...nj->...ijk", X2, X1)
    dg = dg + np.swapaxes(dg, -3, -2)
    r2 = space.radius**2
    return (
        jet.d3
        + np.einsum("...ijk,...n->...nijk", dg, X) / r2
        + np.einsum("...ij,...nk->...nijk", g, X1) / r2
    )
