"""Space curves with prescribed curvature and torsion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import BPoly

from .errors import ConstraintError


def _rhs(k, tau, u, y):
    T, N, B = y[3:6], y[6:9], y[9:12]
    t = tau(u)
    return np.concatenate([T, k * N, -k * T + t * B, -t * N])


def _reorthonormalize(y):
    T = y[3:6] / np.linalg.norm(y[3:6])
    N = y[6:9] - np.dot(y[6:9], T) * T
    N /= np.linalg.norm(N)
    return np.concatenate([y[:3], T, N, np.cross(T, N)])


@dataclass(frozen=True, eq=False)
class CurveSpec:
    """Arc-length curve in R^3 sampled with its Frenet frame.

    ``curve_jet(u)`` returns gamma and its first three derivatives.  The unit
    tangent is a piecewise quintic Hermite interpolant matched at every node to
    the ODE-exact values T, kN and k(-kT + tau B); gamma is its antiderivative
    (C^3).  Interpolating T instead of gamma keeps the step-to-step integration
    noise out of the third derivative.
    """

    k: float
    tau: Callable[[np.ndarray], np.ndarray]
    u: np.ndarray
    position: np.ndarray
    T: np.ndarray
    N: np.ndarray
    B: np.ndarray
    interpolant: BPoly
    tangent: BPoly

    @property
    def u_range(self) -> tuple[float, float]:
        return float(self.u[0]), float(self.u[-1])

    def curve_jet(self, u) -> list[np.ndarray]:
        u = np.asarray(u, dtype=float)
        t = self.tangent
        return [np.asarray(self.interpolant(u)), np.asarray(t(u)), np.asarray(t(u, 1)), np.asarray(t(u, 2))]

    def curvature(self, u) -> np.ndarray:
        """|gamma''| of the interpolant."""
        return np.linalg.norm(self.curve_jet(u)[2], axis=-1)

    def torsion(self, u) -> np.ndarray:
        _, d1, d2, d3 = self.curve_jet(u)
        c = np.cross(d1, d2)
        return np.einsum("...i,...i->...", c, d3) / np.einsum("...i,...i->...", c, c)

    @property
    def torsion_free(self) -> bool:
        return bool(np.all(np.abs(self.tau(self.u)) <= 1e-12))


def integrate_frenet_curve(
    k: float,
    tau: Callable | float,
    u_range: tuple[float, float] = (0.0, 2 * np.pi),
    steps: int = 2000,
) -> CurveSpec:
    """Integrate T' = kN, N' = -kT + tau B, B' = -tau N, gamma' = T with RK4.

    The frame is re-orthonormalised after every step.  Initial data:
    gamma = 0 and (T, N, B) = standard basis.
    """
    if not k > 0:
        raise ConstraintError("curvature k must be positive")
    if steps < 100:
        raise ConstraintError("need at least 100 steps")
    if not callable(tau):
        tau_c = float(tau)
        tau = lambda u, _t=tau_c: np.full(np.shape(u), _t) if np.ndim(u) else _t
    u0, u1 = map(float, u_range)
    if not u1 > u0:
        raise ConstraintError("empty curve parameter range")
    grid = np.linspace(u0, u1, steps + 1)
    du = (u1 - u0) / steps
    y = np.concatenate([np.zeros(3), np.eye(3).ravel()])
    states = np.empty((steps + 1, 12))
    states[0] = y
    for n in range(steps):
        s = grid[n]
        k1 = _rhs(k, tau, s, y)
        k2 = _rhs(k, tau, s + du / 2, y + du / 2 * k1)
        k3 = _rhs(k, tau, s + du / 2, y + du / 2 * k2)
        k4 = _rhs(k, tau, s + du, y + du * k3)
        y = _reorthonormalize(y + du / 6 * (k1 + 2 * k2 + 2 * k3 + k4))
        states[n + 1] = y

    pos, T, N, B = states[:, 0:3], states[:, 3:6], states[:, 6:9], states[:, 9:12]
    taus = np.array([tau(s) for s in grid], dtype=float)
    third = k * (-k * T + taus[:, None] * B)
    tangent = BPoly.from_derivatives(grid, np.stack([T, k * N, third], axis=1))
    interp = tangent.antiderivative()
    return CurveSpec(float(k), tau, grid, pos, T, N, B, interp, tangent)
