"""Least-squares recovery of family parameters from a residual field.

The residual vector stacks, for every grid point, the selected covector in
a g-orthonormal frame, so its squared length is the sum of squared g-norms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Mapping

import numpy as np

from .analysis import GridSpec
from .errors import ConvergenceError, GeometryError
from .gallery import make_surface, resolve_family
from .geometry import div_S2_from, holomorphy_from, local_geometry, orthonormal_frame, pmc_from
from .jets import eval_jet

Objective = Literal["divS2", "W", "pmc", "combined"]
OBJECTIVES = ("divS2", "W", "pmc", "combined")


@dataclass(frozen=True)
class OptimizerConfig:
    max_iter: int = 50
    step_tol: float = 1e-10
    grad_tol: float = 1e-14
    objective_tol: float = 1e-24
    damping_init: float = 1e-3
    damping_max: float = 1e10
    fd_step: float = 1e-7


@dataclass(frozen=True)
class FitProblem:
    family: str
    free_params: tuple[str, ...]
    fixed_params: Mapping[str, float]
    objective: Objective = "W"
    grid: GridSpec = GridSpec(16, 16)
    optimizer: OptimizerConfig = OptimizerConfig()
    domain: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", resolve_family(self.family))
        object.__setattr__(self, "free_params", tuple(self.free_params))
        if not self.free_params:
            raise ValueError("a fit needs at least one free parameter")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        clash = set(self.free_params) & set(self.fixed_params)
        if clash:
            raise ValueError(f"parameters both free and fixed: {sorted(clash)}")


@dataclass
class FitReport:
    iterations: int
    objective: float
    optimality: float
    converged: bool
    message: str
    initial_objective: float
    verified_objective: float | None = None
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "objective": self.objective,
            "optimality": self.optimality,
            "converged": self.converged,
            "message": self.message,
            "initial_objective": self.initial_objective,
            "verified_objective": self.verified_objective,
            "history": list(self.history),
        }


def _surface(problem: FitProblem, params: Mapping[str, float]):
    full = dict(problem.fixed_params)
    full.update(params)
    return make_surface(problem.family, full, problem.domain, enforce_constraints=False)


def residual_vector(problem: FitProblem, params: Mapping[str, float], grid: GridSpec | None = None) -> np.ndarray:
    """Per-point residual components (orthonormal-frame) concatenated in grid order."""
    s = _surface(problem, params)
    U, V = (grid or problem.grid).mesh(s.domain)
    lg = local_geometry(s.ambient, eval_jet(s, (U, V), 3, mode="analytic"))
    E = orthonormal_frame(lg.shape.metric)

    def frame(w):
        return np.einsum("...ia,...i->...a", E, w).reshape(-1)

    parts = []
    if problem.objective in ("divS2", "combined"):
        parts.append(frame(div_S2_from(lg)))
    if problem.objective in ("W", "combined"):
        parts.append(frame(holomorphy_from(lg)))
    if problem.objective == "pmc":
        parts.append(pmc_from(lg).reshape(-1))
    return np.concatenate(parts)


def objective_value(problem: FitProblem, params: Mapping[str, float], grid: GridSpec | None = None) -> float:
    """Mean over the grid of the squared g-norm of the selected residual."""
    r = residual_vector(problem, params, grid)
    g = grid or problem.grid
    return float(np.dot(r, r) / (g.nu * g.nv))


def _jacobian(fun, x, r0, cfg, names):
    J = np.empty((r0.size, x.size))
    for j in range(x.size):
        step = cfg.fd_step * max(1.0, abs(x[j]))
        for sign in (1.0, -1.0):
            xp = x.copy()
            xp[j] += sign * step
            try:
                rp = fun(xp)
            except GeometryError:
                continue
            J[:, j] = (rp - r0) / (sign * step)
            break
        else:
            raise ConvergenceError(f"parameter {names[j]!r} cannot be perturbed inside the admissible set")
    return J


def levenberg_marquardt(fun, x0, cfg: OptimizerConfig = OptimizerConfig(), n_points: int = 1, names=None):
    """Minimise |fun(x)|^2 with Marquardt-scaled damping and a forward-difference Jacobian.

    ``fun`` may raise :class:`GeometryError` for inadmissible x; such trial
    steps count as rejections.  Objectives in the report are |r|^2 / n_points.
    """
    x = np.asarray(x0, dtype=float).copy()
    names = names or [f"x{j}" for j in range(x.size)]
    r = np.asarray(fun(x), dtype=float)
    cost = float(r @ r)
    initial = cost / n_points
    mu = cfg.damping_init
    history = [initial]
    message = ""
    converged = False
    it = 0
    grad = np.zeros_like(x)

    def report(conv, msg):
        return FitReport(it, cost / n_points, float(np.max(np.abs(grad), initial=0.0)), conv, msg, initial, history=history)

    while True:
        if cost / n_points <= cfg.objective_tol:
            converged, message = True, "objective below tolerance"
            break
        J = _jacobian(fun, x, r, cfg, names)
        grad = J.T @ r
        if np.max(np.abs(grad)) <= cfg.grad_tol:
            converged, message = True, "first-order optimality reached"
            break
        if it >= cfg.max_iter:
            break
        it += 1
        A = J.T @ J
        scale = np.maximum(np.diag(A), 1e-30)
        while True:
            try:
                delta = np.linalg.solve(A + mu * np.diag(scale), -grad)
                trial = x + delta
                r_new = np.asarray(fun(trial), dtype=float)
                cost_new = float(r_new @ r_new)
            except (GeometryError, np.linalg.LinAlgError):
                cost_new = np.inf
            if cost_new < cost:
                mu = max(mu / 3.0, 1e-12)
                break
            mu *= 10.0
            if mu > cfg.damping_max:
                break
        if mu > cfg.damping_max:
            # no decrease even for a vanishing step: x is stationary up to noise
            if np.isfinite(cost_new) and np.linalg.norm(delta) <= cfg.step_tol * (np.linalg.norm(x) + 1.0):
                converged, message = True, "no further decrease (stationary)"
                break
            rep = report(False, "diverged: no decrease at maximal damping")
            raise ConvergenceError(rep.message, rep)
        x, r, cost = trial, r_new, cost_new
        history.append(cost / n_points)
        if np.linalg.norm(delta) <= cfg.step_tol * (np.linalg.norm(x) + 1.0):
            converged, message = True, "step below tolerance"
            break

    rep = report(converged, message or "iteration cap reached")
    if not converged:
        raise ConvergenceError(rep.message, rep)
    return x, rep


def fit(problem: FitProblem, init: Mapping[str, float], verify_grid: GridSpec | None = GridSpec(64, 64)):
    """Fit the free parameters of ``problem`` starting from ``init``.

    Returns ``(params, report)`` with the free parameters only.  Raises
    :class:`ConvergenceError` on divergence or at the iteration cap.
    """
    names = list(problem.free_params)
    missing = set(names) - set(init)
    if missing:
        raise ValueError(f"missing initial values for {sorted(missing)}")
    x0 = [float(init[n]) for n in names]

    def fun(x):
        return residual_vector(problem, dict(zip(names, x)))

    x, report = levenberg_marquardt(fun, x0, problem.optimizer, problem.grid.nu * problem.grid.nv, names)
    params = {n: float(v) for n, v in zip(names, x)}
    if verify_grid is not None:
        report.verified_objective = objective_value(problem, params, verify_grid)
    return params, report
