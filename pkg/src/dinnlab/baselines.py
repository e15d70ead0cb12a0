"""Classical least-squares parameter estimation baselines.

Two solver cores -- a Nelder-Mead simplex over a scalar objective and a
Gauss-Newton iteration (optionally Levenberg-damped) over a residual vector,
both with box bounds -- plus thin wrappers that bind them to the standard
fitting problem: minimize the sum of squared differences between an
integrated trajectory and the observations, in normalized units and
mask-aware. Everything is a deterministic function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .integrate import IntegrationError, IntegratorConfig, integrate
from .models import CompartmentModel

__all__ = [
    "LsqProblem",
    "BaselineResult",
    "BadStartError",
    "StallError",
    "NelderMeadConfig",
    "GaussNewtonConfig",
    "objective",
    "residual_vector",
    "minimize_simplex",
    "least_squares_gn",
    "nelder_mead",
    "gauss_newton",
]


class BadStartError(ValueError):
    """Objective non-finite at the starting point."""


class StallError(RuntimeError):
    """Normal equations stayed singular at maximum damping."""

    def __init__(self, message, x_best, sse_best, iterations):
        super().__init__(message)
        self.x_best = x_best
        self.sse_best = sse_best
        self.iterations = iterations


@dataclass
class LsqProblem:
    """Least-squares fit of selected model parameters to a dataset."""

    model: CompartmentModel
    ds: Dataset
    free_params: tuple
    x0: np.ndarray
    bounds: tuple  # per-param (lo, hi)
    y0: np.ndarray | None = None
    fixed: dict = field(default_factory=dict)
    integrator: IntegratorConfig | None = None

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        if len(self.free_params) != self.x0.size or len(self.bounds) != self.x0.size:
            raise ValueError("free_params, x0, bounds must have equal length")
        for x, (lo, hi) in zip(self.x0, self.bounds):
            if not lo <= x <= hi:
                raise ValueError("x0 must lie within bounds")
        if self.y0 is None:
            self.y0 = self.ds.observations[0].copy()
        if self.fixed is None:
            self.fixed = {}

    def params_at(self, x) -> dict:
        p = dict(self.fixed)
        p.update(zip(self.free_params, x))
        return p


@dataclass
class BaselineResult:
    x: np.ndarray
    sse: float
    iterations: int
    n_evals: int
    converged: bool
    method: str
    history: list = field(default_factory=list)  # best objective per iteration

    def found_params(self, prob: LsqProblem) -> dict:
        p = prob.params_at(self.x)
        return {k: float(v) for k, v in p.items()}


def residual_vector(prob: LsqProblem, x) -> np.ndarray:
    """Normalized residuals over observed entries; +inf block on ODE failure."""
    p = prob.params_at(x)
    try:
        traj = integrate(prob.model, p, prob.y0, prob.ds.times, prob.integrator)
    except IntegrationError:
        n = int(prob.ds.mask.sum()) * prob.ds.times.size + int(prob.ds.init_only.sum())
        return np.full(max(n, 1), np.inf)
    res = []
    for k in range(prob.ds.n_compartments):
        diff = (traj.states[:, k] - prob.ds.observations[:, k]) / prob.ds.scale[k]
        if prob.ds.mask[k]:
            res.append(diff)
        elif prob.ds.init_only[k]:
            res.append(diff[:1])
    return np.concatenate(res) if res else np.empty(0)


def objective(prob: LsqProblem, x) -> float:
    r = residual_vector(prob, x)
    return float(r @ r) if np.all(np.isfinite(r)) else math.inf


def _project(x, bounds):
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    return np.minimum(np.maximum(x, lo), hi)


@dataclass
class NelderMeadConfig:
    max_iter: int = 4000
    diameter_tol: float = 1e-10
    spread_tol: float = 1e-12
    initial_step_frac: float = 0.05  # of the bound width, per coordinate


def minimize_simplex(f, x0, bounds, cfg: NelderMeadConfig | None = None) -> BaselineResult:
    """Standard simplex search (reflect 1, expand 2, contract/shrink 0.5).

    Bounds are enforced by projecting every candidate vertex. Stops when the
    simplex diameter or the objective spread collapses.
    """
    cfg = cfg or NelderMeadConfig()
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    f0 = f(x0)
    if not math.isfinite(f0):
        raise BadStartError("objective is non-finite at x0")

    simplex = [x0.copy()]
    for j in range(n):
        step = cfg.initial_step_frac * (bounds[j][1] - bounds[j][0])
        if step == 0.0:
            step = 0.05 * max(1.0, abs(x0[j]))
        x = x0.copy()
        x[j] += step
        simplex.append(_project(x, bounds))
    values = [f0] + [f(x) for x in simplex[1:]]
    evals = n + 1
    iterations = 0
    history = []

    for iterations in range(1, cfg.max_iter + 1):
        order = np.argsort(values, kind="stable")
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        history.append(values[0])

        diameter = max(np.max(np.abs(x - simplex[0])) for x in simplex[1:])
        if diameter < cfg.diameter_tol or values[-1] - values[0] < cfg.spread_tol:
            break

        centroid = np.mean(simplex[:-1], axis=0)
        worst = simplex[-1]

        def trial(coef):
            nonlocal evals
            x = _project(centroid + coef * (centroid - worst), bounds)
            evals += 1
            return x, f(x)

        xr, fr = trial(1.0)  # reflection
        if fr < values[0]:
            xe, fe = trial(2.0)  # expansion
            simplex[-1], values[-1] = (xe, fe) if fe < fr else (xr, fr)
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            # outside contraction when the reflection beat the worst vertex,
            # inside contraction otherwise
            xc, fc = trial(-0.5 if fr >= values[-1] else 0.5)
            if fc < min(fr, values[-1]):
                simplex[-1], values[-1] = xc, fc
            else:  # shrink toward the best vertex
                for j in range(1, n + 1):
                    simplex[j] = _project(
                        simplex[0] + 0.5 * (simplex[j] - simplex[0]), bounds
                    )
                    values[j] = f(simplex[j])
                    evals += 1

    best = int(np.argmin(values))
    return BaselineResult(
        x=simplex[best].copy(),
        sse=float(values[best]),
        iterations=iterations,
        n_evals=evals,
        converged=iterations < cfg.max_iter,
        method="nelder_mead",
        history=history,
    )


@dataclass
class GaussNewtonConfig:
    max_iter: int = 200
    grad_tol: float = 1e-10
    step_tol: float = 1e-12
    fd_step: float = 1e-6
    damped: bool = True
    lambda0: float | None = None  # None: 1e-3 * max diag(JtJ)
    lambda_max: float = 1e12


def _fd_jacobian(rfun, x, r0, bounds, fd_step):
    """Forward finite differences on parameters, stepping inside the bounds."""
    J = np.empty((r0.size, x.size))
    for j in range(x.size):
        step = fd_step * max(1.0, abs(x[j]))
        if x[j] + step > bounds[j][1]:
            step = -step
        xp = x.copy()
        xp[j] += step
        J[:, j] = (rfun(xp) - r0) / step
    return J


def least_squares_gn(rfun, x0, bounds, cfg: GaussNewtonConfig | None = None) -> BaselineResult:
    """Gauss-Newton on a residual vector, finite-difference Jacobian.

    With ``damped=True`` (default) a Levenberg-style lambda*I term is added
    to the normal equations and adapted by the gain ratio, so the objective
    never increases across accepted steps. ``damped=False`` is the plain
    method: undamped normal equations, unconditional steps.
    """
    cfg = cfg or GaussNewtonConfig()
    x = np.asarray(x0, dtype=float)
    r = rfun(x)
    if not np.all(np.isfinite(r)):
        raise BadStartError("objective is non-finite at x0")
    f = float(r @ r)
    evals = 1
    lam = cfg.lambda0
    nu = 2.0
    best_x, best_f = x.copy(), f
    iterations = 0
    history = []

    for iterations in range(1, cfg.max_iter + 1):
        history.append(best_f)
        J = _fd_jacobian(rfun, x, r, bounds, cfg.fd_step)
        evals += x.size
        if not np.all(np.isfinite(J)):
            raise StallError("Jacobian non-finite", best_x, best_f, iterations)
        JtJ = J.T @ J
        g = J.T @ r
        if np.max(np.abs(g)) < cfg.grad_tol:
            break
        if cfg.damped and lam is None:
            lam = 1e-3 * max(float(np.max(np.diag(JtJ))), 1e-12)

        step = None
        while True:
            A = JtJ + ((lam if cfg.damped else 0.0)) * np.eye(x.size)
            try:
                delta = np.linalg.solve(A, -g)
                if not np.all(np.isfinite(delta)):
                    raise np.linalg.LinAlgError("non-finite step")
            except np.linalg.LinAlgError:
                if not cfg.damped:
                    raise StallError(
                        "singular normal equations", best_x, best_f, iterations
                    ) from None
                lam *= nu
                nu *= 2.0
                if lam > cfg.lambda_max:
                    raise StallError(
                        "singular normal equations at max damping",
                        best_x, best_f, iterations,
                    ) from None
                continue
            x_new = _project(x + delta, bounds)
            step = x_new - x
            r_new = rfun(x_new)
            evals += 1
            f_new = float(r_new @ r_new) if np.all(np.isfinite(r_new)) else math.inf
            if not cfg.damped:
                accepted = True
            else:
                predicted = 0.5 * float(step @ (lam * step - g))
                rho = (f - f_new) / (2.0 * predicted) if predicted > 0 else -1.0
                accepted = rho > 0
            if accepted:
                x, r, f = x_new, r_new, f_new
                if f < best_f:
                    best_x, best_f = x.copy(), f
                if cfg.damped:
                    lam *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
                    nu = 2.0
                break
            lam *= nu
            nu *= 2.0
            if lam > cfg.lambda_max:
                return BaselineResult(
                    x=best_x, sse=best_f, iterations=iterations, n_evals=evals,
                    converged=False, method="gauss_newton", history=history,
                )
        if np.linalg.norm(step) < cfg.step_tol * (np.linalg.norm(x) + cfg.step_tol):
            break
        if not math.isfinite(f):
            raise StallError("objective diverged", best_x, best_f, iterations)

    return BaselineResult(
        x=best_x,
        sse=best_f,
        iterations=iterations,
        n_evals=evals,
        converged=iterations < cfg.max_iter,
        method="gauss_newton",
        history=history,
    )


def nelder_mead(prob: LsqProblem, cfg: NelderMeadConfig | None = None) -> BaselineResult:
    """Simplex fit of the trajectory-mismatch objective."""
    return minimize_simplex(lambda x: objective(prob, x), prob.x0, prob.bounds, cfg)


def gauss_newton(prob: LsqProblem, cfg: GaussNewtonConfig | None = None) -> BaselineResult:
    """(Damped) Gauss-Newton fit of the trajectory-mismatch residuals."""
    return least_squares_gn(lambda x: residual_vector(prob, x), prob.x0, prob.bounds, cfg)
