"""Adaptive explicit Runge-Kutta integration of compartment models.

The workhorse is an embedded Dormand-Prince 4(5) pair with a PI step-size
controller and the standard 4th-order continuous extension for dense output
(a cubic Hermite interpolant was tried first but its O(h^4) interpolation
error dominates the solution error at loose tolerances). It stands in for
the stiff solver used to generate the original datasets; all registry
systems are non-stiff at their published parameters. A fixed-step classic
RK4 driver is kept alongside as an independent accuracy oracle.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .models import CompartmentModel

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "IntegrationError",
    "BlowUpError",
    "integrate",
    "final_state",
    "rk4_fixed",
]


class IntegrationError(RuntimeError):
    """Integration could not reach the end of the grid.

    ``t_last``/``y_last`` hold the last successfully accepted state.
    """

    def __init__(self, message, t_last=None, y_last=None):
        super().__init__(message)
        self.t_last = t_last
        self.y_last = y_last


class BlowUpError(IntegrationError):
    """State became non-finite during integration."""


@dataclass
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_steps: int = 10_000_000
    initial_step: float | None = None

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")


@dataclass
class Trajectory:
    """Time grid plus per-compartment values; the universal data record."""

    times: np.ndarray
    states: np.ndarray
    model_name: str = ""

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.shape[0] != self.times.shape[0]:
            raise ValueError("states row count must match times length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def column(self, k: int) -> np.ndarray:
        return self.states[:, k]

    def to_csv(self, path, compartments=None) -> None:
        """Write `t,<compartments...>` rows at full double precision."""
        ncomp = self.states.shape[1]
        if compartments is None:
            compartments = [f"y{k}" for k in range(ncomp)]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", *compartments])
            for t, row in zip(self.times, self.states):
                writer.writerow([f"{t:.17g}", *(f"{v:.17g}" for v in row)])

    @classmethod
    def from_csv(cls, path, model_name="") -> "Trajectory":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            next(reader)  # header
            rows = [[float(v) for v in row] for row in reader if row]
        data = np.asarray(rows, dtype=float)
        return cls(times=data[:, 0], states=data[:, 1:], model_name=model_name)


# Dormand-Prince 4(5) tableau.
_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0)
_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0),
)
_B5 = (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0)
# b5 - b4: local error estimate coefficients
_E = (
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)

# 4th-order continuous extension: y(t0 + theta*h) = y0 + h * K^T P [theta..theta^4]
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608,
     -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933,
     87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304,
     -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883,
     -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
# PI controller exponents for a 4th-order error estimate
_K_I = 0.7 / 5.0
_K_P = 0.4 / 5.0


def _initial_step(f, t0, y0, p, rel_tol, abs_tol, t_end):
    """Conventional starting-step heuristic from the scaled rhs magnitude."""
    f0 = np.asarray(f(t0, y0, p), dtype=float)
    scale = abs_tol + rel_tol * np.abs(y0)
    d0 = math.sqrt(float(np.mean((y0 / scale) ** 2)))
    d1 = math.sqrt(float(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = np.asarray(f(t0 + h0, y1, p), dtype=float)
    d2 = math.sqrt(float(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, t_end - t0)


def _dense_eval(t, t0, h, y0, stages):
    """Dormand-Prince continuous extension inside one accepted step."""
    theta = (t - t0) / h
    tv = np.array([theta, theta**2, theta**3, theta**4])
    coef = _P @ tv
    out = y0.copy()
    for c, k in zip(coef, stages):
        if c != 0.0:
            out += h * c * k
    return out


def integrate(model: CompartmentModel, p: dict, y0, grid, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate ``model`` with parameters ``p`` and emit values on ``grid``.

    ``grid`` must be strictly increasing and start at the initial time of
    ``y0``. Values between accepted steps come from the continuous
    extension, so output points do not constrain step-size control.
    Deterministic for a fixed configuration.
    """
    cfg = cfg or IntegratorConfig()
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("grid must be nonempty")
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")

    f = model.rhs
    t = float(grid[0])
    t_end = float(grid[-1])
    y = np.asarray(y0, dtype=float)
    if y.shape[0] != len(model.compartments):
        raise ValueError("y0 length does not match model compartments")

    out = np.empty((grid.size, y.size))
    out[0] = y
    next_out = 1
    if next_out == grid.size:
        return Trajectory(times=grid, states=out, model_name=model.name)

    k = [np.zeros_like(y) for _ in range(7)]
    k[0] = np.asarray(f(t, y, p), dtype=float)
    h = cfg.initial_step or _initial_step(f, t, y, p, cfg.rel_tol, cfg.abs_tol, t_end)
    h = max(h, 1e-14)
    err_prev = 1.0
    steps = 0

    while t < t_end:
        if steps >= cfg.max_steps:
            raise IntegrationError(
                f"step budget {cfg.max_steps} exhausted at t={t:.6g}", t_last=t, y_last=y.copy()
            )
        steps += 1
        h = min(h, t_end - t)

        with np.errstate(over="ignore", invalid="ignore"):
            for i in range(1, 7):
                yi = y + h * sum(aij * k[j] for j, aij in enumerate(_A[i]))
                k[i] = np.asarray(f(t + _C[i] * h, yi, p), dtype=float)
            y_new = y + h * sum(b * k[i] for i, b in enumerate(_B5) if b != 0.0)
            err_vec = h * sum(e * k[i] for i, e in enumerate(_E) if e != 0.0)

        if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(err_vec))):
            raise BlowUpError(
                f"non-finite state at t={t:.6g}", t_last=t, y_last=y.copy()
            )

        scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))

        if err <= 1.0:
            t_new = t + h
            f_new = k[6]  # FSAL: stage 7 is f(t+h, y_new)
            while next_out < grid.size and grid[next_out] <= t_new + 1e-14 * max(1.0, abs(t_new)):
                tg = grid[next_out]
                if tg >= t_new:
                    out[next_out] = y_new
                else:
                    out[next_out] = _dense_eval(tg, t, h, y, k)
                next_out += 1
            err = max(err, 1e-10)
            factor = _SAFETY * err ** (-_K_I) * err_prev ** _K_P
            h *= min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
            err_prev = err
            t, y = t_new, y_new
            k[0] = f_new
        else:
            h *= min(1.0, max(_MIN_FACTOR, _SAFETY * err ** (-_K_I)))

    return Trajectory(times=grid, states=out, model_name=model.name)


def final_state(model, p, y0, t_end, cfg: IntegratorConfig | None = None) -> np.ndarray:
    """State at ``t_end`` starting from ``y0`` at time 0."""
    if t_end == 0.0:
        return np.asarray(y0, dtype=float)
    traj = integrate(model, p, y0, [0.0, t_end], cfg)
    return traj.states[-1]


def rk4_fixed(model, p, y0, grid, h: float = 1e-3) -> Trajectory:
    """Classic fixed-step RK4 between grid points; the accuracy oracle.

    Each grid interval is split into uniform substeps no longer than ``h``.
    Kept deliberately independent of the adaptive path above.
    """
    f = model.rhs
    grid = [float(tv) for tv in np.asarray(grid, dtype=float)]
    y = [float(v) for v in y0]
    n_comp = len(y)
    rows = [list(y)]
    rng_comp = range(n_comp)
    for t0, t1 in zip(grid[:-1], grid[1:]):
        span = t1 - t0
        n_sub = max(1, math.ceil(span / h - 1e-12))
        hh = span / n_sub
        half = hh / 2.0
        sixth = hh / 6.0
        t = t0
        for _ in range(n_sub):
            k1 = f(t, y, p)
            k2 = f(t + half, [y[i] + half * k1[i] for i in rng_comp], p)
            k3 = f(t + half, [y[i] + half * k2[i] for i in rng_comp], p)
            k4 = f(t + hh, [y[i] + hh * k3[i] for i in rng_comp], p)
            y = [
                y[i] + sixth * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])
                for i in rng_comp
            ]
            t += hh
        rows.append(list(y))
    return Trajectory(times=np.asarray(grid), states=np.asarray(rows), model_name=model.name)
