"""Registry of compartmental epidemic ODE systems.

Each entry couples the displayed equations of a published disease model with
its literature parameter table (value + search range as printed). Right-hand
sides are plain arithmetic over whatever scalar type is passed in (floats,
numpy arrays, or autodiff variables), so the same definitions serve the
integrator, the vectorized residual evaluation, and gradient checks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "ParamSpec",
    "CompartmentModel",
    "UnknownModelError",
    "NonFiniteInputError",
    "registry_get",
    "registry_names",
    "rhs_eval",
]


class UnknownModelError(KeyError):
    """Raised for a model name not present in the registry."""


class NonFiniteInputError(ValueError):
    """Raised when rhs evaluation receives NaN or infinite state/parameters."""


@dataclass(frozen=True)
class ParamSpec:
    """One model parameter: literature value, search range, and fit slot.

    ``search_lo``/``search_hi`` reproduce the published range (sorted when the
    source prints the pair in descending order). ``known`` marks parameters
    that are fixed rather than learnable, including table-only parameters
    that never appear in the displayed equations.
    """

    name: str
    true_value: float
    search_lo: float
    search_hi: float
    known: bool = False
    found: float | None = None

    def __post_init__(self):
        if not self.search_lo <= self.search_hi:
            raise ValueError(f"{self.name}: search_lo > search_hi")

    @property
    def range_violation(self) -> bool:
        """True when the printed range does not contain the printed value."""
        return not (self.search_lo <= self.true_value <= self.search_hi)


@dataclass(frozen=True)
class CompartmentModel:
    """A named ODE system with compartments, parameters, and rhs evaluator.

    ``rhs(t, y, p)`` maps time, per-compartment state, and a name->value
    parameter mapping to the per-compartment time derivatives. ``closed``
    flags systems whose rhs components sum to zero (conserved total).
    """

    name: str
    compartments: tuple[str, ...]
    params: tuple[ParamSpec, ...]
    rhs: Callable
    default_y0: tuple[float, ...]
    population: float | None = None
    horizon: float = 100.0
    closed: bool = False

    def param(self, name: str) -> ParamSpec:
        for spec in self.params:
            if spec.name == name:
                return spec
        raise KeyError(f"{self.name} has no parameter {name!r}")

    def param_names(self) -> list[str]:
        return [spec.name for spec in self.params]

    def true_params(self) -> dict[str, float]:
        return {spec.name: spec.true_value for spec in self.params}

    def learnable(self) -> list[ParamSpec]:
        return [spec for spec in self.params if not spec.known]

    def descriptor(self) -> dict:
        """JSON-serializable description (name, compartments, parameter table)."""
        return {
            "name": self.name,
            "compartments": list(self.compartments),
            "population": self.population,
            "horizon": self.horizon,
            "closed": self.closed,
            "default_y0": list(self.default_y0),
            "params": [
                {
                    "name": spec.name,
                    "true_value": spec.true_value,
                    "search_lo": spec.search_lo,
                    "search_hi": spec.search_hi,
                    "known": spec.known,
                    "range_violation": spec.range_violation,
                }
                for spec in self.params
            ],
        }

    def descriptor_json(self) -> str:
        return json.dumps(self.descriptor(), indent=2, sort_keys=True)


def rhs_eval(model: CompartmentModel, t: float, y: Sequence[float], p: dict) -> list:
    """Validated rhs evaluation: checks dimensions and finiteness of inputs.

    Pure and deterministic; the integrator and training loop call
    ``model.rhs`` directly and perform their own blow-up handling.
    """
    if len(y) != len(model.compartments):
        raise ValueError(
            f"state length {len(y)} != {len(model.compartments)} compartments"
        )
    vals = list(y) + [p[s.name] for s in model.params]
    arr = np.asarray(vals, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInputError(f"non-finite input to {model.name} rhs")
    return list(model.rhs(t, y, p))


# ---------------------------------------------------------------------------
# Right-hand sides, transcribed from the published system displays.
# Parameter tables keep the printed values and ranges; entries whose printed
# range excludes the printed value carry range_violation=True.
# ---------------------------------------------------------------------------


def _sir_rhs(t, y, p):
    S, I, R = y
    beta, alpha = p["beta"], p["alpha"]
    dS = -beta * S * I
    dI = beta * S * I - alpha * I
    dR = alpha * I
    return [dS, dI, dR]


def _make_sir():
    return CompartmentModel(
        name="sir",
        compartments=("S", "I", "R"),
        params=(
            ParamSpec("beta", 0.002, -0.004, 0.004),
            ParamSpec("alpha", 0.5, -1.0, 1.0),
        ),
        rhs=_sir_rhs,
        default_y0=(999.0, 1.0, 0.0),
        population=1000.0,
        horizon=100.0,
        closed=True,
    )


def _make_covid_sird():
    N = 1000.0

    def rhs(t, y, p):
        S, I, D, R = y
        alpha, beta, gamma = p["alpha"], p["beta"], p["gamma"]
        infections = (alpha / N) * S * I
        dS = -infections
        dI = infections - beta * I - gamma * I
        dD = gamma * I
        dR = beta * I
        return [dS, dI, dD, dR]

    return CompartmentModel(
        name="covid_sird",
        compartments=("S", "I", "D", "R"),
        params=(
            ParamSpec("alpha", 0.191, -1.0, 1.0),
            ParamSpec("beta", 0.05, -1.0, 1.0),
            ParamSpec("gamma", 0.0294, -1.0, 1.0),
        ),
        rhs=rhs,
        default_y0=(990.0, 10.0, 0.0, 0.0),
        population=N,
        horizon=500.0,
        closed=True,
    )


def _hiv_rhs(t, y, p):
    T, I, V = y
    dT = p["s"] - p["mu_T"] * T + p["r"] * T * (
        1.0 - (T + I) / p["T_max"] - p["k1"] * V * T
    )
    dI = p["k1p"] * V * T - p["mu_I"] * I
    dV = p["N"] * p["mu_b"] * I - p["k1"] * V * T - p["mu_V"] * V
    return [dT, dI, dV]


def _make_hiv():
    return CompartmentModel(
        name="hiv",
        compartments=("T", "I", "V"),
        params=(
            ParamSpec("s", 10.0, 9.9, 10.1),
            ParamSpec("mu_T", 0.02, 0.018, 0.022),
            ParamSpec("mu_I", 0.26, 0.255, 0.265),
            ParamSpec("mu_b", 0.24, 0.235, 0.245),
            # printed as (2.5, 2.3); stored sorted
            ParamSpec("mu_V", 2.4, 2.3, 2.5),
            ParamSpec("r", 0.03, 0.029, 0.031),
            ParamSpec("N", 250.0, 247.5, 252.5),
            ParamSpec("T_max", 1500.0, 1485.0, 1515.0),
            ParamSpec("k1", 2.4e-4, 2.3e-4, 2.6e-4),
            ParamSpec("k1p", 2.0e-4, 1.9e-4, 2.1e-4),
        ),
        rhs=_hiv_rhs,
        default_y0=(900.0, 50.0, 1000.0),
        horizon=25.0,
    )


def _smallpox_rhs(t, y, p):
    S, En, Ei, Ci, I, Q, U, V = y
    beta, phi, rho = p["beta"], p["phi"], p["rho"]
    chi1, chi2 = p["chi_1"], p["chi_2"]
    eps1, eps2 = p["eps_1"], p["eps_2"]
    alpha, gamma, theta = p["alpha"], p["gamma"], p["theta"]
    SI = S * I
    dS = chi1 * (1.0 - eps1) * Ci - beta * (phi + rho - phi * rho) * SI
    dEn = beta * phi * (1.0 - rho) * SI - alpha * En
    dEi = beta * phi * rho * SI - (chi1 * eps2 + alpha * (1.0 - eps2)) * Ei
    dCi = beta * rho * (1.0 - phi) * SI - chi1 * Ci
    dI = alpha * (1.0 - theta) * En - (theta + gamma) * I
    dQ = alpha * (1.0 - eps2) * Ei + theta * (alpha * En + I) - chi2 * Q
    dU = gamma * I + chi2 * Q
    dV = chi1 * (eps2 * Ei + eps1 * Ci)
    return [dS, dEn, dEi, dCi, dI, dQ, dU, dV]


def _make_smallpox():
    return CompartmentModel(
        name="smallpox",
        compartments=("S", "En", "Ei", "Ci", "I", "Q", "U", "V"),
        params=(
            ParamSpec("chi_1", 0.06, 0.054, 0.066),
            ParamSpec("chi_2", 0.04, 0.036, 0.044),
            ParamSpec("eps_1", 0.975, 0.86, 1.04),
            ParamSpec("eps_2", 0.3, 0.27, 0.33),
            ParamSpec("rho", 0.975, 0.86, 1.04),
            ParamSpec("theta", 0.95, 0.86, 1.04),
            ParamSpec("alpha", 0.068, 0.061, 0.075),
            ParamSpec("gamma", 0.11, 0.10, 0.12),
            # transmission rate and contact-tracing fraction appear in the
            # equations but not in the published table; fixed here
            ParamSpec("beta", 3.0e-3, 2.7e-3, 3.3e-3, known=True),
            ParamSpec("phi", 0.5, 0.45, 0.55, known=True),
        ),
        rhs=_smallpox_rhs,
        default_y0=(999950.0, 50.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        population=1.0e6,
        horizon=150.0,
    )


def _tuberculosis_rhs(t, y, p):
    S, L, I, T = y
    Ntot = S + L + I + T
    beta, betap, c, mu = p["beta"], p["beta_prime"], p["c"], p["mu"]
    dS = p["delta"] - beta * c * S * I / Ntot - mu * S
    dL = beta * c * S * I / Ntot - (mu + p["k"] + p["r_1"]) * L + betap * c * T / Ntot
    dI = p["k"] * L - (mu + p["d"]) * I - p["r_2"] * I
    dT = p["r_1"] * L + p["r_2"] * I - betap * c * T / Ntot - mu * T
    return [dS, dL, dI, dT]


def _make_tuberculosis():
    return CompartmentModel(
        name="tuberculosis",
        compartments=("S", "L", "I", "T"),
        params=(
            ParamSpec("delta", 500.0, 480.0, 520.0),
            ParamSpec("beta", 13.0, 9.0, 15.0),
            ParamSpec("c", 1.0, -1.0, 3.0),
            ParamSpec("mu", 0.143, 0.1, 0.3),
            ParamSpec("k", 0.5, 0.0, 1.0),
            ParamSpec("r_1", 2.0, 1.0, 3.0),
            ParamSpec("r_2", 1.0, -1.0, 3.0),
            ParamSpec("beta_prime", 13.0, 9.0, 15.0),
            ParamSpec("d", 0.0, -0.4, 0.4),
        ),
        rhs=_tuberculosis_rhs,
        default_y0=(3000.0, 0.0, 300.0, 0.0),
        horizon=20.0,
    )


def _pneumonia_rhs(t, y, p):
    S, V, C, I, R = y
    lam, eps = p["lambda"], p["epsilon"]
    mu, rho, eta = p["mu"], p["rho"], p["eta"]
    dS = (1.0 - p["p"]) * p["pi"] + p["phi"] * V + p["delta"] * R - (
        mu + lam + p["theta"]
    ) * S
    dV = p["p"] * p["pi"] + p["theta"] * S - (mu + eps * lam + p["phi"]) * V
    dC = rho * lam * S + rho * eps * lam * V + (1.0 - p["q"]) * eta * I - (
        mu + p["beta"] + p["chi"]
    ) * C
    dI = (1.0 - rho) * lam * S + (1.0 - rho) * eps * lam * V + p["chi"] * C - (
        mu + p["alpha"] + eta
    ) * I
    dR = p["beta"] * C + p["q"] * eta * I - (mu + p["delta"]) * R
    return [dS, dV, dC, dI, dR]


def _make_pneumonia():
    return CompartmentModel(
        name="pneumonia",
        compartments=("S", "V", "C", "I", "R"),
        params=(
            ParamSpec("pi", 0.01, 0.0099, 0.011),
            ParamSpec("lambda", 0.1, 0.099, 0.11),
            # k and tau are listed in the published table but never appear
            # in the displayed system; carried as fixed table-only entries
            ParamSpec("k", 0.5, 0.49, 0.51, known=True),
            ParamSpec("epsilon", 0.002, 0.001, 0.003),
            ParamSpec("tau", 0.89, 0.87, 0.91, known=True),
            ParamSpec("phi", 0.0025, 0.0023, 0.0027),
            ParamSpec("chi", 0.001, 0.0009, 0.0011),
            ParamSpec("p", 0.2, 0.19, 0.21),
            ParamSpec("theta", 0.008, 0.0075, 0.0085),
            ParamSpec("mu", 0.01, 0.009, 0.011),
            ParamSpec("alpha", 0.057, 0.056, 0.058),
            ParamSpec("rho", 0.05, 0.049, 0.051),
            ParamSpec("beta", 0.0115, 0.0105, 0.0125),
            ParamSpec("eta", 0.2, 0.19, 0.21),
            ParamSpec("q", 0.5, 0.49, 0.51),
            ParamSpec("delta", 0.1, 0.09, 0.11),
        ),
        rhs=_pneumonia_rhs,
        default_y0=(0.85, 0.05, 0.02, 0.05, 0.03),
        horizon=100.0,
    )


def _make_ebola():
    y0 = (999880.0, 80.0, 40.0, 0.0, 0.0, 0.0)
    N = float(sum(y0))

    def rhs(t, y, p):
        S, E, I, H, F, R = y
        force = (p["beta_1"] * S * I + p["beta_h"] * S * H + p["beta_f"] * S * F) / N
        th1, d1, d2 = p["theta_1"], p["delta_1"], p["delta_2"]
        gh, gi, gd = p["gamma_h"], p["gamma_i"], p["gamma_d"]
        gdh, gih, gf = p["gamma_dh"], p["gamma_ih"], p["gamma_f"]
        dS = -force
        dE = force - p["alpha"] * E
        dI = p["alpha"] * E - (
            gh * th1 + gi * (1.0 - th1) * (1.0 - d1) + gd * (1.0 - th1) * d1
        ) * I
        dH = gh * th1 * I - (gdh * d2 + gih * (1.0 - d2)) * H
        dF = gd * (1.0 - th1) * d1 * I + gdh * d2 * H - gf * F
        dR = gi * (1.0 - th1) * (1.0 - d1) * I + gih * (1.0 - d2) * H + gf * F
        return [dS, dE, dI, dH, dF, dR]

    return CompartmentModel(
        name="ebola",
        compartments=("S", "E", "I", "H", "F", "R"),
        params=(
            ParamSpec("beta_1", 3.532, 3.5, 3.56),
            ParamSpec("beta_h", 0.012, 0.011, 0.013),
            ParamSpec("beta_f", 0.462, 0.455, 0.465),
            ParamSpec("alpha", 1.0 / 12.0, 0.072, 0.088),
            ParamSpec("gamma_h", 1.0 / 4.2, 0.22, 0.28),
            ParamSpec("theta_1", 0.65, 0.643, 0.657),
            ParamSpec("gamma_i", 0.1, 0.099, 0.11),
            ParamSpec("delta_1", 0.47, 0.465, 0.475),
            # printed range (0.118, 0.122) excludes 1/8
            ParamSpec("gamma_d", 1.0 / 8.0, 0.118, 0.122),
            ParamSpec("delta_2", 0.42, 0.415, 0.425),
            ParamSpec("gamma_f", 0.5, 0.45, 0.55),
            ParamSpec("gamma_ih", 0.082, 0.081, 0.083),
            ParamSpec("gamma_dh", 0.07, 0.069, 0.071),
        ),
        rhs=rhs,
        default_y0=y0,
        population=N,
        horizon=30.0,
        closed=True,
    )


def _dengue_rhs(t, y, p):
    Sh, Eh, Ih, Rh, Sv, Ev, Iv = y
    dSh = p["pi_h"] - p["lambda_h"] * Sh - p["mu_h"] * Sh
    dEh = p["lambda_h"] * Sh - (p["sigma_h"] * p["mu_h"]) * Eh
    dIh = p["sigma_h"] * Eh - (p["tau_h"] + p["mu_h"] + p["delta_h"]) * Ih
    dRh = p["tau_h"] * Ih - p["mu_h"] * Rh
    dSv = p["pi_v"] - p["delta_v"] * Sv - p["mu_v"] * Sv
    dEv = p["delta_v"] * Sv - (p["sigma_v"] + p["mu_v"]) * Ev
    dIv = p["sigma_v"] * Ev - (p["mu_v"] + p["delta_v"]) * Iv
    return [dSh, dEh, dIh, dRh, dSv, dEv, dIv]


def _make_dengue():
    return CompartmentModel(
        name="dengue",
        compartments=("Sh", "Eh", "Ih", "Rh", "Sv", "Ev", "Iv"),
        params=(
            ParamSpec("pi_h", 10.0, 9.9, 10.1),
            ParamSpec("pi_v", 30.0, 29.7, 30.3),
            ParamSpec("lambda_h", 0.055, 0.054, 0.056),
            # listed in the table but absent from the displayed equations
            ParamSpec("lambda_v", 0.05, 0.049, 0.051, known=True),
            ParamSpec("delta_h", 0.99, 0.9, 1.1),
            ParamSpec("delta_v", 0.057, 0.056, 0.058),
            ParamSpec("mu_h", 0.0195, 0.0194, 0.0196),
            ParamSpec("mu_v", 0.016, 0.015, 0.017),
            ParamSpec("sigma_h", 0.53, 0.52, 0.54),
            ParamSpec("sigma_v", 0.2, 0.19, 0.21),
            ParamSpec("tau_h", 0.1, 0.05, 0.15),
        ),
        rhs=_dengue_rhs,
        default_y0=(100.0, 20.0, 10.0, 5.0, 300.0, 40.0, 30.0),
        horizon=100.0,
    )


def _anthrax_rhs(t, y, p):
    S, I, A, C = y
    live = S + I
    r, K, mu, tau, gamma = p["r"], p["K"], p["mu"], p["tau"], p["gamma"]
    dS = (
        r * live * (1.0 - live / K)
        - p["eta_a"] * A * S
        - p["eta_c"] * S * C
        - p["eta_i"] * S * I / live
        - mu * S
        + tau * I
    )
    dI = p["eta_a"] * A * S + p["eta_c"] * S * C + (
        p["eta_i"] * S * I / live - (gamma + mu + tau)
    ) * I
    dA = -p["sigma"] * A + p["beta"] * C
    dC = (gamma + mu) * I - p["delta"] * live * C - p["kappa"] * C
    return [dS, dI, dA, dC]


def _make_anthrax():
    return CompartmentModel(
        name="anthrax",
        compartments=("S", "I", "A", "C"),
        params=(
            ParamSpec("r", 1.0 / 300.0, 0.003, 0.0036),
            ParamSpec("mu", 1.0 / 600.0, 0.0014, 0.0018),
            # printed (0.99, 0.11); sorted range excludes 0.1
            ParamSpec("kappa", 0.1, 0.11, 0.99),
            ParamSpec("eta_a", 0.5, 0.49, 0.51),
            ParamSpec("eta_c", 0.1, 0.09, 0.11),
            # printed (0.09, 0.011); sorted range excludes 0.01
            ParamSpec("eta_i", 0.01, 0.011, 0.09),
            ParamSpec("tau", 0.1, 0.09, 0.11),
            ParamSpec("gamma", 1.0 / 7.0, 0.13, 0.15),
            # printed range (0.03, 0.07) excludes 1/64
            ParamSpec("delta", 1.0 / 64.0, 0.03, 0.07),
            ParamSpec("K", 100.0, 98.0, 102.0),
            # printed range (0.0018, 0.0022) excludes 0.02
            ParamSpec("beta", 0.02, 0.0018, 0.0022),
            ParamSpec("sigma", 0.1, 0.09, 0.11),
        ),
        rhs=_anthrax_rhs,
        default_y0=(50.0, 20.0, 0.2, 1.0),
        horizon=100.0,
    )


def _make_polio():
    Nc, Na = 0.5, 0.5
    N = Nc + Na

    def rhs(t, y, p):
        Sc, Sa, Ic, Ia, Rc, Ra = y
        mu, alpha = p["mu"], p["alpha"]
        lam_c = (p["beta_cc"] / Nc) * Ic + (p["beta_ca"] / Nc) * Ia
        lam_a = (p["beta_ac"] / Na) * Ic + (p["beta_aa"] / Na) * Ia
        dSc = mu * N - (alpha + mu + lam_c) * Sc
        dSa = alpha * Sc - (mu + lam_a) * Sa
        dIc = lam_c * Sc - (p["gamma_c"] + alpha + mu) * Ic
        dIa = lam_a * Sa - (p["gamma_a"] + mu) * Ia + alpha * Ic
        dRc = p["gamma_c"] * Ic - mu * Rc - alpha * Rc
        dRa = p["gamma_a"] * Ia - mu * Ra + alpha * Rc
        return [dSc, dSa, dIc, dIa, dRc, dRa]

    return CompartmentModel(
        name="polio",
        compartments=("Sc", "Sa", "Ic", "Ia", "Rc", "Ra"),
        params=(
            ParamSpec("mu", 0.02, 0.018, 0.022),
            ParamSpec("alpha", 0.5, 0.495, 0.505),
            ParamSpec("gamma_a", 18.0, 17.9, 18.1),
            ParamSpec("gamma_c", 36.0, 35.8, 36.2),
            ParamSpec("beta_aa", 40.0, 39.0, 41.0),
            ParamSpec("beta_cc", 90.0, 89.0, 91.0),
            ParamSpec("beta_ac", 0.0, -0.001, 0.001),
            ParamSpec("beta_ca", 0.0, -0.001, 0.001),
        ),
        rhs=rhs,
        default_y0=(0.45, 0.45, 0.02, 0.02, 0.03, 0.03),
        population=N,
        horizon=2.0,
        closed=True,
    )


def _make_measles():
    N = 1.0e6

    def rhs(t, y, p):
        S, E, I = y
        dS = p["mu"] * (N - S) - (p["beta"] * S * I) / N
        dE = (p["beta"] * S * I) / N - (p["mu"] * p["sigma"]) * E
        dI = p["sigma"] * E - (p["mu"] + p["gamma"]) * I
        return [dS, dE, dI]

    return CompartmentModel(
        name="measles",
        compartments=("S", "E", "I"),
        params=(
            ParamSpec("mu", 0.02, 0.01, 0.03),
            ParamSpec("beta", 0.28, 0.27, 0.37),
            ParamSpec("gamma", 100.0, 97.0, 103.0),
            ParamSpec("sigma", 35.84, 33.0, 37.0),
        ),
        rhs=rhs,
        default_y0=(5.0e5, 1.0e4, 1.0e3),
        population=N,
        horizon=1.0,
    )


def _make_zika():
    y0 = (9500.0, 200.0, 100.0, 50.0, 100.0, 50.0, 4500.0, 300.0, 200.0)
    Nh = float(sum(y0[:6]))
    Nv = float(sum(y0[6:]))

    def rhs(t, y, p):
        Sh, Eh, Ih1, Ih2, Ah, Rh, Sv, Ev, Iv = y
        vector_flux = p["a"] * p["b"] * (Iv / Nh) * Sh
        human_flux = p["beta"] * ((p["kappa"] * Eh + Ih1 + p["tau"] * Ih2) / Nh) * Sh
        theta = p["theta"]
        dSh = -vector_flux - human_flux
        dEh = theta * (-vector_flux - human_flux) - p["v_h"] * Eh
        dIh1 = p["v_h"] * Eh - p["gamma_h1"] * Ih1
        dIh2 = p["gamma_h1"] * Ih1 - p["gamma_h2"] * Ih2
        dAh = (1.0 - theta) * (vector_flux - human_flux) - p["gamma_h"] * Ah
        dRh = p["gamma_h2"] * Ih2 + p["gamma_h"] * Ah
        bite = p["a"] * p["c"] * ((p["eta"] * Eh + Ih1) / Nh)
        dSv = p["mu_v"] * Nv - bite * Sv - p["mu_v"] * Sv
        dEv = bite - (p["v_v"] + p["mu_v"]) * Ev
        dIv = p["v_v"] * Ev - p["mu_v"] * Iv
        return [dSh, dEh, dIh1, dIh2, dAh, dRh, dSv, dEv, dIv]

    return CompartmentModel(
        name="zika",
        compartments=("Sh", "Eh", "Ih1", "Ih2", "Ah", "Rh", "Sv", "Ev", "Iv"),
        params=(
            ParamSpec("a", 0.5, 0.49, 0.51),
            ParamSpec("b", 0.4, 0.39, 0.41),
            ParamSpec("c", 0.5, 0.49, 0.51),
            ParamSpec("eta", 0.1, 0.09, 0.11),
            ParamSpec("beta", 0.05, 0.0495, 0.0505),
            ParamSpec("kappa", 0.6, 0.594, 0.606),
            ParamSpec("tau", 0.3, 0.27, 0.33),
            ParamSpec("theta", 18.0, 17.8, 18.2),
            # listed in the table but absent from the displayed equations
            ParamSpec("m", 5.0, 4.5, 5.5, known=True),
            ParamSpec("v_h", 1.0 / 5.0, 0.198, 0.202),
            ParamSpec("v_v", 10.0, 9.9, 10.1),
            ParamSpec("gamma_h1", 1.0 / 5.0, 0.18, 0.22),
            # printed range (0.045, 0.055) excludes 1/64
            ParamSpec("gamma_h2", 1.0 / 64.0, 0.045, 0.055),
            # printed range (0.139, 0.141) excludes 1/7
            ParamSpec("gamma_h", 1.0 / 7.0, 0.139, 0.141),
            ParamSpec("mu_v", 1.0 / 14.0, 0.063, 0.077),
        ),
        rhs=rhs,
        default_y0=y0,
        population=Nh,
        horizon=2.0,
    )


_BUILDERS = {
    "sir": _make_sir,
    "covid_sird": _make_covid_sird,
    "hiv": _make_hiv,
    "smallpox": _make_smallpox,
    "tuberculosis": _make_tuberculosis,
    "pneumonia": _make_pneumonia,
    "ebola": _make_ebola,
    "dengue": _make_dengue,
    "anthrax": _make_anthrax,
    "polio": _make_polio,
    "measles": _make_measles,
    "zika": _make_zika,
}

_CACHE: dict[str, CompartmentModel] = {}

#: Disease entries used by the cross-disease summary (everything but plain SIR).
DISEASE_NAMES = (
    "covid_sird",
    "hiv",
    "smallpox",
    "tuberculosis",
    "pneumonia",
    "ebola",
    "dengue",
    "anthrax",
    "polio",
    "measles",
    "zika",
)


def registry_names() -> list[str]:
    return sorted(_BUILDERS)


def registry_get(name: str) -> CompartmentModel:
    """Look up a model by name; raises UnknownModelError listing valid names."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise UnknownModelError(
            f"unknown model {name!r}; valid names: {', '.join(registry_names())}"
        ) from None
    if name not in _CACHE:
        _CACHE[name] = builder()
    return _CACHE[name]
