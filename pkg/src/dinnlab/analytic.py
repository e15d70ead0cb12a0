"""Closed-form SIR epidemic quantities and crude rate estimators.

The final epidemic size solves the implicit relation
``S_inf = S0 * exp(-(beta/alpha) * (S0 + I0 - S_inf))`` and the peak infected
count has an explicit expression attained where ``S = alpha/beta``. Both are
used as independent checks on the trained networks and the integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "SirSummary",
    "NumericFailure",
    "final_size",
    "i_max",
    "ratio_from_final_size",
    "crude_rates",
    "summarize",
]

_MAX_ITER = 10_000
_DAMPING = 0.5


class NumericFailure(ArithmeticError):
    """Iteration failed to converge to the requested tolerance."""


@dataclass(frozen=True)
class SirSummary:
    s_infinity: float
    i_max: float
    ratio_beta_alpha: float


def final_size(S0: float, I0: float, beta: float, alpha: float) -> float:
    """Limiting susceptible count of an SIR epidemic.

    Damped fixed-point iteration seeded at ``S0`` (so ``I0 = 0`` returns
    ``S0`` exactly), with a bisection fallback for the rare non-contractive
    case. Converges to ``|delta| < 1e-12 * S0``.
    """
    if S0 <= 0:
        raise ValueError("S0 must be positive")
    if I0 < 0:
        raise ValueError("I0 must be nonnegative")
    if alpha <= 0 or beta <= 0:
        raise ValueError("rates must be positive")

    rho = beta / alpha
    total = S0 + I0

    def g(x):
        return S0 * math.exp(-rho * (total - x))

    x = float(S0)
    tol = 1e-12 * S0
    for _ in range(_MAX_ITER):
        x_new = (1.0 - _DAMPING) * x + _DAMPING * g(x)
        if abs(x_new - x) < tol:
            x = x_new
            break
        x = x_new
    else:
        x = _bisect_final_size(g, S0, tol)

    if abs(x - g(x)) > 1e-10 * S0:
        raise NumericFailure(
            f"final size iteration stalled: residual {abs(x - g(x)):.3e}"
        )
    return x


def _bisect_final_size(g, S0, tol):
    lo, hi = 1e-300, S0
    flo = lo - g(lo)
    for _ in range(600):
        mid = 0.5 * (lo + hi)
        fmid = mid - g(mid)
        if abs(hi - lo) < tol:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    raise NumericFailure("bisection failed to bracket the final size")


def i_max(S0: float, I0: float, beta: float, alpha: float) -> float:
    """Peak infected count, valid in the epidemic regime ``S0 > alpha/beta``."""
    if alpha <= 0 or beta <= 0:
        raise ValueError("rates must be positive")
    rho = alpha / beta
    if S0 < rho:
        raise ValueError(
            f"S0={S0} <= alpha/beta={rho}: infections decline monotonically"
        )
    return -rho + rho * math.log(rho) + I0 + S0 - rho * math.log(S0)


def ratio_from_final_size(S0: float, S_inf: float, N: float) -> float:
    """Recover beta/alpha from the observed final size."""
    if not 0 < S_inf < S0 <= N:
        raise ValueError("need 0 < S_inf < S0 <= N")
    return math.log(S0 / S_inf) / (N - S_inf)


def crude_rates(n: float, S0: float, I0: float, d: float) -> tuple[float, float]:
    """Back-of-envelope (beta, alpha) from early counts.

    ``n`` new infections per day from one case gives ``beta = n/(S0*I0)``;
    isolation within ``d`` days gives ``alpha = 1/d``.
    """
    if n <= 0 or d <= 0:
        raise ValueError("n and d must be positive")
    if S0 <= 0 or I0 <= 0:
        raise ValueError("S0 and I0 must be positive")
    return n / (S0 * I0), 1.0 / d


def summarize(S0: float, I0: float, beta: float, alpha: float) -> SirSummary:
    """Bundle the closed-form quantities for one SIR configuration."""
    s_inf = final_size(S0, I0, beta, alpha)
    peak = i_max(S0, I0, beta, alpha) if S0 > alpha / beta else I0
    return SirSummary(s_infinity=s_inf, i_max=peak, ratio_beta_alpha=beta / alpha)
