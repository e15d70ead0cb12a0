import math

import numpy as np
import pytest

from dinnlab.analytic import (
    SirSummary,
    crude_rates,
    final_size,
    i_max,
    ratio_from_final_size,
    summarize,
)
from dinnlab.integrate import integrate
from dinnlab.models import registry_get, rhs_eval


def bisect_final_size(S0, I0, rho, iters=200):
    """Independent oracle: bisection on f(x) = x - S0*exp(-rho*(S0+I0-x))."""
    f = lambda x: x - S0 * math.exp(-rho * (S0 + I0 - x))
    lo, hi = 1e-30, S0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if (f(mid) > 0) == (f(lo) > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_no_epidemic_limit_returns_s0_exactly():
    assert final_size(999.0, 0.0, 0.002, 0.5) == 999.0


def test_final_size_matches_bisection_oracle():
    # bisection oracle gives 202.84590040263384 for S0=999, I0=1, beta/alpha=0.002
    got = final_size(999.0, 1.0, 2.0, 1000.0)
    assert got == pytest.approx(202.84590040263384, rel=1e-10)
    assert got == pytest.approx(bisect_final_size(999.0, 1.0, 0.002), rel=1e-10)


def test_final_size_residual_property():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        S0 = rng.uniform(100.0, 1e4)
        I0 = rng.uniform(0.0, 10.0)
        r0 = rng.uniform(1.2, 8.0)  # basic reproduction-like number
        rho = r0 / S0
        alpha = rng.uniform(0.05, 1.0)
        beta = rho * alpha
        s_inf = final_size(S0, I0, beta, alpha)
        residual = abs(s_inf - S0 * math.exp(-rho * (S0 + I0 - s_inf)))
        assert residual < 1e-10 * S0


def test_final_size_agrees_with_long_integration():
    m = registry_get("sir")
    beta, alpha = 0.002, 0.5
    traj = integrate(m, {"beta": beta, "alpha": alpha}, (999.0, 1.0, 0.0), [0.0, 1e4])
    s_end = traj.states[-1, 0]
    assert s_end == pytest.approx(final_size(999.0, 1.0, beta, alpha), rel=1e-4)


def test_final_size_input_validation():
    with pytest.raises(ValueError):
        final_size(0.0, 1.0, 0.002, 0.5)
    with pytest.raises(ValueError):
        final_size(999.0, -1.0, 0.002, 0.5)
    with pytest.raises(ValueError):
        final_size(999.0, 1.0, 0.0, 0.5)


def test_i_max_collapses_to_i0_at_threshold():
    rho = 0.5 / 0.002  # alpha/beta
    assert i_max(rho, 7.0, 0.002, 0.5) == 7.0


def test_i_max_value_and_trajectory_peak():
    # formula: -250 + 250*ln(250) + 1 + 999 - 250*ln(999) = 403.6765348034228
    val = i_max(999.0, 1.0, 0.002, 0.5)
    assert val == pytest.approx(403.6765348034228, rel=1e-12)
    m = registry_get("sir")
    traj = integrate(
        m, {"beta": 0.002, "alpha": 0.5}, (999.0, 1.0, 0.0),
        np.linspace(0.0, 60.0, 20001),
    )
    peak = traj.states[:, 1].max()
    assert val == pytest.approx(peak, rel=1e-3)
    # the closed form upper-bounds every sample
    assert np.all(traj.states[:, 1] <= val * (1 + 1e-3))


def test_i_max_is_affine_in_i0():
    base = i_max(999.0, 1.0, 0.002, 0.5)
    assert i_max(999.0, 2.0, 0.002, 0.5) - base == pytest.approx(1.0, abs=1e-9)


def test_i_max_domain_error_in_decline_regime():
    with pytest.raises(ValueError):
        i_max(100.0, 1.0, 0.002, 0.5)  # S0 < alpha/beta = 250


def test_ratio_round_trip_recovers_beta_over_alpha():
    S0, I0, beta, alpha = 999.0, 1.0, 0.002, 0.5
    s_inf = final_size(S0, I0, beta, alpha)
    ratio = ratio_from_final_size(S0, s_inf, S0 + I0)
    assert ratio == pytest.approx(beta / alpha, rel=1e-8)


def test_ratio_from_bisection_oracle():
    s_inf = bisect_final_size(999.0, 1.0, 0.002)
    assert ratio_from_final_size(999.0, s_inf, 1000.0) == pytest.approx(0.002, rel=1e-8)


def test_ratio_vanishes_as_s_inf_approaches_s0():
    S0 = 999.0
    ratio = ratio_from_final_size(S0, S0 * (1 - 1e-9), 1000.0)
    assert 0 < ratio < 1e-9


def test_ratio_domain_error():
    with pytest.raises(ValueError):
        ratio_from_final_size(999.0, 999.0, 1000.0)
    with pytest.raises(ValueError):
        ratio_from_final_size(999.0, 1000.0, 1000.0)


def test_crude_rates_direct_formulas():
    assert crude_rates(1.0, 100.0, 1.0, 2.0) == (0.01, 0.5)
    assert crude_rates(10.0, 1000.0, 10.0, 5.0) == (0.001, 0.2)


def test_crude_rates_reproduce_initial_slope():
    n, S0, I0 = 5.0, 500.0, 2.0
    beta, alpha = crude_rates(n, S0, I0, 3.0)
    m = registry_get("sir")
    d = rhs_eval(m, 0.0, (S0, I0, 0.0), {"beta": beta, "alpha": alpha})
    assert -d[0] == pytest.approx(n, rel=1e-12)


def test_crude_rates_domain_errors():
    with pytest.raises(ValueError):
        crude_rates(0.0, 100.0, 1.0, 2.0)
    with pytest.raises(ValueError):
        crude_rates(1.0, 0.0, 1.0, 2.0)
    with pytest.raises(ValueError):
        crude_rates(1.0, 100.0, 1.0, 0.0)


def test_summarize_bundles_quantities():
    s = summarize(999.0, 1.0, 0.002, 0.5)
    assert isinstance(s, SirSummary)
    assert s.ratio_beta_alpha == pytest.approx(0.004)
    assert s.s_infinity == pytest.approx(final_size(999.0, 1.0, 0.002, 0.5))
    assert s.i_max == pytest.approx(i_max(999.0, 1.0, 0.002, 0.5))
    # monotone-decline regime reports the initial count as the peak
    s2 = summarize(100.0, 3.0, 0.002, 0.5)
    assert s2.i_max == 3.0
