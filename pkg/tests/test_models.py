import json

import numpy as np
import pytest

from dinnlab.models import (
    NonFiniteInputError,
    UnknownModelError,
    registry_get,
    registry_names,
    rhs_eval,
)

ALL_NAMES = {
    "sir", "covid_sird", "hiv", "smallpox", "tuberculosis", "pneumonia",
    "ebola", "dengue", "anthrax", "polio", "measles", "zika",
}

# parameters listed in the published tables but absent from the displayed
# equations (carried as fixed entries, never read by the rhs)
TABLE_ONLY = {
    "pneumonia": {"k", "tau"},
    "dengue": {"lambda_v"},
    "zika": {"m"},
}

# published rows whose printed range excludes the printed value
EXPECTED_RANGE_VIOLATIONS = {
    ("anthrax", "kappa"),
    ("anthrax", "eta_i"),
    ("anthrax", "delta"),
    ("anthrax", "beta"),
    ("ebola", "gamma_d"),
    ("zika", "gamma_h2"),
    ("zika", "gamma_h"),
}


def test_registry_is_complete():
    assert set(registry_names()) == ALL_NAMES
    assert len(registry_names()) == 12


def test_unknown_name_lists_valid_names():
    with pytest.raises(UnknownModelError) as err:
        registry_get("cholera")
    assert "covid_sird" in str(err.value)
    assert "zika" in str(err.value)


def test_covid_sird_table():
    m = registry_get("covid_sird")
    assert m.compartments == ("S", "I", "D", "R")
    expect = {"alpha": 0.191, "beta": 0.05, "gamma": 0.0294}
    for name, value in expect.items():
        spec = m.param(name)
        assert spec.true_value == value
        assert (spec.search_lo, spec.search_hi) == (-1.0, 1.0)


def test_measles_table():
    m = registry_get("measles")
    got = {s.name: s.true_value for s in m.params}
    assert got == {"mu": 0.02, "beta": 0.28, "gamma": 100.0, "sigma": 35.84}


def test_sir_compartments():
    assert registry_get("sir").compartments == ("S", "I", "R")


@pytest.mark.parametrize(
    "name,n_params",
    [
        ("sir", 2), ("covid_sird", 3), ("hiv", 10), ("smallpox", 10),
        ("tuberculosis", 9), ("pneumonia", 16), ("ebola", 13), ("dengue", 11),
        ("anthrax", 12), ("polio", 8), ("measles", 4), ("zika", 15),
    ],
)
def test_param_counts(name, n_params):
    assert len(registry_get(name).params) == n_params


def test_table_only_params_are_fixed():
    for name, fixed in TABLE_ONLY.items():
        m = registry_get(name)
        for pname in fixed:
            assert m.param(pname).known


def test_range_violations_flagged_not_widened():
    found = set()
    for name in registry_names():
        for spec in registry_get(name).params:
            if spec.range_violation:
                found.add((name, spec.name))
    assert found == EXPECTED_RANGE_VIOLATIONS
    # the anthrax transmission row keeps its printed range
    spec = registry_get("anthrax").param("beta")
    assert (spec.true_value, spec.search_lo, spec.search_hi) == (0.02, 0.0018, 0.0022)


class RecordingDict(dict):
    def __init__(self, base):
        super().__init__(base)
        self.accessed = set()

    def __getitem__(self, key):
        self.accessed.add(key)
        return super().__getitem__(key)


def test_rhs_reads_exactly_the_declared_params():
    for name in registry_names():
        m = registry_get(name)
        p = RecordingDict(m.true_params())
        m.rhs(0.0, np.asarray(m.default_y0) + 0.5, p)
        expected = set(s.name for s in m.params) - TABLE_ONLY.get(name, set())
        assert p.accessed == expected, name


def test_sir_transmission_off():
    m = registry_get("sir")
    d = rhs_eval(m, 0.0, (700.0, 10.0, 0.0), {"beta": 0.0, "alpha": 0.1})
    assert d == [0.0, -1.0, 1.0]


def test_sird_disease_free_equilibrium():
    m = registry_get("covid_sird")
    d = rhs_eval(m, 0.0, (990.0, 0.0, 5.0, 5.0), m.true_params())
    assert d == [0.0, 0.0, 0.0, 0.0]


def test_sird_hand_evaluated_derivatives():
    # (alpha/N)*S*I = 0.191*990*10/1000 = 1.8909; beta*I = 0.5; gamma*I = 0.294
    m = registry_get("covid_sird")
    d = rhs_eval(m, 0.0, (990.0, 10.0, 0.0, 0.0), m.true_params())
    assert d[0] == pytest.approx(-1.8909, abs=1e-12)
    assert d[1] == pytest.approx(1.8909 - 0.5 - 0.294, abs=1e-12)
    assert d[2] == pytest.approx(0.294, abs=1e-12)
    assert d[3] == pytest.approx(0.5, abs=1e-12)


def test_conservation_of_closed_systems():
    rng = np.random.default_rng(42)
    for name in registry_names():
        m = registry_get(name)
        if not m.closed:
            continue
        scale = max(m.default_y0) or 1.0
        for _ in range(1000):
            y = rng.uniform(0.0, 1.2 * scale, size=len(m.compartments))
            if name == "polio":  # conserved only on the simplex sum(y) = N
                y *= m.population / y.sum()
            p = {
                s.name: rng.uniform(s.search_lo, s.search_hi) for s in m.params
            }
            d = np.asarray(m.rhs(0.0, y, p), dtype=float)
            bound = 1e-9 * max(np.abs(d).max(), 1e-12)
            assert abs(d.sum()) <= bound, name


def test_rhs_finite_on_positive_boxes():
    rng = np.random.default_rng(7)
    for name in registry_names():
        m = registry_get(name)
        scale = max(m.default_y0) or 1.0
        for _ in range(50):
            y = rng.uniform(1e-3, 1.5 * scale, size=len(m.compartments))
            d = np.asarray(m.rhs(0.0, y, m.true_params()), dtype=float)
            assert np.all(np.isfinite(d)), name
            assert d.shape[0] == len(m.compartments)


def test_rhs_eval_rejects_non_finite_input():
    m = registry_get("sir")
    with pytest.raises(NonFiniteInputError):
        rhs_eval(m, 0.0, (np.nan, 1.0, 0.0), m.true_params())
    with pytest.raises(NonFiniteInputError):
        rhs_eval(m, 0.0, (1.0, 1.0, 0.0), {"beta": np.inf, "alpha": 0.1})


def test_rhs_eval_rejects_dimension_mismatch():
    m = registry_get("sir")
    with pytest.raises(ValueError):
        rhs_eval(m, 0.0, (1.0, 2.0), m.true_params())


def test_rhs_is_pure():
    m = registry_get("covid_sird")
    y = np.array([990.0, 10.0, 0.0, 0.0])
    p = m.true_params()
    before = y.copy()
    d1 = rhs_eval(m, 0.0, y, p)
    d2 = rhs_eval(m, 0.0, y, p)
    assert np.array_equal(y, before)
    assert d1 == d2


def test_descriptor_json_round_trips():
    for name in registry_names():
        m = registry_get(name)
        doc = json.loads(m.descriptor_json())
        assert doc["name"] == name
        assert doc["compartments"] == list(m.compartments)
        assert len(doc["params"]) == len(m.params)
        by_name = {p["name"]: p for p in doc["params"]}
        for spec in m.params:
            assert by_name[spec.name]["true_value"] == spec.true_value


def test_true_values_inside_ranges_except_flagged():
    for name in registry_names():
        for spec in registry_get(name).params:
            inside = spec.search_lo <= spec.true_value <= spec.search_hi
            assert inside != spec.range_violation
