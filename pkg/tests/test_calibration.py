import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anomdiff.calibration import (
    BASE_DRIVERS,
    CALIBRATION_QUAD,
    REPORTED_ROWS,
    DEConfig,
    QuoteSet,
    ScenarioConfig,
    calibrate,
    differential_evolution,
    make_model,
    pattern_search,
    rmse_objective,
    synthetic_scenario,
)
from anomdiff.pricing import MarketSetup, OptionSpec, QuadratureConfig, call_prices, implied_vol

MKT = MarketSetup(100.0, 0.0)


@pytest.fixture(scope="module")
def scenarios():
    return {(d, s): synthetic_scenario(BASE_DRIVERS[d], s)
            for d in ("vg", "nig") for s in ("baseline", "shift_12m", "shift_18m")}


def _sphere(x):
    return float(np.sum((np.asarray(x) - 0.3) ** 2))


# ---------------------------------------------------------------- optimiser


def test_de_sphere():
    res = differential_evolution(_sphere, [(-5, 5)] * 3, DEConfig(generations=200, seed=1))
    assert res.fun < 1e-12
    assert np.allclose(res.x, 0.3, atol=1e-6)


def test_de_history_and_budget():
    cfg = DEConfig(generations=30, population=12, seed=2, polish_every=10, polish_iters=25)
    res = differential_evolution(_sphere, [(-5, 5)] * 3, cfg)
    assert len(res.history) == 30
    assert all(b <= a for a, b in zip(res.history, res.history[1:]))
    assert res.evaluations == 30 * 12 + res.polish_evaluations
    # three polish rounds, two searchers each, capped budget
    assert 0 < res.polish_evaluations <= 3 * 2 * 25


def test_de_without_polish_has_exact_budget():
    res = differential_evolution(_sphere, [(-1, 1)] * 2, DEConfig(generations=7, population=5, polish_every=0))
    assert res.evaluations == 35 and res.polish_evaluations == 0


def test_de_seed_reproducible():
    cfg = DEConfig(generations=15, seed=3)
    a = differential_evolution(_sphere, [(-5, 5)] * 2, cfg)
    b = differential_evolution(_sphere, [(-5, 5)] * 2, cfg)
    c = differential_evolution(_sphere, [(-5, 5)] * 2, DEConfig(generations=15, seed=4))
    assert np.array_equal(a.x, b.x) and a.history == b.history
    assert not np.array_equal(a.x, c.x)


def test_de_threads_match_serial():
    a = differential_evolution(_sphere, [(-5, 5)] * 2, DEConfig(generations=10, seed=5))
    b = differential_evolution(_sphere, [(-5, 5)] * 2, DEConfig(generations=10, seed=5, workers=3))
    assert np.array_equal(a.x, b.x) and a.history == b.history


def test_de_survives_infinite_objective():
    f = lambda x: math.inf if x[0] < 0 else _sphere(x)
    res = differential_evolution(f, [(-1, 1)] * 2, DEConfig(generations=40, seed=6))
    assert res.x[0] >= 0 and res.fun < 1e-6


@pytest.mark.parametrize("kw", [dict(F=0.0), dict(F=2.0), dict(CR=1.5), dict(population=3), dict(generations=0)])
def test_de_config_validation(kw):
    with pytest.raises(ValueError):
        DEConfig(**kw)


def test_pattern_search_respects_budget_and_box():
    calls = []

    def f(x):
        calls.append(x.copy())
        return _sphere(x)

    x, fx, used = pattern_search(f, [0.9, 0.9], _sphere([0.9, 0.9]), [0, 0], [1, 1], 17, 1e-9)
    assert used == len(calls) == 17
    assert all(np.all((0 <= c) & (c <= 1)) for c in calls)
    assert fx < _sphere([0.9, 0.9])


def test_pattern_search_converges():
    x, fx, used = pattern_search(_sphere, [0.0, 0.0], _sphere([0, 0]), [-1, -1], [1, 1], 10_000, 1e-8)
    assert np.allclose(x, 0.3, atol=1e-7) and used < 10_000


# ---------------------------------------------------------------- scenarios


def test_quote_grid_shape(scenarios):
    q = scenarios[("vg", "baseline")]
    assert q.strikes == tuple(float(k) for k in range(80, 116, 5))
    assert len(q.strikes) == 8 and len(q.maturities) == 2
    assert q.prices.shape == (2, 8)
    assert len(q.quotes) == 16


def test_baseline_reprices_to_zero(scenarios):
    for d in ("vg", "nig"):
        p = BASE_DRIVERS[d]
        x = [p.kappa, p.sigma, p.theta]
        assert rmse_objective(x, "levy", d, scenarios[(d, "baseline")], QuadratureConfig()) < 1e-10
        assert rmse_objective(x + [1.0], "sl", d, scenarios[(d, "baseline")], CALIBRATION_QUAD) < 1e-6
        assert rmse_objective(x + [1.0], "drd", d, scenarios[(d, "baseline")], CALIBRATION_QUAD) < 1e-6


def test_shifted_leg_carries_source_smile(scenarios):
    cfg = ScenarioConfig()
    base = make_model("levy", "vg", [0.2, 0.3, -0.3])
    src = call_prices(base, scenarios[("vg", "baseline")].strikes, cfg.source, MKT)
    for s, T in (("shift_12m", 1.0), ("shift_18m", 1.5)):
        q = scenarios[("vg", s)]
        assert q.maturities == (cfg.short, T)
        assert np.allclose(q.prices[0], scenarios[("vg", "baseline")].prices[0], rtol=0, atol=0)
        for k, c0, c1 in zip(q.strikes, src, q.prices[1]):
            v0 = implied_vol(c0, OptionSpec("call", k, cfg.source), MKT)
            v1 = implied_vol(c1, OptionSpec("call", k, T), MKT)
            assert v1 == pytest.approx(v0, rel=1e-9)


def test_scenario_validation():
    with pytest.raises(ValueError):
        synthetic_scenario(BASE_DRIVERS["vg"], "shift_6m")
    with pytest.raises(ValueError):
        QuoteSet((90.0, 100.0), (1.0,), [[200.0, 1.0]])
    with pytest.raises(ValueError):
        QuoteSet((90.0, 100.0), (1.0,), [[1.0, 2.0, 3.0]])


# ---------------------------------------------------------------- objective


@settings(max_examples=25, deadline=None)
@given(
    x=st.tuples(
        st.floats(-1000, 1000, allow_nan=False),
        st.floats(-10, 10, allow_nan=False),
        st.floats(-10, 10, allow_nan=False),
        st.floats(-2, 2, allow_nan=False),
    )
)
def test_objective_never_raises(x, scenarios):
    v = rmse_objective(list(x), "drd", "vg", scenarios[("vg", "shift_12m")])
    assert v == math.inf or v >= 0


@pytest.mark.parametrize("bad", [[0.01, 0.3, -0.3, 0.8], [0.2, 0.3, -0.3, 1.0001], [0.2, 0.3, -0.3, 0.05],
                                 [0.2, 1.5, -0.3, 0.8], [0.2, 0.3, 1.5, 0.8], [0.2, 0.3, -0.3]])
def test_objective_rejects_out_of_bounds(bad, scenarios):
    assert rmse_objective(bad, "sl", "vg", scenarios[("vg", "baseline")]) == math.inf


def test_objective_accepts_unit_beta(scenarios):
    assert math.isfinite(rmse_objective([0.2, 0.3, -0.3, 1.0], "sl", "vg", scenarios[("vg", "baseline")]))


def test_objective_rejects_inadmissible_compensation(scenarios):
    # VG with kappa * (theta + sigma^2 / 2) >= 1 has no exponential moment
    assert rmse_objective([90.0, 0.1, 1.2], "levy", "vg", scenarios[("vg", "baseline")]) == math.inf


@pytest.mark.parametrize("i,factor", [(0, 1.02), (0, 0.98), (1, 1.02), (1, 0.98), (2, 1.02), (2, 0.98), (3, 0.98)])
def test_perturbation_increases_objective(i, factor, scenarios):
    q = scenarios[("vg", "baseline")]
    x = np.array([0.2, 0.3, -0.3, 1.0])
    y = x.copy()
    y[i] *= factor
    assert rmse_objective(y, "sl", "vg", q) > rmse_objective(x, "sl", "vg", q)


@pytest.mark.parametrize("row", sorted(REPORTED_ROWS), ids=lambda r: "-".join(r))
def test_objective_at_reported_parameters(row, scenarios):
    """The reported fit, priced by this engine on our scenario, is within 10% of its reported RMSE."""
    scenario, family, driver = row
    k, s, t, b, reported = REPORTED_ROWS[row]
    x = [k, s, t] + ([] if family == "levy" else [b])
    v = rmse_objective(x, family, driver, scenarios[(driver, scenario)], QuadratureConfig())
    assert v <= 1.1 * reported


def test_make_model_validation():
    with pytest.raises(ValueError):
        make_model("subordinated", "vg", [0.2, 0.3, -0.3])
    with pytest.raises(ValueError):
        make_model("sl", "cgmy", [0.2, 0.3, -0.3, 0.5])
    m = make_model("drd", "nig", [0.3, 0.2, -0.1, 0.7])
    assert m.kind == "drd" and m.beta == 0.7 and abs(m.levy.exponent(1j)) < 1e-12


# ---------------------------------------------------------------- calibration


def test_short_calibration_recovers_levy(scenarios):
    res = calibrate("levy", "vg", scenarios[("vg", "baseline")], DEConfig(seed=7))
    assert res.rmse < 1e-3
    assert res.params["kappa"] == pytest.approx(0.2, rel=0.05)
    assert res.params["theta"] == pytest.approx(-0.3, rel=0.02)
    d = res.to_dict()
    assert d["family"] == "levy-vg" and d["beta"] == 1.0 and d["generations"] == 100
