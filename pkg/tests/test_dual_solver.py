import math

import numpy as np
import pytest

from infoport import (
    ChangePointLaw,
    FiltrationKind,
    Infeasible,
    Scenario,
    SimGrid,
    budget_curve,
    estimate_eps_bounds,
    lagrangian_inverse,
    log_utility,
    neg_reciprocal_loss,
    risk_curve,
    shifted_neg_reciprocal,
    solve_budget_multiplier,
    solve_dual,
)
from infoport.preferences import CombinedLagrangian

from conftest import lognormal_z, make_model


@pytest.fixture(scope="module")
def log_scenario():
    z = lognormal_z(0.4, 1.0, 2000, seed=17)
    return Scenario.from_samples(z, log_utility(), neg_reciprocal_loss(3.0),
                                 x=1.0, eps_quantile=0.5)


def test_budget_curve_log_lambda_zero(log_scenario):
    # z * (1 / (y z)) averages to 1/y no matter the sample
    for y in (0.5, 1.0, 4.0):
        assert budget_curve(log_scenario, 0.0, y) == pytest.approx(1.0 / y)


def test_budget_curve_decreasing_in_y(log_scenario):
    for lam in (0.0, 0.5, 3.0):
        v1 = budget_curve(log_scenario, lam, 1.0)
        v2 = budget_curve(log_scenario, lam, 2.0)
        assert v2 < v1


def test_budget_curve_sqrt_identity():
    z = lognormal_z(0.4, 1.0, 1500, seed=23)
    sc = Scenario.from_samples(z, shifted_neg_reciprocal(),
                               neg_reciprocal_loss(3.0), x=1.0, eps_quantile=0.5)
    for lam in (0.0, 1.0, 4.0):
        got = budget_curve(sc, lam, 2.0)
        expected = math.sqrt((1 + 3 * lam) / 2.0) * np.mean(np.sqrt(z))
        assert got == pytest.approx(expected, rel=1e-12)


def test_solve_budget_multiplier_log(log_scenario):
    assert solve_budget_multiplier(log_scenario, 0.0) == pytest.approx(1.0, rel=1e-12)


def test_solve_budget_multiplier_sqrt_closed_form():
    z = lognormal_z(0.4, 1.0, 1500, seed=29)
    sc = Scenario.from_samples(z, shifted_neg_reciprocal(),
                               neg_reciprocal_loss(3.0), x=1.0, eps_quantile=0.5)
    for lam in (0.0, 0.5, 2.0):
        expected = float(np.mean(np.sqrt(z * (1 + 3 * lam)))) ** 2
        assert solve_budget_multiplier(sc, lam) == pytest.approx(expected, rel=1e-9)


def test_solve_budget_multiplier_grid_scan_oracle():
    z = lognormal_z(0.4, 1.0, 200, seed=31)
    sc = Scenario.from_samples(z, log_utility(), neg_reciprocal_loss(3.0),
                               x=1.0, eps_quantile=0.5)
    lam = 0.5
    y_solver = solve_budget_multiplier(sc, lam)

    # dense scan refined by golden-section on |curve - x|
    def obj(y):
        return abs(budget_curve(sc, lam, y) - 1.0)

    grid = np.linspace(0.5 * y_solver, 2.0 * y_solver, 4001)
    best = grid[np.argmin([obj(y) for y in grid])]
    a, b = best - (grid[1] - grid[0]), best + (grid[1] - grid[0])
    phi = (math.sqrt(5) - 1) / 2
    for _ in range(200):
        c1, c2 = b - phi * (b - a), a + phi * (b - a)
        if obj(c1) < obj(c2):
            b = c2
        else:
            a = c1
    oracle = 0.5 * (a + b)
    assert y_solver == pytest.approx(oracle, abs=1e-8)


def test_risk_curve_limits_and_monotonicity(log_scenario):
    bounds = estimate_eps_bounds(log_scenario)
    assert bounds.eps_min <= bounds.eps_max
    ks = [risk_curve(log_scenario, lam)
          for lam in (0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)]
    assert ks[0] == bounds.eps_max
    assert all(k2 <= k1 + 1e-12 for k1, k2 in zip(ks, ks[1:]))


def test_risk_curve_degenerate_density():
    sc = Scenario.from_samples(np.ones(50), log_utility(),
                               neg_reciprocal_loss(3.0), x=2.0, eps_quantile=0.5)
    for lam in (0.0, 1.0, 10.0):
        assert risk_curve(sc, lam) == pytest.approx(3.0 / 2.0, rel=1e-12)
    bounds = estimate_eps_bounds(sc)
    assert bounds.eps_min == pytest.approx(bounds.eps_max, rel=1e-12)
    assert bounds.c_star == pytest.approx(3.0 / 4.0, rel=1e-10)


def test_eps_min_against_large_lambda_limit(log_scenario):
    bounds = estimate_eps_bounds(log_scenario)
    k_large = risk_curve(log_scenario, 1000.0)
    assert abs(k_large - bounds.eps_min) <= 0.01 * abs(bounds.eps_min)


def test_solve_dual_slack_when_eps_loose(log_scenario):
    bounds = estimate_eps_bounds(log_scenario)
    sc = Scenario.from_samples(log_scenario.z_samples, log_utility(),
                               neg_reciprocal_loss(3.0), x=1.0,
                               eps=bounds.eps_max * 1.5)
    sol = solve_dual(sc)
    assert sol.lambda_star == 0.0
    assert not sol.binding
    z = sc.z_samples
    assert np.allclose(sol.r_hat, 1.0 / (sol.y_hat * z), rtol=1e-12)


def test_solve_dual_residuals(log_scenario):
    sol = solve_dual(log_scenario)
    st = sol.strata[0]
    assert st.binding
    assert abs(st.budget_residual) <= 1e-8 * log_scenario.x
    assert abs(st.risk_residual) <= 1e-8 * abs(st.eps)
    assert np.all(st.r_hat > 0)


def test_solve_dual_infeasible(log_scenario):
    bounds = estimate_eps_bounds(log_scenario)
    sc = Scenario.from_samples(log_scenario.z_samples, log_utility(),
                               neg_reciprocal_loss(3.0), x=1.0,
                               eps=bounds.eps_min - 0.05)
    with pytest.raises(Infeasible):
        solve_dual(sc)


def test_y_over_lambda_decreasing(log_scenario):
    lams = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 64.0, 1000.0)
    ratios = [solve_budget_multiplier(log_scenario, lam) / lam for lam in lams]
    assert all(r2 <= r1 + 1e-12 for r1, r2 in zip(ratios, ratios[1:]))


def test_risk_curve_continuity(log_scenario):
    lam0 = 1.0
    k0 = risk_curve(log_scenario, lam0)
    deltas = [1e-2, 1e-4, 1e-6]
    gaps = [abs(risk_curve(log_scenario, lam0 + d) - k0) for d in deltas]
    assert all(g2 < g1 for g1, g2 in zip(gaps, gaps[1:]))


def test_stratified_solve_point_mass_single_cell():
    model = make_model(law=ChangePointLaw.point_mass(0.5))
    sc = Scenario(utility=log_utility(), loss=neg_reciprocal_loss(3.0), x=1.0,
                  eps_quantile=0.5, kind=FiltrationKind.INITIALLY_ENLARGED_S,
                  model=model, grid=SimGrid(n_steps=16, horizon=1.0),
                  n_paths=500, seed=3)
    sol = solve_dual(sc)
    assert len(sol.strata) == 1


def test_stratified_solve_quantile_cells():
    model = make_model()
    sc = Scenario(utility=log_utility(), loss=neg_reciprocal_loss(3.0), x=1.0,
                  eps_quantile=0.5, kind=FiltrationKind.INITIALLY_ENLARGED_S,
                  model=model, grid=SimGrid(n_steps=16, horizon=1.0),
                  n_paths=2000, seed=3, n_strata=4)
    sol = solve_dual(sc)
    assert len(sol.strata) == 4
    assert sum(s.weight for s in sol.strata) == pytest.approx(1.0)
    n = sum(len(s.indices) for s in sol.strata)
    assert n == 2000
    # every stratum satisfies its own budget on its own sample
    for st in sol.strata:
        z = sc.z_samples[st.indices]
        assert abs(np.mean(z * st.r_hat) - 1.0) <= 1e-8


def test_r_hat_consistent_with_multipliers(log_scenario):
    sol = solve_dual(log_scenario)
    st = sol.strata[0]
    cl = CombinedLagrangian(log_scenario.utility, log_scenario.loss,
                            st.lambda_star)
    expected = lagrangian_inverse(cl, st.y_hat * log_scenario.z_samples)
    assert np.allclose(sol.r_hat, expected, rtol=1e-12)
