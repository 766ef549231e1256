import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infoport import (
    CombinedLagrangian,
    OutOfRange,
    Unattainable,
    entropic_risk,
    exponential_loss,
    lagrangian_inverse,
    log_utility,
    loss_marginal_inverse_H,
    marginal_inverse_I,
    neg_reciprocal_loss,
    shifted_neg_reciprocal,
    shortfall_risk,
)
from infoport.preferences import UtilitySpec, LossSpec, _lagrangian_inverse_generic

Y_GRID = np.logspace(-3, 3, 50)
LAMBDAS = (0.0, 0.1, 1.0, 10.0)


def crra2_custom() -> UtilitySpec:
    # u(x) = -1/x, u'(x) = x^-2, no closed inverse registered
    return UtilitySpec(kind="custom",
                       u=lambda x: -1.0 / np.asarray(x, dtype=float),
                       u_prime=lambda x: np.asarray(x, dtype=float) ** -2.0)


def quartic_loss() -> LossSpec:
    # l(x) = x^-4 on (-inf, 0): increasing, convex, marginal -4 x^-5
    return LossSpec(kind="custom",
                    l=lambda x: np.asarray(x, dtype=float) ** -4.0,
                    l_prime=lambda x: -4.0 * np.asarray(x, dtype=float) ** -5.0,
                    marginal_at_zero=math.inf)


def test_marginal_inverse_builtins():
    assert marginal_inverse_I(log_utility(), 2.0) == pytest.approx(0.5)
    assert marginal_inverse_I(shifted_neg_reciprocal(), 4.0) == pytest.approx(0.5)


def test_marginal_inverse_custom_vs_numeric():
    util = crra2_custom()
    for y in (0.1, 1.0, 7.5):
        got = marginal_inverse_I(util, y)
        assert got == pytest.approx(y ** -0.5, rel=1e-10)


def test_loss_marginal_inverse_builtin():
    loss = neg_reciprocal_loss(3.0)
    assert loss_marginal_inverse_H(loss, 3.0) == pytest.approx(-1.0)
    assert loss_marginal_inverse_H(loss, 12.0) == pytest.approx(-0.5)


def test_loss_marginal_inverse_custom_vs_numeric():
    loss = quartic_loss()
    for e in (0.5, 4.0, 100.0):
        got = loss_marginal_inverse_H(loss, e)
        assert got == pytest.approx(-((4.0 / e) ** 0.2), rel=1e-10)


def test_loss_marginal_inverse_domain_guard():
    loss = exponential_loss(2.0)
    with pytest.raises(OutOfRange):
        loss_marginal_inverse_H(loss, 2.5)  # above gamma
    with pytest.raises(OutOfRange):
        loss_marginal_inverse_H(loss, 0.0)


def test_lagrangian_inverse_hand_checked_values():
    cl = CombinedLagrangian(log_utility(), neg_reciprocal_loss(3.0), 1.0)
    assert lagrangian_inverse(cl, 1.0) == pytest.approx((1 + math.sqrt(13)) / 2)
    cl0 = CombinedLagrangian(log_utility(), neg_reciprocal_loss(3.0), 0.0)
    assert lagrangian_inverse(cl0, 2.0) == pytest.approx(0.5)
    cl2 = CombinedLagrangian(shifted_neg_reciprocal(), neg_reciprocal_loss(3.0), 1.0)
    assert lagrangian_inverse(cl2, 1.0) == pytest.approx(2.0)


@pytest.mark.parametrize("utility", [log_utility(), shifted_neg_reciprocal()])
@pytest.mark.parametrize("lam", LAMBDAS)
def test_closed_form_matches_generic_solver(utility, lam):
    cl = CombinedLagrangian(utility, neg_reciprocal_loss(3.0), lam)
    closed = lagrangian_inverse(cl, Y_GRID)
    generic = _lagrangian_inverse_generic(cl, Y_GRID)
    assert np.max(np.abs(closed - generic) / closed) <= 1e-10


@pytest.mark.parametrize("lam", LAMBDAS)
def test_inversion_identity(lam):
    cl = CombinedLagrangian(log_utility(), neg_reciprocal_loss(3.0), lam)
    x = lagrangian_inverse(cl, Y_GRID)
    back = cl.marginal(x)
    assert np.max(np.abs(back - Y_GRID) / Y_GRID) <= 1e-9


def test_inverse_monotone_in_y_and_lambda():
    loss = neg_reciprocal_loss(3.0)
    prev = None
    for lam in LAMBDAS:
        cl = CombinedLagrangian(log_utility(), loss, lam)
        vals = lagrangian_inverse(cl, Y_GRID)
        assert np.all(np.diff(vals) < 0)  # decreasing in y
        if prev is not None:
            assert np.all(vals >= prev)   # increasing in lambda
        prev = vals


def test_inverse_limits():
    cl = CombinedLagrangian(log_utility(), neg_reciprocal_loss(3.0), 1.0)
    ladder = np.logspace(-8, 8, 17)
    vals = lagrangian_inverse(cl, ladder)
    assert np.all(np.diff(vals) < 0)
    # large-y decay is sqrt(3 lam / y) once the penalty dominates
    assert vals[0] > 1e6 and vals[-1] < 1e-3


@pytest.mark.parametrize("alpha", [1.0, 2.0, 10.0])
def test_scaling_inequality(alpha):
    loss = neg_reciprocal_loss(3.0)
    for lam in (0.1, 1.0):
        cl = CombinedLagrangian(log_utility(), loss, lam)
        cl_a = CombinedLagrangian(log_utility(), loss, alpha * lam)
        assert np.all(lagrangian_inverse(cl_a, alpha * Y_GRID)
                      <= lagrangian_inverse(cl, Y_GRID) * (1 + 1e-12))


def test_shift_identity_through_loss_marginal():
    # with e in the loss-marginal range and mu = U'(-H(e)), the penalized
    # inverse at mu + lam*e equals the plain inverse at mu
    loss = neg_reciprocal_loss(3.0)
    util = log_utility()
    for e in (1.0, 5.0):
        h = loss_marginal_inverse_H(loss, e)
        mu = util.u_prime(-h)
        base = marginal_inverse_I(util, mu)
        for lam in (0.5, 2.0):
            cl = CombinedLagrangian(util, loss, lam)
            assert lagrangian_inverse(cl, mu + lam * e) == \
                pytest.approx(base, rel=1e-9)


@given(x=st.floats(0.05, 50.0), y=st.floats(0.01, 20.0))
@settings(max_examples=200, deadline=None)
def test_fenchel_inequality(x, y):
    util = log_utility()
    i_y = marginal_inverse_I(util, y)
    lhs = util.u(np.array(i_y))
    rhs = util.u(np.array(x)) + y * i_y - x * y
    assert lhs >= rhs - 1e-12


def test_combined_lagrangian_concave_increasing():
    cl = CombinedLagrangian(log_utility(), neg_reciprocal_loss(3.0), 2.0)
    xs = np.linspace(0.1, 10, 200)
    vals = cl.value(xs)
    assert np.all(np.diff(vals) > 0)
    assert np.all(np.diff(vals, 2) < 1e-12)


# ---------------------------------------------------------------------------
# risk functionals


def test_shortfall_deterministic_position():
    loss = neg_reciprocal_loss(3.0)
    m = shortfall_risk(np.array([1.0]), loss, 1.5)
    assert m == pytest.approx(1.0, abs=1e-10)


def test_shortfall_cash_invariance():
    rng = np.random.default_rng(3)
    x = rng.lognormal(size=500)
    loss = neg_reciprocal_loss(3.0)
    base = shortfall_risk(x, loss, 1.2)
    shifted = shortfall_risk(x + 0.7, loss, 1.2)
    assert shifted == pytest.approx(base - 0.7, abs=1e-10)


def test_shortfall_monotone():
    rng = np.random.default_rng(4)
    x = rng.lognormal(size=400)
    y = x + rng.uniform(0.0, 0.5, size=400)
    loss = neg_reciprocal_loss(3.0)
    assert shortfall_risk(x, loss, 1.0) >= shortfall_risk(y, loss, 1.0)


def test_shortfall_exponential_loss_closed_form():
    # mean exp(gamma(-x - m)) = eps  =>  m = entropic risk
    rng = np.random.default_rng(5)
    x = rng.normal(size=300)
    loss = exponential_loss(2.0)
    got = shortfall_risk(x, loss, 0.8)
    assert got == pytest.approx(entropic_risk(x, 2.0, 0.8), abs=1e-9)


def test_shortfall_unattainable():
    with pytest.raises(Unattainable):
        shortfall_risk(np.array([1.0, 2.0]), neg_reciprocal_loss(3.0), -0.5)


def test_entropic_risk_values():
    assert entropic_risk(np.zeros(10), 1.0, 1.0) == pytest.approx(0.0)
    assert entropic_risk(np.full(10, 0.3), 1.0, 1.0) == pytest.approx(-0.3)
    two_point = np.array([0.0, 1.0])
    expected = math.log((1 + math.exp(-1)) / 2)
    assert entropic_risk(two_point, 1.0, 1.0) == pytest.approx(expected)
