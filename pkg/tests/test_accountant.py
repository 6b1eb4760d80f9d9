"""Accountant correctness: closed form vs quadrature, composition,
conversion, calibration."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdpcgan.accountant import (
    DEFAULT_ORDERS,
    Accountant,
    RdpCurve,
    SgmParams,
    calibrate,
    compose_steps,
    compose_two_systems,
    rdp_to_dp,
    sgm_rdp_curve,
    sgm_rdp_step,
)
from rdpcgan.exceptions import BudgetError

from oracles import relative_error, sgm_rdp_quadrature


def test_zero_sampling_rate_costs_nothing():
    for sigma in (0.5, 1.0, 8.0):
        for alpha in (2, 17, 256):
            assert sgm_rdp_step(0.0, sigma, alpha) == 0.0


def test_full_sampling_is_plain_gaussian():
    assert sgm_rdp_step(1.0, 2.0, 4) == pytest.approx(0.5, rel=1e-12)
    for sigma in (0.8, 1.5, 3.0):
        for alpha in (2, 16, 64):
            expected = alpha / (2 * sigma ** 2)
            assert relative_error(sgm_rdp_step(1.0, sigma, alpha), expected) < 1e-9


def test_closed_form_matches_quadrature_oracle():
    for q, sigma, alpha in [(0.01, 1.0, 16), (0.1, 1.5, 4), (0.5, 0.8, 64),
                            (0.001, 8.0, 2), (0.05, 3.0, 32)]:
        closed = sgm_rdp_step(q, sigma, alpha)
        oracle = sgm_rdp_quadrature(q, sigma, alpha)
        assert relative_error(closed, oracle, floor=1e-300) < 1e-6, (q, sigma, alpha)


def test_unsupported_orders_rejected():
    with pytest.raises(BudgetError, match="order"):
        sgm_rdp_step(0.1, 1.0, 1)
    with pytest.raises(BudgetError, match="order"):
        sgm_rdp_step(0.1, 1.0, 2.5)


def test_zero_sigma_with_sampling_rejected():
    with pytest.raises(BudgetError, match="sigma"):
        sgm_rdp_step(0.1, 0.0, 2)


@settings(max_examples=60, deadline=None)
@given(
    q=st.floats(1e-4, 0.9),
    sigma=st.floats(0.8, 8.0),
    alpha=st.integers(2, 127),
)
def test_monotonicity_properties(q, sigma, alpha):
    base = sgm_rdp_step(q, sigma, alpha)
    assert base >= 0.0
    assert sgm_rdp_step(q, sigma, alpha + 1) >= base - 1e-12
    assert sgm_rdp_step(min(1.0, q * 1.5), sigma, alpha) >= base - 1e-12
    assert sgm_rdp_step(q, sigma * 1.25, alpha) <= base + 1e-12


def test_compose_steps_linearity():
    curve = sgm_rdp_curve(0.02, 1.2, orders=range(2, 33))
    assert all(e == 0 for e in compose_steps(curve, 0).epsilons)
    idx = curve.orders.index(8.0)
    single = RdpCurve((8.0,), (0.01,))
    assert compose_steps(single, 1000).epsilons[0] == pytest.approx(10.0)
    a = compose_steps(compose_steps(curve, 3), 4)
    b = compose_steps(curve, 7)
    # composing a then b equals composing a+b of the per-step curve
    combined = compose_steps(curve, 3).added(compose_steps(curve, 4))
    assert np.allclose(combined.epsilons, b.epsilons)
    assert a.orders == b.orders


def test_rdp_to_dp_single_order_spot_value():
    out = rdp_to_dp(RdpCurve((10.0,), (0.5,)), 1e-5)
    assert out.epsilon == pytest.approx(0.5 + math.log(1e5) / 9, abs=1e-4)
    assert out.alpha_star == 10.0


def test_rdp_to_dp_never_selects_dominated_order():
    curve = RdpCurve((4.0, 8.0), (0.3, 0.3))  # alpha=8 dominates at equal eps
    out = rdp_to_dp(curve, 1e-5)
    assert out.alpha_star == 8.0


def test_rdp_to_dp_matches_exhaustive_grid_search():
    orders = tuple(float(a) for a in range(2, 65))
    curve = RdpCurve(orders, tuple(a / 2 for a in orders))
    delta = 1e-5
    # independent oracle: scan the whole grid
    best = min((eps + math.log(1 / delta) / (a - 1), a)
               for a, eps in zip(curve.orders, curve.epsilons))
    out = rdp_to_dp(curve, delta)
    assert out.alpha_star == best[1] == 6.0
    assert out.epsilon == pytest.approx(best[0], abs=1e-12)
    assert out.epsilon == pytest.approx(3.0 + math.log(1e5) / 5, abs=1e-3)
    for a, eps in zip(curve.orders, curve.epsilons):
        assert out.epsilon <= eps + math.log(1 / delta) / (a - 1) + 1e-12


def test_compose_two_systems_neutral_element():
    orders = tuple(float(a) for a in range(2, 65))
    zero = RdpCurve(orders, (0.0,) * len(orders))
    gan = RdpCurve(orders, tuple(a / 2 for a in orders))
    composed = compose_two_systems(zero, gan, 1e-5)
    alone = rdp_to_dp(gan, 1e-5)
    assert composed.guarantee.epsilon == pytest.approx(alone.epsilon, rel=1e-12)
    assert composed.alpha_total == alone.alpha_star


def test_compose_two_systems_symmetry():
    orders = tuple(float(a) for a in range(2, 65))
    a = RdpCurve(orders, tuple(x / 8 for x in orders))
    b = RdpCurve(orders, tuple(x / 2 for x in orders))
    ab = compose_two_systems(a, b, 1e-5)
    ba = compose_two_systems(b, a, 1e-5)
    assert ab.guarantee.epsilon == ba.guarantee.epsilon
    assert ab.alpha_total == ba.alpha_total


def test_compose_two_systems_matches_joint_grid_oracle():
    orders = tuple(float(a) for a in range(2, 65))
    ae = RdpCurve(orders, tuple(x / 8 for x in orders))
    gan = RdpCurve(orders, tuple(x / 2 for x in orders))
    delta = 1e-5
    # independent oracle: exhaustive search of the summed curve over the grid
    best_eps, best_alpha, best_rdp = math.inf, None, None
    for a, e1, e2 in zip(orders, ae.epsilons, gan.epsilons):
        candidate = e1 + e2 + math.log(1 / delta) / (a - 1)
        if candidate < best_eps:
            best_eps, best_alpha, best_rdp = candidate, a, e1 + e2
    out = compose_two_systems(ae, gan, delta)
    assert out.alpha_total == best_alpha == 5.0
    assert out.epsilon_total_rdp == pytest.approx(best_rdp, abs=1e-12)
    assert out.guarantee.epsilon == pytest.approx(best_eps, abs=1e-9)
    assert out.guarantee.epsilon == pytest.approx(3.125 + math.log(1e5) / 4, abs=1e-9)


def test_compose_two_systems_rejects_grid_mismatch():
    a = RdpCurve((2.0, 3.0), (0.1, 0.2))
    b = RdpCurve((2.0, 4.0), (0.1, 0.2))
    with pytest.raises(BudgetError, match="grids"):
        compose_two_systems(a, b, 1e-5)


def test_calibrate_max_steps_matches_linear_scan():
    q, sigma, delta, target = 0.05, 1.5, 1e-5, 1.0
    params = calibrate(target, delta, q, sigma=sigma)
    curve = sgm_rdp_curve(q, sigma)
    steps = 0
    while rdp_to_dp(curve.scaled(steps + 1), delta).epsilon <= target:
        steps += 1
    assert params.steps == steps
    assert params.steps > 0
    assert rdp_to_dp(curve.scaled(params.steps), delta).epsilon <= target
    assert rdp_to_dp(curve.scaled(params.steps + 1), delta).epsilon > target


def test_calibrate_target_below_single_step_gives_zero():
    q, sigma, delta = 0.5, 0.8, 1e-5
    one = rdp_to_dp(sgm_rdp_curve(q, sigma).scaled(1), delta).epsilon
    floor = rdp_to_dp(sgm_rdp_curve(q, sigma).scaled(0), delta).epsilon
    target = 0.5 * (floor + one)
    assert calibrate(target, delta, q, sigma=sigma).steps == 0


def test_calibrate_monotone_in_target():
    q, sigma, delta = 0.02, 1.1, 1e-5
    steps = [calibrate(t, delta, q, sigma=sigma).steps for t in (0.5, 1.0, 2.0, 4.0)]
    assert steps == sorted(steps)


def test_calibrate_infeasible_target():
    with pytest.raises(BudgetError, match="floor"):
        calibrate(0.01, 1e-5, 0.1, sigma=1.0)


def test_calibrate_sigma_mode():
    q, steps, delta, target = 0.05, 500, 1e-5, 2.0
    params = calibrate(target, delta, q, steps=steps)
    achieved = rdp_to_dp(sgm_rdp_curve(q, params.sigma).scaled(steps), delta).epsilon
    assert achieved <= target
    # one grid notch less noise must violate the target
    smaller = params.sigma / 1.02
    worse = rdp_to_dp(sgm_rdp_curve(q, smaller).scaled(steps), delta).epsilon
    assert worse > target


def test_accountant_running_total():
    acct = Accountant(0.02, 1.2, orders=tuple(range(2, 65)))
    acct.record_step(57)
    assert acct.steps == 57
    assert np.allclose(acct.curve().epsilons,
                       [57 * e for e in acct.step_curve.epsilons])


def test_curve_validation():
    with pytest.raises(BudgetError):
        RdpCurve((1.0, 2.0), (0.1, 0.1))  # order <= 1
    with pytest.raises(BudgetError):
        RdpCurve((2.0,), (-0.1,))
    with pytest.raises(BudgetError):
        RdpCurve((2.0,), (math.inf,))
    with pytest.raises(BudgetError):
        SgmParams(1.2, 1.0, 5)


def test_rdp_to_dp_requires_valid_delta():
    curve = RdpCurve((2.0,), (0.1,))
    with pytest.raises(BudgetError, match="delta"):
        rdp_to_dp(curve, 0.0)
    with pytest.raises(BudgetError, match="delta"):
        rdp_to_dp(curve, 1.0)
