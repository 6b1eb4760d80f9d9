"""Adam optimizer behavior."""

import numpy as np
import pytest

from rdpcgan.exceptions import ShapeError
from rdpcgan.nn import Adam, GradSet, adam_step


def test_zero_gradients_leave_parameters_unchanged():
    params = {"w": np.array([1.0, -2.0, 3.0])}
    state = Adam(params, lr=0.01)
    state.step(GradSet({"w": np.zeros(3)}))
    assert np.array_equal(params["w"], [1.0, -2.0, 3.0])


def test_first_step_magnitude_is_learning_rate():
    params = {"w": np.array([0.0])}
    state = Adam(params, lr=0.005)
    state.step(GradSet({"w": np.array([1.0])}))
    # bias-corrected first step is -lr * g / (|g| + eps)
    assert params["w"][0] == pytest.approx(-0.005, rel=1e-6)
    assert state.step_count == 1


def test_converges_on_quadratic():
    params = {"w": np.array([1.0])}
    state = Adam(params, lr=0.005)
    for _ in range(2000):
        state.step(GradSet({"w": 2.0 * params["w"].copy()}))
    assert abs(params["w"][0]) < 1e-2


def test_non_finite_gradient_names_parameter():
    params = {"layer.weight": np.array([1.0])}
    state = Adam(params, lr=0.01)
    with pytest.raises(ShapeError, match="layer.weight"):
        state.step(GradSet({"layer.weight": np.array([np.nan])}))


def test_adam_step_wrapper_sets_rate():
    params = {"w": np.array([0.0])}
    state = Adam(params, lr=0.1)
    adam_step(params, GradSet({"w": np.array([1.0])}), state, lr=0.005)
    assert params["w"][0] == pytest.approx(-0.005, rel=1e-6)
    with pytest.raises(ShapeError, match="different parameter set"):
        adam_step({"w": np.array([0.0])}, GradSet({"w": np.array([1.0])}), state, 0.005)
