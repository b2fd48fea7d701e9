import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vibrobot.controller import (ControllerDivergence, PidChannel, TrackingController,
                                 body_displacement, channel_errors, mix, pid_output,
                                 run_closed_loop)
from vibrobot.params import RobotParams, SimConfig


@pytest.mark.parametrize("X, Y, phi, x", [(0.05, 0.1, 0.0, 0.05),
                                          (0.01, 0.01, math.pi / 4, 0.0141421),
                                          (0.3, 0.2, math.pi / 2, 0.2)])
def test_body_displacement(X, Y, phi, x):
    assert body_displacement(X, Y, phi) == pytest.approx(x, abs=1e-7)


def test_channel_errors():
    assert channel_errors(0.0, 0.0, 0.0, 0.02, 0.0) == (0.02, 0.0)
    assert channel_errors(0.0, 0.0, 0.05, 0.0, 0.2)[1] == pytest.approx(0.15)
    assert channel_errors(0.1, 0.0, 0.0, 0.1, 0.0) == (0.0, 0.0)


@pytest.mark.parametrize("gains, errors, u", [((1, 0, 0), (0.5, 0, 0), 0.5),
                                              ((2, 3, 4), (0.1, 0.2, 0.05), 1.0),
                                              ((5, 6, 7), (0, 0, 0), 0.0)])
def test_pid_output(gains, errors, u):
    assert pid_output(np.array(gains, float), *errors) == pytest.approx(u, abs=1e-15)


def test_mix_arithmetic_and_clipping():
    V_e, V_d, clipped = mix(1.0, 0.3, 3.0)
    assert (V_e, V_d, clipped) == (pytest.approx(0.7), pytest.approx(1.3), False)
    assert mix(1.0, 0.3, 3.0, sign=-1)[:2] == (pytest.approx(1.3), pytest.approx(0.7))
    assert mix(5.0, 0.0, 3.0) == (3.0, 3.0, True)


@given(st.floats(-10, 10), st.floats(-10, 10), st.sampled_from([-1, 1]))
def test_mix_respects_voltage_limit(u_t, u_r, sign):
    V_e, V_d, clipped = mix(u_t, u_r, 3.0, sign)
    assert abs(V_e) <= 3.0 and abs(V_d) <= 3.0
    if not clipped:
        assert V_e + V_d == pytest.approx(2 * u_t)


def test_saturated_command_freezes_the_integral():
    ctrl = TrackingController(SimConfig(), 1.0, 0.0)
    out = ctrl.control_step(0.0, 0.0, 0.0)
    assert out.clipped and out.V_e == 3.0 and out.V_d == 3.0
    held = ctrl.translation.e_int
    ctrl.control_step(0.0, 0.0, 0.0)
    assert ctrl.translation.e_int == held


def test_zero_references_keep_the_robot_home():
    trace = run_closed_loop(SimConfig(), RobotParams(), 0.0, 0.0, duration=0.2)
    for name in ("X", "Y", "phi", "e_t", "e_r", "V_e", "V_d"):
        np.testing.assert_array_equal(trace[name], 0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**16), st.lists(st.floats(-0.05, 0.05), min_size=5, max_size=40))
def test_gains_stay_within_bounds(seed, outputs):
    config = SimConfig(rng_seed=seed)
    channel = PidChannel(0.02, 0.02, config.gain_bounds_t, config, np.random.default_rng(seed))
    for y in outputs:
        channel.update(y)
        assert np.all(channel.gains >= 0.0) and np.all(channel.gains <= config.gain_bounds_t)
        channel.applied(min(max(channel.u, -3.0), 3.0), abs(channel.u) > 3.0)


def test_sign_guard_floors_the_jacobian():
    config = SimConfig(j_min=1e-3)
    channel = PidChannel(0.02, 0.02, config.gain_bounds_t, config, np.random.default_rng(0))
    for J in (-0.5, 0.0, 1e-6):
        channel.J = J
        assert channel.scaled_jacobian() >= 1e-3
    channel.J = 0.01
    assert channel.scaled_jacobian() == pytest.approx(0.01 * 3.0 / 0.02)


def test_literal_mode_uses_raw_network_outputs():
    config = SimConfig(literal_mode=True)
    channel = PidChannel(0.02, 0.02, config.gain_bounds_t, config, np.random.default_rng(0))
    channel.update(0.0)
    np.testing.assert_array_equal(channel.gains, channel.tuner.o1)
    channel.J = -0.2
    assert channel.scaled_jacobian() == pytest.approx(-0.2 * 3.0 / 0.02)


def test_closed_loop_is_seed_deterministic():
    a = run_closed_loop(SimConfig(rng_seed=3), RobotParams(), 0.02, 0.1, duration=0.3)
    b = run_closed_loop(SimConfig(rng_seed=3), RobotParams(), 0.02, 0.1, duration=0.3)
    c = run_closed_loop(SimConfig(rng_seed=4), RobotParams(), 0.02, 0.1, duration=0.3)
    for name in a.names:
        np.testing.assert_array_equal(a[name], b[name])
    assert not np.array_equal(a["Kp_t"], c["Kp_t"])


def test_non_finite_measurement_reports_divergence():
    ctrl = TrackingController(SimConfig(), 0.02, 0.0)
    ctrl.control_step(0.0, 0.0, 0.0)
    with pytest.raises(ControllerDivergence) as info:
        ctrl.control_step(math.nan, 0.0, 0.0)
    assert info.value.tick == 1
