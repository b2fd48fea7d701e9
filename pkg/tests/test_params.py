import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from vibrobot.params import (ConfigError, RobotParams, SimConfig, dump_config, leg_positions,
                             load_config, motor_mounts, parse_config, with_overrides)


def test_empty_config_gives_table_defaults():
    config, params = parse_config("")
    assert params == RobotParams()
    assert config == SimConfig()
    assert params.M == 7.2e-3
    assert params.mu == 0.36
    assert params.k == 72509.185
    assert params.I_zz == 9.2e-7


def test_single_key_override_changes_only_that_key():
    _, params = parse_config("mu = 0.0\n")
    assert params.mu == 0.0
    assert params == RobotParams(mu=0.0)


def test_negative_mass_names_the_key():
    with pytest.raises(ConfigError) as info:
        parse_config("# robot\nM = -1\n")
    assert info.value.key == "M"
    assert info.value.line == 2


@pytest.mark.parametrize("text, key, line", [
    ("bogus = 1\n", "bogus", 1),
    ("\nk = fast\n", "k", 2),
    ("physics_dt = 1e-5\ncontrol_dt = 3e-5\nrecord_full_rate = maybe\n", "record_full_rate", 3),
])
def test_bad_entries_report_key_and_line(text, key, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.key == key
    assert info.value.line == line


def test_missing_equals_sign_reports_line():
    with pytest.raises(ConfigError) as info:
        parse_config("mu 0.2\n")
    assert info.value.line == 1


def test_control_period_must_be_a_multiple_of_the_physics_step():
    with pytest.raises(ConfigError) as info:
        SimConfig(physics_dt=1e-5, control_dt=1.5e-5)
    assert info.value.key == "control_dt"
    assert SimConfig(physics_dt=1e-5, control_dt=1e-3).substeps == 100


def test_mu_zero_allowed_but_not_negative():
    assert RobotParams(mu=0.0).mu == 0.0
    with pytest.raises(ConfigError):
        RobotParams(mu=-0.1)
    with pytest.raises(ConfigError):
        RobotParams(k=math.inf)


def test_mix_sign_restricted():
    with pytest.raises(ConfigError):
        SimConfig(mix_sign=0)


def test_missing_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.cfg")


def test_file_keys_are_reported(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("duration = 3.5  # seconds\nk = 1000\n")
    seen = set()
    config, params = load_config(path, seen)
    assert seen == {"duration", "k"}
    assert config.duration == 3.5
    assert params.k == 1000.0


@given(mu=st.floats(0.0, 2.0), k=st.floats(1.0, 1e7), dt_exp=st.integers(4, 6),
       seed=st.integers(0, 2**31 - 1), guard=st.booleans())
def test_dump_parse_round_trip(mu, k, dt_exp, seed, guard):
    params = RobotParams(mu=mu, k=k)
    config = SimConfig(physics_dt=10.0 ** -dt_exp, control_dt=10.0 ** -dt_exp, rng_seed=seed,
                       sign_guard=guard)
    assert parse_config(dump_config(config, params)) == (config, params)


def test_with_overrides_routes_keys():
    config, params = with_overrides(SimConfig(), RobotParams(), mu=0.1, rng_seed=7)
    assert params.mu == 0.1
    assert config.rng_seed == 7
    with pytest.raises(ConfigError):
        with_overrides(SimConfig(), RobotParams(), nonsense=1)


def test_leg_positions_for_default_side():
    legs = leg_positions(RobotParams())
    expected = [[0.011547, 0.02], [-0.023094, 0.0], [0.011547, -0.02]]
    np.testing.assert_allclose(legs, expected, atol=5e-7)


@given(st.floats(1e-3, 1.0))
def test_leg_triangle_is_equilateral_and_centred(l):
    legs = leg_positions(RobotParams(l=l))
    np.testing.assert_allclose(legs.mean(axis=0), 0.0, atol=1e-15)
    for i, j in ((0, 1), (1, 2), (0, 2)):
        assert math.isclose(np.linalg.norm(legs[i] - legs[j]), l, rel_tol=1e-12)


def test_motor_mounts_on_body_y_axis():
    np.testing.assert_array_equal(motor_mounts(RobotParams()), [[0.0, -0.01], [0.0, 0.01]])
