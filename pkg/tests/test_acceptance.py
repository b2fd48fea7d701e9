"""Acceptance checks, one test per criterion, each printing a PASS/FAIL line."""
import math

import numpy as np
import pytest

from vibrobot.actuator import motor_speed
from vibrobot.contact import normal_loads
from vibrobot.controller import run_closed_loop
from vibrobot.dynamics import motor_forces
from vibrobot.harness import SweepSpec, TrackSpec, run_sweep, run_tracking, trace_to_csv
from vibrobot.identifier import jacobian_check, linear_plant_demo
from vibrobot.mlp import gradient_check
from vibrobot.params import RobotParams, SimConfig
from vibrobot.sim import Drive, Plant, run_open_loop

K0 = 72509.185
SPEED = 455.6
ZERO_TOL = 1e-9  # "identically zero" for positions and angles, m and rad


def non_increasing(values, tie=0.0):
    return all(b <= a + tie for a, b in zip(values, values[1:]))


def test_motor_map(criterion):
    rng = np.random.default_rng(2024)
    sampled = rng.uniform(-3.0, 3.0, 1000)
    odd = max(abs(motor_speed(-v) + motor_speed(v)) for v in sampled)
    w1 = motor_speed(1.0)
    ok = motor_speed(0.1) == 0.0 and abs(w1 - 87.08) <= 1e-9 and odd == 0.0
    assert criterion(1, ok, f"w(0.1)={motor_speed(0.1)!r} w(1)={w1!r} "
                            f"max|w(-V)+w(V)|={odd!r} over 1000 V")


def test_static_contact_and_load_sum(criterion):
    params = RobotParams()
    weight = params.M * params.g
    N = normal_loads(params, 0.0, 0.0)
    static_err = float(np.max(np.abs(N - weight / 3) / (weight / 3)))
    worst = 0.0
    for omega_e, omega_d in ((SPEED, SPEED), (motor_speed(3.0), -motor_speed(3.0))):
        plant = Plant(params, SimConfig())
        for _ in range(20000):
            plant.advance(omega_e, omega_d, 1)
            _, _, ve, vd = motor_forces(plant.p, omega_e, omega_d, plant.s[6], plant.s[7])
            W = weight + ve + vd
            expected = W if W > 0 else 0.0
            worst = max(worst, abs(plant.N.sum() - expected) / weight)
    ok = static_err <= 1e-12 and worst <= 1e-12
    assert criterion(2, ok, f"N_i=Mg/3={weight / 3:.6f} N rel err {static_err:.1e}; "
                            f"max rel |sum N - (Mg + vertical)| {worst:.1e} over 40000 steps "
                            f"(limit 1e-12)")


def test_frictionless_symmetry(criterion):
    config = SimConfig(duration=2.0, record_full_rate=True)
    trace = run_open_loop(config, RobotParams(mu=0.0), Drive.speeds(SPEED))
    max_y = float(np.max(np.abs(trace["Y"])))
    max_phi = float(np.max(np.abs(trace["phi"])))
    ok = max_y <= ZERO_TOL and max_phi <= ZERO_TOL
    assert criterion(3, ok, f"mu=0, 2 s: max|Y|={max_y:.1e} m, max|phi|={max_phi:.1e} rad "
                            f"(limit {ZERO_TOL:g})")


def test_parameter_trends(criterion):
    ks = run_sweep(SweepSpec("k", (K0 / 10, K0, K0 * 10)))
    mus = run_sweep(SweepSpec("mu", (0.18, 0.36, 0.72)))
    abs_y = [r.final_abs_Y for r in ks.rows]
    abs_phi = [r.final_abs_phi for r in ks.rows]
    xs = [r.final_X for r in mus.rows]
    # |Y| and |phi| sit at rounding level; differences inside the zero
    # tolerance count as ties
    ok = (non_increasing(abs_y, ZERO_TOL) and non_increasing(abs_phi, ZERO_TOL)
          and non_increasing(xs))
    assert criterion(4, ok, "k sweep |Y|=" + ", ".join(f"{v:.1e}" for v in abs_y)
                     + " |phi|=" + ", ".join(f"{v:.1e}" for v in abs_phi)
                     + "; mu sweep X=" + ", ".join(f"{v:.4f}" for v in xs))


def test_gradient_oracles(criterion):
    seeds = range(20)
    mlp_err = max(gradient_check(s) for s in seeds)
    ident_err = max(jacobian_check(s) for s in seeds)
    ok = mlp_err <= 1e-4 and ident_err <= 1e-6
    assert criterion(5, ok, f"20 seeds: mlp max rel err {mlp_err:.1e} (limit 1e-4), "
                            f"identifier {ident_err:.1e} (limit 1e-6)")


def test_identifier_convergence(criterion):
    J, mse, power = linear_plant_demo(seed=0, steps=5000, eta=0.01)
    ok = 0.45 <= J <= 0.55 and mse < 0.01 * power
    assert criterion(6, ok, f"J={J:.4f} (0.45..0.55), MSE {100 * mse / power:.3f}% of power "
                            f"(limit 1%)")


@pytest.fixture(scope="module")
def tracking_runs():
    config = SimConfig()
    return (run_tracking(TrackSpec(0.02, 0.0, 10.0), config),
            run_tracking(TrackSpec(0.0, 0.2, 10.0), config), config)


def test_closed_loop_tracking(criterion, tracking_runs):
    translation, rotation, config = tracking_runs
    v_peak = max(float(np.max(np.abs(r.trace[c]))) for r in (translation, rotation)
                 for c in ("V_e", "V_d"))
    in_bounds = True
    for r in (translation, rotation):
        for names, bound in ((("Kp_t", "Ki_t", "Kd_t"), config.gain_bounds_t),
                             (("Kp_r", "Ki_r", "Kd_r"), config.gain_bounds_r)):
            for name, g in zip(names, bound):
                col = r.trace[name]
                in_bounds &= bool(np.all(col >= 0.0) and np.all(col <= g))
    ok = (translation.steady_e_t <= 1e-3 and rotation.steady_e_r <= 1e-2 and v_peak <= 3.0
          and in_bounds)
    assert criterion(7, ok, f"steady |e_t|={translation.steady_e_t:.2e} m (limit 1e-3), "
                            f"steady |e_r|={rotation.steady_e_r:.2e} rad (limit 1e-2), "
                            f"max|V|={v_peak:g}, gains in bounds={in_bounds}")


def test_reproducible_outputs(criterion, tmp_path):
    config = SimConfig(rng_seed=7)
    texts = []
    for _ in range(2):
        trace = run_closed_loop(config, RobotParams(), 0.02, 0.2, duration=1.0)
        texts.append(trace_to_csv(trace).encode())
    ok = texts[0] == texts[1]
    assert criterion(8, ok, f"two closed-loop runs, seed 7: CSVs of {len(texts[0])} bytes "
                            f"identical={ok}")


def test_time_step_convergence(criterion):
    ok = True
    details = []
    for x_d, phi_d in ((0.02, 0.0), (0.0, 0.2)):
        poses = []
        for dt in (1e-5, 5e-6):
            tr = run_closed_loop(SimConfig(physics_dt=dt), RobotParams(), x_d, phi_d, duration=0.5)
            poses.append(np.array([tr.final("X"), tr.final("Y"), tr.final("phi")]))
        coarse, fine = poses
        rel_pos = math.hypot(*(coarse[:2] - fine[:2])) / math.hypot(fine[0], fine[1])
        d_phi = abs(coarse[2] - fine[2])
        if abs(fine[2]) > ZERO_TOL:
            phi_ok = d_phi <= 0.01 * abs(fine[2])
            phi_text = f"angle {100 * d_phi / abs(fine[2]):.1e}%"
        else:
            # no rotation to speak of: both runs must keep the angle at zero
            phi_ok = d_phi <= ZERO_TOL
            phi_text = f"angle diff {d_phi:.1e} rad"
        ok &= rel_pos <= 0.01 and phi_ok
        details.append(f"({x_d}, {phi_d}): position {100 * rel_pos:.1e}%, {phi_text}")
    assert criterion(9, ok, "dt 1e-5 vs 5e-6 over 0.5 s, " + "; ".join(details)
                     + " (limit 1% of displacement)")
