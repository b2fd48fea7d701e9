"""Fixed-step integration of the robot with stick/slip mode switching.

Each physics step is one classical RK4 step with the contact mode and the
stick anchors frozen; the mode machine runs once at the end of the step.
Rotor speeds are algebraic in the applied voltage and constant over a step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .actuator import RotorState, motor_speed, wrap_phase
from .contact import SLIDING, STUCK, ContactState, Mode, leg_kinematics, next_mode_k, normal_loads_k, spring_forces_k
from .dynamics import NSTATE, RobotState, derivative_k, motor_forces
from .params import P_K, P_MU, leg_positions


class IntegrationError(RuntimeError):
    """The state became non-finite."""

    def __init__(self, t):
        self.t = t
        super().__init__(f"integration blew up at t = {t:.6g} s")


@njit(cache=True)
def _rk4(s, omega_e, omega_d, mode, anchors, p, dt, k1, k2, k3, k4, tmp, pos, vel, N, fx, fy):
    derivative_k(s, omega_e, omega_d, mode, anchors, p, k1, pos, vel, N, fx, fy)
    for j in range(NSTATE):
        tmp[j] = s[j] + 0.5 * dt * k1[j]
    derivative_k(tmp, omega_e, omega_d, mode, anchors, p, k2, pos, vel, N, fx, fy)
    for j in range(NSTATE):
        tmp[j] = s[j] + 0.5 * dt * k2[j]
    derivative_k(tmp, omega_e, omega_d, mode, anchors, p, k3, pos, vel, N, fx, fy)
    for j in range(NSTATE):
        tmp[j] = s[j] + dt * k3[j]
    derivative_k(tmp, omega_e, omega_d, mode, anchors, p, k4, pos, vel, N, fx, fy)
    for j in range(NSTATE):
        s[j] = s[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
    s[6] = wrap_phase(s[6])
    s[7] = wrap_phase(s[7])


@njit(cache=True)
def advance_k(s, mode, anchors, omega_e, omega_d, p, dt, nsteps, eps_v, N):
    """Integrate ``nsteps`` physics steps in place.

    Returns ``(mode, failed_step)`` where ``failed_step`` is -1 on success.
    ``anchors`` is updated in place; ``N`` receives the end-state normal loads.
    """
    k1 = np.empty(NSTATE)
    k2 = np.empty(NSTATE)
    k3 = np.empty(NSTATE)
    k4 = np.empty(NSTATE)
    tmp = np.empty(NSTATE)
    pos = np.empty((3, 2))
    vel = np.empty((3, 2))
    fx = np.empty(3)
    fy = np.empty(3)
    for n in range(nsteps):
        vx0 = s[3]
        vy0 = s[4]
        _rk4(s, omega_e, omega_d, mode, anchors, p, dt, k1, k2, k3, k4, tmp, pos, vel, N, fx, fy)
        for j in range(NSTATE):
            if not math.isfinite(s[j]):
                return mode, n
        # end-of-step mode update
        _, _, ve, vd = motor_forces(p, omega_e, omega_d, s[6], s[7])
        na, nb, nc = normal_loads_k(p, ve, vd)
        N[0] = na
        N[1] = nb
        N[2] = nc
        leg_kinematics(s, p, pos, vel)
        spring_sum = 0.0
        if mode == STUCK:
            spring_forces_k(s[2], pos, anchors, fx, fy, p[P_K])
            for i in range(3):
                spring_sum += math.sqrt(fx[i] * fx[i] + fy[i] * fy[i])
        speed = math.sqrt(s[3] * s[3] + s[4] * s[4])
        reversed_ = vx0 * s[3] + vy0 * s[4] < 0.0
        new_mode = next_mode_k(mode, speed, reversed_, spring_sum, na + nb + nc, p[P_MU], eps_v)
        if new_mode == STUCK and mode == SLIDING:
            for i in range(3):
                anchors[i, 0] = pos[i, 0]
                anchors[i, 1] = pos[i, 1]
        mode = new_mode
    return mode, -1


@dataclass(frozen=True)
class Drive:
    """Open-loop excitation: fixed rotor speeds or constant motor voltages."""

    omega_e: float = 0.0
    omega_d: float = 0.0
    V_e: float = math.nan
    V_d: float = math.nan

    @classmethod
    def speeds(cls, omega_e, omega_d=None):
        return cls(omega_e=omega_e, omega_d=omega_e if omega_d is None else omega_d)

    @classmethod
    def voltages(cls, V_e, V_d=None):
        V_d = V_e if V_d is None else V_d
        return cls(motor_speed(V_e), motor_speed(V_d), V_e, V_d)


class Plant:
    """Mutable integrator state for one run (single owner)."""

    def __init__(self, params, config, state=None):
        self.params = params
        self.config = config
        self.p = params.as_array(config.v_reg)
        self.s = np.zeros(NSTATE)
        self.N = np.zeros(3)
        self.omega_e = 0.0
        self.omega_d = 0.0
        self.t = 0.0
        self.steps = 0
        if state is None:
            state = initial_state(config, params)
        self.set_state(state)

    def set_state(self, state):
        self.s[:] = state.vector()
        self.omega_e = state.rotor.omega_e
        self.omega_d = state.rotor.omega_d
        contact = state.contact or ContactState(Mode.SLIDING)
        self.mode = int(contact.mode)
        self.anchors = np.zeros((3, 2)) if contact.anchors is None else np.array(contact.anchors)
        _, _, ve, vd = motor_forces(self.p, self.omega_e, self.omega_d, self.s[6], self.s[7])
        self.N[:] = normal_loads_k(self.p, ve, vd)

    def state(self):
        s = self.s
        rotor = RotorState(s[6], s[7], self.omega_e, self.omega_d)
        if self.mode == STUCK:
            contact = ContactState(Mode.STUCK, self.anchors.copy())
        else:
            contact = ContactState(Mode.SLIDING)
        return RobotState(s[0], s[1], s[2], s[3], s[4], s[5], rotor, contact)

    def advance(self, omega_e, omega_d, nsteps):
        dt = self.config.physics_dt
        self.omega_e = float(omega_e)
        self.omega_d = float(omega_d)
        self.mode, failed = advance_k(self.s, self.mode, self.anchors, self.omega_e, self.omega_d,
                                      self.p, dt, nsteps, self.config.eps_v, self.N)
        if failed >= 0:
            raise IntegrationError((self.steps + failed + 1) * dt)
        self.steps += nsteps
        self.t = self.steps * dt


def initial_state(config, params):
    """Robot at rest at the origin, stuck, anchors at the nominal leg positions."""
    rotor = RotorState(config.theta_e0, config.theta_d0, 0.0, 0.0)
    return RobotState(rotor=rotor, contact=ContactState(Mode.STUCK, leg_positions(params)))


def step(state, drive, params, dt, eps_v=1e-6, v_reg=1e-3):
    """Advance ``state`` by one physics step under ``drive``.

    ``drive`` is a :class:`Drive` or a ``(V_e, V_d)`` voltage pair; voltages
    are converted to rotor speeds at the start of the step.
    """
    from .params import SimConfig

    if not isinstance(drive, Drive):
        drive = Drive.voltages(*drive)
    plant = Plant(params, SimConfig(physics_dt=dt, control_dt=dt, eps_v=eps_v, v_reg=v_reg), state)
    plant.advance(drive.omega_e, drive.omega_d, 1)
    return plant.state()


BASE_COLUMNS = ("t", "X", "Y", "phi", "x", "V_e", "V_d", "omega_e", "omega_d",
                "N_a", "N_b", "N_c", "mode")
CONTROL_COLUMNS = ("Kp_t", "Ki_t", "Kd_t", "Kp_r", "Ki_r", "Kd_r", "e_t", "e_r")


@dataclass
class SimTrace:
    """Column-oriented run record plus metadata.

    ``mode`` holds 0 (stuck) or 1 (sliding).
    """

    columns: dict
    meta: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.columns[name]

    def __len__(self):
        return len(self.columns["t"])

    @property
    def names(self):
        return tuple(self.columns)

    def final(self, name):
        return float(self.columns[name][-1])


class Recorder:
    def __init__(self, n, names):
        self.names = names
        self.data = {name: np.full(n, np.nan) for name in names}
        self.i = 0

    def record(self, plant, t, V_e=math.nan, V_d=math.nan, **extra):
        s = plant.s
        row = dict(t=t, X=s[0], Y=s[1], phi=s[2], x=s[0] * math.cos(s[2]) + s[1] * math.sin(s[2]),
                   V_e=V_e, V_d=V_d, omega_e=plant.omega_e, omega_d=plant.omega_d,
                   N_a=plant.N[0], N_b=plant.N[1], N_c=plant.N[2], mode=plant.mode, **extra)
        for name in self.names:
            self.data[name][self.i] = row[name]
        self.i += 1

    def trace(self, meta):
        cols = {k: v[: self.i] for k, v in self.data.items()}
        cols["mode"] = cols["mode"].astype(np.int64)
        return SimTrace(cols, meta)


def sample_plan(config, duration):
    """``(n_samples, steps_per_sample, sample_dt)`` for a run of ``duration`` seconds."""
    per = 1 if config.record_full_rate else config.substeps
    sample_dt = per * config.physics_dt
    nsamples = int(round(duration / sample_dt))
    return nsamples, per, sample_dt


def run_metadata(config, params, **extra):
    from .params import dump_config

    meta = {"config": dump_config(config, params), "seed": config.rng_seed}
    meta.update(extra)
    return meta


def run_open_loop(config, params, drive, duration=None):
    """Integrate from rest under a constant drive and record every control period."""
    duration = config.duration if duration is None else duration
    nsamples, per, sample_dt = sample_plan(config, duration)
    plant = Plant(params, config)
    rec = Recorder(nsamples + 1, BASE_COLUMNS)
    plant.omega_e, plant.omega_d = drive.omega_e, drive.omega_d
    plant.set_state(RobotState(rotor=RotorState(config.theta_e0, config.theta_d0,
                                                drive.omega_e, drive.omega_d),
                               contact=ContactState(Mode.STUCK, leg_positions(params))))
    rec.record(plant, 0.0, drive.V_e, drive.V_d)
    for i in range(1, nsamples + 1):
        plant.advance(drive.omega_e, drive.omega_d, per)
        rec.record(plant, i * sample_dt, drive.V_e, drive.V_d)
    return rec.trace(run_metadata(config, params, kind="openloop",
                                  drive=f"omega_e={drive.omega_e!r} omega_d={drive.omega_d!r} "
                                        f"V_e={drive.V_e!r} V_d={drive.V_d!r}"))


def kinetic_energy(state, params):
    return 0.5 * params.M * (state.Xdot ** 2 + state.Ydot ** 2) + 0.5 * params.I_zz * state.phidot ** 2


def mechanical_energy(state, params):
    """Kinetic energy plus the energy stored in the stick springs."""
    energy = kinetic_energy(state, params)
    if state.contact is not None and state.contact.mode == Mode.STUCK:
        pos = np.zeros((3, 2))
        vel = np.zeros((3, 2))
        leg_kinematics(state.vector(), params.as_array(), pos, vel)
        energy += 0.5 * params.k * float(np.sum((pos - state.contact.anchors) ** 2))
    return energy
