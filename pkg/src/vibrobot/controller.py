"""Self-tuning neural PID control of translation and yaw.

Each channel runs a gain network fed with the error, its running integral
and its backward difference (three inputs, three gains out), plus a NARX
identifier supplying the plant sensitivity used to train the gain network.
The translation and rotation commands are mixed into two motor voltages as
common and differential parts and clipped to the motor rating.

With anti-phase rotors, a differential voltage turns the robot towards
positive yaw when ``V_e > V_d``; ``mix_sign = -1`` orients the mix so that a
positive rotation command does that. Both channels therefore have a positive
plant gain, and the sign guard holds the identifier's Jacobian at or above
``j_min``. At these scales the true sensitivity is far smaller than the
identifier's estimation noise, so an estimate of the wrong sign is treated
as noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .actuator import motor_speed
from .identifier import Identifier
from .mlp import Mlp
from .sim import BASE_COLUMNS, CONTROL_COLUMNS, Plant, Recorder, run_metadata, sample_plan

# fallback identifier output spans when a channel's reference is zero
DEFAULT_SPAN_T = 0.02
DEFAULT_SPAN_R = 0.2


class ControllerDivergence(RuntimeError):
    def __init__(self, tick, gains):
        self.tick = tick
        self.gains = gains
        super().__init__(f"controller diverged at tick {tick} (last gains {gains})")


def body_displacement(X, Y, phi):
    """Displacement along the body x axis."""
    return X * math.cos(phi) + Y * math.sin(phi)


def channel_errors(X, Y, phi, x_d, phi_d):
    """Translation and rotation tracking errors ``(e_t, e_r)``."""
    return x_d - body_displacement(X, Y, phi), phi_d - phi


def pid_output(gains, e_p, e_i, e_d):
    return gains[0] * e_p + gains[1] * e_i + gains[2] * e_d


def mix(u_t, u_r, v_max, sign=1):
    """Common/differential mix into clipped motor voltages.

    ``V_e = u_t - sign * u_r`` and ``V_d = u_t + sign * u_r`` before clipping.
    Returns ``(V_e, V_d, clipped)``.
    """
    raw_e = u_t - sign * u_r
    raw_d = u_t + sign * u_r
    V_e = min(max(raw_e, -v_max), v_max)
    V_d = min(max(raw_d, -v_max), v_max)
    return V_e, V_d, (V_e != raw_e) or (V_d != raw_d)


class PidChannel:
    """One adaptive PID loop with its gain network and plant identifier."""

    def __init__(self, reference, span, gmax, config, rng):
        self.reference = float(reference)
        self.span = float(span)
        self.v_max = config.v_max
        self.dt = config.control_dt
        self.gmax = np.asarray(gmax, dtype=float)
        self.literal = config.literal_mode
        self.sign_guard = config.sign_guard and not config.literal_mode
        self.j_min = config.j_min
        self.tuner = Mlp(3, config.hidden_tuner, 3, eta=config.eta_tuner, rng=rng)
        self.identifier = Identifier(config.ident_order, config.hidden_ident, config.eta_ident,
                                     u_scale=config.v_max, y_scale=span, rng=rng)
        self.e_prev = None
        self.e_int = 0.0
        self.frozen = False
        self.gains = np.zeros(3)
        self.terms = np.zeros(3)
        self.u = 0.0
        self.J = 0.0
        self._pending = False

    def _network_inputs(self, terms):
        return terms / self.span

    def gains_from_outputs(self, o):
        if self.literal:
            return o.copy()
        return self.gmax * (1.0 + o) / 2.0

    def control_sensitivity(self):
        """d(u / v_max) / d(network output) for the pending command."""
        if self.literal:
            return np.ones(3)
        return self.terms * self.gmax / (2.0 * self.v_max)

    def scaled_jacobian(self):
        J = self.J * self.v_max / self.span
        if self.sign_guard:
            # the mix is oriented so that a positive command moves the output
            # up; a smaller or opposite estimate is identifier noise
            J = max(J, self.j_min)
        return J

    def update(self, y):
        """Consume the new plant output and return the raw channel command."""
        e = self.reference - y
        if self._pending:
            ident = self.identifier
            ident.predict()
            self.J = ident.jacobian()
            ident.train_step(y)
            # the gain network is trained on the outcome of its previous command
            self.tuner.backward(e / self.span, self.scaled_jacobian(), self.control_sensitivity())
        else:
            self.identifier.y_hist.appendleft(float(y))
        if not self.frozen:
            self.e_int += e * self.dt
        e_d = 0.0 if self.e_prev is None else (e - self.e_prev) / self.dt
        self.e_prev = e
        self.terms = np.array([e, self.e_int, e_d])
        o = self.tuner.forward(self._network_inputs(self.terms))
        self.gains = self.gains_from_outputs(o)
        self.u = pid_output(self.gains, *self.terms)
        self.error = e
        return self.u

    def applied(self, u_effective, clipped):
        self.identifier.observe_input(u_effective)
        self.frozen = clipped
        self._pending = True


@dataclass
class ControlOutput:
    V_e: float
    V_d: float
    gains_t: np.ndarray
    gains_r: np.ndarray
    e_t: float
    e_r: float
    clipped: bool


class TrackingController:
    """Both channels plus the voltage mixer."""

    def __init__(self, config, x_d, phi_d):
        rng = np.random.default_rng(config.rng_seed)
        span_t = config.y_span_t if config.y_span_t > 0 else (abs(x_d) or DEFAULT_SPAN_T)
        span_r = config.y_span_r if config.y_span_r > 0 else (abs(phi_d) or DEFAULT_SPAN_R)
        self.config = config
        self.translation = PidChannel(x_d, span_t, config.gain_bounds_t, config, rng)
        self.rotation = PidChannel(phi_d, span_r, config.gain_bounds_r, config, rng)
        self.tick = 0

    def control_step(self, X, Y, phi):
        tr, rot = self.translation, self.rotation
        u_t = tr.update(body_displacement(X, Y, phi))
        u_r = rot.update(phi)
        sign = self.config.mix_sign
        V_e, V_d, clipped = mix(u_t, u_r, self.config.v_max, sign)
        if not (math.isfinite(V_e) and math.isfinite(V_d)
                and np.all(np.isfinite(tr.gains)) and np.all(np.isfinite(rot.gains))):
            raise ControllerDivergence(self.tick, (tr.gains.tolist(), rot.gains.tolist()))
        tr.applied(0.5 * (V_e + V_d), clipped)
        rot.applied(0.5 * sign * (V_d - V_e), clipped)
        self.tick += 1
        return ControlOutput(V_e, V_d, tr.gains.copy(), rot.gains.copy(), tr.error, rot.error,
                             clipped)


def run_closed_loop(config, params, x_d, phi_d, duration=None):
    """Track the step references ``(x_d, phi_d)`` from rest; returns a SimTrace."""
    duration = config.duration if duration is None else duration
    nticks = int(round(duration / config.control_dt))
    nsamples, per, sample_dt = sample_plan(config, duration)
    plant = Plant(params, config)
    ctrl = TrackingController(config, x_d, phi_d)
    rec = Recorder(nsamples + 1, BASE_COLUMNS + CONTROL_COLUMNS)
    substeps = config.substeps
    out = None
    for k in range(nticks + 1):
        s = plant.s
        out = ctrl.control_step(s[0], s[1], s[2])
        omega_e, omega_d = motor_speed(out.V_e), motor_speed(out.V_d)
        plant.omega_e, plant.omega_d = omega_e, omega_d
        extra = dict(Kp_t=out.gains_t[0], Ki_t=out.gains_t[1], Kd_t=out.gains_t[2],
                     Kp_r=out.gains_r[0], Ki_r=out.gains_r[1], Kd_r=out.gains_r[2],
                     e_t=out.e_t, e_r=out.e_r)
        if k == nticks:
            rec.record(plant, k * config.control_dt, out.V_e, out.V_d, **extra)
            break
        if per == substeps:
            rec.record(plant, k * config.control_dt, out.V_e, out.V_d, **extra)
            plant.advance(omega_e, omega_d, substeps)
        else:
            for j in range(substeps // per):
                rec.record(plant, (k * substeps + j * per) * config.physics_dt,
                           out.V_e, out.V_d, **extra)
                plant.advance(omega_e, omega_d, per)
    meta = run_metadata(config, params, kind="track", x_d=x_d, phi_d=phi_d)
    trace = rec.trace(meta)
    trace.controller = ctrl
    return trace
