"""Planar rigid-body equations of motion of the three-legged robot.

State vector layout used by the compiled kernels::

    s = [X, Y, phi, Xdot, Ydot, phidot, theta_e, theta_d]

Leg forces enter in the body frame and are rotated by the yaw angle; the
yaw equation uses the leg coordinates of :func:`vibrobot.params.leg_positions`
and the motor mounts at ``(0, -d1)`` (motor e) and ``(0, +d1)`` (motor d).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .actuator import RotorState, eccentric_force
from .contact import ContactState, LegLoads, Mode, friction_k, leg_kinematics, normal_loads_k
from .params import P_D1, P_IZZ, P_L, P_M, P_MD, P_ME, P_RD, P_RE, SQRT3

NSTATE = 8


@njit(cache=True)
def motor_forces(p, omega_e, omega_d, theta_e, theta_d):
    """Body-x thrust, yaw torque and vertical loads of the two rotors."""
    he, ve = eccentric_force(p[P_ME], p[P_RE], omega_e, theta_e)
    hd, vd = eccentric_force(p[P_MD], p[P_RD], omega_d, theta_d)
    # motor e enters every component with a minus sign, motor d with a plus
    thrust = -he + hd
    torque = -p[P_D1] * he - p[P_D1] * hd
    return thrust, torque, -ve, vd


@njit(cache=True)
def accelerations(p, phi, thrust, torque, fx, fy):
    """(Xddot, Yddot, phiddot) for body-frame leg forces ``fx``, ``fy``."""
    l = p[P_L]
    sx = thrust + fx[0] + fx[1] + fx[2]
    sy = fy[0] + fy[1] + fy[2]
    c = math.cos(phi)
    s = math.sin(phi)
    xdd = (sx * c - sy * s) / p[P_M]
    ydd = (sx * s + sy * c) / p[P_M]
    tau = (SQRT3 * l / 6 * fy[0] - l / 2 * fx[0] - SQRT3 * l / 3 * fy[1]
           + SQRT3 * l / 6 * fy[2] + l / 2 * fx[2] + torque)
    return xdd, ydd, tau / p[P_IZZ]


@njit(cache=True)
def derivative_k(s, omega_e, omega_d, mode, anchors, p, out, pos, vel, N, fx, fy):
    """Full state derivative with the contact mode held fixed.

    ``pos``, ``vel`` (3, 2) and ``N``, ``fx``, ``fy`` (3,) are scratch buffers;
    on return they hold the leg kinematics, loads and forces used.
    """
    thrust, torque, ve, vd = motor_forces(p, omega_e, omega_d, s[6], s[7])
    na, nb, nc = normal_loads_k(p, ve, vd)
    N[0] = na
    N[1] = nb
    N[2] = nc
    leg_kinematics(s, p, pos, vel)
    friction_k(mode, anchors, s[2], pos, vel, N, p, fx, fy)
    xdd, ydd, pdd = accelerations(p, s[2], thrust, torque, fx, fy)
    out[0] = s[3]
    out[1] = s[4]
    out[2] = s[5]
    out[3] = xdd
    out[4] = ydd
    out[5] = pdd
    out[6] = omega_e
    out[7] = omega_d


# --- value-type API ---------------------------------------------------------

@dataclass(frozen=True)
class RobotState:
    X: float = 0.0
    Y: float = 0.0
    phi: float = 0.0
    Xdot: float = 0.0
    Ydot: float = 0.0
    phidot: float = 0.0
    rotor: RotorState = field(default_factory=RotorState)
    contact: ContactState | None = None

    def vector(self):
        return np.array([self.X, self.Y, self.phi, self.Xdot, self.Ydot, self.phidot,
                         self.rotor.theta_e, self.rotor.theta_d])


@dataclass(frozen=True)
class StateDerivative:
    Xdot: float
    Ydot: float
    phidot: float
    Xddot: float
    Yddot: float
    phiddot: float
    theta_e_dot: float
    theta_d_dot: float

    def vector(self):
        return np.array([self.Xdot, self.Ydot, self.phidot, self.Xddot, self.Yddot,
                         self.phiddot, self.theta_e_dot, self.theta_d_dot])


def state_derivative(state, loads, params):
    """Time derivative of ``state`` given the body-frame leg forces in ``loads``."""
    p = params.as_array()
    r = state.rotor
    thrust, torque, _, _ = motor_forces(p, r.omega_e, r.omega_d, r.theta_e, r.theta_d)
    f = np.asarray(loads.f, dtype=float).reshape(3, 2)
    xdd, ydd, pdd = accelerations(p, state.phi, thrust, torque,
                                  np.ascontiguousarray(f[:, 0]), np.ascontiguousarray(f[:, 1]))
    return StateDerivative(state.Xdot, state.Ydot, state.phidot, xdd, ydd, pdd,
                           r.omega_e, r.omega_d)


def leg_world_state(state, params):
    """World positions and velocities (each (3, 2)) of the legs."""
    pos = np.zeros((3, 2))
    vel = np.zeros((3, 2))
    leg_kinematics(state.vector(), params.as_array(), pos, vel)
    return pos, vel


def contact_loads(state, params):
    """Leg loads consistent with ``state`` and its contact mode."""
    p = params.as_array()
    r = state.rotor
    _, _, ve, vd = motor_forces(p, r.omega_e, r.omega_d, r.theta_e, r.theta_d)
    N = np.array(normal_loads_k(p, ve, vd))
    pos, vel = leg_world_state(state, params)
    contact = state.contact
    anchors = contact.anchors if contact.mode == Mode.STUCK else np.zeros((3, 2))
    fx = np.zeros(3)
    fy = np.zeros(3)
    friction_k(int(contact.mode), np.ascontiguousarray(anchors), state.phi, pos, vel, N, p, fx, fy)
    return LegLoads(N, np.column_stack([fx, fy]))
