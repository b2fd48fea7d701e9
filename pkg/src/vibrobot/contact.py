"""Leg normal loads and the two-mode (stuck spring / sliding Coulomb) friction model.

Normal loads are closed quasi-statically: the vertical load (weight plus the
rotors' vertical centrifugal forces) is shared among the three legs so that
force and both tipping moments balance. A leg that would have to pull is
dropped and the load is re-shared by the remaining legs.

Tangential leg forces are reported in the body frame. While stuck, each leg
is tied to its anchor by a spring of stiffness ``k``; while sliding, each
leg carries kinetic Coulomb friction opposing its own velocity. The mode is
global for the whole robot and switches on the centre-of-mass speed.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .params import P_D1, P_G, P_K, P_L, P_M, P_MU, P_VREG, SQRT3

STUCK = 0
SLIDING = 1


class Mode(enum.IntEnum):
    STUCK = STUCK
    SLIDING = SLIDING


@njit(cache=True)
def leg_coords(l):
    """Body-frame leg coordinates ``(xa, ya, xb, yb, xc, yc)``."""
    return SQRT3 * l / 6, l / 2, -SQRT3 * l / 3, 0.0, SQRT3 * l / 6, -l / 2


@njit(cache=True)
def _share_two(W, qx, qy, xj, yj, xk, yk):
    # lever rule along the segment j-k, foot point clamped onto the segment
    ex = xk - xj
    ey = yk - yj
    t = ((qx - xj) * ex + (qy - yj) * ey) / (ex * ex + ey * ey)
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    return W * (1.0 - t), W * t


@njit(cache=True)
def normal_loads_k(p, F_ve, F_vd):
    """Leg normal loads ``(N_a, N_b, N_c)`` for the given rotor vertical forces."""
    W = p[P_M] * p[P_G] + F_ve + F_vd
    if W <= 0.0:
        return 0.0, 0.0, 0.0
    xa, ya, xb, yb, xc, yc = leg_coords(p[P_L])
    d1 = p[P_D1]
    # centre of pressure; motors sit on the body y axis at -d1 (e) and +d1 (d)
    qx = 0.0
    qy = (-d1 * F_ve + d1 * F_vd) / W
    # barycentric weights of the pressure centre; a and c mirror each other
    # about the body x axis, so the split is written to stay exactly symmetric
    lb = (xa - qx) / (xa - xb)
    half = 0.5 * (1.0 - lb)
    la = half + qy / (ya - yc)
    lc = half - qy / (ya - yc)
    if la >= 0.0 and lb >= 0.0 and lc >= 0.0:
        return W * la, W * lb, W * lc
    if la < 0.0 and lb >= 0.0 and lc >= 0.0:
        nb, nc = _share_two(W, qx, qy, xb, yb, xc, yc)
        return 0.0, nb, nc
    if lb < 0.0 and la >= 0.0 and lc >= 0.0:
        na, nc = _share_two(W, qx, qy, xa, ya, xc, yc)
        return na, 0.0, nc
    if lc < 0.0 and la >= 0.0 and lb >= 0.0:
        na, nb = _share_two(W, qx, qy, xa, ya, xb, yb)
        return na, nb, 0.0
    # two legs would pull: everything rests on the third
    if la >= 0.0:
        return W, 0.0, 0.0
    if lb >= 0.0:
        return 0.0, W, 0.0
    return 0.0, 0.0, W


@njit(cache=True)
def leg_kinematics(s, p, pos, vel):
    """World positions and velocities of the three legs, written into ``pos``/``vel``."""
    xa, ya, xb, yb, xc, yc = leg_coords(p[P_L])
    bx = (xa, xb, xc)
    by = (ya, yb, yc)
    c = math.cos(s[2])
    sn = math.sin(s[2])
    for i in range(3):
        wx = c * bx[i] - sn * by[i]
        wy = sn * bx[i] + c * by[i]
        pos[i, 0] = s[0] + wx
        pos[i, 1] = s[1] + wy
        vel[i, 0] = s[3] - s[5] * wy
        vel[i, 1] = s[4] + s[5] * wx


@njit(cache=True)
def spring_forces_k(phi, pos, anchors, fx, fy, k):
    """Body-frame leg-spring forces for legs tied to ``anchors``."""
    c = math.cos(phi)
    sn = math.sin(phi)
    for i in range(3):
        dx = pos[i, 0] - anchors[i, 0]
        dy = pos[i, 1] - anchors[i, 1]
        fx[i] = -k * (c * dx + sn * dy)
        fy[i] = -k * (-sn * dx + c * dy)


@njit(cache=True)
def sliding_forces_k(phi, vel, N, fx, fy, mu, v_reg):
    """Body-frame kinetic friction opposing each leg's velocity.

    Full Coulomb magnitude ``mu N`` for leg speeds of at least ``v_reg``;
    below that the force fades linearly to zero with the speed.
    """
    c = math.cos(phi)
    sn = math.sin(phi)
    for i in range(3):
        vx = c * vel[i, 0] + sn * vel[i, 1]
        vy = -sn * vel[i, 0] + c * vel[i, 1]
        speed = max(math.sqrt(vx * vx + vy * vy), v_reg)
        fx[i] = -mu * N[i] * vx / speed
        fy[i] = -mu * N[i] * vy / speed


@njit(cache=True)
def friction_k(mode, anchors, phi, pos, vel, N, p, fx, fy):
    if mode == STUCK:
        spring_forces_k(phi, pos, anchors, fx, fy, p[P_K])
    else:
        sliding_forces_k(phi, vel, N, fx, fy, p[P_MU], p[P_VREG])


@njit(cache=True)
def next_mode_k(mode, com_speed, reversed_, spring_sum, load_sum, mu, eps_v):
    """One transition of the global stick/slip mode machine."""
    if mode == SLIDING:
        if com_speed < eps_v or reversed_:
            return STUCK
        return SLIDING
    if spring_sum > mu * load_sum:
        return SLIDING
    return STUCK


# --- value-type API ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ContactState:
    mode: Mode = Mode.STUCK
    anchors: np.ndarray | None = None

    def __post_init__(self):
        if self.mode == Mode.STUCK:
            if self.anchors is None:
                raise ValueError("stuck contact needs three anchors")
            a = np.array(self.anchors, dtype=float).reshape(3, 2)
            a.setflags(write=False)
            object.__setattr__(self, "anchors", a)
        elif self.anchors is not None:
            raise ValueError("sliding contact carries no anchors")
        object.__setattr__(self, "mode", Mode(self.mode))

    def __eq__(self, other):
        if not isinstance(other, ContactState):
            return NotImplemented
        if self.mode != other.mode:
            return False
        return self.anchors is None or np.array_equal(self.anchors, other.anchors)

    def __hash__(self):
        return hash((self.mode, None if self.anchors is None else self.anchors.tobytes()))


@dataclass(frozen=True)
class LegLoads:
    N: np.ndarray  # (3,) normal loads a, b, c
    f: np.ndarray  # (3, 2) body-frame tangential forces


def normal_loads(params, F_ve, F_vd):
    """Normal loads on legs a, b, c, in newtons."""
    return np.array(normal_loads_k(params.as_array(), float(F_ve), float(F_vd)))


def friction_forces(contact, positions, velocities, loads, params, phi=0.0, v_reg=1e-3):
    """Body-frame tangential leg forces, shape (3, 2).

    ``positions`` and ``velocities`` are world-frame leg states (3, 2); ``phi``
    is the body yaw used to rotate forces into the body frame. Sliding legs
    slower than ``v_reg`` get a proportionally reduced force.
    """
    pos = np.asarray(positions, dtype=float).reshape(3, 2)
    vel = np.asarray(velocities, dtype=float).reshape(3, 2)
    N = np.asarray(loads, dtype=float).reshape(3)
    fx = np.zeros(3)
    fy = np.zeros(3)
    anchors = contact.anchors if contact.mode == Mode.STUCK else np.zeros((3, 2))
    friction_k(int(contact.mode), np.ascontiguousarray(anchors), float(phi), pos, vel, N,
               params.as_array(v_reg), fx, fy)
    return np.column_stack([fx, fy])


def update_mode(contact, com_speed, spring_forces, loads, eps_v, mu, leg_world_positions,
                reversed_=False):
    """Return the contact state for the next step.

    Sliding becomes stuck once the centre of mass is (numerically) at rest,
    i.e. its speed is below ``eps_v`` or its velocity reversed direction
    during the step; the anchors are the current leg positions. Stuck becomes
    sliding when the total spring force exceeds ``mu`` times the total load.
    """
    spring_sum = float(np.sum(np.hypot(*np.asarray(spring_forces, dtype=float).reshape(3, 2).T)))
    mode = next_mode_k(int(contact.mode), float(com_speed), bool(reversed_), spring_sum,
                       float(np.sum(loads)), float(mu), float(eps_v))
    if mode == contact.mode:
        return contact
    if mode == STUCK:
        return ContactState(Mode.STUCK, np.array(leg_world_positions, dtype=float))
    return ContactState(Mode.SLIDING)
