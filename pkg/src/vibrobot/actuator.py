"""Eccentric-rotating-mass vibration motors."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from numba import njit

TWO_PI = 2.0 * math.pi
DEAD_ZONE = 0.2

# quintic fit of steady rotor speed (rad/s) against voltage, highest power first
SPEED_COEFFS = (2.6, -26.44, 102.11, -200.92, 253.09, -43.36)


@njit(cache=True)
def motor_speed(V):
    """Steady rotor speed (rad/s) for a terminal voltage ``V``.

    Zero inside the dead zone ``|V| < 0.2``. The negative branch is the
    mirror image of the positive one, so the map is odd.
    """
    if V >= DEAD_ZONE:
        v = V
    elif V <= -DEAD_ZONE:
        v = -V
    else:
        return 0.0
    w = ((((2.6 * v - 26.44) * v + 102.11) * v - 200.92) * v + 253.09) * v - 43.36
    return w if V > 0 else -w


@njit(cache=True)
def wrap_phase(theta):
    r = theta % TWO_PI
    if r >= TWO_PI:
        r -= TWO_PI
    return r


@njit(cache=True)
def eccentric_force(m, r, omega, theta):
    """Centrifugal force of one rotor: (horizontal, vertical) components.

    Horizontal is ``m r w^2 sin(theta)``; vertical is ``m r w^2 cos(theta)``,
    positive pressing the body onto the ground. Per-motor signs are applied
    by the caller.
    """
    a = m * r * omega * omega
    return a * math.sin(theta), a * math.cos(theta)


@dataclass(frozen=True)
class RotorState:
    theta_e: float = 0.0
    theta_d: float = math.pi
    omega_e: float = 0.0
    omega_d: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta_e", wrap_phase(self.theta_e))
        object.__setattr__(self, "theta_d", wrap_phase(self.theta_d))

    @classmethod
    def from_voltages(cls, theta_e, theta_d, V_e, V_d):
        return cls(theta_e, theta_d, motor_speed(V_e), motor_speed(V_d))


def rotor_step(rotor, dt):
    """Advance both rotor phases at constant speed for ``dt`` seconds."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    return replace(rotor,
                   theta_e=rotor.theta_e + rotor.omega_e * dt,
                   theta_d=rotor.theta_d + rotor.omega_d * dt)
