"""Physical constants, numerical settings and the key = value config format.

All quantities are SI. :class:`RobotParams` defaults are the prototype's
identified values; :class:`SimConfig` defaults are the numerical choices
documented in the README.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

SQRT3 = math.sqrt(3.0)


class ConfigError(ValueError):
    """Raised for unreadable or invalid configuration input."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


@dataclass(frozen=True)
class RobotParams:
    """Robot mass/geometry/contact constants.

    ``h``, ``R_motor`` and ``L_motor`` are carried for completeness and echoed
    into run metadata; no equation of the model consumes them.
    """

    M: float = 7.2e-3
    m_e: float = 9e-4
    m_d: float = 9e-4
    r_e: float = 1.061e-3
    r_d: float = 1.061e-3
    I_zz: float = 9.2e-7
    l: float = 0.04
    d1: float = 0.01
    h: float = 5.7e-3
    k: float = 72509.185
    mu: float = 0.36
    g: float = 9.807
    R_motor: float = 11.2
    L_motor: float = 0.102e-3

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise ConfigError("value must be finite", key=f.name)
            if f.name == "mu":
                if value < 0:
                    raise ConfigError("friction coefficient must be >= 0", key=f.name)
            elif value <= 0:
                raise ConfigError("value must be strictly positive", key=f.name)

    def as_array(self, v_reg=1e-3):
        """Pack the constants used by the compiled kernels (see ``P_*`` indices).

        ``v_reg`` is the sliding-friction regularization speed, a numerical
        setting that travels with the physical constants for convenience.
        """
        return np.array([self.M, self.m_e, self.m_d, self.r_e, self.r_d,
                         self.I_zz, self.l, self.d1, self.k, self.mu, self.g, v_reg])

    @property
    def weight(self):
        return self.M * self.g


# indices into RobotParams.as_array()
P_M, P_ME, P_MD, P_RE, P_RD, P_IZZ, P_L, P_D1, P_K, P_MU, P_G, P_VREG = range(12)


@dataclass(frozen=True)
class SimConfig:
    """Numerical and controller settings for one run."""

    physics_dt: float = 1e-5
    control_dt: float = 1e-3
    duration: float = 2.0
    rng_seed: int = 0
    # anti-phase rotors; the common offset of pi/2 makes counter-rotation a pure,
    # fast yaw while leaving co-rotation a pure translation
    theta_e0: float = 0.5 * math.pi
    theta_d0: float = 1.5 * math.pi
    eps_v: float = 1e-6
    v_reg: float = 1e-3
    record_full_rate: bool = False
    # neural networks
    hidden_tuner: int = 8
    hidden_ident: int = 8
    eta_tuner: float = 0.01
    eta_ident: float = 0.01
    ident_order: int = 2
    # PID gain bounds: translation in V/m, V/(m s), V s/m; rotation per rad
    gmax_tp: float = 6000.0
    gmax_ti: float = 2000.0
    gmax_td: float = 100.0
    gmax_rp: float = 200.0
    gmax_ri: float = 160.0
    gmax_rd: float = 1.0
    v_max: float = 3.0
    # orientation of the differential voltage: V_e = u_t - mix_sign * u_r
    mix_sign: int = -1
    # floor on the Jacobian handed to the gain networks
    j_min: float = 1e-3
    sign_guard: bool = True
    # raw network outputs as gains, unit control sensitivity, no Jacobian floor
    literal_mode: bool = False
    # identifier output span per channel; <= 0 means "derive from the reference"
    y_span_t: float = 0.0
    y_span_r: float = 0.0

    def __post_init__(self):
        if not self.physics_dt > 0:
            raise ConfigError("must be > 0", key="physics_dt")
        if not self.duration > 0:
            raise ConfigError("must be > 0", key="duration")
        if not self.control_dt > 0:
            raise ConfigError("must be > 0", key="control_dt")
        ratio = self.control_dt / self.physics_dt
        if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < 1:
            raise ConfigError("must be an integer multiple of physics_dt", key="control_dt")
        for name in ("eps_v", "v_reg", "eta_tuner", "eta_ident", "gmax_tp", "gmax_ti",
                     "gmax_td", "gmax_rp", "gmax_ri", "gmax_rd", "v_max", "j_min"):
            if not getattr(self, name) > 0:
                raise ConfigError("must be > 0", key=name)
        for name in ("hidden_tuner", "hidden_ident", "ident_order"):
            if getattr(self, name) < 1:
                raise ConfigError("must be >= 1", key=name)
        if self.mix_sign not in (-1, 1):
            raise ConfigError("must be 1 or -1", key="mix_sign")

    @property
    def substeps(self):
        """Physics steps per control period."""
        return int(round(self.control_dt / self.physics_dt))

    @property
    def gain_bounds_t(self):
        """Translation ``(Kp, Ki, Kd)`` upper bounds."""
        return np.array([self.gmax_tp, self.gmax_ti, self.gmax_td])

    @property
    def gain_bounds_r(self):
        """Rotation ``(Kp, Ki, Kd)`` upper bounds."""
        return np.array([self.gmax_rp, self.gmax_ri, self.gmax_rd])


def leg_positions(params):
    """Body-frame leg coordinates ``(a, b, c)`` as a (3, 2) array.

    The legs form an equilateral triangle of side ``l`` centred on the
    centre of mass, with leg ``b`` on the -x axis.
    """
    l = params.l
    return np.array([
        [SQRT3 * l / 6, l / 2],
        [-SQRT3 * l / 3, 0.0],
        [SQRT3 * l / 6, -l / 2],
    ])


def motor_mounts(params):
    """Body-frame mount points of motor e and motor d."""
    return np.array([[0.0, -params.d1], [0.0, params.d1]])


# --- key = value files -----------------------------------------------------

_ROBOT_KEYS = {f.name: f.type for f in fields(RobotParams)}
_SIM_KEYS = {f.name: f.type for f in fields(SimConfig)}


def _parse_value(kind, text):
    if kind in ("bool", bool):
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if kind in ("int", int):
        return int(text)
    return float(text)


def parse_config(text, source="<string>", seen=None):
    """Parse config text into ``(SimConfig, RobotParams)``.

    If ``seen`` is a set, the keys present in the text are added to it.
    """
    robot, sim = {}, {}
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}: expected 'key = value'", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key in _ROBOT_KEYS:
            target, kind = robot, _ROBOT_KEYS[key]
        elif key in _SIM_KEYS:
            target, kind = sim, _SIM_KEYS[key]
        else:
            raise ConfigError(f"{source}: unknown key", key=key, line=lineno)
        try:
            target[key] = _parse_value(kind, value)
        except ValueError:
            raise ConfigError(f"{source}: unparseable value {value!r}", key=key, line=lineno) from None
        lines[key] = lineno
    if seen is not None:
        seen.update(lines)
    try:
        params = RobotParams(**robot)
        config = SimConfig(**sim)
    except ConfigError as err:
        raise ConfigError(f"{source}: invalid value", key=err.key, line=lines.get(err.key)) from None
    return config, params


def load_config(path, seen=None):
    """Read a key = value config file; omitted keys keep their defaults."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config file {str(path)!r}: {err.strerror}") from None
    return parse_config(text, source=str(path), seen=seen)


def dump_config(config, params):
    """Serialize both records as config text that :func:`parse_config` reads back exactly."""
    out = ["# robot"]
    for f in fields(params):
        out.append(f"{f.name} = {getattr(params, f.name)!r}")
    out.append("# simulation")
    for f in fields(config):
        out.append(f"{f.name} = {getattr(config, f.name)!r}")
    return "\n".join(out) + "\n"


def with_overrides(config, params, **overrides):
    """Apply keyword overrides to whichever record owns each key."""
    robot = {k: v for k, v in overrides.items() if k in _ROBOT_KEYS}
    sim = {k: v for k, v in overrides.items() if k in _SIM_KEYS}
    unknown = set(overrides) - set(robot) - set(sim)
    if unknown:
        raise ConfigError("unknown key", key=sorted(unknown)[0])
    return replace(config, **sim), replace(params, **robot)
