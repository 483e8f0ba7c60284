"""Planar 3-DOF vessel simulation: surge, sway, and yaw.

The craft is a differential-thrust catamaran: two fixed thrusters set
fore-aft force and yaw moment, sway is unactuated.  Body velocities are
expressed over ground; hydrodynamic forces act on the water-relative
components, so a uniform current advects the hull once the relative
motion has damped out.  Heading is compass convention — degrees
clockwise from North, East-North world frame — at the public boundary;
radians internally.

Surge drag combines the hull resistance chain from :mod:`helmsim.hydro`
(precompiled into the kernel parameter vector) with an optional linear
term ``d_u1`` reserved for top-speed calibration.  Sway and yaw use
linear+quadratic damping.  Thrusters saturate at their static rating,
lose output linearly with advance speed down to ``eta_e`` at the rated
speed, and respond through a first-order lag.

Integration is classic fixed-step RK4 at 50 Hz through the selected
kernel backend (compiled or pure Python — same trajectories).  Virtual
GPS/compass/speed sensors add seeded Gaussian noise; zero sigma draws
nothing, so noise-free runs are bit-reproducible regardless of seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import kernels
from .errors import NoEquilibrium, RangeError
from .hydro import (
    NO_OVERRIDES,
    FRESH_WATER,
    CoefficientOverrides,
    FluidProperties,
    HullGeometry,
    drag_params,
)

__all__ = [
    "PHYSICS_DT", "CONTROL_DT", "TELEMETRY_DT",
    "VesselState", "StateDerivative", "MeasuredState",
    "ThrusterModel", "EnvironmentField", "CALM", "BodyParams",
    "thrust_from_pwm", "pwm_from_thrust",
    "make_sim_params", "derivatives", "hull_drag_model",
    "SimVessel", "equilibrium_speed", "sensor_sample",
]

PHYSICS_DT = 0.02  # 50 Hz integration
CONTROL_DT = 0.10  # 10 Hz guidance/control
TELEMETRY_DT = 0.20  # 5 Hz reporting


def _require_finite(name: str, value: float):
    if not math.isfinite(value):
        raise RangeError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class VesselState:
    """Pose and body velocities at one instant.

    Heading ``psi`` is degrees clockwise from North and is wrapped into
    [0, 360) on construction; yaw rate ``r`` is degrees/second,
    clockwise positive.  ``u`` is forward (surge) and ``v`` starboard
    (sway) speed over ground.
    """

    t: float = 0.0
    x_east: float = 0.0
    y_north: float = 0.0
    psi: float = 0.0
    u: float = 0.0
    v: float = 0.0
    r: float = 0.0

    def __post_init__(self):
        for name in ("t", "x_east", "y_north", "psi", "u", "v", "r"):
            _require_finite(name, getattr(self, name))
        object.__setattr__(self, "psi", self.psi % 360.0)


class StateDerivative(NamedTuple):
    """Time derivative of VesselState (psi and r slots in deg/s, deg/s^2)."""

    x_east: float
    y_north: float
    psi: float
    u: float
    v: float
    r: float


@dataclass(frozen=True)
class MeasuredState:
    """One virtual GPS/compass fix: position, heading, and ground track."""

    t: float
    x_east: float
    y_north: float
    psi: float
    sog: float  # speed over ground, m/s
    cog: float  # course over ground, degrees; heading when stationary


@dataclass(frozen=True)
class ThrusterModel:
    """Per-side thruster: static rating, advance decay, PWM map, lag."""

    max_static_thrust: float = 161.0
    rated_speed: float = 3.6
    moving_efficiency: float = 0.5
    separation: float = 0.5
    pwm_neutral: int = 1500
    pwm_min: int = 1100
    pwm_max: int = 1900
    deadband: int = 30
    response_time_constant: float = 0.2

    def __post_init__(self):
        if not self.pwm_min < self.pwm_neutral < self.pwm_max:
            raise RangeError("require pwm_min < pwm_neutral < pwm_max")
        if not 0.0 < self.moving_efficiency <= 1.0:
            raise RangeError("moving_efficiency must lie in (0, 1]")
        if self.max_static_thrust <= 0 or self.rated_speed <= 0:
            raise RangeError("thrust rating and rated speed must be positive")
        if self.separation <= 0:
            raise RangeError("separation must be positive")
        if self.deadband < 0:
            raise RangeError("deadband must be >= 0")
        if (self.deadband >= self.pwm_max - self.pwm_neutral
                or self.deadband >= self.pwm_neutral - self.pwm_min):
            raise RangeError("deadband swallows the whole PWM span")
        if self.response_time_constant < 0:
            raise RangeError("response_time_constant must be >= 0")


@dataclass(frozen=True)
class EnvironmentField:
    """Uniform disturbances and virtual-sensor noise levels."""

    current_east: float = 0.0
    current_north: float = 0.0
    wind_force_east: float = 0.0
    wind_force_north: float = 0.0
    gps_sigma: float = 0.02
    compass_sigma: float = 0.5
    speed_sigma: float = 0.05

    def __post_init__(self):
        for name in ("current_east", "current_north",
                     "wind_force_east", "wind_force_north"):
            _require_finite(name, getattr(self, name))
        for name in ("gps_sigma", "compass_sigma", "speed_sigma"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise RangeError(f"{name} must be >= 0")


CALM = EnvironmentField(gps_sigma=0.0, compass_sigma=0.0, speed_sigma=0.0)


@dataclass(frozen=True)
class BodyParams:
    """Rigid-body and damping parameters for the 3-DOF model.

    Added-mass fractions scale the rigid values; ``d_u1`` is a linear
    surge drag shim used to calibrate top speed against field data.
    """

    mass: float
    yaw_inertia: float
    surge_added_fraction: float = 0.05
    sway_added_fraction: float = 0.50
    yaw_added_fraction: float = 0.30
    d_u1: float = 0.0
    d_v1: float = 100.0
    d_v2: float = 200.0
    d_r1: float = 20.0
    d_r2: float = 40.0

    def __post_init__(self):
        if self.mass <= 0 or self.yaw_inertia <= 0:
            raise RangeError("mass and yaw inertia must be positive")
        for name in ("surge_added_fraction", "sway_added_fraction",
                     "yaw_added_fraction", "d_u1", "d_v1", "d_v2",
                     "d_r1", "d_r2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise RangeError(f"{name} must be >= 0")

    @classmethod
    def for_hull(cls, geom: HullGeometry, **kwargs) -> "BodyParams":
        """Defaults from hull geometry: box yaw inertia m(L^2+B^2)/12."""
        inertia = kwargs.pop(
            "yaw_inertia",
            geom.mass * (geom.length ** 2 + geom.beam ** 2) / 12.0)
        return cls(mass=geom.mass, yaw_inertia=inertia, **kwargs)

    @property
    def surge_mass(self) -> float:
        return self.mass * (1.0 + self.surge_added_fraction)

    @property
    def sway_mass(self) -> float:
        return self.mass * (1.0 + self.sway_added_fraction)

    @property
    def total_yaw_inertia(self) -> float:
        return self.yaw_inertia * (1.0 + self.yaw_added_fraction)


def thrust_from_pwm(pwm: float, model: ThrusterModel,
                    advance_speed: float = 0.0) -> float:
    """Signed thrust (N) produced at ``pwm`` while advancing through water.

    The pulse width maps linearly to a normalized command in [-1, 1]
    outside the neutral deadband; output then decays linearly with
    advance speed from the static rating to ``moving_efficiency`` times
    it at the rated speed (flat beyond).
    """
    if not model.pwm_min <= pwm <= model.pwm_max:
        raise RangeError(
            f"pwm {pwm} outside [{model.pwm_min}, {model.pwm_max}]")
    delta = pwm - model.pwm_neutral
    if abs(delta) <= model.deadband:
        return 0.0
    if delta > 0:
        n = (delta - model.deadband) / (model.pwm_max - model.pwm_neutral
                                        - model.deadband)
    else:
        n = (delta + model.deadband) / (model.pwm_neutral - model.pwm_min
                                        - model.deadband)
    static = n * model.max_static_thrust
    frac = min(abs(advance_speed), model.rated_speed) / model.rated_speed
    return static * (1.0 - (1.0 - model.moving_efficiency) * frac)


def pwm_from_thrust(thrust: float, model: ThrusterModel) -> int:
    """Pulse width whose static output is closest to ``thrust`` newtons."""
    n = max(-1.0, min(1.0, thrust / model.max_static_thrust))
    if n == 0.0:
        return model.pwm_neutral
    if n > 0:
        span = model.pwm_max - model.pwm_neutral - model.deadband
        pwm = model.pwm_neutral + model.deadband + n * span
    else:
        span = model.pwm_neutral - model.pwm_min - model.deadband
        pwm = model.pwm_neutral - model.deadband + n * span
    return int(round(pwm))


def make_sim_params(body: BodyParams, thruster: ThrusterModel,
                    env: EnvironmentField, geom: HullGeometry,
                    fluid: FluidProperties = FRESH_WATER,
                    overrides: CoefficientOverrides = NO_OVERRIDES) -> tuple:
    """24-float kernel parameter vector (layout in kernels._pure)."""
    return (
        thruster.response_time_constant,
        body.surge_mass,
        body.sway_mass,
        body.total_yaw_inertia,
        body.d_u1,
        body.d_v1,
        body.d_v2,
        body.d_r1,
        body.d_r2,
        thruster.separation / 2.0,
        thruster.moving_efficiency,
        thruster.rated_speed,
        env.current_east,
        env.current_north,
        env.wind_force_east,
        env.wind_force_north,
    ) + drag_params(geom, fluid, overrides)


def hull_drag_model(geom: HullGeometry, fluid: FluidProperties = FRESH_WATER,
                    overrides: CoefficientOverrides = NO_OVERRIDES,
                    ) -> Callable[[float], float]:
    """Total hull resistance as a plain speed -> newtons callable."""
    params = (0.0,) * 16 + drag_params(geom, fluid, overrides)
    return lambda speed: kernels.hull_drag(speed, params)


def derivatives(state: VesselState, thrust_left: float, thrust_right: float,
                env: EnvironmentField, body: BodyParams,
                drag_model: Callable[[float], float],
                separation: float = 0.5) -> StateDerivative:
    """State rate of change under already-applied thruster forces.

    Reference form of the equations of motion, written out directly
    (the integrator uses the kernel implementation of the same math):

    - surge: (m+a_u) du = (T_L+T_R) - sign(u_r)[R_T(|u_r|) + d_u1 |u_r|]
    - sway:  (m+a_v) dv = -d_v1 v_r - d_v2 v_r |v_r|
    - yaw:   (I+a_r) dr = (T_R-T_L) sep/2 - d_r1 r - d_r2 r |r|
    - kinematics: dx = u sin(psi) + v cos(psi); dy = u cos(psi) - v sin(psi)

    with water-relative velocities u_r, v_r and wind force rotated into
    the body frame.  Yaw rate works in rad/s internally; the returned
    derivative converts back to degrees.
    """
    psi = math.radians(state.psi)
    r_rad = math.radians(state.r)
    sp, cp = math.sin(psi), math.cos(psi)

    u_rel = state.u - (env.current_east * sp + env.current_north * cp)
    v_rel = state.v - (env.current_east * cp - env.current_north * sp)
    fx_wind = env.wind_force_east * sp + env.wind_force_north * cp
    fy_wind = env.wind_force_east * cp - env.wind_force_north * sp

    speed_rel = abs(u_rel)
    drag = drag_model(speed_rel) + body.d_u1 * speed_rel
    surge_force = thrust_left + thrust_right + fx_wind
    if u_rel > 0.0:
        surge_force -= drag
    elif u_rel < 0.0:
        surge_force += drag
    sway_force = -body.d_v1 * v_rel - body.d_v2 * v_rel * abs(v_rel) + fy_wind
    yaw_moment = (thrust_right - thrust_left) * (separation / 2.0) \
        - body.d_r1 * r_rad - body.d_r2 * r_rad * abs(r_rad)

    return StateDerivative(
        x_east=state.u * sp + state.v * cp,
        y_north=state.u * cp - state.v * sp,
        psi=state.r,
        u=surge_force / body.surge_mass,
        v=sway_force / body.sway_mass,
        r=math.degrees(yaw_moment / body.total_yaw_inertia),
    )


class SimVessel:
    """Stateful fixed-step simulator for one vessel.

    Owns the 8-float kernel state (pose, body velocities, and the two
    thruster lag states).  Commands are static-thrust targets, clamped
    to the rating; advance-speed decay and the first-order lag are part
    of the physics.  Single-owner: tick it from one loop only.
    """

    def __init__(self, body: BodyParams, thruster: ThrusterModel,
                 env: EnvironmentField, geom: HullGeometry,
                 fluid: FluidProperties = FRESH_WATER,
                 overrides: CoefficientOverrides = NO_OVERRIDES,
                 state: VesselState = VesselState()):
        self.body = body
        self.thruster = thruster
        self.env = env
        self.geom = geom
        self.fluid = fluid
        self.overrides = overrides
        self._params = make_sim_params(body, thruster, env, geom, fluid,
                                       overrides)
        self._t = state.t
        self._s = (
            state.x_east, state.y_north, math.radians(state.psi),
            state.u, state.v, math.radians(state.r), 0.0, 0.0,
        )
        self._cmd_left = 0.0
        self._cmd_right = 0.0

    def set_environment(self, env: EnvironmentField):
        """Swap disturbances (current/wind) without touching vessel state."""
        self.env = env
        self._params = make_sim_params(self.body, self.thruster, env,
                                       self.geom, self.fluid, self.overrides)

    def set_thrust(self, left: float, right: float):
        """Command static thrusts, clamped to +/- the rating."""
        limit = self.thruster.max_static_thrust
        self._cmd_left = max(-limit, min(limit, left))
        self._cmd_right = max(-limit, min(limit, right))

    def set_pwm(self, left: float, right: float):
        """Command thrusters by pulse width (static mapping)."""
        self._cmd_left = thrust_from_pwm(left, self.thruster)
        self._cmd_right = thrust_from_pwm(right, self.thruster)

    @property
    def command(self) -> tuple:
        return (self._cmd_left, self._cmd_right)

    @property
    def thrust(self) -> tuple:
        """Instantaneous static thrust each unit is producing (lag states)."""
        return (self._s[6], self._s[7])

    @property
    def state(self) -> VesselState:
        s = self._s
        return VesselState(t=self._t, x_east=s[0], y_north=s[1],
                           psi=math.degrees(s[2]), u=s[3], v=s[4],
                           r=math.degrees(s[5]))

    def step(self, dt: float = PHYSICS_DT) -> VesselState:
        """Advance one RK4 step of size ``dt`` (bounded to keep order)."""
        if not 0.0 < dt <= 0.1:
            raise RangeError(f"dt must lie in (0, 0.1], got {dt}")
        self._s = kernels.rk4_step(self._s, self._cmd_left, self._cmd_right,
                                   dt, self._params)
        self._t += dt
        return self.state

    def run(self, duration: float, dt: float = PHYSICS_DT) -> VesselState:
        """Step repeatedly for ``duration`` seconds of sim time."""
        for _ in range(int(round(duration / dt))):
            self.step(dt)
        return self.state


def equilibrium_speed(n_thrusters: int, model: ThrusterModel,
                      geom: HullGeometry,
                      fluid: FluidProperties = FRESH_WATER,
                      overrides: CoefficientOverrides = NO_OVERRIDES,
                      body: Optional[BodyParams] = None,
                      tol: float = 0.01) -> float:
    """Steady full-throttle speed: thrust balance solved by bisection.

    Root of f(u) = n * effective_thrust(full, u) - [R_T(u) + d_u1 u],
    unique because thrust falls and drag rises with u.  Returns u* with
    |f(u*)| < ``tol`` newtons.
    """
    if n_thrusters < 1:
        raise RangeError("n_thrusters must be >= 1")
    d_u1 = body.d_u1 if body is not None else 0.0
    drag = hull_drag_model(geom, fluid, overrides)

    def residual(u: float) -> float:
        thrust = n_thrusters * thrust_from_pwm(model.pwm_max, model, u)
        return thrust - (drag(u) + d_u1 * u)

    if residual(0.0) <= 0.0:
        raise NoEquilibrium("no net thrust at rest")
    hi = model.rated_speed
    while residual(hi) > 0.0:
        hi *= 2.0
        if hi > 1e4:
            raise NoEquilibrium("thrust exceeds drag at all speeds")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = residual(mid)
        if abs(f_mid) < tol:
            return mid
        if f_mid > 0.0:
            lo = mid
        else:
            hi = mid
    raise NoEquilibrium("bisection failed to converge")


def sensor_sample(state: VesselState, env: EnvironmentField,
                  rng: Optional[np.random.Generator] = None) -> MeasuredState:
    """Virtual GPS/compass/log fix: truth plus independent Gaussian noise.

    Zero-sigma channels return truth exactly and draw nothing from the
    generator, so noise-free runs are reproducible without seed
    bookkeeping.  Course over ground falls back to the heading when the
    vessel is effectively stationary.
    """
    psi = math.radians(state.psi)
    vx = state.u * math.sin(psi) + state.v * math.cos(psi)
    vy = state.u * math.cos(psi) - state.v * math.sin(psi)
    sog = math.hypot(vx, vy)
    cog = math.degrees(math.atan2(vx, vy)) % 360.0 if sog > 1e-6 else state.psi

    x, y, heading = state.x_east, state.y_north, state.psi
    if rng is not None:
        if env.gps_sigma > 0:
            x += rng.normal(0.0, env.gps_sigma)
            y += rng.normal(0.0, env.gps_sigma)
        if env.compass_sigma > 0:
            heading = (heading + rng.normal(0.0, env.compass_sigma)) % 360.0
            cog = (cog + rng.normal(0.0, env.compass_sigma)) % 360.0
        if env.speed_sigma > 0:
            sog = max(sog + rng.normal(0.0, env.speed_sigma), 0.0)
    return MeasuredState(t=state.t, x_east=x, y_north=y, psi=heading,
                         sog=sog, cog=cog)
