"""Guidance and control: mode machine, nested PID loops, mixing, failsafes.

Three piloting strategies drive the pair of fixed thrusters:

1. Manual — normalized per-thruster commands pass straight to PWM.
2. Velocity+heading — a speed PID sets the common (forward) thrust while
   a cascaded heading loop (outer: heading error -> yaw-rate setpoint;
   inner: yaw-rate error -> differential thrust) steers.
3. Position — an L1 pursuit law converts the waypoint geometry into a
   heading setpoint plus a turn-rate feedforward for the cascade.

The mixer combines forward and yaw demands as T_L = T_f - T_y,
T_R = T_f + T_y; when a side saturates, steering wins: forward thrust is
surrendered first so the commanded moment survives.

Arrival inside a waypoint's acceptance radius drops the craft into
Loiter, which creeps back toward its anchor whenever it drifts out of
the loiter circle and otherwise holds heading at zero speed.  A stale
command link forces Hold; a low battery forces Return-To-Launch exactly
once (latched).  Obstacle proximity from the fused sector array scales
the *speed setpoint* — never the controller output — so the integrator
does not wind up against a stop order.

All PIDs are parallel-form with derivative-on-measurement, integral
clamping, and output limiting, ticked at the 10 Hz control rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Optional, Union

from .dynamics import MeasuredState, ThrusterModel, pwm_from_thrust
from .errors import ModeMismatch, RangeError
from .perception import SectorArray, proximity_policy

__all__ = [
    "ControlMode", "PidGains", "Pid", "wrap_error",
    "ManualSetpoint", "VelHeadSetpoint", "WaypointSetpoint", "LoiterAnchor",
    "MixerLimits", "mix", "HeadingController", "SpeedController",
    "l1_heading", "loiter_step", "failsafe_step",
    "ControlConfig", "ModeTransition", "GuidanceOutput", "GuidanceController",
]


class ControlMode(IntEnum):
    Manual = 0
    GuidedVelocityHeading = 1
    GuidedPosition = 2
    Loiter = 3
    Hold = 4
    ReturnToLaunch = 5


def wrap_error(target_deg: float, current_deg: float) -> float:
    """Shortest signed angle from current to target, in (-180, 180].

    Positive means the target lies clockwise of the current heading;
    the 180° ambiguity breaks positive.
    """
    diff = (target_deg - current_deg) % 360.0
    if diff > 180.0:
        diff -= 360.0
    return diff


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float = 0.0
    kd: float = 0.0
    integral_limit: float = 1.0
    output_limit: float = 1.0

    def __post_init__(self):
        if self.kp < 0 or self.ki < 0 or self.kd < 0:
            raise RangeError("gains must be >= 0")
        if self.integral_limit <= 0 or self.output_limit <= 0:
            raise RangeError("limits must be positive")


class Pid:
    """Parallel-form PID with derivative on measurement.

    The integral state is clamped to ±integral_limit and the output to
    ±output_limit.  The derivative acts on the measurement (negated), so
    setpoint steps cause no kick; a measured rate can be supplied
    directly when the plant exposes one.
    """

    def __init__(self, gains: PidGains):
        self.gains = gains
        self._integral = 0.0
        self._prev_measurement: Optional[float] = None

    def reset(self):
        self._integral = 0.0
        self._prev_measurement = None

    def update(self, error: float, measurement: float, dt: float,
               measurement_rate: Optional[float] = None) -> float:
        if dt <= 0:
            raise RangeError("dt must be positive")
        g = self.gains
        self._integral += g.ki * error * dt
        self._integral = max(-g.integral_limit,
                             min(g.integral_limit, self._integral))
        derivative = 0.0
        if g.kd > 0:
            if measurement_rate is not None:
                derivative = -g.kd * measurement_rate
            elif self._prev_measurement is not None:
                derivative = -g.kd * (measurement
                                      - self._prev_measurement) / dt
        self._prev_measurement = measurement
        out = g.kp * error + self._integral + derivative
        return max(-g.output_limit, min(g.output_limit, out))


# --- setpoints ----------------------------------------------------------------


@dataclass(frozen=True)
class ManualSetpoint:
    left: float
    right: float

    def __post_init__(self):
        if not (-1.0 <= self.left <= 1.0 and -1.0 <= self.right <= 1.0):
            raise RangeError("manual commands must lie in [-1, 1]")


@dataclass(frozen=True)
class VelHeadSetpoint:
    speed: float
    heading: float

    def __post_init__(self):
        if self.speed < 0:
            raise RangeError("speed setpoint must be >= 0")
        if not 0.0 <= self.heading < 360.0:
            raise RangeError("heading setpoint must lie in [0, 360)")


@dataclass(frozen=True)
class WaypointSetpoint:
    x_east: float
    y_north: float
    accept_radius: float = 2.0
    transit_speed: Optional[float] = None  # None: config default

    def __post_init__(self):
        if self.accept_radius <= 0:
            raise RangeError("accept_radius must be positive")
        if self.transit_speed is not None and self.transit_speed < 0:
            raise RangeError("transit_speed must be >= 0")


@dataclass(frozen=True)
class LoiterAnchor:
    x_east: float
    y_north: float
    radius: float = 0.5

    def __post_init__(self):
        if self.radius <= 0:
            raise RangeError("loiter radius must be positive")


Setpoint = Union[ManualSetpoint, VelHeadSetpoint, WaypointSetpoint,
                 LoiterAnchor]


# --- mixer --------------------------------------------------------------------


@dataclass(frozen=True)
class MixerLimits:
    max_thrust_per_side: float
    steering_priority: bool = True

    def __post_init__(self):
        if self.max_thrust_per_side <= 0:
            raise RangeError("max_thrust_per_side must be positive")


def mix(t_forward: float, t_yaw: float, limits: MixerLimits) -> tuple:
    """(T_L, T_R) from forward/yaw demands: T_L = T_f - T_y, T_R = T_f + T_y.

    Under steering priority, when a side would saturate the forward
    demand is reduced until both sides fit, preserving the yaw demand
    (which is itself clamped to the per-side limit as a last resort).
    """
    m = limits.max_thrust_per_side
    t_l = t_forward - t_yaw
    t_r = t_forward + t_yaw
    if max(abs(t_l), abs(t_r)) <= m:
        return (t_l, t_r)
    if not limits.steering_priority:
        return (max(-m, min(m, t_l)), max(-m, min(m, t_r)))
    t_yaw = max(-m, min(m, t_yaw))
    headroom = m - abs(t_yaw)
    t_forward = max(-headroom, min(headroom, t_forward))
    return (t_forward - t_yaw, t_forward + t_yaw)


# --- loop building blocks ------------------------------------------------------


class HeadingController:
    """Cascaded heading regulator: heading PID feeding a yaw-rate PID.

    The outer loop turns heading error into a yaw-rate setpoint (deg/s,
    optionally biased by a guidance feedforward); the inner loop turns
    rate error into differential thrust T_yaw (N).
    """

    def __init__(self, outer: PidGains, inner: PidGains):
        self.outer = Pid(outer)
        self.inner = Pid(inner)

    def reset(self):
        self.outer.reset()
        self.inner.reset()

    def step(self, psi_sp: float, psi: float, r: float, dt: float,
             r_ff: float = 0.0) -> float:
        error = wrap_error(psi_sp, psi)
        r_sp = self.outer.update(error, psi, dt, measurement_rate=r) + r_ff
        return self.inner.update(r_sp - r, r, dt)

    def rate_setpoint(self, psi_sp: float, psi: float) -> float:
        """Outer-loop preview without advancing state (for telemetry)."""
        return self.outer.gains.kp * wrap_error(psi_sp, psi)


class SpeedController:
    """Forward-speed PID; output is T_forward clamped to [0, ceiling]."""

    def __init__(self, gains: PidGains, ceiling: float):
        if ceiling <= 0:
            raise RangeError("ceiling must be positive")
        self.pid = Pid(gains)
        self.ceiling = ceiling

    def reset(self):
        self.pid.reset()

    def step(self, u_sp: float, u: float, dt: float) -> float:
        out = self.pid.update(u_sp - u, u, dt)
        return max(0.0, min(self.ceiling, out))


def l1_heading(measured: MeasuredState, waypoint_x: float, waypoint_y: float,
               l1_distance: float) -> tuple:
    """(psi_sp degrees, r_ff deg/s) steering toward a waypoint.

    The lateral-acceleration law a = 2 V^2 sin(eta) / L1 uses the signed
    angle eta from the ground-velocity vector to the line of sight; the
    feedforward turn rate is a/V.  Below 0.1 m/s the geometry degenerates
    and the output reduces to plain bearing pursuit.
    """
    if l1_distance <= 0:
        raise RangeError("l1_distance must be positive")
    bearing = math.degrees(math.atan2(waypoint_x - measured.x_east,
                                      waypoint_y - measured.y_north)) % 360.0
    speed = measured.sog
    if speed <= 0.1:
        return bearing, 0.0
    eta = math.radians(wrap_error(bearing, measured.cog))
    accel = 2.0 * speed * speed * math.sin(eta) / l1_distance
    r_ff = math.degrees(accel / speed)
    return bearing, r_ff


def loiter_step(anchor: LoiterAnchor, measured: MeasuredState,
                hold_heading: float, creep_gain: float = 1.0,
                creep_cap: float = 1.0) -> VelHeadSetpoint:
    """Velocity/heading setpoint that keeps station on the anchor.

    Outside the loiter circle: head for the anchor at a creep speed
    proportional to the excess distance (capped).  Inside: zero speed,
    hold the entry heading.
    """
    dx = anchor.x_east - measured.x_east
    dy = anchor.y_north - measured.y_north
    distance = math.hypot(dx, dy)
    if distance <= anchor.radius:
        return VelHeadSetpoint(speed=0.0, heading=hold_heading % 360.0)
    bearing = math.degrees(math.atan2(dx, dy)) % 360.0
    speed = min(creep_gain * (distance - anchor.radius), creep_cap)
    return VelHeadSetpoint(speed=speed, heading=bearing)


def failsafe_step(link_age: float, battery_fraction: float,
                  link_timeout: float = 5.0,
                  battery_threshold: float = 0.2) -> Optional[ControlMode]:
    """Forced mode, if any: low battery -> RTL beats stale link -> Hold."""
    if battery_fraction < battery_threshold:
        return ControlMode.ReturnToLaunch
    if link_age > link_timeout:
        return ControlMode.Hold
    return None


# --- guidance state machine -----------------------------------------------------


@dataclass(frozen=True)
class ControlConfig:
    """Gains, guidance geometry, and failsafe thresholds (10 Hz loop)."""

    heading_outer: PidGains = PidGains(kp=0.8, ki=0.0, kd=0.0,
                                       integral_limit=15.0, output_limit=30.0)
    heading_inner: PidGains = PidGains(kp=4.0, ki=1.0, kd=0.0,
                                       integral_limit=40.0,
                                       output_limit=161.0)
    speed: PidGains = PidGains(kp=120.0, ki=40.0, kd=0.0,
                               integral_limit=150.0, output_limit=322.0)
    l1_distance: float = 5.0
    transit_speed: float = 1.5
    accept_radius: float = 2.0
    loiter_radius: float = 0.5
    creep_gain: float = 1.0
    creep_cap: float = 1.0
    link_timeout: float = 5.0
    battery_threshold: float = 0.2
    rate_filter_alpha: float = 0.7  # weight of the newest rate estimate
    slow_distance: float = 10.0
    stop_distance: float = 4.0
    cone_half_width: int = 3
    partial_factor: float = 0.3

    def __post_init__(self):
        for name in ("l1_distance", "accept_radius", "loiter_radius",
                     "creep_gain", "creep_cap", "link_timeout"):
            if getattr(self, name) <= 0:
                raise RangeError(f"{name} must be positive")
        if not 0.0 < self.rate_filter_alpha <= 1.0:
            raise RangeError("rate_filter_alpha must lie in (0, 1]")
        if not 0.0 <= self.battery_threshold < 1.0:
            raise RangeError("battery_threshold must lie in [0, 1)")
        if self.stop_distance >= self.slow_distance:
            raise RangeError("stop distance must be below slow distance")


@dataclass(frozen=True)
class ModeTransition:
    t: float
    previous: ControlMode
    mode: ControlMode
    cause: str


@dataclass(frozen=True)
class GuidanceOutput:
    pwm_left: int
    pwm_right: int
    mode: ControlMode
    speed_setpoint: float
    heading_setpoint: float
    t_forward: float
    t_yaw: float
    speed_scale: float
    transitions: tuple = ()


_MODE_SETPOINTS = {
    ControlMode.Manual: ManualSetpoint,
    ControlMode.GuidedVelocityHeading: VelHeadSetpoint,
    ControlMode.GuidedPosition: WaypointSetpoint,
    ControlMode.Loiter: LoiterAnchor,
    ControlMode.Hold: type(None),
    ControlMode.ReturnToLaunch: type(None),
}


class GuidanceController:
    """Single-owner mode machine producing PWM pairs each control tick.

    Feed it one measured fix (plus the fused obstacle sectors and
    failsafe inputs) per 10 Hz tick; it returns the thruster commands
    and any mode transitions it performed.  Yaw rate is estimated by
    differentiating the measured heading through a first-order filter.
    """

    def __init__(self, config: ControlConfig = ControlConfig(),
                 thruster: ThrusterModel = ThrusterModel(),
                 home: tuple = (0.0, 0.0), armed: bool = True):
        self.config = config
        self.thruster = thruster
        self.home = home
        self.armed = armed
        self.mode = ControlMode.Hold
        self.setpoint: Optional[Setpoint] = None
        self.limits = MixerLimits(thruster.max_static_thrust)
        self.heading = HeadingController(config.heading_outer,
                                         config.heading_inner)
        self.speed = SpeedController(
            config.speed, 2.0 * thruster.max_static_thrust)
        self.transitions: list = []
        self._hold_heading: Optional[float] = None
        self._was_inside = False
        self._battery_latched = False
        self._prev_psi: Optional[float] = None
        self._rate_estimate = 0.0

    # -- mode management ---------------------------------------------------

    def arm(self, position_fix_valid: bool) -> bool:
        """Arm the vessel; refused without a valid position fix."""
        if not position_fix_valid:
            return False
        self.armed = True
        return True

    def disarm(self):
        self.armed = False

    def set_mode(self, mode: ControlMode, setpoint: Optional[Setpoint] = None,
                 t: float = 0.0, cause: str = "command"):
        """Switch mode with its matching setpoint variant."""
        expected = _MODE_SETPOINTS[mode]
        if not isinstance(setpoint, expected):
            raise ModeMismatch(
                f"{mode.name} requires {expected.__name__}, "
                f"got {type(setpoint).__name__}")
        previous = self.mode
        self.mode = mode
        self.setpoint = setpoint
        if mode == ControlMode.Loiter:
            self._hold_heading = None  # freeze on the first fix
            self._was_inside = False
        self.heading.reset()
        self.speed.reset()
        if mode != previous:
            self._record(t, previous, mode, cause)

    def _record(self, t, previous, mode, cause):
        self.transitions.append(ModeTransition(t, previous, mode, cause))

    def _enter_loiter(self, anchor: LoiterAnchor, heading: float, t: float,
                      cause: str):
        previous = self.mode
        self.mode = ControlMode.Loiter
        self.setpoint = anchor
        self._hold_heading = heading
        self._was_inside = False
        self.heading.reset()
        self.speed.reset()
        self._record(t, previous, ControlMode.Loiter, cause)

    # -- main tick ----------------------------------------------------------

    def step(self, measured: MeasuredState, sectors: Optional[SectorArray],
             dt: float, link_age: float = 0.0,
             battery_fraction: float = 1.0) -> GuidanceOutput:
        if dt <= 0:
            raise RangeError("dt must be positive")
        cfg = self.config
        start = len(self.transitions)

        # Failsafes outrank whatever the operator asked for.
        forced = failsafe_step(link_age, battery_fraction, cfg.link_timeout,
                               cfg.battery_threshold)
        if forced == ControlMode.ReturnToLaunch and not self._battery_latched:
            self._battery_latched = True
            if self.mode != ControlMode.ReturnToLaunch:
                previous = self.mode
                self.mode = ControlMode.ReturnToLaunch
                self.setpoint = None
                self.heading.reset()
                self.speed.reset()
                self._record(measured.t, previous,
                             ControlMode.ReturnToLaunch, "battery")
        elif forced == ControlMode.Hold and self.mode not in (
                ControlMode.Hold, ControlMode.ReturnToLaunch):
            previous = self.mode
            self.mode = ControlMode.Hold
            self.setpoint = None
            self.heading.reset()
            self.speed.reset()
            self._record(measured.t, previous, ControlMode.Hold, "link")

        r_meas = self._estimate_rate(measured.psi, dt)
        scale = 1.0
        if sectors is not None:
            scale = proximity_policy(sectors, cfg.slow_distance,
                                     cfg.stop_distance, cfg.cone_half_width,
                                     cfg.partial_factor)

        if not self.armed:
            out = self._neutral(measured, scale)
        elif self.mode == ControlMode.Manual:
            out = self._manual(measured, scale)
        elif self.mode == ControlMode.GuidedVelocityHeading:
            sp = self.setpoint
            out = self._velhead(measured, sp.speed, sp.heading, r_meas, dt,
                                scale)
        elif self.mode == ControlMode.GuidedPosition:
            out = self._position(measured, self.setpoint, r_meas, dt, scale)
        elif self.mode == ControlMode.Loiter:
            anchor = self.setpoint
            inside = math.hypot(anchor.x_east - measured.x_east,
                                anchor.y_north - measured.y_north) \
                <= anchor.radius
            if self._hold_heading is None or (inside and not self._was_inside):
                self._hold_heading = measured.psi
            self._was_inside = inside
            sp = loiter_step(anchor, measured, self._hold_heading,
                             cfg.creep_gain, cfg.creep_cap)
            out = self._velhead(measured, sp.speed, sp.heading, r_meas, dt,
                                scale)
        elif self.mode == ControlMode.ReturnToLaunch:
            waypoint = WaypointSetpoint(self.home[0], self.home[1],
                                        cfg.accept_radius)
            out = self._position(measured, waypoint, r_meas, dt, scale)
        else:  # Hold
            out = self._neutral(measured, scale)

        new = tuple(self.transitions[start:])
        if new:
            out = replace(out, transitions=new)
        return out

    # -- mode bodies --------------------------------------------------------

    def _estimate_rate(self, psi: float, dt: float) -> float:
        if self._prev_psi is None:
            self._prev_psi = psi
            return 0.0
        raw = wrap_error(psi, self._prev_psi) / dt
        self._prev_psi = psi
        alpha = self.config.rate_filter_alpha
        self._rate_estimate += alpha * (raw - self._rate_estimate)
        return self._rate_estimate

    def _neutral(self, measured: MeasuredState, scale: float) -> GuidanceOutput:
        neutral = self.thruster.pwm_neutral
        return GuidanceOutput(neutral, neutral, self.mode, 0.0, measured.psi,
                              0.0, 0.0, scale)

    def _manual(self, measured: MeasuredState, scale: float) -> GuidanceOutput:
        sp = self.setpoint
        model = self.thruster
        up = model.pwm_max - model.pwm_neutral
        down = model.pwm_neutral - model.pwm_min

        def to_pwm(n):
            span = up if n >= 0 else down
            return int(round(model.pwm_neutral + n * span))

        return GuidanceOutput(to_pwm(sp.left), to_pwm(sp.right), self.mode,
                              0.0, measured.psi, 0.0, 0.0, scale)

    def _velhead(self, measured: MeasuredState, speed_sp: float,
                 heading_sp: float, r_meas: float, dt: float, scale: float,
                 r_ff: float = 0.0) -> GuidanceOutput:
        scaled = speed_sp * scale
        t_forward = self.speed.step(scaled, measured.sog, dt)
        t_yaw = self.heading.step(heading_sp, measured.psi, r_meas, dt, r_ff)
        t_l, t_r = mix(t_forward, t_yaw, self.limits)
        return GuidanceOutput(
            pwm_from_thrust(t_l, self.thruster),
            pwm_from_thrust(t_r, self.thruster),
            self.mode, scaled, heading_sp, t_forward, t_yaw, scale)

    def _position(self, measured: MeasuredState, waypoint: WaypointSetpoint,
                  r_meas: float, dt: float, scale: float) -> GuidanceOutput:
        distance = math.hypot(waypoint.x_east - measured.x_east,
                              waypoint.y_north - measured.y_north)
        if distance <= waypoint.accept_radius:
            anchor = LoiterAnchor(waypoint.x_east, waypoint.y_north,
                                  self.config.loiter_radius)
            self._enter_loiter(anchor, measured.psi, measured.t, "arrival")
            sp = loiter_step(anchor, measured, self._hold_heading,
                             self.config.creep_gain, self.config.creep_cap)
            return self._velhead(measured, sp.speed, sp.heading, r_meas, dt,
                                 scale)
        psi_sp, r_ff = l1_heading(measured, waypoint.x_east, waypoint.y_north,
                                  self.config.l1_distance)
        speed_sp = (waypoint.transit_speed if waypoint.transit_speed
                    is not None else self.config.transit_speed)
        return self._velhead(measured, speed_sp, psi_sp, r_meas, dt, scale,
                             r_ff)
