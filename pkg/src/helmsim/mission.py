"""Mission execution: the shared simulation tick, run logs, metrics, exports.

One :class:`SimSession` owns the vessel, controller, virtual sensors,
and battery, and advances them together in fixed control ticks (10 Hz,
each containing five 50 Hz physics substeps).  :func:`run_mission`
drives a session from a plan; the link service drives the same tick
from network commands, so a scripted mission and a served one integrate
identically.

Every control tick appends one :class:`TickRecord`.  Logs serialize to
JSON-lines (byte-identical for identical seeds), CSV trajectories, and
a plot-ready JSON bundle.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .config import (BatteryConfig, LoiterAt, MissionConfig, MissionPlan,
                     PlanItem, SetMode, VelHeadLeg, Wait, Waypoint,
                     load_config, plan_from_document, plan_to_document)
from .control import (ControlMode, GuidanceController, LoiterAnchor,
                      ManualSetpoint, VelHeadSetpoint, WaypointSetpoint,
                      wrap_error)
from .dynamics import (CONTROL_DT, PHYSICS_DT, SimVessel, VesselState,
                       sensor_sample)
from .errors import RangeError
from .hydro import FRESH_WATER, total_drag
from .perception import NO_READING, LidarSim, PerceptionPipeline, SonarSim

__all__ = [
    "TickRecord", "Event", "RunLog", "BatteryRuntime", "SimSession",
    "run_mission", "generate_survey_pattern",
    "LegCrossTrack", "Metrics", "compute_metrics",
    "CSV_HEADER", "export_csv", "export_jsonl", "load_jsonl",
    "export_plotdata",
    # re-exported plan vocabulary
    "MissionPlan", "Waypoint", "VelHeadLeg", "LoiterAt", "SetMode", "Wait",
]

#: physics substeps per control tick (50 Hz inside a 10 Hz loop)
SUBSTEPS = round(CONTROL_DT / PHYSICS_DT)

# tick timestamps are produced as index/10 so they print as the shortest
# decimal; guard the assumption the division encodes
assert abs(CONTROL_DT - 0.1) < 1e-15


def _tick_time(index: int) -> float:
    return index / 10.0


# --- per-tick record ----------------------------------------------------------

@dataclass(frozen=True)
class TickRecord:
    """Everything observable at one control tick.

    Pose/velocity fields hold the truth state *at decision time* (the
    same instant the measured fix was taken); ``act_*`` thrusts and the
    battery fraction are sampled after the tick's physics substeps.
    """

    t: float
    # truth
    x: float
    y: float
    psi: float
    u: float
    v: float
    r: float
    # measured fix
    mx: float
    my: float
    mpsi: float
    sog: float
    cog: float
    # controller
    mode: int
    armed: bool
    sp_u: float
    sp_psi: float
    t_forward: float
    t_yaw: float
    speed_scale: float
    # commands (per side): newtons and pulse widths
    cmd_l_n: float
    cmd_r_n: float
    pwm_l: int
    pwm_r: int
    # lag-filtered thrust actually produced, end of tick
    act_l_n: float
    act_r_n: float
    # fused obstacle digest
    sector_min_cm: int
    sector_min_index: int
    shallow: bool
    battery_fraction: float


@dataclass(frozen=True)
class Event:
    """A timestamped annotation: plan progress, mode changes, terminal."""

    t: float
    kind: str  # "plan-start" | "plan-done" | "mode" | "terminal"
    label: str
    index: Optional[int] = None  # plan item index where applicable


@dataclass(frozen=True)
class RunLog:
    """All records and events of one run, plus reproducibility metadata."""

    records: Tuple[TickRecord, ...]
    events: Tuple[Event, ...]
    meta: Mapping

    @property
    def plan(self) -> Optional[MissionPlan]:
        section = self.meta.get("plan")
        return None if section is None else plan_from_document(section)


# --- battery ------------------------------------------------------------------

class BatteryRuntime:
    """Integrates a hotel-plus-thrust draw model over control ticks."""

    def __init__(self, config: BatteryConfig):
        self.config = config
        self.used_ah = 0.0

    def step(self, thrust_newtons: float, dt: float) -> float:
        amps = (self.config.hotel_amps
                + self.config.amps_per_newton * abs(thrust_newtons))
        self.used_ah += amps * dt / 3600.0
        return self.fraction

    @property
    def fraction(self) -> float:
        left = self.config.initial_fraction \
            - self.used_ah / self.config.capacity_ah
        return max(0.0, left)

    @property
    def energy_wh(self) -> float:
        return self.used_ah * self.config.voltage


def cruise_endurance_hours(config: MissionConfig, speed: float = 1.5) -> float:
    """Analytic battery life holding a straight line at constant speed.

    Steady state: commanded static thrust = drag / advance decay; draw
    is the hotel load plus the thrust-proportional term.  Matches the
    integration the mission runner performs tick by tick.
    """
    if speed <= 0:
        raise RangeError("cruise speed must be positive")
    thruster = config.thruster
    drag = total_drag(config.geometry, FRESH_WATER, speed,
                      overrides=config.overrides).total
    drag += config.body.d_u1 * speed
    decay = 1.0 - ((1.0 - thruster.moving_efficiency)
                   * min(speed, thruster.rated_speed)
                   / thruster.rated_speed)
    static = drag / decay
    battery = config.battery
    amps = battery.hotel_amps + battery.amps_per_newton * static
    return battery.capacity_ah * battery.initial_fraction / amps


# --- plan sequencing ----------------------------------------------------------

def default_setpoint(session: "SimSession", mode: ControlMode,
                     left: float = 0.0, right: float = 0.0):
    """The setpoint a bare mode change adopts: hold what you have now.

    Used both by scripted set_mode plan items and by mode-change
    commands arriving over the link, so the two paths stay equivalent.
    """
    state = session.vessel.state
    cfg = session.config.control
    if mode == ControlMode.Manual:
        return ManualSetpoint(left, right)
    if mode == ControlMode.GuidedVelocityHeading:
        return VelHeadSetpoint(0.0, state.psi)
    if mode == ControlMode.GuidedPosition:
        return WaypointSetpoint(state.x_east, state.y_north,
                                cfg.accept_radius)
    if mode == ControlMode.Loiter:
        return LoiterAnchor(state.x_east, state.y_north, cfg.loiter_radius)
    return None  # Hold / ReturnToLaunch


class _PlanRunner:
    """Applies plan items to the controller and watches for completion."""

    def __init__(self, plan: MissionPlan, session: "SimSession"):
        self.plan = plan
        self.session = session
        self.index = -1
        self.item_start = 0.0
        self.complete = False

    @staticmethod
    def _label(item: PlanItem) -> str:
        if isinstance(item, Waypoint):
            return f"waypoint ({item.x!r}, {item.y!r})"
        if isinstance(item, VelHeadLeg):
            return (f"velhead {item.speed!r} m/s at {item.heading!r} deg "
                    f"for {item.duration!r} s")
        if isinstance(item, LoiterAt):
            return f"loiter ({item.x!r}, {item.y!r}) for {item.duration!r} s"
        if isinstance(item, SetMode):
            return f"set_mode {item.mode.name}"
        return f"wait {item.duration!r} s"

    def _apply(self, item: PlanItem, t: float):
        controller = self.session.controller
        cfg = self.session.config.control
        if isinstance(item, Waypoint):
            radius = item.accept_radius if item.accept_radius is not None \
                else cfg.accept_radius
            controller.set_mode(
                ControlMode.GuidedPosition,
                WaypointSetpoint(item.x, item.y, radius, item.transit_speed),
                t, "plan")
        elif isinstance(item, VelHeadLeg):
            controller.set_mode(
                ControlMode.GuidedVelocityHeading,
                VelHeadSetpoint(item.speed, item.heading), t, "plan")
        elif isinstance(item, LoiterAt):
            radius = item.radius if item.radius is not None \
                else cfg.loiter_radius
            controller.set_mode(
                ControlMode.Loiter, LoiterAnchor(item.x, item.y, radius),
                t, "plan")
        elif isinstance(item, SetMode):
            setpoint = default_setpoint(self.session, item.mode,
                                        item.left, item.right)
            controller.set_mode(item.mode, setpoint, t, "plan")
        # Wait: leave the controller doing whatever it was doing

    def _done(self, item: PlanItem, t: float) -> bool:
        if isinstance(item, Waypoint):
            # arrival flips GuidedPosition to Loiter at the target
            return self.session.controller.mode == ControlMode.Loiter
        if isinstance(item, SetMode):
            return True
        return t - self.item_start >= item.duration - 1e-9

    def advance(self, t: float) -> List[Event]:
        """Apply due items; returns the plan events this produced."""
        events: List[Event] = []
        if self.complete:
            return events
        while True:
            if self.index >= 0:
                item = self.plan.items[self.index]
                if not self._done(item, t):
                    break
                events.append(
                    Event(t, "plan-done", self._label(item), self.index))
            self.index += 1
            if self.index >= len(self.plan.items):
                self.complete = True
                break
            self.item_start = t
            item = self.plan.items[self.index]
            self._apply(item, t)
            events.append(Event(t, "plan-start", self._label(item),
                                self.index))
            if not isinstance(item, SetMode):
                break
        return events


# --- the shared tick ----------------------------------------------------------

class SimSession:
    """Vessel + controller + sensors + battery marching in lock step.

    Single-owner and strictly synchronous: call :meth:`tick` once per
    10 Hz control period.  The scripted runner and the link service both
    drive sessions through this one method, which is what makes a served
    run reproduce a scripted one tick for tick.
    """

    def __init__(self, config: MissionConfig, seed: Optional[int] = None):
        self.config = config
        self.seed = config.seed if seed is None else int(seed)
        streams = np.random.SeedSequence(self.seed).spawn(3)
        self._sensor_rng = np.random.default_rng(streams[0])
        self._lidar_rng = np.random.default_rng(streams[1])
        self._sonar_rng = np.random.default_rng(streams[2])

        plan = config.plan
        home = plan.home if plan is not None else (0.0, 0.0)
        heading0 = plan.initial_heading if plan is not None else 0.0
        side = config.side_thruster()
        self.vessel = SimVessel(
            body=config.body, thruster=side, env=config.environment,
            geom=config.geometry, overrides=config.overrides,
            state=VesselState(0.0, home[0], home[1], heading0,
                              0.0, 0.0, 0.0))
        self.controller = GuidanceController(config.control, side,
                                             home=home, armed=True)
        self.pipeline = PerceptionPipeline(config.perception)
        self.lidar = LidarSim(config.lidar.samples_per_sweep,
                              config.lidar.noise_sigma,
                              config.lidar.max_range, config.lidar.quality)
        self.sonar = SonarSim(
            mount_angle=config.sonar.mount_angle,
            noise_sigma=config.sonar.noise_sigma,
            max_range=config.sonar.max_range,
            base_confidence=config.sonar.base_confidence,
            turbulence_confidence=config.sonar.turbulence_confidence,
            turbulence_zones=config.world.turbulence_zones,
            water_depth=config.world.water_depth,
            shallow_regions=config.world.shallow_regions)
        self.battery = BatteryRuntime(config.battery)

        #: seconds since the last command link activity; the service
        #: updates this, the scripted runner leaves it fresh
        self.link_age = 0.0
        self.records: List[TickRecord] = []
        self.events: List[Event] = []
        self.tick_index = 0
        self.terminal: Optional[str] = None
        #: most recent fused sector ring, for telemetry broadcast
        self.last_sectors = None
        self._runner = _PlanRunner(plan, self) if plan is not None else None
        self._battery_failsafe = False

    @property
    def t(self) -> float:
        return _tick_time(self.tick_index)

    def tick(self) -> Optional[TickRecord]:
        """Advance one control period; ``None`` when the plan just ended."""
        if self.terminal is not None:
            raise RangeError("session has already terminated")
        t = self.t
        events: List[Event] = []

        if self._runner is not None and not self._battery_failsafe:
            events.extend(self._runner.advance(t))
            if self._runner.complete:
                self.events.extend(events)
                self.terminal = "completed"
                return None

        truth = self.vessel.state
        measured = sensor_sample(truth, self.config.environment,
                                 self._sensor_rng)
        # pin the fix to the control grid: the vessel's own clock
        # accumulates float drift over thousands of substeps
        measured = dataclasses.replace(measured, t=t)
        sweep = self.lidar.sweep(truth.x_east, truth.y_north, truth.psi,
                                 self.config.world.obstacles,
                                 rng=self._lidar_rng)
        ping = self.sonar.ping(truth.x_east, truth.y_north, truth.psi,
                               self.config.world.obstacles,
                               rng=self._sonar_rng)
        fused = self.pipeline.update(sweep, ping, t)
        self.last_sectors = fused.sectors

        out = self.controller.step(measured, fused.sectors, CONTROL_DT,
                                   link_age=self.link_age,
                                   battery_fraction=self.battery.fraction)
        self.vessel.set_pwm(out.pwm_left, out.pwm_right)
        cmd_l, cmd_r = self.vessel.command
        for _ in range(SUBSTEPS):
            self.vessel.step(PHYSICS_DT)
        act_l, act_r = self.vessel.thrust
        fraction = self.battery.step(abs(act_l) + abs(act_r), CONTROL_DT)

        for transition in out.transitions:
            events.append(Event(
                transition.t, "mode",
                f"{transition.previous.name}->{transition.mode.name} "
                f"({transition.cause})"))
            if transition.cause == "battery":
                self._battery_failsafe = True
            elif (self._battery_failsafe
                    and transition.mode == ControlMode.Loiter
                    and transition.cause == "arrival"):
                # made it back home on the emergency return
                self.terminal = "failsafe"

        min_cm, min_index = NO_READING, -1
        for index, value in enumerate(fused.sectors.distances_cm):
            if value != NO_READING and value < min_cm:
                min_cm, min_index = value, index

        record = TickRecord(
            t=t, x=truth.x_east, y=truth.y_north, psi=truth.psi,
            u=truth.u, v=truth.v, r=truth.r,
            mx=measured.x_east, my=measured.y_north, mpsi=measured.psi,
            sog=measured.sog, cog=measured.cog,
            mode=int(out.mode), armed=self.controller.armed,
            sp_u=out.speed_setpoint, sp_psi=out.heading_setpoint,
            t_forward=out.t_forward, t_yaw=out.t_yaw,
            speed_scale=out.speed_scale,
            cmd_l_n=cmd_l, cmd_r_n=cmd_r,
            pwm_l=out.pwm_left, pwm_r=out.pwm_right,
            act_l_n=act_l, act_r_n=act_r,
            sector_min_cm=min_cm, sector_min_index=min_index,
            shallow=fused.shallow_water,
            battery_fraction=fraction)
        self.records.append(record)
        self.events.extend(events)
        self.tick_index += 1
        return record


def collect_log(session: "SimSession", reason: Optional[str] = None) -> RunLog:
    """Freeze a session's history into a RunLog with a terminal event."""
    config = session.config
    reason = reason or session.terminal or "timeout"
    events = tuple(session.events) + (
        Event(session.t, "terminal", reason),)
    meta = {
        "name": config.name,
        "seed": session.seed,
        "tick_seconds": CONTROL_DT,
        "battery_capacity_ah": config.battery.capacity_ah,
        "battery_voltage": config.battery.voltage,
        "battery_initial_fraction": config.battery.initial_fraction,
        "terminal": reason,
    }
    if config.plan is not None:
        meta["plan"] = plan_to_document(config.plan)
    return RunLog(records=tuple(session.records), events=events, meta=meta)


def run_mission(config: Union[MissionConfig, Mapping, str, Path, None] = None,
                plan: Optional[MissionPlan] = None,
                seed: Optional[int] = None) -> RunLog:
    """Run a plan to completion, failsafe return, or timeout."""
    if not isinstance(config, MissionConfig):
        config = load_config(config if config is not None else "bep-default")
    if plan is not None:
        config = dataclasses.replace(config, plan=plan)
    if config.plan is None:
        raise RangeError("configuration has no mission plan")
    session = SimSession(config, seed=seed)
    max_ticks = int(round(config.plan.timeout / CONTROL_DT))
    while session.terminal is None and session.tick_index < max_ticks:
        session.tick()
    return collect_log(session)


# --- survey generator ---------------------------------------------------------

def generate_survey_pattern(corner_a: Sequence[float],
                            corner_b: Sequence[float],
                            lane_spacing: float,
                            transit_speed: Optional[float] = None,
                            accept_radius: Optional[float] = None,
                            home: Tuple[float, float] = (0.0, 0.0),
                            timeout: float = 600.0) -> MissionPlan:
    """Boustrophedon coverage of the axis-aligned rectangle.

    Lanes run parallel to the rectangle's long axis, spaced
    ``lane_spacing`` apart starting on one edge; the last lane is
    clamped onto the far edge, so ``ceil(short/spacing) + 1`` lanes
    always cover the short extent (two lanes when the spacing meets or
    exceeds it).  Consecutive lanes run in opposite directions.
    """
    if lane_spacing <= 0:
        raise RangeError("lane_spacing must be positive")
    ax, ay = float(corner_a[0]), float(corner_a[1])
    bx, by = float(corner_b[0]), float(corner_b[1])
    x0, x1 = min(ax, bx), max(ax, bx)
    y0, y1 = min(ay, by), max(ay, by)
    if x1 - x0 <= 0 and y1 - y0 <= 0:
        raise RangeError("survey rectangle is degenerate (a point)")
    along_x = (x1 - x0) >= (y1 - y0)
    short = (y1 - y0) if along_x else (x1 - x0)
    if short <= 0:
        lane_count = 1
    else:
        lane_count = math.ceil(round(short / lane_spacing, 9)) + 1
    waypoints: List[Waypoint] = []
    for lane in range(lane_count):
        offset = min(lane * lane_spacing, short)
        if along_x:
            near = (x0, y0 + offset)
            far = (x1, y0 + offset)
        else:
            near = (x0 + offset, y0)
            far = (x0 + offset, y1)
        first, second = (near, far) if lane % 2 == 0 else (far, near)
        for px, py in (first, second):
            waypoints.append(Waypoint(px, py, accept_radius, transit_speed))
    return MissionPlan(items=tuple(waypoints), home=home, timeout=timeout)


# --- metrics ------------------------------------------------------------------

@dataclass(frozen=True)
class LegCrossTrack:
    """Cross-track statistics for one waypoint leg of the plan."""

    index: int
    mean: float
    max: float
    rmse: float
    time_to_arrive: Optional[float]
    arrived: bool


@dataclass(frozen=True)
class Metrics:
    """Run-level tracking quality and consumption figures."""

    duration: float
    distance: float
    energy_wh: float
    battery_final: float
    speed_rmse: Optional[float]
    heading_rmse: Optional[float]
    cross_track: Tuple[LegCrossTrack, ...]
    cross_track_mean: Optional[float]
    cross_track_max: Optional[float]
    time_to_waypoint: Tuple[float, ...]
    loiter_max_excursion: Optional[float]
    terminal: str


def _rmse(errors: Sequence[float]) -> float:
    return math.sqrt(sum(err * err for err in errors) / len(errors))


def _item_windows(log: RunLog) -> dict:
    """Map plan item index -> (start_t, done_t or None)."""
    windows: dict = {}
    for event in log.events:
        if event.kind == "plan-start":
            windows[event.index] = [event.t, None]
        elif event.kind == "plan-done" and event.index in windows:
            windows[event.index][1] = event.t
    return windows


def _cross_track_error(px: float, py: float, origin: Tuple[float, float],
                       target: Tuple[float, float]) -> float:
    ox, oy = origin
    tx, ty = target
    ex, ey = tx - ox, ty - oy
    length = math.hypot(ex, ey)
    if length <= 1e-12:
        return math.hypot(px - ox, py - oy)
    return abs(ex * (py - oy) - ey * (px - ox)) / length


def compute_metrics(log: RunLog, plan: Optional[MissionPlan] = None,
                    settle: float = 20.0) -> Metrics:
    """Tracking-quality metrics; legs are taken from the plan geometry.

    Speed/heading RMSE pools steady-speed legs after discarding the
    first ``settle`` seconds of each.  Cross-track error is measured
    against the planned leg line (previous waypoint, or home, to the
    active waypoint), not the path actually sailed.
    """
    if plan is None:
        plan = log.plan
    records = log.records
    duration = len(records) * CONTROL_DT
    distance = 0.0
    for previous, current in zip(records, records[1:]):
        distance += math.hypot(current.x - previous.x,
                               current.y - previous.y)
    capacity = log.meta.get("battery_capacity_ah", 0.0)
    voltage = log.meta.get("battery_voltage", 0.0)
    initial = log.meta.get("battery_initial_fraction", 1.0)
    final_fraction = records[-1].battery_fraction if records else initial
    energy_wh = max(0.0, (initial - final_fraction) * capacity * voltage)

    speed_errors: List[float] = []
    heading_errors: List[float] = []
    legs: List[LegCrossTrack] = []
    times: List[float] = []
    loiter_excursion: Optional[float] = None
    pooled_cross: List[float] = []

    if plan is not None and records:
        windows = _item_windows(log)
        last_fix: Tuple[float, float] = plan.home
        for index, item in enumerate(plan.items):
            window = windows.get(index)
            if window is None:
                if isinstance(item, (Waypoint, LoiterAt)):
                    last_fix = (item.x, item.y)
                continue
            start_t, done_t = window
            end_t = done_t if done_t is not None else duration
            span = [record for record in records
                    if start_t <= record.t < end_t]
            if isinstance(item, Waypoint):
                target = (item.x, item.y)
                errors = [_cross_track_error(r.x, r.y, last_fix, target)
                          for r in span]
                if errors:
                    legs.append(LegCrossTrack(
                        index=index,
                        mean=sum(errors) / len(errors),
                        max=max(errors),
                        rmse=_rmse(errors),
                        time_to_arrive=(done_t - start_t
                                        if done_t is not None else None),
                        arrived=done_t is not None))
                    pooled_cross.extend(errors)
                if done_t is not None:
                    times.append(done_t - start_t)
                last_fix = target
            elif isinstance(item, VelHeadLeg):
                settled = [r for r in span if r.t >= start_t + settle]
                speed_errors.extend(r.u - item.speed for r in settled)
                heading_errors.extend(
                    wrap_error(item.heading, r.psi) for r in settled)
            elif isinstance(item, LoiterAt):
                if span:
                    worst = max(math.hypot(r.x - item.x, r.y - item.y)
                                for r in span)
                    loiter_excursion = worst if loiter_excursion is None \
                        else max(loiter_excursion, worst)
                last_fix = (item.x, item.y)

    return Metrics(
        duration=duration,
        distance=distance,
        energy_wh=energy_wh,
        battery_final=final_fraction,
        speed_rmse=_rmse(speed_errors) if speed_errors else None,
        heading_rmse=_rmse(heading_errors) if heading_errors else None,
        cross_track=tuple(legs),
        cross_track_mean=(sum(pooled_cross) / len(pooled_cross)
                          if pooled_cross else None),
        cross_track_max=max(pooled_cross) if pooled_cross else None,
        time_to_waypoint=tuple(times),
        loiter_max_excursion=loiter_excursion,
        terminal=str(log.meta.get("terminal", "unknown")))


# --- exports ------------------------------------------------------------------

CSV_HEADER = "t,x,y,psi,u,sp_u,sp_psi,pwm_l,pwm_r"


def _dumps(payload: Mapping) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def export_jsonl(log: RunLog, path: Union[str, Path]) -> Path:
    """One meta line, then one line per record, then one per event."""
    lines = [_dumps({"row": "meta", **log.meta})]
    for record in log.records:
        lines.append(_dumps({"row": "tick",
                             **dataclasses.asdict(record)}))
    for event in log.events:
        lines.append(_dumps({"row": "event",
                             **dataclasses.asdict(event)}))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def load_jsonl(path: Union[str, Path]) -> RunLog:
    """Inverse of :func:`export_jsonl`."""
    meta: Mapping = {}
    records: List[TickRecord] = []
    events: List[Event] = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        payload = json.loads(line)
        row = payload.pop("row")
        if row == "meta":
            meta = payload
        elif row == "tick":
            records.append(TickRecord(**payload))
        elif row == "event":
            events.append(Event(**payload))
        else:
            raise RangeError(f"unknown log line type {row!r}")
    return RunLog(records=tuple(records), events=tuple(events), meta=meta)


def export_csv(log: RunLog, path: Union[str, Path]) -> Path:
    """Trajectory table with the fixed 9-column header."""
    lines = [CSV_HEADER]
    for r in log.records:
        lines.append(
            f"{r.t!r},{r.x!r},{r.y!r},{r.psi!r},{r.u!r},"
            f"{r.sp_u!r},{r.sp_psi!r},{r.pwm_l},{r.pwm_r}")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def export_plotdata(log: RunLog, path: Union[str, Path, None] = None) -> dict:
    """Metric summary plus aligned series arrays, JSON-ready."""
    metrics = compute_metrics(log)
    series_fields = ("t", "x", "y", "psi", "u", "sog", "sp_u", "sp_psi",
                     "pwm_l", "pwm_r", "speed_scale", "battery_fraction",
                     "sector_min_cm")
    series = {name: [getattr(record, name) for record in log.records]
              for name in series_fields}
    payload = {
        "meta": dict(log.meta),
        "metrics": dataclasses.asdict(metrics),
        "series": series,
        "events": [dataclasses.asdict(event) for event in log.events],
    }
    payload = json.loads(_dumps(payload))  # normalize tuples to lists
    if path is not None:
        Path(path).write_text(_dumps(payload) + "\n")
    return payload
