"""Configuration documents: YAML loading, schema validation, presets.

A configuration is a single YAML (or JSON) mapping validated against the
JSON schema shipped as ``config.schema.json``.  Unknown keys are
rejected, and every validation failure is reported as a
:class:`~helmsim.errors.SchemaError` whose message starts with the
dotted path of the offending field.

A document may name a ``preset`` — one of the YAML files shipped under
``presets/`` — in which case the preset provides defaults and the user
document overrides them field by field (user always wins).  The merged
result records where each leaf value came from in
:attr:`MissionConfig.provenance`.
"""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Tuple, Union

import jsonschema
import yaml

from .control import ControlConfig, ControlMode, PidGains
from .dynamics import BodyParams, EnvironmentField, ThrusterModel
from .errors import RangeError, SchemaError
from .hydro import CoefficientOverrides, HullGeometry
from .perception import (CircleObstacle, PerceptionConfig, SegmentObstacle,
                         ShallowRegion)

__all__ = [
    "Waypoint", "VelHeadLeg", "LoiterAt", "SetMode", "Wait", "PlanItem",
    "MissionPlan", "WorldConfig", "LidarConfig", "SonarConfig",
    "BatteryConfig", "ServiceConfig", "MissionConfig",
    "available_presets", "load_preset_document", "validate_document",
    "load_config", "plan_to_document", "plan_from_document",
]


# --- mission plan -------------------------------------------------------------

@dataclass(frozen=True)
class Waypoint:
    """Transit to a point; ``None`` radius/speed fall back to the control
    defaults at run time."""

    x: float
    y: float
    accept_radius: Optional[float] = None
    transit_speed: Optional[float] = None

    def __post_init__(self):
        if self.accept_radius is not None and self.accept_radius <= 0:
            raise RangeError("waypoint accept_radius must be positive")
        if self.transit_speed is not None and self.transit_speed < 0:
            raise RangeError("waypoint transit_speed must be >= 0")


@dataclass(frozen=True)
class VelHeadLeg:
    """Hold a speed and heading for a fixed duration."""

    speed: float
    heading: float
    duration: float

    def __post_init__(self):
        if self.speed < 0:
            raise RangeError("leg speed must be >= 0")
        if not 0.0 <= self.heading < 360.0:
            raise RangeError("leg heading must lie in [0, 360)")
        if self.duration <= 0:
            raise RangeError("leg duration must be positive")


@dataclass(frozen=True)
class LoiterAt:
    """Station-keep at a point for a fixed duration."""

    x: float
    y: float
    duration: float
    radius: Optional[float] = None

    def __post_init__(self):
        if self.duration <= 0:
            raise RangeError("loiter duration must be positive")
        if self.radius is not None and self.radius <= 0:
            raise RangeError("loiter radius must be positive")


@dataclass(frozen=True)
class SetMode:
    """Switch control mode; stick values apply to Manual only."""

    mode: ControlMode
    left: float = 0.0
    right: float = 0.0

    def __post_init__(self):
        if not (-1.0 <= self.left <= 1.0 and -1.0 <= self.right <= 1.0):
            raise RangeError("stick values must lie in [-1, 1]")


@dataclass(frozen=True)
class Wait:
    """Let the current mode run for a fixed duration."""

    duration: float

    def __post_init__(self):
        if self.duration <= 0:
            raise RangeError("wait duration must be positive")


PlanItem = Union[Waypoint, VelHeadLeg, LoiterAt, SetMode, Wait]


@dataclass(frozen=True)
class MissionPlan:
    """An ordered, non-empty list of plan items plus the home point."""

    items: Tuple[PlanItem, ...]
    home: Tuple[float, float] = (0.0, 0.0)
    initial_heading: float = 0.0
    timeout: float = 600.0

    def __post_init__(self):
        if not self.items:
            raise RangeError("mission plan must contain at least one item")
        if not 0.0 <= self.initial_heading < 360.0:
            raise RangeError("initial heading must lie in [0, 360)")
        if self.timeout <= 0:
            raise RangeError("mission timeout must be positive")
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "home",
                           (float(self.home[0]), float(self.home[1])))


# --- remaining sections -------------------------------------------------------

@dataclass(frozen=True)
class WorldConfig:
    """Static surroundings seen by the virtual sensors."""

    obstacles: Tuple[Union[CircleObstacle, SegmentObstacle], ...] = ()
    turbulence_zones: Tuple[CircleObstacle, ...] = ()
    water_depth: float = 10.0
    shallow_regions: Tuple[ShallowRegion, ...] = ()


@dataclass(frozen=True)
class LidarConfig:
    samples_per_sweep: int = 720
    noise_sigma: float = 0.02
    max_range: float = 40.0
    quality: int = 255


@dataclass(frozen=True)
class SonarConfig:
    mount_angle: float = 15.0
    noise_sigma: float = 0.1
    max_range: float = 30.0
    base_confidence: float = 95.0
    turbulence_confidence: float = 30.0


@dataclass(frozen=True)
class BatteryConfig:
    """Capacity plus a two-term draw model (hotel load + per-newton)."""

    capacity_ah: float = 66.0
    voltage: float = 22.2
    hotel_amps: float = 2.0
    amps_per_newton: float = 0.07630495778530419
    initial_fraction: float = 1.0

    def __post_init__(self):
        if self.capacity_ah <= 0 or self.voltage <= 0:
            raise RangeError("battery capacity and voltage must be positive")
        if self.hotel_amps < 0 or self.amps_per_newton < 0:
            raise RangeError("battery draw terms must be >= 0")
        if not 0.0 < self.initial_fraction <= 1.0:
            raise RangeError("initial_fraction must lie in (0, 1]")


@dataclass(frozen=True)
class ServiceConfig:
    """Link endpoints and telemetry cadence (in 10 Hz control ticks)."""

    tcp_port: int = 14650
    ws_port: int = 14651
    heartbeat_every: int = 10
    telemetry_every: int = 2
    position_fix: bool = True

    def __post_init__(self):
        if self.heartbeat_every < 1 or self.telemetry_every < 1:
            raise RangeError("telemetry cadence must be >= 1 tick")


@dataclass(frozen=True)
class MissionConfig:
    """A fully validated configuration, ready to run.

    ``provenance`` maps each dotted leaf path of the merged document to
    the source that supplied it (``"user"`` or ``"preset:<name>"``).
    """

    name: str
    geometry: HullGeometry
    overrides: CoefficientOverrides
    body: BodyParams
    thruster: ThrusterModel
    thruster_count: int
    environment: EnvironmentField
    control: ControlConfig
    perception: PerceptionConfig
    lidar: LidarConfig
    sonar: SonarConfig
    world: WorldConfig
    battery: BatteryConfig
    service: ServiceConfig
    plan: Optional[MissionPlan]
    seed: int
    provenance: Mapping[str, str]

    def side_thruster(self) -> ThrusterModel:
        """Thruster model for one side: ``count/2`` units ganged."""
        per_side = self.thruster_count // 2
        return dataclasses.replace(
            self.thruster,
            max_static_thrust=self.thruster.max_static_thrust * per_side)


# --- schema validation --------------------------------------------------------

def _load_schema() -> dict:
    text = resources.files("helmsim").joinpath("config.schema.json").read_text()
    return json.loads(text)


_VALIDATOR = jsonschema.Draft202012Validator(_load_schema())


def _error_path(error: jsonschema.exceptions.ValidationError) -> str:
    pieces = list(error.absolute_path)
    if error.validator == "additionalProperties":
        # name the offending key itself, not just its parent object
        unexpected = re.findall(r"'([^']+)'", error.message)
        if unexpected:
            pieces.append(unexpected[0])
    parts = []
    for piece in pieces:
        if isinstance(piece, int):
            parts.append(f"[{piece}]")
        else:
            parts.append(f".{piece}" if parts else str(piece))
    return "".join(parts) or "<root>"


def _descend(error: jsonschema.exceptions.ValidationError
             ) -> jsonschema.exceptions.ValidationError:
    """Pick the most telling sub-error of a oneOf/anyOf failure.

    Plan items carry a ``type`` discriminator; sub-errors from branches
    whose discriminator did not match are noise, so prefer the branch
    that matched and report its deepest complaint.
    """
    while error.context:
        branches = {}
        for sub in error.context:
            branches.setdefault(sub.schema_path[0], []).append(sub)

        def discriminator_matched(subs) -> bool:
            return not any(
                sub.validator == "const"
                and (list(sub.absolute_path) or [None])[-1] == "type"
                for sub in subs)

        matching = [subs for _, subs in sorted(branches.items())
                    if discriminator_matched(subs)]
        if not matching:
            # no branch matched the discriminator at all
            consts = [sub for sub in error.context
                      if sub.validator == "const"
                      and (list(sub.absolute_path) or [None])[-1] == "type"]
            if consts:
                return consts[0]
        pool = matching[0] if matching else list(error.context)
        error = max(pool, key=jsonschema.exceptions.relevance)
    return error


def validate_document(document: Mapping) -> None:
    """Raise :class:`SchemaError` (path-qualified) if the document is bad."""
    if not isinstance(document, Mapping):
        raise SchemaError("<root>: configuration must be a mapping")
    errors = list(_VALIDATOR.iter_errors(document))
    if errors:
        best = _descend(jsonschema.exceptions.best_match(errors))
        message = best.message
        if (best.validator == "const"
                and (list(best.absolute_path) or [None])[-1] == "type"):
            message = f"{best.instance!r} is not a recognized entry type"
        raise SchemaError(f"{_error_path(best)}: {message}")


# --- presets and merging ------------------------------------------------------

def available_presets() -> Tuple[str, ...]:
    """Names of the YAML presets shipped with the package."""
    root = resources.files("helmsim").joinpath("presets")
    names = [entry.name[:-5] for entry in root.iterdir()
             if entry.name.endswith(".yaml")]
    return tuple(sorted(names))


def _parse_yaml(text: str, origin: str) -> dict:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError(f"<root>: {origin} is not valid YAML: {exc}") from exc
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise SchemaError(f"<root>: {origin} must be a mapping")
    return doc


def load_preset_document(name: str) -> dict:
    """The raw (unmerged, unvalidated) document of a shipped preset."""
    path = resources.files("helmsim").joinpath(f"presets/{name}.yaml")
    try:
        text = path.read_text()
    except (FileNotFoundError, OSError):
        raise SchemaError(
            f"preset: unknown preset {name!r} "
            f"(available: {', '.join(available_presets())})") from None
    return _parse_yaml(text, f"preset {name!r}")


def _leaf_paths(node, prefix=""):
    if isinstance(node, dict):
        for key, value in node.items():
            inner = f"{prefix}.{key}" if prefix else str(key)
            yield from _leaf_paths(value, inner)
    else:
        yield prefix


def _deep_merge(base: dict, override: dict) -> dict:
    merged = dict(base)
    for key, value in override.items():
        if (key in merged and isinstance(merged[key], dict)
                and isinstance(value, dict)):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _resolve_presets(document: dict, seen: Tuple[str, ...] = ()):
    """Expand the ``preset`` key (recursively) and track provenance."""
    document = dict(document)
    preset_name = document.pop("preset", None)
    own_prov = {path: "user" for path in _leaf_paths(document)}
    if preset_name is None:
        return document, own_prov
    if not isinstance(preset_name, str):
        raise SchemaError("preset: must be a preset name (string)")
    if preset_name in seen:
        chain = " -> ".join(seen + (preset_name,))
        raise SchemaError(f"preset: circular preset chain: {chain}")
    base_doc, base_prov = _resolve_presets(
        load_preset_document(preset_name), seen + (preset_name,))
    base_prov = {
        path: (src if src.startswith("preset:") else f"preset:{preset_name}")
        for path, src in base_prov.items()
    }
    merged = _deep_merge(base_doc, document)
    return merged, {**base_prov, **own_prov}


# --- building the typed configuration ----------------------------------------

_MODE_NAMES = {
    "manual": ControlMode.Manual,
    "guided_velhead": ControlMode.GuidedVelocityHeading,
    "guided_position": ControlMode.GuidedPosition,
    "loiter": ControlMode.Loiter,
    "hold": ControlMode.Hold,
    "rtl": ControlMode.ReturnToLaunch,
}

_HULL_FIELDS = ("length", "beam", "draft", "displaced_volume",
                "midsection_area", "waterplane_area", "mass")


def _section(document: Mapping, key: str) -> dict:
    return dict(document.get(key, {}) or {})


def _build_dataclass(cls, section: dict, path: str):
    try:
        return cls(**section)
    except RangeError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def _build_plan_item(entry: dict, path: str) -> PlanItem:
    entry = dict(entry)
    kind = entry.pop("type")
    try:
        if kind == "waypoint":
            return Waypoint(**entry)
        if kind == "velhead":
            return VelHeadLeg(**entry)
        if kind == "loiter":
            return LoiterAt(**entry)
        if kind == "set_mode":
            entry["mode"] = _MODE_NAMES[entry["mode"]]
            return SetMode(**entry)
        return Wait(**entry)
    except RangeError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def _build_config(document: Mapping, provenance: Mapping[str, str]
                  ) -> MissionConfig:
    hull = _section(document, "hull")
    missing = [name for name in _HULL_FIELDS if name not in hull]
    if missing:
        raise SchemaError(
            "hull: incomplete geometry; missing "
            + ", ".join(missing)
            + " (name a preset or provide the full hull section)")
    geometry = _build_dataclass(HullGeometry, hull, "hull")

    overrides = _build_dataclass(
        CoefficientOverrides, _section(document, "coefficients"),
        "coefficients")

    body_section = _section(document, "body")
    try:
        body = BodyParams.for_hull(geometry, **body_section)
    except RangeError as exc:
        raise SchemaError(f"body: {exc}") from exc

    thruster_section = _section(document, "thruster")
    count = int(thruster_section.pop("count", 2))
    thruster = _build_dataclass(ThrusterModel, thruster_section, "thruster")

    environment = _build_dataclass(
        EnvironmentField, _section(document, "environment"), "environment")

    control_section = _section(document, "control")
    for gains_key in ("heading_outer", "heading_inner", "speed"):
        if gains_key in control_section:
            control_section[gains_key] = _build_dataclass(
                PidGains, dict(control_section[gains_key]),
                f"control.{gains_key}")
    control = _build_dataclass(ControlConfig, control_section, "control")

    perception = _build_dataclass(
        PerceptionConfig, _section(document, "perception"), "perception")

    sensors = _section(document, "sensors")
    lidar = _build_dataclass(LidarConfig, dict(sensors.get("lidar", {}) or {}),
                             "sensors.lidar")
    sonar = _build_dataclass(SonarConfig, dict(sensors.get("sonar", {}) or {}),
                             "sensors.sonar")

    world_section = _section(document, "world")
    obstacles = []
    for index, entry in enumerate(world_section.get("obstacles", ()) or ()):
        entry = dict(entry)
        kind = entry.pop("type")
        cls = CircleObstacle if kind == "circle" else SegmentObstacle
        obstacles.append(
            _build_dataclass(cls, entry, f"world.obstacles[{index}]"))
    zones = tuple(
        _build_dataclass(CircleObstacle, dict(entry),
                         f"world.turbulence_zones[{index}]")
        for index, entry in
        enumerate(world_section.get("turbulence_zones", ()) or ()))
    shallow = tuple(
        _build_dataclass(ShallowRegion, dict(entry),
                         f"world.shallow_regions[{index}]")
        for index, entry in
        enumerate(world_section.get("shallow_regions", ()) or ()))
    world = WorldConfig(
        obstacles=tuple(obstacles), turbulence_zones=zones,
        water_depth=float(world_section.get("water_depth", 10.0)),
        shallow_regions=shallow)

    battery = _build_dataclass(
        BatteryConfig, _section(document, "battery"), "battery")
    service = _build_dataclass(
        ServiceConfig, _section(document, "service"), "service")

    plan = None
    if "mission" in document:
        try:
            plan = plan_from_document(_section(document, "mission"))
        except RangeError as exc:
            raise SchemaError(f"mission: {exc}") from exc

    return MissionConfig(
        name=str(document.get("name", "custom")),
        geometry=geometry, overrides=overrides, body=body,
        thruster=thruster, thruster_count=count, environment=environment,
        control=control, perception=perception, lidar=lidar, sonar=sonar,
        world=world, battery=battery, service=service, plan=plan,
        seed=int(document.get("seed", 0)), provenance=dict(provenance))


def plan_to_document(plan: MissionPlan) -> dict:
    """Serialize a plan back to the ``mission`` section document shape."""
    reverse_modes = {mode: name for name, mode in _MODE_NAMES.items()}
    items = []
    for item in plan.items:
        entry = {key: value for key, value in dataclasses.asdict(item).items()
                 if value is not None}
        if isinstance(item, Waypoint):
            entry["type"] = "waypoint"
        elif isinstance(item, VelHeadLeg):
            entry["type"] = "velhead"
        elif isinstance(item, LoiterAt):
            entry["type"] = "loiter"
        elif isinstance(item, SetMode):
            entry["type"] = "set_mode"
            entry["mode"] = reverse_modes[item.mode]
        else:
            entry["type"] = "wait"
        items.append(entry)
    return {
        "home": [plan.home[0], plan.home[1]],
        "initial_heading": plan.initial_heading,
        "timeout": plan.timeout,
        "items": items,
    }


def plan_from_document(section: Mapping) -> MissionPlan:
    """Rebuild a plan from its ``mission`` section document shape."""
    items = tuple(
        _build_plan_item(dict(entry), f"mission.items[{index}]")
        for index, entry in enumerate(section.get("items", ())))
    home = section.get("home", (0.0, 0.0))
    return MissionPlan(
        items=items, home=(float(home[0]), float(home[1])),
        initial_heading=float(section.get("initial_heading", 0.0)),
        timeout=float(section.get("timeout", 600.0)))


def load_config(source: Union[Mapping, str, Path] = "bep-default"
                ) -> MissionConfig:
    """Load, merge, validate, and type a configuration.

    ``source`` may be a mapping, a path to a YAML/JSON file, or the name
    of a shipped preset.  Raises :class:`SchemaError` on any problem.
    """
    if isinstance(source, Mapping):
        document = dict(source)
    else:
        path = Path(source)
        if path.is_file():
            document = _parse_yaml(path.read_text(), str(path))
        elif str(source) in available_presets():
            document = {"preset": str(source)}
        else:
            raise SchemaError(
                f"<root>: {source!r} is neither a config file "
                f"nor a shipped preset")
    merged, provenance = _resolve_presets(document)
    validate_document(merged)
    return _build_config(merged, provenance)
