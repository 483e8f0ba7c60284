"""Rangefinder processing: sector binning, filtering, fusion, proximity policy.

A 360° lidar sweep is downsampled into 72 body-fixed sectors of 5°,
sector 0 centered on the bow (spanning -2.5°..+2.5° of relative
bearing) and indices increasing clockwise to match the heading
convention.  Each sector is reduced with an exponentially weighted
average biased toward the minimum distance, so near returns dominate
without letting a single outlier hide a close obstacle.

A single forward-looking sonar is smoothed by a confidence-gated moving
average.  Mounted shallow (default 15° below horizontal) it acts as a
bow rangefinder and fuses into sector 0 after cosine projection; mounted
steeper than 50° it is treated as a ground-plane sensor and raises a
shallow-water flag instead of contributing a distance.

The fused product is a ``SectorArray``: 72 unsigned-16-bit centimeter
distances with 65535 as the no-reading sentinel — exactly the payload
of the OBSTACLE wire message.  ``proximity_policy`` turns the array
into a {stop, slow, go} speed scale for the guidance loop.

The module also contains the simulated sensor sources: ray-cast lidar
and sonar against circle/segment obstacles with Gaussian range noise
and confidence dips inside configured turbulence zones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyBin, RangeError

__all__ = [
    "SECTOR_COUNT", "SECTOR_WIDTH_DEG", "NO_READING",
    "LidarSweep", "SonarPing", "SectorArray", "FuseResult",
    "bin_sweep", "weighted_min_average", "SonarFilter", "project_sonar",
    "fuse", "proximity_policy",
    "CircleObstacle", "SegmentObstacle", "cast_rays",
    "LidarSim", "SonarSim", "ShallowRegion",
    "PerceptionConfig", "PerceptionPipeline",
]

SECTOR_COUNT = 72
SECTOR_WIDTH_DEG = 5.0
NO_READING = 0xFFFF
FLOOR_MODE_ANGLE = 50.0  # mount angles steeper than this sense the bottom


@dataclass(frozen=True)
class LidarSweep:
    """One full revolution of range samples (body-relative bearings)."""

    bearings: np.ndarray  # degrees [0, 360), clockwise from the bow
    distances: np.ndarray  # meters
    qualities: np.ndarray  # 0..255

    def __post_init__(self):
        n = len(self.bearings)
        if len(self.distances) != n or len(self.qualities) != n:
            raise RangeError("sweep arrays must have equal length")
        if n and (np.min(self.distances) < 0):
            raise RangeError("distances must be >= 0")
        if n and (np.min(self.bearings) < 0 or np.max(self.bearings) >= 360.0):
            raise RangeError("bearings must lie in [0, 360)")


@dataclass(frozen=True)
class SonarPing:
    slant_distance: float  # meters along the beam
    confidence: float  # percent, 0..100
    mount_angle: float = 15.0  # degrees below horizontal

    def __post_init__(self):
        if self.slant_distance < 0:
            raise RangeError("slant distance must be >= 0")
        if not 0 <= self.confidence <= 100:
            raise RangeError("confidence must be within 0..100")


@dataclass(frozen=True)
class SectorArray:
    """72 clockwise 5° sectors of obstacle distance in centimeters."""

    t: float
    distances_cm: tuple

    def __post_init__(self):
        if len(self.distances_cm) != SECTOR_COUNT:
            raise RangeError(f"sector array needs exactly {SECTOR_COUNT} entries")


@dataclass(frozen=True)
class FuseResult:
    sectors: SectorArray
    shallow_water: bool


def bin_sweep(sweep: LidarSweep, quality_min: int) -> list:
    """Distribute qualifying samples into 72 bow-centered 5° bins.

    A sample at bearing b lands in bin floor(((b + 2.5) mod 360) / 5),
    which centers bin 0 on the bow.  Samples below the quality gate are
    dropped.  Returns a list of 72 float arrays.
    """
    bins = [np.empty(0)] * SECTOR_COUNT
    if len(sweep.bearings) == 0:
        return list(bins)
    keep = sweep.qualities >= quality_min
    bearings = sweep.bearings[keep]
    distances = sweep.distances[keep]
    idx = np.floor(np.mod(bearings + SECTOR_WIDTH_DEG / 2.0, 360.0)
                   / SECTOR_WIDTH_DEG).astype(np.intp)
    idx = np.minimum(idx, SECTOR_COUNT - 1)  # guard the b -> 360.0-epsilon edge
    order = np.argsort(idx, kind="stable")
    idx_sorted = idx[order]
    dist_sorted = distances[order]
    bounds = np.searchsorted(idx_sorted, np.arange(SECTOR_COUNT + 1))
    return [dist_sorted[bounds[i]:bounds[i + 1]] for i in range(SECTOR_COUNT)]


def weighted_min_average(distances, delta: float = 0.5) -> float:
    """Average of a bin with exponential weights favoring the minimum.

    w_i = exp(-(d_i - d_min) / delta); returns sum(w*d)/sum(w).  Lies
    between d_min and the arithmetic mean of the bin.
    """
    if delta <= 0:
        raise RangeError("delta must be positive")
    values = np.asarray(distances, dtype=float)
    if values.size == 0:
        raise EmptyBin("no samples in bin")
    d_min = values.min()
    weights = np.exp(-(values - d_min) / delta)
    return float(np.dot(weights, values) / weights.sum())


class SonarFilter:
    """Confidence-gated moving average over the last ``window`` pings.

    Emits no reading (None) until at least ceil(window/2) qualifying
    pings have been collected, so a cold or noise-dominated stream
    cannot produce a confident-looking distance.
    """

    def __init__(self, window: int, confidence_min: float):
        if window < 1:
            raise RangeError("window must be >= 1")
        self.window = window
        self.confidence_min = confidence_min
        self._values: list[float] = []

    def reset(self):
        self._values.clear()

    def feed(self, ping: SonarPing) -> Optional[float]:
        if ping.confidence >= self.confidence_min:
            self._values.append(ping.slant_distance)
            if len(self._values) > self.window:
                del self._values[0]
        if len(self._values) < math.ceil(self.window / 2):
            return None
        return sum(self._values) / len(self._values)


def project_sonar(slant: float, mount_angle: float) -> tuple[float, bool]:
    """(horizontal range, is_floor_mode) for a beam ``mount_angle``° down."""
    if slant < 0:
        raise RangeError("slant must be >= 0")
    horizontal = slant * math.cos(math.radians(mount_angle))
    return horizontal, mount_angle > FLOOR_MODE_ANGLE


def fuse(lidar_sectors: Sequence[Optional[float]],
         sonar_horizontal: Optional[float],
         sonar_floor_mode: bool = False,
         t: float = 0.0,
         min_range_cm: int = 20,
         max_range_cm: int = 4000) -> FuseResult:
    """Merge per-sector lidar distances and the sonar into a SectorArray.

    Sector values are the minimum of the contributing sources; the sonar
    applies to the bow sector only.  In floor mode the sonar contributes
    a shallow-water flag instead of a distance.  Meters are converted to
    centimeters with half-up rounding, clamped to the valid band, and
    missing sectors carry the 65535 sentinel.
    """
    if len(lidar_sectors) != SECTOR_COUNT:
        raise RangeError(f"need exactly {SECTOR_COUNT} lidar sector values")
    shallow = bool(sonar_floor_mode and sonar_horizontal is not None)
    out = []
    for i, lidar_m in enumerate(lidar_sectors):
        candidates = []
        if lidar_m is not None:
            candidates.append(lidar_m)
        if i == 0 and sonar_horizontal is not None and not sonar_floor_mode:
            candidates.append(sonar_horizontal)
        if not candidates:
            out.append(NO_READING)
            continue
        cm = math.floor(min(candidates) * 100.0 + 0.5)
        out.append(min(max(cm, min_range_cm), max_range_cm))
    return FuseResult(SectorArray(t=t, distances_cm=tuple(out)), shallow)


def proximity_policy(array: SectorArray, slow_d: float = 10.0,
                     stop_d: float = 4.0, cone_half_width: int = 3,
                     partial_factor: float = 0.3) -> float:
    """Speed scale {0, partial, 1} from the nearest bow-cone obstacle.

    Looks at sectors within ±cone_half_width of the bow; the nearest
    non-sentinel distance decides: closer than stop_d scales to 0,
    closer than slow_d to the partial factor, otherwise full speed.
    """
    if stop_d >= slow_d:
        raise RangeError("stop distance must be below slow distance")
    if not 0 <= cone_half_width <= SECTOR_COUNT // 2:
        raise RangeError("cone half width out of range")
    nearest_cm = None
    for offset in range(-cone_half_width, cone_half_width + 1):
        value = array.distances_cm[offset % SECTOR_COUNT]
        if value != NO_READING and (nearest_cm is None or value < nearest_cm):
            nearest_cm = value
    if nearest_cm is None:
        return 1.0
    nearest = nearest_cm / 100.0
    if nearest <= stop_d:
        return 0.0
    if nearest <= slow_d:
        return partial_factor
    return 1.0


# --- simulated sensor sources ------------------------------------------------


@dataclass(frozen=True)
class CircleObstacle:
    x: float
    y: float
    radius: float


@dataclass(frozen=True)
class SegmentObstacle:
    x1: float
    y1: float
    x2: float
    y2: float


def cast_rays(x: float, y: float, bearings_world: np.ndarray, obstacles,
              max_range: float) -> np.ndarray:
    """First-hit distances for rays from (x, y) along compass bearings.

    Returns an array aligned with ``bearings_world``; misses are +inf.
    """
    theta = np.radians(bearings_world)
    dx = np.sin(theta)
    dy = np.cos(theta)
    hits = np.full(len(theta), np.inf)
    for obstacle in obstacles:
        if isinstance(obstacle, CircleObstacle):
            ox = x - obstacle.x
            oy = y - obstacle.y
            b = ox * dx + oy * dy
            c = ox * ox + oy * oy - obstacle.radius ** 2
            disc = b * b - c
            valid = disc >= 0
            root = np.sqrt(np.where(valid, disc, 0.0))
            t_near = -b - root
            t_far = -b + root
            t = np.where(t_near >= 0, t_near, t_far)  # inside: exit point
            t = np.where(valid & (t >= 0), t, np.inf)
        elif isinstance(obstacle, SegmentObstacle):
            ax = obstacle.x1 - x
            ay = obstacle.y1 - y
            ex = obstacle.x2 - obstacle.x1
            ey = obstacle.y2 - obstacle.y1
            denom = dx * ey - dy * ex
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (ax * ey - ay * ex) / denom
                s = (ax * dy - ay * dx) / denom
            t = np.where((np.abs(denom) > 1e-12) & (t >= 0)
                         & (s >= 0) & (s <= 1), t, np.inf)
        else:
            raise RangeError(f"unknown obstacle type: {type(obstacle).__name__}")
        hits = np.minimum(hits, t)
    hits[hits > max_range] = np.inf
    return hits


@dataclass(frozen=True)
class LidarSim:
    """Ray-cast 360° scanner producing LidarSweep records."""

    samples_per_sweep: int = 720
    noise_sigma: float = 0.02
    max_range: float = 40.0
    quality: int = 255

    def sweep(self, x: float, y: float, psi: float, obstacles,
              rng: Optional[np.random.Generator] = None) -> LidarSweep:
        body = np.arange(self.samples_per_sweep) * (360.0 / self.samples_per_sweep)
        world = np.mod(psi + body, 360.0)
        dist = cast_rays(x, y, world, obstacles, self.max_range)
        hit = np.isfinite(dist)
        distances = dist[hit]
        if self.noise_sigma > 0 and rng is not None and distances.size:
            distances = np.maximum(
                distances + rng.normal(0.0, self.noise_sigma, distances.size), 0.0)
        return LidarSweep(
            bearings=body[hit],
            distances=distances,
            qualities=np.full(int(hit.sum()), self.quality, dtype=np.int64),
        )


@dataclass(frozen=True)
class ShallowRegion:
    """Circular patch of reduced water depth (for floor-mode sonar)."""
    x: float
    y: float
    radius: float
    depth: float


@dataclass(frozen=True)
class SonarSim:
    """Single-beam echo sounder aimed ``mount_angle``° below horizontal."""

    mount_angle: float = 15.0
    noise_sigma: float = 0.1
    max_range: float = 30.0
    base_confidence: float = 95.0
    turbulence_confidence: float = 30.0
    turbulence_zones: tuple = ()
    water_depth: float = 10.0
    shallow_regions: tuple = ()

    def depth_at(self, x: float, y: float) -> float:
        depth = self.water_depth
        for region in self.shallow_regions:
            if (x - region.x) ** 2 + (y - region.y) ** 2 <= region.radius ** 2:
                depth = min(depth, region.depth)
        return depth

    def _confidence_at(self, x: float, y: float) -> float:
        for zone in self.turbulence_zones:
            if (x - zone.x) ** 2 + (y - zone.y) ** 2 <= zone.radius ** 2:
                return self.turbulence_confidence
        return self.base_confidence

    def ping(self, x: float, y: float, psi: float, obstacles,
             rng: Optional[np.random.Generator] = None) -> SonarPing:
        angle = math.radians(self.mount_angle)
        if self.mount_angle > FLOOR_MODE_ANGLE:
            # ground-plane geometry: slant to the bottom along the beam
            slant = self.depth_at(x, y) / math.sin(angle)
        else:
            horizontal = float(cast_rays(x, y, np.array([psi]), obstacles,
                                         self.max_range)[0])
            if not math.isfinite(horizontal):
                return SonarPing(0.0, 0.0, self.mount_angle)
            slant = horizontal / math.cos(angle)
        if slant > self.max_range:
            return SonarPing(0.0, 0.0, self.mount_angle)
        if self.noise_sigma > 0 and rng is not None:
            slant = max(slant + rng.normal(0.0, self.noise_sigma), 0.0)
        return SonarPing(slant, self._confidence_at(x, y), self.mount_angle)


# --- pipeline ----------------------------------------------------------------


@dataclass(frozen=True)
class PerceptionConfig:
    quality_min: int = 50
    delta: float = 0.5
    sonar_window: int = 5
    sonar_confidence_min: float = 50.0
    min_range_cm: int = 20
    max_range_cm: int = 4000
    slow_distance: float = 10.0
    stop_distance: float = 4.0
    cone_half_width: int = 3
    partial_factor: float = 0.3

    def __post_init__(self):
        if self.stop_distance >= self.slow_distance:
            raise RangeError("stop distance must be below slow distance")
        if not 0 < self.partial_factor < 1:
            raise RangeError("partial factor must lie in (0, 1)")


class PerceptionPipeline:
    """Stateful lidar+sonar reduction owned by one vessel loop."""

    def __init__(self, config: PerceptionConfig = PerceptionConfig()):
        self.config = config
        self.sonar_filter = SonarFilter(config.sonar_window,
                                        config.sonar_confidence_min)
        self.latest: Optional[FuseResult] = None

    def update(self, sweep: Optional[LidarSweep], ping: Optional[SonarPing],
               t: float) -> FuseResult:
        cfg = self.config
        if sweep is not None:
            bins = bin_sweep(sweep, cfg.quality_min)
            sectors = []
            for bin_values in bins:
                try:
                    sectors.append(weighted_min_average(bin_values, cfg.delta))
                except EmptyBin:
                    sectors.append(None)
        else:
            sectors = [None] * SECTOR_COUNT
        sonar_h = None
        floor_mode = False
        if ping is not None:
            filtered = self.sonar_filter.feed(ping)
            if filtered is not None:
                sonar_h, floor_mode = project_sonar(filtered, ping.mount_angle)
        result = fuse(sectors, sonar_h, floor_mode, t,
                      cfg.min_range_cm, cfg.max_range_cm)
        self.latest = result
        return result

    def speed_scale(self, array: Optional[SectorArray] = None) -> float:
        if array is None:
            if self.latest is None:
                return 1.0
            array = self.latest.sectors
        cfg = self.config
        return proximity_policy(array, cfg.slow_distance, cfg.stop_distance,
                                cfg.cone_half_width, cfg.partial_factor)
