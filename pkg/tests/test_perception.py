"""Tests for sector binning, filtering, fusion, and the proximity policy."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helmsim.errors import EmptyBin, RangeError
from helmsim.perception import (
    NO_READING,
    SECTOR_COUNT,
    CircleObstacle,
    FuseResult,
    LidarSim,
    LidarSweep,
    PerceptionConfig,
    PerceptionPipeline,
    SectorArray,
    SegmentObstacle,
    ShallowRegion,
    SonarFilter,
    SonarPing,
    SonarSim,
    bin_sweep,
    cast_rays,
    fuse,
    project_sonar,
    proximity_policy,
    weighted_min_average,
)

# Independently computed: w = exp(-(d - 5.0)/0.5) for d in (5.0, 5.2, 30.0)
# gives weights (1, e^-0.4, e^-50) and weighted mean 5.080262468.
WMA_GOLDEN = 5.080262468


def make_sweep(bearings, distances, quality=255):
    n = len(bearings)
    return LidarSweep(
        bearings=np.asarray(bearings, dtype=float),
        distances=np.asarray(distances, dtype=float),
        qualities=np.full(n, quality, dtype=np.int64),
    )


def sectors_with(values: dict) -> SectorArray:
    cm = [NO_READING] * SECTOR_COUNT
    for index, value in values.items():
        cm[index] = value
    return SectorArray(t=0.0, distances_cm=tuple(cm))


class TestBinning:
    def test_bow_sample_lands_in_sector_zero(self):
        bins = bin_sweep(make_sweep([0.0], [3.0]), quality_min=50)
        assert bins[0].tolist() == [3.0]

    def test_boundary_assignments(self):
        # (bearing + 2.5) mod 360, floor-divided by 5
        cases = {0.0: 0, 2.4: 0, 2.5: 1, 4.9: 1, 7.4: 1, 7.5: 2,
                 357.5: 0, 357.6: 0, 359.9: 0, 352.5: 71, 352.4: 70,
                 180.0: 36, 90.0: 18}
        for bearing, expected in cases.items():
            bins = bin_sweep(make_sweep([bearing], [1.0]), quality_min=0)
            hit = [i for i, b in enumerate(bins) if len(b)]
            assert hit == [expected], f"bearing {bearing}"

    def test_uniform_ring_fills_each_bin_equally(self):
        n = 7200
        bearings = np.arange(n) * (360.0 / n)
        bins = bin_sweep(make_sweep(bearings, np.full(n, 12.0)), quality_min=0)
        assert all(len(b) == n // SECTOR_COUNT for b in bins)

    def test_quality_gate_drops_samples(self):
        sweep = LidarSweep(
            bearings=np.array([0.0, 0.0]),
            distances=np.array([1.0, 2.0]),
            qualities=np.array([10, 200]),
        )
        bins = bin_sweep(sweep, quality_min=50)
        assert bins[0].tolist() == [2.0]

    def test_all_below_gate_yields_empty_bins(self):
        bins = bin_sweep(make_sweep([0.0, 90.0], [1.0, 2.0], quality=5),
                         quality_min=50)
        assert all(len(b) == 0 for b in bins)

    def test_empty_sweep(self):
        bins = bin_sweep(make_sweep([], []), quality_min=0)
        assert len(bins) == SECTOR_COUNT
        assert all(len(b) == 0 for b in bins)

    def test_rejects_out_of_range_bearing(self):
        with pytest.raises(RangeError):
            make_sweep([360.0], [1.0])
        with pytest.raises(RangeError):
            make_sweep([-0.1], [1.0])

    def test_rejects_mismatched_lengths(self):
        with pytest.raises(RangeError):
            LidarSweep(bearings=np.array([0.0]),
                       distances=np.array([1.0, 2.0]),
                       qualities=np.array([255, 255]))

    @given(st.lists(st.floats(min_value=0, max_value=359.999), min_size=1,
                    max_size=200))
    def test_every_sample_lands_in_exactly_one_bin(self, bearings):
        bins = bin_sweep(make_sweep(bearings, [1.0] * len(bearings)),
                         quality_min=0)
        assert sum(len(b) for b in bins) == len(bearings)


class TestWeightedMinAverage:
    def test_golden_value(self):
        assert weighted_min_average([5.0, 5.2, 30.0], delta=0.5) == pytest.approx(
            WMA_GOLDEN, abs=0.01)
        assert weighted_min_average([5.0, 5.2, 30.0], delta=0.5) == pytest.approx(
            WMA_GOLDEN, rel=1e-9)

    def test_single_sample_passes_through(self):
        assert weighted_min_average([7.25]) == 7.25

    def test_identical_samples(self):
        assert weighted_min_average([4.0, 4.0, 4.0]) == pytest.approx(4.0)

    def test_empty_bin_raises(self):
        with pytest.raises(EmptyBin):
            weighted_min_average([])

    def test_nonpositive_delta_raises(self):
        with pytest.raises(RangeError):
            weighted_min_average([1.0], delta=0.0)
        with pytest.raises(RangeError):
            weighted_min_average([1.0], delta=-1.0)

    def test_small_delta_tracks_minimum(self):
        assert weighted_min_average([5.0, 5.2, 30.0], delta=1e-6) == pytest.approx(
            5.0, abs=1e-6)

    def test_large_delta_tracks_mean(self):
        values = [5.0, 5.2, 30.0]
        assert weighted_min_average(values, delta=1e9) == pytest.approx(
            sum(values) / 3, rel=1e-6)

    @given(st.lists(st.floats(min_value=0.01, max_value=100), min_size=1,
                    max_size=50),
           st.floats(min_value=0.01, max_value=10))
    def test_bounded_by_min_and_mean(self, values, delta):
        result = weighted_min_average(values, delta)
        lo = min(values)
        hi = sum(values) / len(values)
        assert lo - 1e-9 <= result <= hi + 1e-9


class TestSonarFilter:
    def test_warm_up_needs_half_window(self):
        f = SonarFilter(window=5, confidence_min=50)
        assert f.feed(SonarPing(10.0, 90)) is None
        assert f.feed(SonarPing(10.0, 90)) is None
        assert f.feed(SonarPing(10.0, 90)) == pytest.approx(10.0)

    def test_low_confidence_does_not_advance_warm_up(self):
        f = SonarFilter(window=5, confidence_min=50)
        for _ in range(10):
            assert f.feed(SonarPing(3.0, 10)) is None
        assert f.feed(SonarPing(3.0, 90)) is None

    def test_moving_average_window(self):
        f = SonarFilter(window=3, confidence_min=50)
        f.feed(SonarPing(1.0, 90))
        assert f.feed(SonarPing(2.0, 90)) == pytest.approx(1.5)
        assert f.feed(SonarPing(3.0, 90)) == pytest.approx(2.0)
        # window slides: (2 + 3 + 4) / 3
        assert f.feed(SonarPing(4.0, 90)) == pytest.approx(3.0)

    def test_low_confidence_ping_keeps_previous_window(self):
        f = SonarFilter(window=3, confidence_min=50)
        for value in (1.0, 2.0, 3.0):
            f.feed(SonarPing(value, 90))
        assert f.feed(SonarPing(100.0, 5)) == pytest.approx(2.0)

    def test_window_one(self):
        f = SonarFilter(window=1, confidence_min=50)
        assert f.feed(SonarPing(6.0, 90)) == 6.0
        assert f.feed(SonarPing(8.0, 90)) == 8.0

    def test_reset(self):
        f = SonarFilter(window=5, confidence_min=50)
        for _ in range(5):
            f.feed(SonarPing(1.0, 90))
        f.reset()
        assert f.feed(SonarPing(5.0, 90)) is None

    def test_invalid_window(self):
        with pytest.raises(RangeError):
            SonarFilter(window=0, confidence_min=50)


class TestProjection:
    def test_shallow_mount_projects_cosine(self):
        horizontal, floor = project_sonar(10.0, 15.0)
        assert horizontal == pytest.approx(9.659, abs=1e-3)
        assert floor is False

    def test_steep_mount_flags_floor(self):
        horizontal, floor = project_sonar(2.0, 60.0)
        assert floor is True
        assert horizontal == pytest.approx(1.0)

    def test_threshold_is_exclusive(self):
        assert project_sonar(1.0, 50.0)[1] is False
        assert project_sonar(1.0, 50.01)[1] is True

    def test_negative_slant_raises(self):
        with pytest.raises(RangeError):
            project_sonar(-1.0, 15.0)


class TestFuse:
    def empty(self):
        return [None] * SECTOR_COUNT

    def test_sonar_and_lidar_take_minimum_at_bow(self):
        sectors = self.empty()
        sectors[0] = 8.0
        result = fuse(sectors, sonar_horizontal=WMA_GOLDEN)
        assert result.sectors.distances_cm[0] == 508
        assert result.shallow_water is False

    def test_lidar_wins_when_closer(self):
        sectors = self.empty()
        sectors[0] = 3.0
        result = fuse(sectors, sonar_horizontal=9.0)
        assert result.sectors.distances_cm[0] == 300

    def test_sonar_only_touches_bow_sector(self):
        result = fuse(self.empty(), sonar_horizontal=5.0)
        assert result.sectors.distances_cm[0] == 500
        assert all(v == NO_READING for v in result.sectors.distances_cm[1:])

    def test_floor_mode_sets_flag_and_skips_distance(self):
        sectors = self.empty()
        sectors[0] = 8.0
        result = fuse(sectors, sonar_horizontal=0.5, sonar_floor_mode=True)
        assert result.shallow_water is True
        assert result.sectors.distances_cm[0] == 800

    def test_no_sonar_no_flag(self):
        result = fuse(self.empty(), sonar_horizontal=None, sonar_floor_mode=True)
        assert result.shallow_water is False

    def test_missing_sectors_carry_sentinel(self):
        result = fuse(self.empty(), sonar_horizontal=None)
        assert all(v == NO_READING for v in result.sectors.distances_cm)

    def test_rounding_is_half_up(self):
        sectors = self.empty()
        sectors[5] = 1.125  # exactly 112.5 cm: the half rounds up
        sectors[6] = 1.1249
        result = fuse(sectors, None)
        assert result.sectors.distances_cm[5] == 113
        assert result.sectors.distances_cm[6] == 112

    def test_clamps_to_range_band(self):
        sectors = self.empty()
        sectors[1] = 0.05  # 5 cm, below the 20 cm floor
        sectors[2] = 120.0  # 12000 cm, above the 4000 cm ceiling
        result = fuse(sectors, None)
        assert result.sectors.distances_cm[1] == 20
        assert result.sectors.distances_cm[2] == 4000

    def test_wrong_sector_count_raises(self):
        with pytest.raises(RangeError):
            fuse([None] * 10, None)

    def test_timestamp_carried(self):
        result = fuse(self.empty(), None, t=12.5)
        assert result.sectors.t == 12.5

    @given(st.dictionaries(st.integers(min_value=0, max_value=SECTOR_COUNT - 1),
                           st.floats(min_value=0.3, max_value=39.0),
                           max_size=20),
           st.one_of(st.none(), st.floats(min_value=0.3, max_value=29.0)))
    def test_fusion_is_conservative(self, lidar_values, sonar_h):
        sectors = self.empty()
        for index, value in lidar_values.items():
            sectors[index] = value
        result = fuse(sectors, sonar_h)
        for i, cm in enumerate(result.sectors.distances_cm):
            inputs = []
            if sectors[i] is not None:
                inputs.append(sectors[i])
            if i == 0 and sonar_h is not None:
                inputs.append(sonar_h)
            if not inputs:
                assert cm == NO_READING
            else:
                assert abs(cm - min(inputs) * 100.0) <= 0.5 + 1e-6


class TestProximityPolicy:
    def test_stop_slow_go_bands(self):
        assert proximity_policy(sectors_with({0: 400})) == 0.0
        assert proximity_policy(sectors_with({0: 401})) == 0.3
        assert proximity_policy(sectors_with({0: 1000})) == 0.3
        assert proximity_policy(sectors_with({0: 1001})) == 1.0

    def test_no_readings_full_speed(self):
        assert proximity_policy(sectors_with({})) == 1.0

    def test_cone_includes_port_and_starboard_edges(self):
        assert proximity_policy(sectors_with({3: 300})) == 0.0
        assert proximity_policy(sectors_with({SECTOR_COUNT - 3: 300})) == 0.0

    def test_outside_cone_is_ignored(self):
        assert proximity_policy(sectors_with({4: 300})) == 1.0
        assert proximity_policy(sectors_with({SECTOR_COUNT - 4: 300})) == 1.0
        assert proximity_policy(sectors_with({36: 50})) == 1.0

    def test_nearest_in_cone_decides(self):
        assert proximity_policy(sectors_with({1: 2000, 71: 900})) == 0.3

    def test_custom_thresholds_and_factor(self):
        array = sectors_with({0: 600})
        assert proximity_policy(array, slow_d=5.0, stop_d=2.0) == 1.0
        assert proximity_policy(array, slow_d=8.0, stop_d=4.0,
                                partial_factor=0.5) == 0.5
        assert proximity_policy(array, slow_d=8.0, stop_d=6.5) == 0.0

    def test_zero_cone_width_checks_bow_only(self):
        assert proximity_policy(sectors_with({1: 100}), cone_half_width=0) == 1.0
        assert proximity_policy(sectors_with({0: 100}), cone_half_width=0) == 0.0

    def test_invalid_thresholds_raise(self):
        array = sectors_with({})
        with pytest.raises(RangeError):
            proximity_policy(array, slow_d=4.0, stop_d=4.0)
        with pytest.raises(RangeError):
            proximity_policy(array, slow_d=3.0, stop_d=5.0)

    @given(st.integers(min_value=21, max_value=3999))
    def test_scale_never_increases_as_obstacle_approaches(self, near_cm):
        far = proximity_policy(sectors_with({0: near_cm + 1}))
        near = proximity_policy(sectors_with({0: near_cm}))
        assert near <= far


class TestSectorArrayType:
    def test_wrong_length_rejected(self):
        with pytest.raises(RangeError):
            SectorArray(t=0.0, distances_cm=(1, 2, 3))

    def test_ping_validation(self):
        with pytest.raises(RangeError):
            SonarPing(-1.0, 50)
        with pytest.raises(RangeError):
            SonarPing(1.0, 101)


class TestRayCast:
    def test_circle_dead_ahead(self):
        d = cast_rays(0.0, 0.0, np.array([0.0]),
                      [CircleObstacle(0.0, 10.0, 2.0)], 40.0)
        assert d[0] == pytest.approx(8.0)

    def test_circle_east(self):
        d = cast_rays(0.0, 0.0, np.array([90.0]),
                      [CircleObstacle(10.0, 0.0, 1.0)], 40.0)
        assert d[0] == pytest.approx(9.0)

    def test_miss_is_infinite(self):
        d = cast_rays(0.0, 0.0, np.array([180.0]),
                      [CircleObstacle(0.0, 10.0, 2.0)], 40.0)
        assert np.isinf(d[0])

    def test_behind_is_ignored(self):
        d = cast_rays(0.0, 0.0, np.array([0.0]),
                      [CircleObstacle(0.0, -10.0, 2.0)], 40.0)
        assert np.isinf(d[0])

    def test_inside_circle_hits_exit(self):
        d = cast_rays(0.0, 0.0, np.array([0.0, 90.0, 180.0, 270.0]),
                      [CircleObstacle(0.0, 0.0, 5.0)], 40.0)
        assert np.allclose(d, 5.0)

    def test_beyond_max_range_is_miss(self):
        d = cast_rays(0.0, 0.0, np.array([0.0]),
                      [CircleObstacle(0.0, 100.0, 2.0)], 40.0)
        assert np.isinf(d[0])

    def test_wall_ahead(self):
        wall = SegmentObstacle(-5.0, 5.0, 5.0, 5.0)
        d = cast_rays(0.0, 0.0, np.array([0.0]), [wall], 40.0)
        assert d[0] == pytest.approx(5.0)

    def test_wall_diagonal_hit(self):
        wall = SegmentObstacle(-5.0, 5.0, 5.0, 5.0)
        d = cast_rays(0.0, 0.0, np.array([45.0]), [wall], 40.0)
        assert d[0] == pytest.approx(5.0 * math.sqrt(2.0))

    def test_wall_misses_past_endpoint(self):
        wall = SegmentObstacle(-5.0, 5.0, 5.0, 5.0)
        d = cast_rays(0.0, 0.0, np.array([60.0]), [wall], 40.0)
        assert np.isinf(d[0])  # intersection at x = 5·tan60° ≈ 8.66, off the wall

    def test_ray_parallel_to_wall(self):
        wall = SegmentObstacle(-5.0, 5.0, 5.0, 5.0)
        d = cast_rays(0.0, 0.0, np.array([90.0]), [wall], 40.0)
        assert np.isinf(d[0])

    def test_nearest_of_many(self):
        obstacles = [CircleObstacle(0.0, 20.0, 2.0),
                     SegmentObstacle(-5.0, 7.0, 5.0, 7.0),
                     CircleObstacle(0.0, 12.0, 1.0)]
        d = cast_rays(0.0, 0.0, np.array([0.0]), obstacles, 40.0)
        assert d[0] == pytest.approx(7.0)

    def test_unknown_obstacle_type_raises(self):
        with pytest.raises(RangeError):
            cast_rays(0.0, 0.0, np.array([0.0]), [object()], 40.0)


class TestSims:
    def test_lidar_ring_noise_free(self):
        sim = LidarSim(samples_per_sweep=720, noise_sigma=0.0)
        sweep = sim.sweep(0.0, 0.0, 0.0, [CircleObstacle(0.0, 0.0, 12.0)])
        assert len(sweep.bearings) == 720
        assert np.allclose(sweep.distances, 12.0)

    def test_lidar_bearings_are_body_relative(self):
        # Obstacle due north; vessel heading east, so the return is at
        # body bearing 270 (port beam).
        sim = LidarSim(samples_per_sweep=360, noise_sigma=0.0)
        sweep = sim.sweep(0.0, 0.0, 90.0, [CircleObstacle(0.0, 10.0, 0.5)])
        assert len(sweep.bearings) >= 1
        center = sweep.bearings[np.argmin(sweep.distances)]
        assert center == pytest.approx(270.0, abs=1.0)

    def test_lidar_noise_deterministic_by_seed(self):
        sim = LidarSim(noise_sigma=0.05)
        obstacles = [CircleObstacle(0.0, 0.0, 12.0)]
        a = sim.sweep(0.0, 0.0, 0.0, obstacles, np.random.default_rng(7))
        b = sim.sweep(0.0, 0.0, 0.0, obstacles, np.random.default_rng(7))
        assert np.array_equal(a.distances, b.distances)
        c = sim.sweep(0.0, 0.0, 0.0, obstacles, np.random.default_rng(8))
        assert not np.array_equal(a.distances, c.distances)

    def test_lidar_noise_statistics(self):
        sim = LidarSim(samples_per_sweep=10000, noise_sigma=0.02)
        sweep = sim.sweep(0.0, 0.0, 0.0, [CircleObstacle(0.0, 0.0, 12.0)],
                          np.random.default_rng(42))
        residuals = sweep.distances - 12.0
        assert abs(float(residuals.mean())) < 0.001
        assert float(residuals.std()) == pytest.approx(0.02, rel=0.05)

    def test_sonar_forward_return(self):
        sim = SonarSim(mount_angle=15.0, noise_sigma=0.0)
        ping = sim.ping(0.0, 0.0, 0.0, [CircleObstacle(0.0, 10.0, 2.0)])
        assert ping.confidence == 95.0
        assert ping.slant_distance == pytest.approx(8.0 / math.cos(math.radians(15.0)))

    def test_sonar_miss_has_zero_confidence(self):
        sim = SonarSim(noise_sigma=0.0)
        ping = sim.ping(0.0, 0.0, 180.0, [CircleObstacle(0.0, 10.0, 2.0)])
        assert ping.confidence == 0.0

    def test_sonar_turbulence_dips_confidence(self):
        sim = SonarSim(noise_sigma=0.0,
                       turbulence_zones=(CircleObstacle(0.0, 0.0, 5.0),))
        ping = sim.ping(0.0, 0.0, 0.0, [CircleObstacle(0.0, 10.0, 2.0)])
        assert ping.confidence == 30.0

    def test_sonar_floor_mode_geometry(self):
        sim = SonarSim(mount_angle=90.0, noise_sigma=0.0, water_depth=6.0)
        ping = sim.ping(0.0, 0.0, 0.0, [])
        assert ping.slant_distance == pytest.approx(6.0)
        assert ping.mount_angle == 90.0

    def test_sonar_shallow_region_overrides_depth(self):
        sim = SonarSim(mount_angle=60.0, noise_sigma=0.0, water_depth=10.0,
                       shallow_regions=(ShallowRegion(0.0, 0.0, 5.0, 1.5),))
        inside = sim.ping(0.0, 0.0, 0.0, [])
        outside = sim.ping(100.0, 0.0, 0.0, [])
        assert inside.slant_distance == pytest.approx(1.5 / math.sin(math.radians(60.0)))
        assert outside.slant_distance == pytest.approx(10.0 / math.sin(math.radians(60.0)))


class TestPipeline:
    def test_ring_world_end_to_end(self):
        sim = LidarSim(samples_per_sweep=7200, noise_sigma=0.0)
        sweep = sim.sweep(0.0, 0.0, 0.0, [CircleObstacle(0.0, 0.0, 12.0)])
        pipeline = PerceptionPipeline()
        result = pipeline.update(sweep, None, t=1.0)
        assert all(abs(cm - 1200) <= 1 for cm in result.sectors.distances_cm)
        assert pipeline.speed_scale() == 1.0

    def test_close_ring_stops(self):
        sim = LidarSim(samples_per_sweep=720, noise_sigma=0.0)
        sweep = sim.sweep(0.0, 0.0, 0.0, [CircleObstacle(0.0, 0.0, 3.5)])
        pipeline = PerceptionPipeline()
        pipeline.update(sweep, None, t=0.0)
        assert pipeline.speed_scale() == 0.0

    def test_mid_ring_slows(self):
        sim = LidarSim(samples_per_sweep=720, noise_sigma=0.0)
        sweep = sim.sweep(0.0, 0.0, 0.0, [CircleObstacle(0.0, 0.0, 8.0)])
        pipeline = PerceptionPipeline()
        pipeline.update(sweep, None, t=0.0)
        assert pipeline.speed_scale() == pytest.approx(0.3)

    def test_sonar_joins_after_warm_up(self):
        pipeline = PerceptionPipeline(PerceptionConfig(sonar_window=3))
        ping = SonarPing(5.0, 90.0, mount_angle=0.0)
        first = pipeline.update(None, ping, t=0.0)
        assert first.sectors.distances_cm[0] == NO_READING
        second = pipeline.update(None, ping, t=0.2)
        assert second.sectors.distances_cm[0] == 500

    def test_floor_mode_sets_shallow_flag(self):
        pipeline = PerceptionPipeline(PerceptionConfig(sonar_window=1))
        ping = SonarPing(2.0, 90.0, mount_angle=60.0)
        result = pipeline.update(None, ping, t=0.0)
        assert result.shallow_water is True
        assert result.sectors.distances_cm[0] == NO_READING

    def test_no_input_full_speed(self):
        pipeline = PerceptionPipeline()
        assert pipeline.speed_scale() == 1.0

    def test_config_validation(self):
        with pytest.raises(RangeError):
            PerceptionConfig(stop_distance=11.0, slow_distance=10.0)
        with pytest.raises(RangeError):
            PerceptionConfig(partial_factor=0.0)
