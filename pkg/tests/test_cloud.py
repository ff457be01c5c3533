"""Point-cloud container, confidence filtering, voxel grid, and NN index."""

from __future__ import annotations

import numpy as np
import pytest

from cloudchange import (
    EmptyCloud,
    PointCloud,
    build_index,
    filter_by_median_confidence,
    lower_median,
    median_confidence_mask,
    nn_distances,
    robust_extent,
    voxel_downsample,
    voxel_downsample_indices,
    voxel_grid_params,
)


class TestPointCloud:
    def test_parallel_array_validation(self):
        with pytest.raises(ValueError):
            PointCloud(np.zeros((3, 3)), np.zeros(2))
        with pytest.raises(ValueError):
            PointCloud(np.zeros((3, 3)), np.full(3, 1.5))
        with pytest.raises(ValueError):
            PointCloud(np.zeros((3, 2)))

    def test_default_confidence_is_ones(self):
        cloud = PointCloud(np.zeros((4, 3)))
        assert (cloud.confidence == 1.0).all()

    def test_select_and_concatenate(self, rng):
        cloud = PointCloud(
            rng.normal(size=(10, 3)),
            rng.uniform(0, 1, 10),
            source_frame=np.arange(1, 11),
        )
        subset = cloud.select([1, 3, 5])
        assert len(subset) == 3
        assert (subset.source_frame == [2, 4, 6]).all()
        merged = PointCloud.concatenate([subset, subset])
        assert len(merged) == 6

    def test_frame_subset(self, rng):
        cloud = PointCloud(
            rng.normal(size=(6, 3)), source_frame=np.array([1, 1, 2, 2, 2, 3])
        )
        assert len(cloud.frame_subset(2)) == 3

    def test_points_are_immutable(self, rng):
        cloud = PointCloud(rng.normal(size=(4, 3)))
        with pytest.raises(ValueError):
            cloud.points[0, 0] = 5.0


class TestLowerMedian:
    def test_odd_count_middle(self):
        assert lower_median([3.0, 1.0, 2.0]) == 2.0

    def test_even_count_takes_lower_midpoint(self):
        assert lower_median([4.0, 1.0, 3.0, 2.0]) == 2.0

    def test_single_value(self):
        assert lower_median([7.5]) == 7.5


class TestMedianConfidenceFilter:
    def test_keeps_strictly_above_median(self):
        # Median of {0.1, 0.5, 0.9} is 0.5; strict comparison keeps only 0.9.
        cloud = PointCloud(np.arange(9, dtype=float).reshape(3, 3), [0.1, 0.5, 0.9])
        kept = filter_by_median_confidence(cloud)
        assert len(kept) == 1
        assert kept.confidence[0] == 0.9

    def test_all_equal_returns_input_unchanged(self):
        cloud = PointCloud(np.zeros((5, 3)), np.full(5, 0.7))
        assert filter_by_median_confidence(cloud) is cloud

    def test_empty_cloud_raises(self):
        with pytest.raises(EmptyCloud):
            filter_by_median_confidence(PointCloud(np.zeros((0, 3))))

    def test_fallback_when_median_equals_maximum(self):
        # {0.1, 0.5, 0.5}: nothing strictly exceeds the median 0.5, so the
        # comparison relaxes to >= and the two 0.5 points survive.
        mask = median_confidence_mask([0.1, 0.5, 0.5])
        assert mask.tolist() == [False, True, True]

    def test_even_count_uses_lower_midpoint(self):
        mask = median_confidence_mask([0.2, 0.4, 0.6, 0.8])
        # Lower-midpoint median is 0.4; strictly above keeps 0.6 and 0.8.
        assert mask.tolist() == [False, False, True, True]


class TestRobustExtent:
    def test_ignores_far_outliers(self, rng):
        pts = rng.uniform(0.0, 10.0, size=(5000, 3))
        spread = robust_extent(pts)
        pts_out = np.vstack([pts, [[1e6, 0.0, 0.0]]])
        assert abs(robust_extent(pts_out) - spread) < 0.5

    def test_single_point_is_zero(self):
        assert robust_extent([[1.0, 2.0, 3.0]]) == 0.0


class TestVoxelDownsample:
    def test_single_point_unchanged(self):
        cloud = PointCloud([[1.0, 2.0, 3.0]], [0.4])
        out = voxel_downsample(cloud, 200)
        np.testing.assert_array_equal(out.points, cloud.points)

    def test_keeps_max_confidence_in_voxel(self):
        cloud = PointCloud(
            [[0.0, 0.0, 0.0], [0.01, 0.0, 0.0], [5.0, 5.0, 5.0]],
            [0.3, 0.9, 0.5],
        )
        out = voxel_downsample(cloud, 4)
        assert len(out) == 2
        assert 0.9 in out.confidence and 0.3 not in out.confidence

    def test_hand_computed_voxel_size(self):
        # A 1st-to-99th percentile spread of ~20 along x at resolution 200
        # gives a voxel edge of ~0.1: points 0.05 apart along one axis share
        # a voxel while points 0.15 apart do not.
        base = np.zeros((992, 3))
        base[:, 0] = np.linspace(0.0, 20.0, 992)
        base[:, 1] = base[:, 0] * 0.15
        cloud = PointCloud(base, np.full(992, 0.5))
        grid = voxel_grid_params(cloud, 200)
        lo, hi = np.percentile(base, [1, 99], axis=0)
        assert grid.voxel_size == pytest.approx(np.max(hi - lo) / 200)
        assert grid.voxel_size == pytest.approx(0.1, abs=0.005)

        d = grid.voxel_size
        x0 = grid.origin[0] + 100 * d
        y0 = grid.origin[1] + 5 * d
        extras = np.array(
            [
                [x0 + 0.02 * d, y0 + 0.5 * d, 0.0],
                [x0 + 0.52 * d, y0 + 0.5 * d, 0.0],  # 0.05 away: same voxel
                [x0 + 0.20 * d, y0 + 1.5 * d, 0.0],
                [x0 + 1.70 * d, y0 + 1.5 * d, 0.0],  # 0.15 away: next voxel
            ]
        )
        pts = np.vstack([base, extras])
        conf = np.concatenate([np.full(992, 0.5), [0.9, 0.8, 0.9, 0.8]])
        keep = voxel_downsample_indices(PointCloud(pts, conf), 200, grid=grid)
        # Pair one merges; only the higher-confidence member survives.
        assert 992 in keep and 993 not in keep
        # Pair two straddles a voxel boundary; both survive.
        assert 994 in keep and 995 in keep

    def test_tie_breaks_toward_lowest_index(self):
        cloud = PointCloud(
            [[0.0, 0.0, 0.0], [0.001, 0.0, 0.0], [9.0, 9.0, 9.0]],
            [0.7, 0.7, 0.2],
        )
        keep = voxel_downsample_indices(cloud, 4)
        assert 0 in keep and 1 not in keep

    def test_idempotent_under_pinned_grid(self, rng):
        pts = rng.uniform(0.0, 10.0, size=(3000, 3))
        cloud = PointCloud(pts, rng.uniform(0, 1, 3000))
        grid = voxel_grid_params(cloud, 50)
        once = voxel_downsample(cloud, grid=grid)
        twice = voxel_downsample(once, grid=grid)
        np.testing.assert_array_equal(once.points, twice.points)
        np.testing.assert_array_equal(once.confidence, twice.confidence)

    def test_no_input_point_beats_representative(self, rng):
        pts = rng.uniform(0.0, 5.0, size=(2000, 3))
        conf = rng.uniform(0.0, 1.0, 2000)
        cloud = PointCloud(pts, conf)
        grid = voxel_grid_params(cloud, 10)
        keep = voxel_downsample_indices(cloud, grid=grid)
        keys = grid.keys(pts)
        best = {}
        for i in range(len(pts)):
            k = keys[i]
            if k not in best or conf[i] > best[k]:
                best[k] = conf[i]
        for i in keep:
            assert conf[i] == best[keys[i]]

    def test_all_coincident_collapses_to_one_point(self):
        cloud = PointCloud(np.ones((50, 3)), np.linspace(0.1, 0.9, 50))
        out = voxel_downsample(cloud, 200)
        assert len(out) == 1
        assert out.confidence[0] == pytest.approx(0.9)

    def test_empty_cloud_raises(self):
        with pytest.raises(EmptyCloud):
            voxel_downsample(PointCloud(np.zeros((0, 3))), 10)

    def test_outliers_clamped_not_dropped(self, rng):
        pts = rng.uniform(0.0, 10.0, size=(500, 3))
        pts[0] = [1e4, 1e4, 1e4]
        cloud = PointCloud(pts, np.full(500, 0.5))
        out = voxel_downsample(cloud, 20)
        # The outlier lands in a boundary voxel; total never exceeds input.
        assert 1 <= len(out) <= 500


class TestSpatialIndex:
    def test_single_point_cloud(self):
        index = build_index(PointCloud([[1.0, 2.0, 3.0]]))
        dist, idx = index.query([0.0, 0.0, 0.0])
        assert idx == 0
        assert dist == pytest.approx(np.sqrt(14.0))

    def test_query_at_stored_point_is_zero(self, rng):
        pts = rng.normal(size=(100, 3))
        index = build_index(PointCloud(pts))
        dist, idx = index.query(pts[17])
        assert dist == 0.0
        assert idx == 17

    def test_matches_linear_scan_bit_for_bit(self, rng):
        pts = rng.normal(size=(1000, 3))
        queries = rng.normal(size=(100, 3))
        index = build_index(PointCloud(pts))
        dist, idx = index.query(queries)
        # Exhaustive oracle with the same distance arithmetic.
        all_d = np.sqrt(np.sum((queries[:, None, :] - pts[None, :, :]) ** 2, axis=2))
        brute_idx = np.argmin(all_d, axis=1)
        brute_d = all_d[np.arange(100), brute_idx]
        assert (idx == brute_idx).all()
        assert (dist == brute_d).all()

    def test_empty_cloud_raises(self):
        with pytest.raises(EmptyCloud):
            build_index(PointCloud(np.zeros((0, 3))))


class TestNNDistances:
    def test_identical_clouds_all_zero(self, rng):
        cloud = PointCloud(rng.normal(size=(50, 3)))
        dist, idx = nn_distances(cloud, build_index(cloud))
        assert (dist == 0.0).all()
        assert (idx == np.arange(50)).all()

    def test_known_offset(self):
        target = PointCloud([[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]])
        source = PointCloud([[0.5, 0.0, 0.0]])
        dist, idx = nn_distances(source, build_index(target))
        assert dist[0] == pytest.approx(0.5)
        assert idx[0] == 0

    def test_matches_brute_force_exactly(self, rng):
        src = PointCloud(rng.normal(size=(500, 3)))
        tgt_pts = rng.normal(size=(500, 3))
        dist, idx = nn_distances(src, build_index(PointCloud(tgt_pts)))
        all_d = np.sqrt(
            np.sum((src.points[:, None, :] - tgt_pts[None, :, :]) ** 2, axis=2)
        )
        assert (idx == np.argmin(all_d, axis=1)).all()
        assert (dist == all_d[np.arange(500), idx]).all()

    def test_empty_source_raises(self, rng):
        index = build_index(PointCloud(rng.normal(size=(5, 3))))
        with pytest.raises(EmptyCloud):
            nn_distances(PointCloud(np.zeros((0, 3))), index)
