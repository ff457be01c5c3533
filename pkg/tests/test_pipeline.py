"""End-to-end registration orchestration and run reports."""

from __future__ import annotations

import json

import numpy as np
import pytest

from cloudchange import (
    MisalignedInputs,
    PipelineConfig,
    PointCloud,
    RunReport,
    register_epochs,
    register_scene,
)
from cloudchange.pipeline import detect_changes, transform_from_dict
from cloudchange.synthetic import (
    ChangeSpec,
    SceneSpec,
    all_frames_keyframes,
    generate_scene,
    mock_joint_inference,
)


@pytest.fixture(scope="module")
def scene():
    return generate_scene(
        SceneSpec(
            seed=606,
            n_static=5000,
            n_frames_per_epoch=12,
            noise_sigma=0.002,
            edge_noise_fraction=0.15,
            change_spec=(
                ChangeSpec("added", 300),
                ChangeSpec("moved", 300, (1.2, 0.5, 0.3)),
            ),
        )
    )


class TestPipelineConfig:
    def test_defaults_echo(self):
        echo = PipelineConfig().to_dict()
        assert echo["k_keyframes"] == 5
        assert echo["correspondence_cap"] == 5000
        assert echo["alpha"] == 3.0
        assert echo["grid_resolution"] == 200
        assert echo["tau_ratio"] == 0.01
        assert echo["mode"] == "full"
        assert echo["rng"] == "numpy PCG64"

    def test_validation(self):
        with pytest.raises(ValueError):
            PipelineConfig(k_keyframes=0)
        with pytest.raises(ValueError):
            PipelineConfig(mode="fast")
        with pytest.raises(ValueError):
            PipelineConfig(alpha=0.0)


class TestRegisterScene:
    def test_recovers_ground_truth(self, scene):
        result = register_scene(scene, PipelineConfig(seed=1), joint_sigma=0.005)
        ratio = result.final_transform.scale / scene.gt_relative.scale
        assert abs(ratio - 1.0) < 0.01
        assert result.fine is not None
        assert result.timings["registration_s"] > 0.0

    def test_coarse_only_mode_has_no_fine_block(self, scene):
        result = register_scene(
            scene, PipelineConfig(mode="coarse_only", seed=1), joint_sigma=0.005
        )
        assert result.fine is None
        assert result.final_transform is result.coarse_relative
        assert result.downsampled_indices is None

    def test_full_mode_reports_cloud_reduction(self, scene):
        result = register_scene(scene, PipelineConfig(seed=1), joint_sigma=0.005)
        stats = result.cloud_stats
        assert stats["t1_filtered"] <= stats["t1_total"]
        assert stats["t1_downsampled"] <= stats["t1_filtered"]
        idx1, idx2 = result.downsampled_indices
        assert len(idx1) == stats["t1_downsampled"]
        assert len(idx2) == stats["t2_downsampled"]

    def test_final_transform_locks_scale_rotation(self, scene):
        result = register_scene(scene, PipelineConfig(seed=1), joint_sigma=0.005)
        assert result.final_transform.scale == result.coarse_relative.scale
        assert (result.final_transform.rotation == result.coarse_relative.rotation).all()

    def test_deterministic_under_seed(self, scene):
        a = register_scene(scene, PipelineConfig(seed=9), joint_sigma=0.005)
        b = register_scene(scene, PipelineConfig(seed=9), joint_sigma=0.005)
        assert (a.final_transform.translation == b.final_transform.translation).all()
        assert a.final_transform.scale == b.final_transform.scale


class TestRegisterEpochs:
    def test_misaligned_joint_cloud_rejected(self, scene):
        joint = mock_joint_inference(scene, all_frames_keyframes(scene))
        key = (1, 1)
        cloud = joint.clouds[key]
        joint.clouds[key] = PointCloud(cloud.points[:-1], cloud.confidence[:-1])
        with pytest.raises(MisalignedInputs):
            register_epochs(
                scene.epoch_frames(1), scene.epoch_frames(2), joint, PipelineConfig()
            )

    def test_missing_joint_frame_rejected(self, scene):
        joint = mock_joint_inference(scene, all_frames_keyframes(scene))
        del joint.clouds[(2, 1)]
        with pytest.raises(MisalignedInputs):
            register_epochs(
                scene.epoch_frames(1), scene.epoch_frames(2), joint, PipelineConfig()
            )


class TestRunReport:
    def test_round_trip_through_json(self, scene, tmp_path):
        from cloudchange.pipeline import RunReport

        result = register_scene(scene, PipelineConfig(seed=2), joint_sigma=0.005)
        report = RunReport.from_registration(result, inputs={"t1": "a", "t2": "b"})
        path = tmp_path / "report.json"
        report.write(path)
        back = RunReport.read(path)
        assert back.to_json() == report.to_json()
        final = back.final_sim3()
        assert final.scale == result.final_transform.scale
        np.testing.assert_array_equal(final.translation, result.final_transform.translation)

    def test_byte_identical_excluding_timing(self, scene, tmp_path):
        result_a = register_scene(scene, PipelineConfig(seed=3), joint_sigma=0.005)
        result_b = register_scene(scene, PipelineConfig(seed=3), joint_sigma=0.005)
        report_a = RunReport.from_registration(result_a)
        report_b = RunReport.from_registration(result_b)
        assert report_a.to_json(include_timing=False) == report_b.to_json(include_timing=False)

    def test_unknown_major_version_rejected(self, tmp_path):
        path = tmp_path / "report.json"
        path.write_text(json.dumps({"format_version": "3.1", "config": {}}))
        from cloudchange import SchemaError

        with pytest.raises(SchemaError):
            RunReport.read(path)

    def test_transform_dict_round_trip(self, scene):
        result = register_scene(scene, PipelineConfig(seed=4), joint_sigma=0.005)
        report = RunReport.from_registration(result)
        t = transform_from_dict(report.final_transform)
        assert t.scale == result.final_transform.scale
        np.testing.assert_array_equal(t.rotation, result.final_transform.rotation)


class TestDetectChanges:
    def test_stats_shape(self, scene):
        from cloudchange import apply_transform

        aligned = apply_transform(scene.gt_relative, scene.cloud_t1)
        change_map, stats = detect_changes(aligned, scene.cloud_t2, tau_ratio=0.01)
        assert stats["n_t1_points"] == len(scene.cloud_t1)
        assert stats["n_t2_points"] == len(scene.cloud_t2)
        assert stats["tau"] == pytest.approx(0.01 * change_map.scene_extent)
        assert 0.0 <= stats["changed_fraction"] <= 1.0
