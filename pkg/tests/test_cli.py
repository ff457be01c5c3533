"""Command-line interface: subcommands, exit codes, output files."""

from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from cloudchange.cli import main
from cloudchange.pipeline import RunReport, transform_from_dict


@pytest.fixture(scope="module")
def scene_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("scenes") / "s"
    assert main(["synth", "--seed", "7", "--out", str(path)]) == 0
    return path


class TestSynth:
    def test_writes_expected_layout(self, scene_dir):
        assert (scene_dir / "scene.json").exists()
        assert (scene_dir / "gt.json").exists()
        assert (scene_dir / "e1" / "frame_0001.ply").exists()
        assert (scene_dir / "e2" / "trajectory.json").exists()
        assert (scene_dir / "joint" / "e1_frame_0001.ply").exists()
        assert (scene_dir / "gt_trajectories" / "e1.json").exists()

    def test_spec_file_and_seed_override(self, tmp_path):
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(
            json.dumps({"seed": 1, "n_static": 500, "n_frames_per_epoch": 4,
                        "change_spec": [], "noise_sigma": 0.0,
                        "edge_noise_fraction": 0.0})
        )
        out = tmp_path / "scene"
        assert main(["synth", "--spec", str(spec_path), "--seed", "9",
                     "--out", str(out)]) == 0
        echo = json.loads((out / "scene.json").read_text())
        assert echo["seed"] == 9
        assert echo["n_static"] == 500


class TestRegister:
    def test_oracle_end_to_end_recovers_gt(self, scene_dir, tmp_path):
        report_path = tmp_path / "r.json"
        code = main([
            "register", "--t1", str(scene_dir / "e1"), "--t2", str(scene_dir / "e2"),
            "--oracle", "--report", str(report_path), "--seed", "3",
        ])
        assert code == 0
        report = RunReport.read(report_path)
        estimated = report.final_sim3()
        gt = json.loads((scene_dir / "gt.json").read_text())["gt_relative"]
        expected = transform_from_dict(gt)
        assert abs(estimated.scale / expected.scale - 1.0) < 1e-3
        assert np.linalg.norm(estimated.translation - expected.translation) < 1e-2

    def test_joint_directory_path(self, scene_dir, tmp_path):
        report_path = tmp_path / "rj.json"
        code = main([
            "register", "--t1", str(scene_dir / "e1"), "--t2", str(scene_dir / "e2"),
            "--joint", str(scene_dir / "joint"), "--report", str(report_path),
        ])
        assert code == 0
        assert RunReport.read(report_path).coarse is not None

    def test_missing_input_directory_is_data_error(self, scene_dir, tmp_path):
        code = main([
            "register", "--t1", str(tmp_path / "nope"), "--t2", str(scene_dir / "e2"),
            "--oracle",
        ])
        assert code == 2

    def test_missing_joint_flag_is_usage_error(self, scene_dir):
        code = main([
            "register", "--t1", str(scene_dir / "e1"), "--t2", str(scene_dir / "e2"),
        ])
        assert code == 1

    def test_unknown_flag_is_usage_error(self):
        assert main(["register", "--bogus"]) == 1

    def test_coarse_only_report_has_no_fine_block(self, scene_dir, tmp_path):
        report_path = tmp_path / "rc.json"
        code = main([
            "register", "--t1", str(scene_dir / "e1"), "--t2", str(scene_dir / "e2"),
            "--oracle", "--mode", "coarse_only", "--report", str(report_path),
        ])
        assert code == 0
        data = json.loads(report_path.read_text())
        assert data["fine"] is None

    def test_byte_identical_reports_excluding_timing(self, scene_dir, tmp_path):
        paths = [tmp_path / "r1.json", tmp_path / "r2.json"]
        for path in paths:
            assert main([
                "register", "--t1", str(scene_dir / "e1"), "--t2", str(scene_dir / "e2"),
                "--oracle", "--report", str(path), "--seed", "5",
            ]) == 0
        dumps = []
        for path in paths:
            data = json.loads(path.read_text())
            data.pop("timing")
            dumps.append(json.dumps(data, sort_keys=True))
        assert dumps[0] == dumps[1]


class TestDetect:
    def test_detect_from_report(self, scene_dir, tmp_path):
        report_path = tmp_path / "r.json"
        assert main([
            "register", "--t1", str(scene_dir / "e1"), "--t2", str(scene_dir / "e2"),
            "--oracle", "--report", str(report_path),
        ]) == 0
        out = tmp_path / "changes"
        code = main([
            "detect", "--t1", str(scene_dir / "e1"), "--t2", str(scene_dir / "e2"),
            "--report", str(report_path), "--out", str(out),
        ])
        assert code == 0
        assert (out / "changes_t1.ply").exists()
        assert (out / "changes_t2.ply").exists()
        stats = json.loads((out / "change_stats.json").read_text())
        assert stats["n_forward_changed"] >= 0
        # The updated report now carries the change section.
        assert json.loads(report_path.read_text())["changes"] is not None

    def test_detect_from_aligned_plys(self, scene_dir, tmp_path):
        from cloudchange import apply_transform
        from cloudchange.bundles import read_epoch_dir, read_ground_truth
        from cloudchange.cloud import PointCloud
        from cloudchange.ply import write_ply

        gt = read_ground_truth(scene_dir / "gt.json")
        t1 = PointCloud.concatenate(read_epoch_dir(scene_dir / "e1"))
        t2 = PointCloud.concatenate(read_epoch_dir(scene_dir / "e2"))
        aligned = apply_transform(gt["gt_relative"], t1)
        write_ply(aligned, tmp_path / "aligned.ply")
        write_ply(t2, tmp_path / "target.ply")
        out = tmp_path / "ch"
        code = main([
            "detect", "--aligned-ply", str(tmp_path / "aligned.ply"),
            "--target-ply", str(tmp_path / "target.ply"), "--out", str(out),
        ])
        assert code == 0
        assert (out / "change_stats.json").exists()

    def test_detect_without_inputs_is_usage_error(self, tmp_path):
        assert main(["detect", "--out", str(tmp_path / "x")]) == 1


class TestEval:
    def test_metrics_written_and_small_for_oracle(self, scene_dir, tmp_path):
        report_path = tmp_path / "r.json"
        assert main([
            "register", "--t1", str(scene_dir / "e1"), "--t2", str(scene_dir / "e2"),
            "--oracle", "--report", str(report_path),
        ]) == 0
        metrics_path = tmp_path / "m.json"
        code = main([
            "eval", "--report", str(report_path), "--scene", str(scene_dir),
            "--out", str(metrics_path),
        ])
        assert code == 0
        metrics = json.loads(metrics_path.read_text())
        assert metrics["ate_m"] < 1e-2
        assert metrics["transform_error"]["scale_ratio_error"] < 1e-3
        assert json.loads(report_path.read_text())["metrics"] is not None


class TestAblate:
    def test_csv_table(self, scene_dir, tmp_path):
        out = tmp_path / "sweep.csv"
        code = main([
            "ablate", "--scene", str(scene_dir), "--k-list", "2,5",
            "--out", str(out), "--joint-sigma", "0.01",
        ])
        assert code == 0
        with open(out) as handle:
            rows = list(csv.DictReader(handle))
        assert [row["k"] for row in rows] == ["2", "5"]
        for row in rows:
            assert float(row["delta_pct"]) >= 0.0

    def test_bad_k_list_is_usage_error(self, scene_dir, tmp_path):
        code = main([
            "ablate", "--scene", str(scene_dir), "--k-list", "2,x",
            "--out", str(tmp_path / "t.csv"),
        ])
        assert code == 1
