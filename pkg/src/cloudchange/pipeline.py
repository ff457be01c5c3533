"""Run orchestration: configuration, the two-stage registration, run reports.

The registration proper is a sequential stage graph: keyframe selection,
pixel-aligned correspondences against the joint reconstruction, one
closed-form similarity fit per epoch, composition into the relative
transform, and (in full mode) the purified translation refinement on the
filtered, voxel-downsampled dense clouds.  Wall-clock timings cover only
these stages, never file ingestion or scene generation, and live in a
separate report section so reports stay byte-identical across runs.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace

import numpy as np

from .changes import ChangeMap, change_scores, classify_changes
from .cloud import (
    PointCloud,
    median_confidence_mask,
    voxel_downsample_indices,
)
from .coarse import (
    EpochAlignment,
    JointReconstruction,
    build_keyframe_correspondences,
    coarse_relative_transform,
    estimate_epoch_alignment,
)
from .errors import MisalignedInputs
from .fine import FineResult, fine_stage
from .geometry import Sim3Transform
from .keyframes import fps_temporal
from .metrics import MetricsReport

FORMAT_VERSION = "1.0"
RNG_NAME = "numpy PCG64"

_MODES = ("coarse_only", "full")


@dataclass(frozen=True)
class PipelineConfig:
    """Pipeline knobs with their default operating points.

    Attributes:
        k_keyframes: keyframe budget per epoch.
        correspondence_cap: maximum correspondence pairs per epoch fit.
        alpha: static-set threshold multiplier for the fine stage.
        grid_resolution: adaptive voxel grid resolution.
        tau_ratio: change threshold as a fraction of scene extent.
        seed: seed for the correspondence subsampling generator.
        mode: "coarse_only" or "full".
    """

    k_keyframes: int = 5
    correspondence_cap: int = 5000
    alpha: float = 3.0
    grid_resolution: int = 200
    tau_ratio: float = 0.01
    seed: int = 0
    mode: str = "full"

    def __post_init__(self):
        if self.k_keyframes < 1 or self.correspondence_cap < 1 or self.grid_resolution < 1:
            raise ValueError("k_keyframes, correspondence_cap and grid_resolution must be >= 1")
        if self.alpha <= 0.0 or self.tau_ratio <= 0.0:
            raise ValueError("alpha and tau_ratio must be positive")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")

    def replace(self, **updates) -> "PipelineConfig":
        return replace(self, **updates)

    def to_dict(self) -> dict:
        return {
            "k_keyframes": self.k_keyframes,
            "correspondence_cap": self.correspondence_cap,
            "alpha": self.alpha,
            "grid_resolution": self.grid_resolution,
            "tau_ratio": self.tau_ratio,
            "seed": self.seed,
            "mode": self.mode,
            "rng": RNG_NAME,
        }


@dataclass(frozen=True)
class RegistrationResult:
    """Everything the two registration stages produced."""

    alignment1: EpochAlignment
    alignment2: EpochAlignment
    coarse_relative: Sim3Transform
    fine: FineResult
    final_transform: Sim3Transform
    cloud_stats: dict
    downsampled_indices: tuple
    timings: dict
    config_echo: dict


def _transform_dict(t: Sim3Transform) -> dict:
    return {
        "scale": t.scale,
        "rotation": t.rotation.tolist(),
        "translation": t.translation.tolist(),
    }


def transform_from_dict(d: dict) -> Sim3Transform:
    return Sim3Transform(d["scale"], np.asarray(d["rotation"]), np.asarray(d["translation"]))


def _alignment_dict(a: EpochAlignment) -> dict:
    return {
        "epoch_id": a.epoch_id,
        "transform": _transform_dict(a.transform),
        "n_correspondences": a.n_correspondences,
        "residual_rms": a.residual_rms,
    }


def register_epochs(
    frames1: list,
    frames2: list,
    joint: JointReconstruction,
    config: PipelineConfig = None,
) -> RegistrationResult:
    """Register epoch 1 onto epoch 2 from per-frame clouds.

    Args:
        frames1: epoch 1 clouds, one per frame in frame order (1-based).
        frames2: epoch 2 clouds, likewise.
        joint: shared-frame keyframe clouds covering at least the keyframes
            the budget selects, pixel-aligned with the per-frame clouds.
        config: pipeline parameters; defaults apply when omitted.

    Raises:
        MisalignedInputs: when a joint keyframe cloud does not match its
            per-epoch counterpart point for point.
    """
    if config is None:
        config = PipelineConfig()

    keyframes = (
        fps_temporal(len(frames1), config.k_keyframes, epoch_id=1),
        fps_temporal(len(frames2), config.k_keyframes, epoch_id=2),
    )
    epoch_frames = (frames1, frames2)

    start = time.perf_counter()
    alignments = []
    for kf, frames in zip(keyframes, epoch_frames):
        per_frame = [frames[i - 1] for i in kf.indices]
        for index, cloud in zip(kf.indices, per_frame):
            joint_cloud = joint.clouds.get((kf.epoch_id, index))
            if joint_cloud is None:
                raise MisalignedInputs(
                    f"joint reconstruction lacks epoch {kf.epoch_id} frame {index}"
                )
            if len(joint_cloud) != len(cloud):
                raise MisalignedInputs(
                    f"epoch {kf.epoch_id} frame {index}: per-epoch cloud has "
                    f"{len(cloud)} points, joint cloud {len(joint_cloud)}"
                )
        epoch_kf_cloud = PointCloud.concatenate(per_frame)
        joint_kf_cloud = joint.keyframe_cloud(kf)
        source, target = build_keyframe_correspondences(
            epoch_kf_cloud,
            joint_kf_cloud,
            cap=config.correspondence_cap,
            seed=[config.seed, kf.epoch_id],
        )
        alignments.append(estimate_epoch_alignment(source, target, epoch_id=kf.epoch_id))
    coarse = coarse_relative_transform(alignments[0], alignments[1])
    coarse_elapsed = time.perf_counter() - start

    full1 = PointCloud.concatenate(frames1)
    full2 = PointCloud.concatenate(frames2)
    cloud_stats = {"t1_total": len(full1), "t2_total": len(full2)}

    fine = None
    final = coarse
    down_indices = None
    fine_elapsed = 0.0
    if config.mode == "full":
        start = time.perf_counter()
        downsampled = []
        down_indices = []
        for label, cloud in (("t1", full1), ("t2", full2)):
            keep = np.nonzero(median_confidence_mask(cloud.confidence))[0]
            filtered = cloud.select(keep)
            voxel_keep = voxel_downsample_indices(filtered, config.grid_resolution)
            downsampled.append(filtered.select(voxel_keep))
            down_indices.append(keep[voxel_keep])
            cloud_stats[f"{label}_filtered"] = len(filtered)
            cloud_stats[f"{label}_downsampled"] = len(voxel_keep)
        fine = fine_stage(downsampled[0], downsampled[1], coarse, alpha=config.alpha)
        final = Sim3Transform(coarse.scale, coarse.rotation, fine.translation)
        down_indices = tuple(down_indices)
        fine_elapsed = time.perf_counter() - start

    return RegistrationResult(
        alignment1=alignments[0],
        alignment2=alignments[1],
        coarse_relative=coarse,
        fine=fine,
        final_transform=final,
        cloud_stats=cloud_stats,
        downsampled_indices=down_indices,
        timings={
            "coarse_s": coarse_elapsed,
            "fine_s": fine_elapsed,
            "registration_s": coarse_elapsed + fine_elapsed,
        },
        config_echo=config.to_dict(),
    )


def register_scene(
    scene,
    config: PipelineConfig = None,
    joint_sigma: float = 0.0,
    warp_amplitude: float = 0.0,
    epoch_bias: float = 0.0,
    frame_drift: float = 0.0,
) -> RegistrationResult:
    """Register a synthetic scene using the mock joint-inference oracle.

    The keyword arguments configure the oracle's error model; see
    ``mock_joint_inference``.
    """
    from .synthetic import all_frames_keyframes, mock_joint_inference

    if config is None:
        config = PipelineConfig()
    joint = mock_joint_inference(
        scene,
        all_frames_keyframes(scene),
        sigma=joint_sigma,
        warp_amplitude=warp_amplitude,
        epoch_bias=epoch_bias,
        frame_drift=frame_drift,
    )
    return register_epochs(scene.epoch_frames(1), scene.epoch_frames(2), joint, config)


def change_statistics(change_map: ChangeMap) -> dict:
    """JSON-ready summary of a classified change map."""
    forward = change_map.forward_labels
    backward = change_map.backward_labels
    return {
        "tau": change_map.tau,
        "tau_ratio": change_map.tau_ratio,
        "scene_extent": change_map.scene_extent,
        "n_t1_points": int(len(change_map.forward_scores)),
        "n_t2_points": int(len(change_map.backward_scores)),
        "n_forward_changed": int(forward.sum()),
        "n_backward_changed": int(backward.sum()),
        "changed_fraction": change_map.changed_fraction,
    }


def detect_changes(
    aligned_t1: PointCloud, t2: PointCloud, tau_ratio: float = 0.01
) -> tuple:
    """Score, classify and summarize changes between two aligned clouds.

    Returns:
        (classified ChangeMap, statistics dict).
    """
    change_map = classify_changes(change_scores(aligned_t1, t2), tau_ratio)
    return change_map, change_statistics(change_map)


@dataclass
class RunReport:
    """Accumulating record of one pipeline run.

    All deterministic content serializes under stable keys; wall-clock
    values live exclusively in the ``timing`` section so two runs with the
    same inputs, config and seed produce byte-identical reports once that
    section is dropped.
    """

    config: dict
    coarse: dict = None
    fine: dict = None
    final_transform: dict = None
    cloud_stats: dict = None
    changes: dict = None
    metrics: dict = None
    inputs: dict = None
    timing: dict = None
    format_version: str = FORMAT_VERSION

    @staticmethod
    def from_registration(result: RegistrationResult, inputs: dict = None) -> "RunReport":
        report = RunReport(config=dict(result.config_echo), inputs=inputs)
        report.record_registration(result)
        return report

    def record_registration(self, result: RegistrationResult):
        self.coarse = {
            "epoch1": _alignment_dict(result.alignment1),
            "epoch2": _alignment_dict(result.alignment2),
            "relative": _transform_dict(result.coarse_relative),
        }
        if result.fine is not None:
            self.fine = {
                "translation": result.fine.translation.tolist(),
                "accepted_refinement": bool(result.fine.accepted_refinement),
                "coarse_median_residual": result.fine.coarse_median_residual,
                "refined_median_residual": result.fine.refined_median_residual,
                "n_static": result.fine.n_static,
            }
        self.final_transform = _transform_dict(result.final_transform)
        self.cloud_stats = dict(result.cloud_stats)
        self.timing = dict(self.timing or {})
        self.timing.update(result.timings)

    def record_changes(self, stats: dict, elapsed: float = None):
        self.changes = dict(stats)
        if elapsed is not None:
            self.timing = dict(self.timing or {})
            self.timing["detect_s"] = elapsed

    def record_metrics(self, metrics: MetricsReport):
        self.metrics = metrics.to_dict()

    def to_dict(self, include_timing: bool = True) -> dict:
        data = {
            "format_version": self.format_version,
            "config": self.config,
            "inputs": self.inputs,
            "coarse": self.coarse,
            "fine": self.fine,
            "final_transform": self.final_transform,
            "cloud_stats": self.cloud_stats,
            "changes": self.changes,
            "metrics": self.metrics,
        }
        if include_timing:
            data["timing"] = self.timing
        return data

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=2) + "\n"

    def write(self, path):
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(self.to_json())

    @staticmethod
    def read(path) -> "RunReport":
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
        version = data.get("format_version", "")
        if version.split(".")[0] != FORMAT_VERSION.split(".")[0]:
            from .errors import SchemaError

            raise SchemaError(f"unsupported report format_version {version!r}")
        report = RunReport(config=data.get("config", {}))
        report.inputs = data.get("inputs")
        report.coarse = data.get("coarse")
        report.fine = data.get("fine")
        report.final_transform = data.get("final_transform")
        report.cloud_stats = data.get("cloud_stats")
        report.changes = data.get("changes")
        report.metrics = data.get("metrics")
        report.timing = data.get("timing")
        report.format_version = version
        return report

    def final_sim3(self) -> Sim3Transform:
        if self.final_transform is None:
            raise ValueError("report has no final transform")
        return transform_from_dict(self.final_transform)
