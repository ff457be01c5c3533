"""Structured on-disk formats: depth bundles, trajectories, scene directories.

A *depth bundle* holds per-frame calibrated depth predictions: one JSON file
with intrinsics and pose per frame plus flat binary float32 grids for depth
and confidence, each grid prefixed by a single-line JSON header (height,
width, dtype, endianness).  A *scene directory* is the exported form of a
synthetic bi-temporal scene: per-frame PLY clouds for both epochs, predicted
and ground-truth trajectories, the shared-frame joint keyframe clouds, and a
gt.json with the ground-truth transforms and per-point change labels.

Every file declares a ``format_version``; readers reject unknown major
versions with a :class:`SchemaError` naming the offending file.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .cloud import PointCloud
from .coarse import JointReconstruction
from .errors import SchemaError
from .geometry import CameraFrame, SE3Pose, Sim3Transform
from .metrics import Trajectory
from .ply import read_ply, write_ply
from .synthetic import (
    BiTemporalScene,
    ChangeSpec,
    SceneSpec,
    all_frames_keyframes,
    mock_joint_inference,
)

FORMAT_VERSION = "1.0"

_GRID_HEADER_KEYS = ("format_version", "height", "width", "dtype", "endianness")


def _check_version(version, path):
    if not isinstance(version, str) or version.split(".")[0] != FORMAT_VERSION.split(".")[0]:
        raise SchemaError(f"{path}: unsupported format_version {version!r}")


def _require(mapping: dict, key: str, path) -> object:
    if key not in mapping:
        raise SchemaError(f"{path}: missing field {key!r}")
    return mapping[key]


def write_depth_grid(path, grid: np.ndarray):
    """Write a 2D grid as a JSON header line plus raw little-endian float32."""
    grid = np.asarray(grid)
    if grid.ndim != 2:
        raise ValueError("grid must be 2D")
    header = {
        "format_version": FORMAT_VERSION,
        "height": int(grid.shape[0]),
        "width": int(grid.shape[1]),
        "dtype": "float32",
        "endianness": "little",
    }
    with open(path, "wb") as handle:
        handle.write((json.dumps(header, sort_keys=True) + "\n").encode("ascii"))
        handle.write(np.ascontiguousarray(grid, dtype="<f4").tobytes())


def read_depth_grid(path) -> np.ndarray:
    """Read a grid written by :func:`write_depth_grid`.

    Raises:
        SchemaError: malformed header, wrong dtype/endianness tag, or a
            payload whose size disagrees with the declared dimensions.
    """
    with open(path, "rb") as handle:
        raw = handle.read()
    newline = raw.find(b"\n")
    if newline < 0:
        raise SchemaError(f"{path}: missing grid header line")
    try:
        header = json.loads(raw[:newline].decode("ascii"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaError(f"{path}: bad grid header ({exc})") from None
    for key in _GRID_HEADER_KEYS:
        _require(header, key, path)
    _check_version(header["format_version"], path)
    if header["dtype"] != "float32" or header["endianness"] != "little":
        raise SchemaError(
            f"{path}: unsupported grid encoding {header['dtype']}/{header['endianness']}"
        )
    height, width = int(header["height"]), int(header["width"])
    payload = raw[newline + 1 :]
    expected = height * width * 4
    if len(payload) != expected:
        raise SchemaError(
            f"{path}: grid payload has {len(payload)} bytes, expected {expected}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(height, width).astype(np.float64)


def _frame_stem(index: int) -> str:
    return f"frame_{index:04d}"


def write_depth_bundle(directory, frames: list):
    """Write CameraFrames as a depth bundle under ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for frame in frames:
        stem = _frame_stem(frame.pose.frame_index)
        write_depth_grid(directory / f"{stem}_depth.bin", frame.depth)
        write_depth_grid(directory / f"{stem}_conf.bin", frame.confidence)
        meta = {
            "format_version": FORMAT_VERSION,
            "frame_index": frame.pose.frame_index,
            "intrinsics": frame.intrinsics.tolist(),
            "rotation": frame.pose.rotation.tolist(),
            "translation": frame.pose.translation.tolist(),
            "depth_file": f"{stem}_depth.bin",
            "confidence_file": f"{stem}_conf.bin",
        }
        with open(directory / f"{stem}.json", "w", encoding="utf-8") as handle:
            json.dump(meta, handle, sort_keys=True, indent=2)
            handle.write("\n")


def read_depth_bundle(directory) -> list:
    """Read every frame of a depth bundle, in frame order.

    Raises:
        SchemaError: naming the offending file and field on any problem,
            including depth/confidence grids of different dimensions.
    """
    directory = Path(directory)
    meta_paths = sorted(directory.glob("frame_*.json"))
    if not meta_paths:
        raise SchemaError(f"{directory}: no frame_*.json files found")
    frames = []
    for meta_path in meta_paths:
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{meta_path}: invalid JSON ({exc})") from None
        _check_version(_require(meta, "format_version", meta_path), meta_path)
        for key in ("frame_index", "intrinsics", "rotation", "translation",
                    "depth_file", "confidence_file"):
            _require(meta, key, meta_path)
        depth_path = directory / meta["depth_file"]
        conf_path = directory / meta["confidence_file"]
        if not depth_path.exists():
            raise SchemaError(f"{meta_path}: depth grid {meta['depth_file']!r} is missing")
        if not conf_path.exists():
            raise SchemaError(f"{meta_path}: confidence grid {meta['confidence_file']!r} is missing")
        depth = read_depth_grid(depth_path)
        confidence = read_depth_grid(conf_path)
        if depth.shape != confidence.shape:
            raise SchemaError(
                f"{meta_path}: depth grid {depth.shape} and confidence grid "
                f"{confidence.shape} dimensions differ"
            )
        try:
            pose = SE3Pose(
                np.asarray(meta["rotation"], dtype=np.float64),
                np.asarray(meta["translation"], dtype=np.float64),
                frame_index=int(meta["frame_index"]),
            )
            frame = CameraFrame(
                intrinsics=np.asarray(meta["intrinsics"], dtype=np.float64),
                pose=pose,
                depth=depth,
                confidence=confidence,
            )
        except ValueError as exc:
            raise SchemaError(f"{meta_path}: {exc}") from None
        frames.append(frame)
    return frames


def write_trajectory(path, trajectory: Trajectory):
    epochs = sorted(set(trajectory.epoch_ids))
    data = {
        "format_version": FORMAT_VERSION,
        "epoch_id": epochs[0] if len(epochs) == 1 else None,
        "poses": [
            {
                "epoch_id": epoch,
                "frame_index": pose.frame_index,
                "rotation": pose.rotation.tolist(),
                "translation": pose.translation.tolist(),
            }
            for epoch, pose in zip(trajectory.epoch_ids, trajectory.poses)
        ],
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(data, handle, sort_keys=True, indent=2)
        handle.write("\n")


def read_trajectory(path) -> Trajectory:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    _check_version(_require(data, "format_version", path), path)
    poses, epochs = [], []
    for i, entry in enumerate(_require(data, "poses", path)):
        for key in ("epoch_id", "frame_index", "rotation", "translation"):
            if key not in entry:
                raise SchemaError(f"{path}: pose {i} missing field {key!r}")
        try:
            poses.append(
                SE3Pose(
                    np.asarray(entry["rotation"], dtype=np.float64),
                    np.asarray(entry["translation"], dtype=np.float64),
                    frame_index=int(entry["frame_index"]),
                )
            )
        except ValueError as exc:
            raise SchemaError(f"{path}: pose {i}: {exc}") from None
        epochs.append(int(entry["epoch_id"]))
    return Trajectory(tuple(poses), tuple(epochs))


def _transform_to_json(t: Sim3Transform) -> dict:
    return {"scale": t.scale, "rotation": t.rotation.tolist(), "translation": t.translation.tolist()}


def _transform_from_json(d: dict, path) -> Sim3Transform:
    for key in ("scale", "rotation", "translation"):
        _require(d, key, path)
    try:
        return Sim3Transform(
            d["scale"], np.asarray(d["rotation"]), np.asarray(d["translation"])
        )
    except ValueError as exc:
        raise SchemaError(f"{path}: bad transform ({exc})") from None


def write_epoch_dir(directory, frames: list, trajectory: Trajectory = None):
    """Write per-frame PLY clouds (frame_0001.ply, ...) and a trajectory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for index, cloud in enumerate(frames, start=1):
        write_ply(cloud, directory / f"{_frame_stem(index)}.ply")
    if trajectory is not None:
        write_trajectory(directory / "trajectory.json", trajectory)


def read_epoch_dir(directory) -> list:
    """Read the per-frame clouds of an epoch directory, in frame order.

    Each frame's points get their source_frame set from the file name, so
    concatenating the frames reproduces the epoch's labeled dense cloud.
    """
    directory = Path(directory)
    paths = sorted(directory.glob("frame_*.ply"))
    if not paths:
        raise SchemaError(f"{directory}: no frame_*.ply files found")
    frames = []
    for expected, path in enumerate(paths, start=1):
        index = int(path.stem.split("_")[1])
        if index != expected:
            raise SchemaError(f"{directory}: frame files are not consecutive at {path.name}")
        cloud = read_ply(path)
        frames.append(
            PointCloud(
                cloud.points,
                cloud.confidence,
                color=cloud.color,
                source_frame=np.full(len(cloud), index, dtype=np.int64),
            )
        )
    return frames


def write_joint_dir(directory, joint: JointReconstruction):
    """Write the shared-frame keyframe clouds as e{epoch}_frame_NNNN.ply."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for (epoch_id, index), cloud in sorted(joint.clouds.items()):
        write_ply(cloud, directory / f"e{epoch_id}_{_frame_stem(index)}.ply")


def read_joint_dir(directory) -> JointReconstruction:
    directory = Path(directory)
    paths = sorted(directory.glob("e*_frame_*.ply"))
    if not paths:
        raise SchemaError(f"{directory}: no e*_frame_*.ply files found")
    clouds = {}
    for path in paths:
        epoch_token, _, frame_token = path.stem.partition("_frame_")
        try:
            key = (int(epoch_token[1:]), int(frame_token))
        except ValueError:
            raise SchemaError(f"{directory}: cannot parse joint file name {path.name!r}") from None
        clouds[key] = read_ply(path)
    return JointReconstruction(clouds=clouds, provenance="ingested_file")


def scene_ground_truth_dict(scene) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "seed": scene.spec.seed,
        "n_frames": scene.spec.n_frames_per_epoch,
        "extent": scene.extent,
        "epoch_transforms": [_transform_to_json(t) for t in scene.epoch_transforms],
        "gt_relative": _transform_to_json(scene.gt_relative),
        "labels_t1": scene.labels_t1.astype(int).tolist(),
        "labels_t2": scene.labels_t2.astype(int).tolist(),
        "edge_t1": scene.edge_t1.astype(int).tolist(),
        "edge_t2": scene.edge_t2.astype(int).tolist(),
        "origin_t1": scene.origin_t1.tolist(),
        "origin_t2": scene.origin_t2.tolist(),
    }


def read_ground_truth(path) -> dict:
    """Parse a gt.json into transforms and label arrays."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{path}: ground-truth file not found")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    _check_version(_require(data, "format_version", path), path)
    pair = _require(data, "epoch_transforms", path)
    if len(pair) != 2:
        raise SchemaError(f"{path}: epoch_transforms must hold exactly two transforms")
    return {
        "seed": int(_require(data, "seed", path)),
        "n_frames": int(_require(data, "n_frames", path)),
        "extent": float(_require(data, "extent", path)),
        "epoch_transforms": tuple(_transform_from_json(t, path) for t in pair),
        "gt_relative": _transform_from_json(_require(data, "gt_relative", path), path),
        "labels_t1": np.asarray(data.get("labels_t1", []), dtype=bool),
        "labels_t2": np.asarray(data.get("labels_t2", []), dtype=bool),
        "edge_t1": np.asarray(data.get("edge_t1", []), dtype=bool),
        "edge_t2": np.asarray(data.get("edge_t2", []), dtype=bool),
        "origin_t1": np.asarray(data.get("origin_t1", []), dtype=np.int64),
        "origin_t2": np.asarray(data.get("origin_t2", []), dtype=np.int64),
    }


def _scene_spec_dict(spec) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "seed": spec.seed,
        "n_static": spec.n_static,
        "n_frames_per_epoch": spec.n_frames_per_epoch,
        "noise_sigma": spec.noise_sigma,
        "edge_noise_fraction": spec.edge_noise_fraction,
        "edge_noise_elongation": spec.edge_noise_elongation,
        "change_spec": [
            {"kind": c.kind, "n_points": c.n_points, "displacement": list(c.displacement)}
            for c in spec.change_spec
        ],
    }


def write_scene_dir(scene, directory, joint_sigma: float = 0.0, warp_amplitude: float = 0.0):
    """Export a synthetic scene to the directory layout the pipeline ingests.

    Layout::

        scene.json                  spec echo
        gt.json                     transforms, labels, edge masks
        e1/frame_NNNN.ply           per-frame epoch-1 clouds
        e1/trajectory.json          epoch-frame camera trajectory
        e2/...                      likewise for epoch 2
        gt_trajectories/e1.json     world-frame ground-truth trajectories
        joint/e{k}_frame_NNNN.ply   shared-frame keyframe clouds (all frames)
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "scene.json", "w", encoding="utf-8") as handle:
        json.dump(_scene_spec_dict(scene.spec), handle, sort_keys=True, indent=2)
        handle.write("\n")
    with open(directory / "gt.json", "w", encoding="utf-8") as handle:
        json.dump(scene_ground_truth_dict(scene), handle, sort_keys=True, indent=2)
        handle.write("\n")
    for epoch_id, name in ((1, "e1"), (2, "e2")):
        write_epoch_dir(
            directory / name,
            scene.epoch_frames(epoch_id),
            scene.predicted_trajectory(epoch_id),
        )
    gt_dir = directory / "gt_trajectories"
    gt_dir.mkdir(exist_ok=True)
    write_trajectory(gt_dir / "e1.json", scene.trajectory_t1)
    write_trajectory(gt_dir / "e2.json", scene.trajectory_t2)
    joint = mock_joint_inference(
        scene, all_frames_keyframes(scene), sigma=joint_sigma, warp_amplitude=warp_amplitude
    )
    write_joint_dir(directory / "joint", joint)


def oracle_joint_from_files(epoch_dirs: tuple, gt_path) -> JointReconstruction:
    """Rebuild the oracle joint reconstruction from exported epoch clouds.

    Maps every frame's per-epoch points into the world frame with the
    ground-truth epoch transforms from ``gt_path``.  Equivalent to the
    in-memory oracle with zero perturbation.
    """
    gt = read_ground_truth(gt_path)
    clouds = {}
    for epoch_id, directory in ((1, epoch_dirs[0]), (2, epoch_dirs[1])):
        transform = gt["epoch_transforms"][epoch_id - 1]
        for index, cloud in enumerate(read_epoch_dir(directory), start=1):
            clouds[(epoch_id, index)] = PointCloud(
                transform.apply(cloud.points), cloud.confidence
            )
    return JointReconstruction(clouds=clouds, provenance="synthetic_oracle")


def read_scene_dir(directory) -> BiTemporalScene:
    """Rebuild a synthetic scene from its exported directory.

    Positions round through the PLY float32 encoding, so the rebuilt scene
    matches the original to float32 precision; re-exporting it writes
    byte-identical cloud files.
    """
    directory = Path(directory)
    spec_path = directory / "scene.json"
    if not spec_path.exists():
        raise SchemaError(f"{spec_path}: scene spec not found")
    try:
        spec_data = json.loads(spec_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{spec_path}: invalid JSON ({exc})") from None
    _check_version(_require(spec_data, "format_version", spec_path), spec_path)
    gt = read_ground_truth(directory / "gt.json")

    spec = SceneSpec(
        seed=int(_require(spec_data, "seed", spec_path)),
        n_static=int(_require(spec_data, "n_static", spec_path)),
        n_frames_per_epoch=int(_require(spec_data, "n_frames_per_epoch", spec_path)),
        change_spec=tuple(
            ChangeSpec(c["kind"], c["n_points"], tuple(c["displacement"]))
            for c in spec_data.get("change_spec", [])
        ),
        noise_sigma=float(spec_data.get("noise_sigma", 0.0)),
        edge_noise_fraction=float(spec_data.get("edge_noise_fraction", 0.0)),
        edge_noise_elongation=float(spec_data.get("edge_noise_elongation", 0.0)),
        epoch_transforms=gt["epoch_transforms"],
    )

    clouds, worlds = [], []
    for epoch_id, name in ((1, "e1"), (2, "e2")):
        frames = read_epoch_dir(directory / name)
        cloud = PointCloud.concatenate(frames)
        clouds.append(cloud)
        worlds.append(spec.epoch_transforms[epoch_id - 1].apply(cloud.points))

    return BiTemporalScene(
        spec=spec,
        cloud_t1=clouds[0],
        cloud_t2=clouds[1],
        world_t1=worlds[0],
        world_t2=worlds[1],
        labels_t1=gt["labels_t1"],
        labels_t2=gt["labels_t2"],
        edge_t1=gt["edge_t1"],
        edge_t2=gt["edge_t2"],
        origin_t1=gt["origin_t1"],
        origin_t2=gt["origin_t2"],
        trajectory_t1=read_trajectory(directory / "gt_trajectories" / "e1.json"),
        trajectory_t2=read_trajectory(directory / "gt_trajectories" / "e2.json"),
        extent=gt["extent"],
    )
