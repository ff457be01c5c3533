"""Deterministic synthetic bi-temporal scenes with exact ground truth.

A scene is a room built from axis-aligned box surfaces (walls plus a few
furniture boxes) observed by two epochs.  Both epochs sample the same static
world points, so after mapping one epoch onto the other the static residuals
are exactly the injected noise; changed objects are placed in free interior
cells so their points sit far from all other geometry.  Each epoch lives in
its own private similarity frame, reproducing the scale/pose ambiguity of
independent reconstructions, and carries realistic defects: per-point
Gaussian noise, low-confidence "edge-flying" points elongated along the
viewing ray, and per-epoch camera trajectories.

Everything is a pure function of the scene seed; identical specs produce
bitwise-identical scenes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .cloud import PointCloud, robust_extent
from .coarse import JointReconstruction
from .errors import InvalidSpec
from .geometry import SE3Pose, Sim3Transform, compose_relative
from .keyframes import KeyframeSet
from .metrics import Trajectory

_CHANGE_KINDS = ("added", "removed", "moved")

# Salts for the per-component random streams, so e.g. changing the noise
# level cannot reshuffle the geometry.
_SALT_GEOMETRY = 0
_SALT_TRANSFORMS = 1
_SALT_NOISE = 2  # +epoch_id
_SALT_EDGES = 12  # +epoch_id
_SALT_CONFIDENCE = 22  # +epoch_id
_SALT_FRAMES = 32  # +epoch_id
_SALT_JOINT = 100  # +epoch_id
_SALT_JOINT_BIAS = 200  # +epoch_id
_SALT_JOINT_DRIFT = 300  # +epoch_id (+frame in the rng sequence)

# Inlier confidences stay at or above 0.5 while elongated outliers stay
# strictly below 0.3, so a median-confidence filter separates them whenever
# outliers are the minority.
_INLIER_CONF = (0.5, 1.0)
_OUTLIER_CONF = (0.05, 0.295)


@dataclass(frozen=True)
class ChangeSpec:
    """One change between the epochs.

    Objects are small boxes placed in free interior cells.  For a moved
    object ``displacement`` is the rigid world-frame offset applied between
    the epochs; for added/removed objects it nudges the object away from
    its automatically chosen cell center (usually left at zero).
    """

    kind: str
    n_points: int
    displacement: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.kind not in _CHANGE_KINDS:
            raise InvalidSpec(f"unknown change kind {self.kind!r}")
        if self.n_points < 1:
            raise InvalidSpec("each change needs at least one point")
        object.__setattr__(self, "displacement", tuple(float(d) for d in self.displacement))


@dataclass(frozen=True)
class SceneSpec:
    """Parameters of a synthetic bi-temporal scene.

    Attributes:
        seed: master seed; the scene is a pure function of this spec.
        n_static: number of shared static background points.
        n_frames_per_epoch: camera count per epoch.
        change_spec: changes applied between the epochs.
        noise_sigma: per-epoch Gaussian position noise as a fraction of the
            scene extent.  Noise vectors are norm-clipped at 3 sigma so the
            residual between two epochs' views of a static point is hard-
            bounded by 6 sigma.
        edge_noise_fraction: fraction of each epoch's points converted to
            low-confidence outliers elongated along the viewing ray.
        edge_noise_elongation: maximum elongation as a fraction of extent.
        shared_trajectories: when True both epochs follow the same camera
            path (a revisit of the same route), so matching frame indices
            observe matching scene regions; otherwise each epoch gets its
            own arc.
        epoch_transforms: ground-truth epoch-to-world similarity transforms;
            drawn from the seed (scales in [0.2, 5]) when omitted.
        gt_relative: derived transform mapping epoch 1's frame into epoch
            2's; validated against the epoch transforms when provided.
    """

    seed: int
    n_static: int = 10000
    n_frames_per_epoch: int = 30
    change_spec: tuple = ()
    noise_sigma: float = 0.0
    edge_noise_fraction: float = 0.0
    edge_noise_elongation: float = 0.1
    shared_trajectories: bool = False
    epoch_transforms: tuple = None
    gt_relative: Sim3Transform = None

    def __post_init__(self):
        if self.n_static < 1:
            raise InvalidSpec("n_static must be >= 1")
        if self.n_frames_per_epoch < 1:
            raise InvalidSpec("n_frames_per_epoch must be >= 1")
        if not 0.0 <= self.edge_noise_fraction <= 1.0:
            raise InvalidSpec("edge_noise_fraction must lie in [0, 1]")
        if self.noise_sigma < 0.0 or self.edge_noise_elongation < 0.0:
            raise InvalidSpec("noise parameters must be non-negative")
        changes = tuple(
            c if isinstance(c, ChangeSpec) else ChangeSpec(**c) for c in self.change_spec
        )
        object.__setattr__(self, "change_spec", changes)
        if self.epoch_transforms is not None:
            pair = tuple(self.epoch_transforms)
            if len(pair) != 2:
                raise InvalidSpec("epoch_transforms must hold exactly two transforms")
            object.__setattr__(self, "epoch_transforms", pair)
            derived = compose_relative(pair[0], pair[1])
            if self.gt_relative is None:
                object.__setattr__(self, "gt_relative", derived)
            else:
                if (
                    abs(self.gt_relative.scale - derived.scale) > 1e-12 * derived.scale
                    or np.abs(self.gt_relative.rotation - derived.rotation).max() > 1e-12
                    or np.abs(self.gt_relative.translation - derived.translation).max()
                    > 1e-12 * (1.0 + np.abs(derived.translation).max())
                ):
                    raise InvalidSpec("gt_relative does not match the epoch transforms")
        elif self.gt_relative is not None:
            raise InvalidSpec("gt_relative given without epoch_transforms")


@dataclass(frozen=True)
class BiTemporalScene:
    """A generated scene: two epoch clouds plus full ground truth.

    ``world_t1``/``world_t2`` hold the exact world-frame positions of the
    same points as the epoch clouds (including noise and edge elongation);
    they are the basis for the mock joint reconstruction.  Each epoch's
    points are grouped by source frame; ``origin_t1``/``origin_t2`` give
    every point's index in generation order, under which the first
    ``n_static`` points of both epochs are world-coincident counterparts.
    """

    spec: SceneSpec
    cloud_t1: PointCloud
    cloud_t2: PointCloud
    world_t1: np.ndarray
    world_t2: np.ndarray
    labels_t1: np.ndarray
    labels_t2: np.ndarray
    edge_t1: np.ndarray
    edge_t2: np.ndarray
    origin_t1: np.ndarray
    origin_t2: np.ndarray
    trajectory_t1: Trajectory
    trajectory_t2: Trajectory
    extent: float

    @property
    def gt_relative(self) -> Sim3Transform:
        return self.spec.gt_relative

    @property
    def epoch_transforms(self) -> tuple:
        return self.spec.epoch_transforms

    def cloud(self, epoch_id: int) -> PointCloud:
        return self.cloud_t1 if epoch_id == 1 else self.cloud_t2

    def world_points(self, epoch_id: int) -> np.ndarray:
        return self.world_t1 if epoch_id == 1 else self.world_t2

    def labels(self, epoch_id: int) -> np.ndarray:
        return self.labels_t1 if epoch_id == 1 else self.labels_t2

    def epoch_frames(self, epoch_id: int) -> list:
        """Per-frame clouds (1-based frame order) for one epoch."""
        cloud = self.cloud(epoch_id)
        return [
            cloud.frame_subset(i) for i in range(1, self.spec.n_frames_per_epoch + 1)
        ]

    def predicted_trajectory(self, epoch_id: int) -> Trajectory:
        """The epoch's camera trajectory expressed in its private frame.

        This plays the role of the per-epoch reconstruction's camera output:
        the ground-truth world trajectory carried into the epoch frame by
        the inverse ground-truth transform.
        """
        world_traj = self.trajectory_t1 if epoch_id == 1 else self.trajectory_t2
        into_epoch = self.epoch_transforms[epoch_id - 1].inverse()
        poses = []
        for pose in world_traj.poses:
            center = into_epoch.apply(pose.center)
            rotation = pose.rotation @ into_epoch.rotation.T
            poses.append(
                SE3Pose(rotation, -(rotation @ center), frame_index=pose.frame_index)
            )
        return Trajectory(tuple(poses), tuple(world_traj.epoch_ids))


def _random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation via QR of a Gaussian matrix."""
    m = rng.normal(size=(3, 3))
    q, r = np.linalg.qr(m)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0.0:
        q[:, 2] = -q[:, 2]
    return q


def _random_sim3(rng: np.random.Generator, scale_range=(0.2, 5.0)) -> Sim3Transform:
    lo, hi = scale_range
    scale = math.exp(rng.uniform(math.log(lo), math.log(hi)))
    return Sim3Transform(scale, _random_rotation(rng), rng.uniform(-5.0, 5.0, 3))


def _box_faces(center: np.ndarray, half: np.ndarray) -> list:
    """The six faces of an axis-aligned box as (origin, u_edge, v_edge)."""
    faces = []
    for axis in range(3):
        u_axis, v_axis = (axis + 1) % 3, (axis + 2) % 3
        for sign in (-1.0, 1.0):
            origin = center.copy()
            origin[axis] += sign * half[axis]
            origin[u_axis] -= half[u_axis]
            origin[v_axis] -= half[v_axis]
            u = np.zeros(3)
            u[u_axis] = 2.0 * half[u_axis]
            v = np.zeros(3)
            v[v_axis] = 2.0 * half[v_axis]
            faces.append((origin, u, v))
    return faces


def _sample_on_faces(faces: list, n: int, rng: np.random.Generator) -> np.ndarray:
    """Exactly n points sampled uniformly by area over the given faces."""
    areas = np.array([np.linalg.norm(u) * np.linalg.norm(v) for _, u, v in faces])
    quota = areas / areas.sum() * n
    counts = np.floor(quota).astype(int)
    remainder = n - counts.sum()
    if remainder > 0:
        # Largest-remainder rounding keeps the total exact.
        extra = np.argsort(-(quota - counts), kind="stable")[:remainder]
        counts[extra] += 1
    pieces = []
    for (origin, u, v), count in zip(faces, counts):
        if count == 0:
            continue
        uv = rng.uniform(0.0, 1.0, size=(count, 2))
        pieces.append(origin + uv[:, :1] * u + uv[:, 1:] * v)
    return np.concatenate(pieces) if pieces else np.zeros((0, 3))


def _interior_cells(half: np.ndarray, z_fraction: float) -> np.ndarray:
    """Centers of a 4 x 4 grid of interior placement cells at one height.

    Furniture and change objects draw from grids at different heights, so a
    changed object always keeps clearance from every static surface.
    """
    fractions = [-0.6, -0.2, 0.2, 0.6]
    centers = []
    for fx in fractions:
        for fy in fractions:
            centers.append([fx * half[0], fy * half[1], z_fraction * half[2]])
    return np.asarray(centers)


def _look_at(center: np.ndarray, target: np.ndarray, frame_index: int) -> SE3Pose:
    forward = target - center
    forward = forward / np.linalg.norm(forward)
    up = np.array([0.0, 0.0, 1.0])
    if abs(forward @ up) > 0.99:
        up = np.array([0.0, 1.0, 0.0])
    right = np.cross(up, forward)
    right = right / np.linalg.norm(right)
    down = np.cross(forward, right)
    rotation = np.stack([right, down, forward])
    return SE3Pose(rotation, -(rotation @ center), frame_index=frame_index)


def _arc_trajectory(
    rng: np.random.Generator, half: np.ndarray, n_frames: int, epoch_id: int
) -> Trajectory:
    radius = 0.4 * min(half[0], half[1]) * rng.uniform(0.9, 1.1)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    height = rng.uniform(-0.2, 0.2) * half[2]
    poses = []
    for i in range(n_frames):
        theta = phase + 2.0 * math.pi * i / n_frames
        center = np.array([radius * math.cos(theta), radius * math.sin(theta), height])
        poses.append(_look_at(center, np.zeros(3), frame_index=i + 1))
    return Trajectory(tuple(poses), tuple([epoch_id] * n_frames))


def _assign_frames(
    points: np.ndarray, trajectory: Trajectory, rng: np.random.Generator
) -> np.ndarray:
    """Assign each point to the camera whose azimuth is closest to its own.

    A jitter of three quarters of the angular spacing blurs the region
    boundaries so neighboring frames see overlapping geometry.
    """
    cam_centers = trajectory.centers()
    cam_az = np.arctan2(cam_centers[:, 1], cam_centers[:, 0])
    n_frames = len(cam_az)
    jitter = 0.75 * 2.0 * math.pi / n_frames
    point_az = np.arctan2(points[:, 1], points[:, 0])
    point_az = point_az + rng.normal(0.0, jitter, size=len(points))
    diff = np.abs(point_az[:, None] - cam_az[None, :])
    diff = np.minimum(diff, 2.0 * math.pi - diff)
    return np.argmin(diff, axis=1).astype(np.int64) + 1


def _clipped_noise(rng: np.random.Generator, n: int, sigma: float) -> np.ndarray:
    """Gaussian noise with per-axis std sigma, norm-clipped at 3 sigma."""
    if sigma <= 0.0:
        return np.zeros((n, 3))
    noise = rng.normal(0.0, sigma, size=(n, 3))
    norms = np.linalg.norm(noise, axis=1)
    over = norms > 3.0 * sigma
    if over.any():
        noise[over] *= (3.0 * sigma / norms[over])[:, None]
    return noise


def generate_scene(spec: SceneSpec) -> BiTemporalScene:
    """Build the scene described by ``spec``; bitwise deterministic in it.

    Raises:
        InvalidSpec: on inconsistent parameters, including moved objects
            whose displacement is below 10x the noise level (labels would
            be ambiguous).
    """
    geom_rng = np.random.default_rng([spec.seed, _SALT_GEOMETRY])

    half = geom_rng.uniform(4.0, 6.0, 3)
    n_boxes = int(geom_rng.integers(3, 11))
    faces = _box_faces(np.zeros(3), half)

    furniture_cells = _interior_cells(half, z_fraction=-0.35)
    change_cells = _interior_cells(half, z_fraction=0.35)
    furniture_order = geom_rng.permutation(len(furniture_cells))
    change_order = geom_rng.permutation(len(change_cells))
    change_cursor = 0

    def next_change_cell() -> np.ndarray:
        nonlocal change_cursor
        if change_cursor >= len(change_order):
            raise InvalidSpec("too many change objects for the available interior cells")
        center = change_cells[change_order[change_cursor]]
        change_cursor += 1
        return center

    object_half = 0.32 * np.array([0.2 * half[0], 0.2 * half[1], 0.35 * half[2]])
    for box in range(n_boxes - 1):
        center = furniture_cells[furniture_order[box]]
        size = object_half * geom_rng.uniform(0.6, 1.0, 3)
        faces.extend(_box_faces(center, size))

    static_world = _sample_on_faces(faces, spec.n_static, geom_rng)

    added, removed, moved_t1, moved_t2 = [], [], [], []
    scene_scale = float(np.max(half)) * 2.0
    for change in spec.change_spec:
        disp = np.asarray(change.displacement)
        size = object_half * geom_rng.uniform(0.6, 1.0, 3)
        center = next_change_cell()
        if change.kind == "moved":
            if spec.noise_sigma > 0.0 and np.linalg.norm(disp) < 10.0 * spec.noise_sigma * scene_scale:
                raise InvalidSpec(
                    "moved displacement must be at least 10x the noise level "
                    f"({10.0 * spec.noise_sigma * scene_scale:.3g})"
                )
            pts = _sample_on_faces(_box_faces(center, size), change.n_points, geom_rng)
            moved_t1.append(pts)
            moved_t2.append(pts + disp)
        else:
            pts = _sample_on_faces(_box_faces(center + disp, size), change.n_points, geom_rng)
            if change.kind == "added":
                added.append(pts)
            else:
                removed.append(pts)

    def stack(blocks):
        return np.concatenate(blocks) if blocks else np.zeros((0, 3))

    world_1 = np.concatenate([static_world, stack(removed), stack(moved_t1)])
    world_2 = np.concatenate([static_world, stack(added), stack(moved_t2)])
    labels_1 = np.concatenate(
        [np.zeros(spec.n_static, bool), np.ones(len(world_1) - spec.n_static, bool)]
    )
    labels_2 = np.concatenate(
        [np.zeros(spec.n_static, bool), np.ones(len(world_2) - spec.n_static, bool)]
    )

    extent = robust_extent(np.concatenate([world_1, world_2]))

    transforms_rng = np.random.default_rng([spec.seed, _SALT_TRANSFORMS])
    if spec.epoch_transforms is None:
        pair = (_random_sim3(transforms_rng), _random_sim3(transforms_rng))
        spec = replace(spec, epoch_transforms=pair, gt_relative=None)

    labels_by_epoch = {1: labels_1, 2: labels_2}
    clouds, worlds, edges, trajectories, origins = [], [], [], [], []
    for epoch_id, world in ((1, world_1), (2, world_2)):
        n = len(world)
        traj_salt = _SALT_FRAMES + (1 if spec.shared_trajectories else epoch_id)
        traj_rng = np.random.default_rng([spec.seed, traj_salt])
        trajectory = _arc_trajectory(traj_rng, half, spec.n_frames_per_epoch, epoch_id)
        frames = _assign_frames(world, trajectory, traj_rng)

        # Group each epoch's points by source frame (stable within a frame)
        # so exporting per-frame files and re-reading preserves point order.
        perm = np.argsort(frames, kind="stable")
        world = world[perm]
        frames = frames[perm]
        labels_by_epoch[epoch_id] = labels_by_epoch[epoch_id][perm]

        noise_rng = np.random.default_rng([spec.seed, _SALT_NOISE + epoch_id])
        noisy = world + _clipped_noise(noise_rng, n, spec.noise_sigma * extent)

        edge_rng = np.random.default_rng([spec.seed, _SALT_EDGES + epoch_id])
        edge_mask = np.zeros(n, dtype=bool)
        n_edge = int(round(spec.edge_noise_fraction * n))
        if n_edge > 0:
            edge_idx = edge_rng.choice(n, size=n_edge, replace=False)
            edge_mask[edge_idx] = True
            cam_centers = trajectory.centers()[frames[edge_idx] - 1]
            rays = noisy[edge_idx] - cam_centers
            rays /= np.linalg.norm(rays, axis=1, keepdims=True)
            magnitude = edge_rng.uniform(0.3, 1.0, n_edge) * spec.edge_noise_elongation * extent
            noisy[edge_idx] = noisy[edge_idx] + magnitude[:, None] * rays

        conf_rng = np.random.default_rng([spec.seed, _SALT_CONFIDENCE + epoch_id])
        confidence = conf_rng.uniform(*_INLIER_CONF, n)
        if n_edge > 0:
            confidence[edge_mask] = conf_rng.uniform(*_OUTLIER_CONF, n_edge)

        into_epoch = spec.epoch_transforms[epoch_id - 1].inverse()
        clouds.append(
            PointCloud(into_epoch.apply(noisy), confidence, source_frame=frames)
        )
        worlds.append(noisy)
        edges.append(edge_mask)
        trajectories.append(trajectory)
        origins.append(perm.astype(np.int64))

    return BiTemporalScene(
        spec=spec,
        cloud_t1=clouds[0],
        cloud_t2=clouds[1],
        world_t1=worlds[0],
        world_t2=worlds[1],
        labels_t1=labels_by_epoch[1],
        labels_t2=labels_by_epoch[2],
        edge_t1=edges[0],
        edge_t2=edges[1],
        origin_t1=origins[0],
        origin_t2=origins[1],
        trajectory_t1=trajectories[0],
        trajectory_t2=trajectories[1],
        extent=extent,
    )


def _warp_field(points: np.ndarray, extent: float, amplitude: float) -> np.ndarray:
    """Smooth, deterministic low-frequency warp used to emulate the
    systematic (non-similarity) component of joint reconstruction error.

    Returns a displacement bounded by ``amplitude * extent`` per axis.
    """
    if amplitude <= 0.0:
        return np.zeros_like(points)
    u = points / extent
    freq = 2.0 * math.pi * 0.7
    disp = np.stack(
        [
            np.sin(freq * u[:, 1] + 0.9),
            np.sin(freq * u[:, 2] + 2.1),
            np.sin(freq * u[:, 0] + 4.2),
        ],
        axis=1,
    )
    return amplitude * extent * disp


def _small_sim3(
    rng: np.random.Generator, magnitude: float, extent: float, fixed_magnitude: bool = False
) -> Sim3Transform:
    """Similarity transform near the identity.

    Rotation angle, log-scale and relative translation are Gaussian with
    std ``magnitude`` (or exactly ``magnitude`` when ``fixed_magnitude``,
    leaving only the directions random).
    """
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = magnitude if fixed_magnitude else rng.normal(0.0, magnitude)
    k = np.array(
        [
            [0.0, -axis[2], axis[1]],
            [axis[2], 0.0, -axis[0]],
            [-axis[1], axis[0], 0.0],
        ]
    )
    rotation = np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)
    scale = math.exp(magnitude if fixed_magnitude else rng.normal(0.0, magnitude))
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    if fixed_magnitude:
        translation = magnitude * extent * direction
    else:
        translation = rng.normal(0.0, magnitude * extent, 3)
    return Sim3Transform(scale, rotation, translation)


def mock_joint_inference(
    scene: BiTemporalScene,
    keyframes: tuple,
    sigma: float = 0.0,
    warp_amplitude: float = 0.0,
    epoch_bias: float = 0.0,
    frame_drift: float = 0.0,
) -> JointReconstruction:
    """Stand-in for a joint two-epoch reconstruction pass.

    For each requested keyframe, returns that frame's epoch points expressed
    in the shared world frame, pixel-aligned with the per-epoch cloud, with
    configurable error components emulating a real joint pass:

    - ``sigma``: i.i.d. Gaussian perturbation, per-axis std sigma * extent,
      drawn once per point from the scene seed so the same point receives
      the same perturbation under any keyframe budget.
    - ``warp_amplitude``: the smooth low-frequency field of
      :func:`_warp_field`, a spatially systematic reconstruction error.
    - ``epoch_bias``: a near-identity similarity transform of deterministic
      magnitude (random direction) applied to every epoch-2 keyframe cloud,
      emulating a systematic cross-epoch inconsistency of the joint metric
      frame.  Any subset fit absorbs it exactly, so it sets a keyframe-
      budget-independent floor on the relative-transform error.
    - ``frame_drift``: an additional near-identity similarity per keyframe
      (pose drift of the joint pass), fixed per frame, whose influence on
      the fit averages down as more keyframes are used.

    All components are deterministic functions of the scene seed.
    """
    kf1, kf2 = keyframes
    if (kf1.epoch_id, kf2.epoch_id) != (1, 2):
        raise ValueError("expected keyframe sets for epochs 1 and 2, in that order")
    clouds = {}
    for kf in (kf1, kf2):
        epoch_cloud = scene.cloud(kf.epoch_id)
        world = scene.world_points(kf.epoch_id)
        n_frames = scene.spec.n_frames_per_epoch
        if kf.indices and kf.indices[-1] > n_frames:
            raise ValueError(
                f"keyframe index {kf.indices[-1]} exceeds epoch frame count {n_frames}"
            )
        rng = np.random.default_rng([scene.spec.seed, _SALT_JOINT + kf.epoch_id])
        perturbed = world + rng.normal(0.0, sigma * scene.extent, size=world.shape)
        perturbed = perturbed + _warp_field(world, scene.extent, warp_amplitude)
        if epoch_bias > 0.0 and kf.epoch_id == 2:
            bias_rng = np.random.default_rng([scene.spec.seed, _SALT_JOINT_BIAS])
            bias = _small_sim3(bias_rng, epoch_bias, scene.extent, fixed_magnitude=True)
            perturbed = bias.apply(perturbed)
        drift_rng = np.random.default_rng([scene.spec.seed, _SALT_JOINT_DRIFT + kf.epoch_id])
        drifts = [
            _small_sim3(drift_rng, frame_drift, scene.extent) for _ in range(n_frames)
        ]
        for index in kf.indices:
            mask = epoch_cloud.source_frame == index
            points = perturbed[mask]
            if frame_drift > 0.0:
                points = drifts[index - 1].apply(points)
            clouds[(kf.epoch_id, index)] = PointCloud(
                points, epoch_cloud.confidence[mask]
            )
    return JointReconstruction(clouds=clouds, provenance="synthetic_oracle")


def all_frames_keyframes(scene: BiTemporalScene) -> tuple:
    """Keyframe sets selecting every frame of both epochs."""
    n = scene.spec.n_frames_per_epoch
    full = tuple(range(1, n + 1))
    return (KeyframeSet(1, full, n), KeyframeSet(2, full, n))
