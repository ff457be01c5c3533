"""Similarity-transform algebra, closed-form alignment, and back-projection.

A :class:`Sim3Transform` is the 7-DoF similarity map p -> s*R*p + t used to
carry a scale-ambiguous reconstruction into another frame.  The closed-form
least-squares estimator :func:`umeyama` recovers such a transform from paired
points via an SVD of the cross-covariance, with the standard sign correction
so the rotation is never a reflection.  :func:`backproject` lifts a depth map
into a point cloud using the camera intrinsics and extrinsics.

All values are immutable after construction and safe to share across
concurrent workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud
from .errors import DegenerateInput, EmptyFrame

ROTATION_TOL = 1e-9
_QUAT_RENORM_TOL = 1e-6


def _check_rotation(rotation: np.ndarray, tol: float = ROTATION_TOL) -> np.ndarray:
    r = np.ascontiguousarray(np.asarray(rotation, dtype=np.float64))
    if r.shape != (3, 3):
        raise ValueError(f"rotation must be a 3x3 matrix, got shape {r.shape}")
    err = np.linalg.norm(r.T @ r - np.eye(3))
    if err > tol:
        raise ValueError(f"rotation is not orthonormal (|R^T R - I|_F = {err:.3e})")
    if np.linalg.det(r) < 0.0:
        raise ValueError("rotation has determinant -1 (reflection)")
    return r


def quaternion_to_matrix(q) -> np.ndarray:
    """Rotation matrix from a (w, x, y, z) quaternion.

    Quaternions farther than 1e-6 from unit norm are renormalized before
    conversion; exactly-zero quaternions are rejected.
    """
    q = np.asarray(q, dtype=np.float64).reshape(4)
    norm = float(np.linalg.norm(q))
    if norm == 0.0:
        raise ValueError("zero quaternion has no orientation")
    if abs(norm - 1.0) > _QUAT_RENORM_TOL:
        q = q / norm
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def rotation_angle_deg(rotation: np.ndarray) -> float:
    """Rotation angle of a rotation matrix, in degrees."""
    r = np.asarray(rotation, dtype=np.float64)
    cos = (np.trace(r) - 1.0) / 2.0
    return math.degrees(math.acos(min(1.0, max(-1.0, cos))))


@dataclass(frozen=True)
class Sim3Transform:
    """Similarity transform p -> scale * rotation @ p + translation.

    Attributes:
        scale: positive uniform scale factor.
        rotation: orthonormal 3x3 matrix with determinant +1.
        translation: 3-vector in target-frame units.
    """

    scale: float
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        s = float(self.scale)
        if not (s > 0.0) or not math.isfinite(s):
            raise ValueError(f"scale must be a positive finite number, got {s}")
        r = _check_rotation(self.rotation)
        r.setflags(write=False)
        t = np.ascontiguousarray(np.asarray(self.translation, dtype=np.float64)).reshape(3)
        t.setflags(write=False)
        object.__setattr__(self, "scale", s)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "Sim3Transform":
        return Sim3Transform(1.0, np.eye(3), np.zeros(3))

    @staticmethod
    def from_quaternion(scale, quaternion, translation) -> "Sim3Transform":
        """Construct from a (w, x, y, z) quaternion instead of a matrix."""
        return Sim3Transform(scale, quaternion_to_matrix(quaternion), translation)

    def apply(self, points) -> np.ndarray:
        """Map one 3-vector or an (n, 3) array through the transform."""
        p = np.asarray(points, dtype=np.float64)
        return self.scale * (p @ self.rotation.T) + self.translation

    def inverse(self) -> "Sim3Transform":
        inv_s = 1.0 / self.scale
        inv_r = self.rotation.T
        return Sim3Transform(inv_s, inv_r, -inv_s * (inv_r @ self.translation))

    def compose(self, other: "Sim3Transform") -> "Sim3Transform":
        """Transform equivalent to applying ``other`` first, then ``self``."""
        return Sim3Transform(
            self.scale * other.scale,
            self.rotation @ other.rotation,
            self.scale * (self.rotation @ other.translation) + self.translation,
        )


def compose_relative(t1: Sim3Transform, t2: Sim3Transform) -> Sim3Transform:
    """Relative transform mapping t1's source frame into t2's source frame.

    Given two transforms into a shared frame, returns inverse(t2) composed
    after t1, in the closed form s = s1/s2, R = R2^T R1,
    t = (1/s2) R2^T (t1 - t2).
    """
    scale = t1.scale / t2.scale
    rotation = t2.rotation.T @ t1.rotation
    translation = (t2.rotation.T @ (t1.translation - t2.translation)) / t2.scale
    return Sim3Transform(scale, rotation, translation)


def apply_transform(transform: Sim3Transform, cloud: PointCloud) -> PointCloud:
    """Map every point of ``cloud``; confidence, color and frames unchanged."""
    return cloud.with_points(transform.apply(cloud.points))


def umeyama(source, target, weights=None) -> Sim3Transform:
    """Closed-form similarity transform minimizing the weighted residual
    sum ||s*R*source_i + t - target_i||^2.

    Uses the SVD of the (weighted) cross-covariance; when the candidate
    rotation would be a reflection, the sign of the smallest singular
    direction is flipped so det(R) = +1.  The scale is the variance-ratio
    form trace(D*S) / var(source).

    Args:
        source: (n, 3) source points.
        target: (n, 3) paired target points.
        weights: optional (n,) non-negative weights with positive sum;
            defaults to uniform.

    Raises:
        DegenerateInput: fewer than 3 pairs, near-collinear source points
            (second singular value of the source scatter below 1e-12 of the
            first), or non-positive weight sum.
    """
    src = np.asarray(source, dtype=np.float64).reshape(-1, 3)
    tgt = np.asarray(target, dtype=np.float64).reshape(-1, 3)
    if src.shape != tgt.shape:
        raise ValueError(f"source and target shapes differ: {src.shape} vs {tgt.shape}")
    n = src.shape[0]
    if n < 3:
        raise DegenerateInput(f"need at least 3 correspondences, got {n}")

    if weights is None:
        w = np.full(n, 1.0 / n)
    else:
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        if w.shape[0] != n:
            raise ValueError("weights length must match the point count")
        if np.any(w < 0.0):
            raise ValueError("weights must be non-negative")
        total = float(w.sum())
        if total <= 0.0:
            raise DegenerateInput("weights sum to zero")
        w = w / total

    mu_src = w @ src
    mu_tgt = w @ tgt
    src_c = src - mu_src
    tgt_c = tgt - mu_tgt

    src_scatter = (src_c * w[:, None]).T @ src_c
    scatter_svals = np.linalg.svd(src_scatter, compute_uv=False)
    if scatter_svals[1] < 1e-12 * scatter_svals[0] or scatter_svals[0] == 0.0:
        raise DegenerateInput("source points are (near-)collinear; widen the correspondence set")

    cov = (tgt_c * w[:, None]).T @ src_c
    u, d, vt = np.linalg.svd(cov)
    sign = np.ones(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0.0:
        sign[2] = -1.0
    rotation = u @ np.diag(sign) @ vt

    var_src = float(np.sum(w * np.sum(src_c**2, axis=1)))
    scale = float(np.sum(d * sign)) / var_src
    translation = mu_tgt - scale * (rotation @ mu_src)
    return Sim3Transform(scale, rotation, translation)


@dataclass(frozen=True)
class SE3Pose:
    """Rigid camera extrinsics: x_camera = rotation @ x_world + translation.

    Attributes:
        rotation: orthonormal world-to-camera matrix, det +1.
        translation: 3-vector in scene units.
        frame_index: non-negative frame number the pose belongs to.
    """

    rotation: np.ndarray
    translation: np.ndarray
    frame_index: int = 0

    def __post_init__(self):
        r = _check_rotation(self.rotation)
        r.setflags(write=False)
        t = np.ascontiguousarray(np.asarray(self.translation, dtype=np.float64)).reshape(3)
        t.setflags(write=False)
        if self.frame_index < 0:
            raise ValueError("frame_index must be non-negative")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "frame_index", int(self.frame_index))

    @property
    def center(self) -> np.ndarray:
        """Camera center in the world frame: -R^T t."""
        return -(self.rotation.T @ self.translation)


@dataclass(frozen=True)
class CameraFrame:
    """One frame's calibrated depth prediction.

    Attributes:
        intrinsics: 3x3 upper-triangular pixel matrix with positive focals.
        pose: world-to-camera extrinsics.
        depth: (H, W) non-negative depths; 0 marks an invalid pixel.
        confidence: (H, W) per-pixel confidence in [0, 1].
    """

    intrinsics: np.ndarray
    pose: SE3Pose
    depth: np.ndarray
    confidence: np.ndarray

    def __post_init__(self):
        k = np.ascontiguousarray(np.asarray(self.intrinsics, dtype=np.float64))
        if k.shape != (3, 3):
            raise ValueError("intrinsics must be 3x3")
        if k[0, 0] <= 0.0 or k[1, 1] <= 0.0:
            raise ValueError("intrinsics must have positive focal entries")
        if np.any(k[np.tril_indices(3, -1)] != 0.0):
            raise ValueError("intrinsics must be upper-triangular")
        d = np.ascontiguousarray(np.asarray(self.depth, dtype=np.float64))
        c = np.ascontiguousarray(np.asarray(self.confidence, dtype=np.float64))
        if d.ndim != 2:
            raise ValueError("depth must be a 2D grid")
        if d.shape != c.shape:
            raise ValueError(f"depth {d.shape} and confidence {c.shape} dimensions differ")
        if d.size and d.min() < 0.0:
            raise ValueError("depths must be non-negative")
        if c.size and (c.min() < 0.0 or c.max() > 1.0):
            raise ValueError("confidence values must lie in [0, 1]")
        for name, arr in (("intrinsics", k), ("depth", d), ("confidence", c)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def backproject(frame: CameraFrame) -> PointCloud:
    """Lift every valid-depth pixel of ``frame`` into 3D.

    Pixel (u, v) with depth D > 0 maps to R^-1 (D * K^-1 * [u, v, 1] - t);
    pixels with zero depth are skipped.  Points are emitted in row-major
    pixel order with the pixel's confidence and source frame attached.

    Raises:
        EmptyFrame: if no pixel has positive depth.
    """
    valid = frame.depth > 0.0
    if not valid.any():
        raise EmptyFrame(f"frame {frame.pose.frame_index} has no valid depth")
    vs, us = np.nonzero(valid)
    pix = np.stack([us.astype(np.float64), vs.astype(np.float64), np.ones(us.shape[0])])
    rays = np.linalg.inv(frame.intrinsics) @ pix
    cam = rays * frame.depth[valid]
    pts = frame.pose.rotation.T @ (cam - frame.pose.translation[:, None])
    frames = np.full(us.shape[0], frame.pose.frame_index, dtype=np.int64)
    return PointCloud(pts.T, frame.confidence[valid], source_frame=frames)
