"""Coarse registration: per-epoch similarity fits against a joint reconstruction.

Each epoch's keyframe cloud exists in two forms: the epoch's own frame and a
joint reconstruction that places the keyframes of both epochs in one shared
metric frame.  Because the two forms are pixel-aligned, they provide dense
correspondences for a closed-form similarity fit per epoch; composing the two
per-epoch fits yields the relative transform that carries epoch 1 directly
into epoch 2's frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cloud import PointCloud, median_confidence_mask
from .errors import MisalignedInputs, TooFewCorrespondences
from .geometry import Sim3Transform, compose_relative, umeyama
from .keyframes import KeyframeSet


@dataclass(frozen=True)
class JointReconstruction:
    """Keyframe clouds expressed in one shared frame.

    Attributes:
        clouds: mapping (epoch_id, frame_index) -> PointCloud in the shared
            frame, pixel-aligned with the per-epoch cloud of that keyframe.
        provenance: "ingested_file" or "synthetic_oracle".
    """

    clouds: dict
    provenance: str = "ingested_file"

    def __post_init__(self):
        if self.provenance not in ("ingested_file", "synthetic_oracle"):
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def keyframe_cloud(self, keyframes: KeyframeSet) -> PointCloud:
        """Concatenated shared-frame cloud for one epoch's keyframes."""
        missing = [i for i in keyframes.indices if (keyframes.epoch_id, i) not in self.clouds]
        if missing:
            raise MisalignedInputs(
                f"joint reconstruction lacks epoch {keyframes.epoch_id} frames {missing}"
            )
        return PointCloud.concatenate(
            [self.clouds[(keyframes.epoch_id, i)] for i in keyframes.indices]
        )


@dataclass(frozen=True)
class EpochAlignment:
    """Similarity transform from one epoch's frame into the joint frame."""

    epoch_id: int
    transform: Sim3Transform
    n_correspondences: int
    residual_rms: float

    def __post_init__(self):
        if self.n_correspondences < 3:
            raise ValueError("an alignment needs at least 3 correspondences")


def build_keyframe_correspondences(
    per_epoch_kf_cloud: PointCloud,
    joint_kf_cloud: PointCloud,
    cap: int = 5000,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Paired (source, target) points for the per-epoch similarity fit.

    The clouds must be pixel-aligned (same keyframes, same pixel order).
    Pairs whose per-epoch depth confidence does not exceed the median are
    dropped; if more than ``cap`` pairs remain they are uniformly subsampled
    to exactly ``cap`` with the given seed, preserving the pairing.

    Raises:
        MisalignedInputs: if the clouds have different lengths.
        TooFewCorrespondences: if fewer than 3 pairs survive.
    """
    if len(per_epoch_kf_cloud) != len(joint_kf_cloud):
        raise MisalignedInputs(
            f"per-epoch cloud has {len(per_epoch_kf_cloud)} points but joint cloud "
            f"has {len(joint_kf_cloud)}; inputs must be pixel-aligned"
        )
    mask = median_confidence_mask(per_epoch_kf_cloud.confidence)
    kept = np.nonzero(mask)[0]
    if kept.size > cap:
        rng = np.random.default_rng(seed)
        kept = np.sort(rng.choice(kept, size=cap, replace=False))
    if kept.size < 3:
        raise TooFewCorrespondences(f"only {kept.size} correspondences survived filtering")
    return per_epoch_kf_cloud.points[kept], joint_kf_cloud.points[kept]


def estimate_epoch_alignment(
    source: np.ndarray, target: np.ndarray, epoch_id: int = 1
) -> EpochAlignment:
    """Closed-form similarity fit for one epoch's correspondences."""
    transform = umeyama(source, target)
    residual = transform.apply(source) - np.asarray(target, dtype=np.float64)
    rms = float(np.sqrt(np.mean(np.sum(residual**2, axis=1))))
    return EpochAlignment(
        epoch_id=epoch_id,
        transform=transform,
        n_correspondences=len(source),
        residual_rms=rms,
    )


def coarse_relative_transform(a1: EpochAlignment, a2: EpochAlignment) -> Sim3Transform:
    """Relative transform mapping epoch 1's frame into epoch 2's frame."""
    if (a1.epoch_id, a2.epoch_id) != (1, 2):
        raise ValueError("expected alignments for epochs 1 and 2, in that order")
    return compose_relative(a1.transform, a2.transform)
