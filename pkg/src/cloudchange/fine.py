"""Fine registration: purified, translation-only refinement with a self-check.

Under the coarse transform, nearest-neighbor distances into the target cloud
separate static background (small distances) from genuine scene changes and
residual noise (large distances).  The static subset is extracted with an
adaptive threshold of alpha times the median distance, and only the
translation is re-estimated from it: a rotation or scale update could convert
small angular errors into large displacements far from the centroid, so both
stay locked at their coarse values.  A final residual self-check accepts the
refined translation only if it strictly lowers the median nearest-neighbor
distance over all points, which makes the stage a no-op in the worst case
rather than a regression.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud, SpatialIndex, build_index, lower_median, nn_distances
from .errors import EmptyCloud, EmptyStaticSet
from .geometry import Sim3Transform

MIN_STATIC_POINTS = 100


@dataclass(frozen=True)
class PurificationResult:
    """Static-background extraction under the coarse alignment.

    Attributes:
        distances: (n,) nearest-neighbor distance of each aligned source
            point into the target cloud, in target-frame units.
        nn_indices: (n,) index of each point's nearest target point, frozen
            here so the translation refinement reuses the same assignments.
        static_mask: (n,) True where distance < threshold.
        median_distance: lower-midpoint median of the distances.
        threshold: alpha * median_distance.
        alpha: the threshold multiplier used.
    """

    distances: np.ndarray
    nn_indices: np.ndarray
    static_mask: np.ndarray
    median_distance: float
    threshold: float
    alpha: float

    @property
    def n_static(self) -> int:
        return int(self.static_mask.sum())


@dataclass(frozen=True)
class FineResult:
    """Outcome of the translation refinement.

    ``refined_median_residual`` is the median residual of the translation
    actually returned when the refinement was rejected, so it equals
    ``coarse_median_residual`` unless the refinement was accepted.
    """

    translation: np.ndarray
    accepted_refinement: bool
    coarse_median_residual: float
    refined_median_residual: float
    n_static: int

    def __post_init__(self):
        t = np.ascontiguousarray(np.asarray(self.translation, dtype=np.float64)).reshape(3)
        t.setflags(write=False)
        object.__setattr__(self, "translation", t)
        if self.accepted_refinement and not (
            self.refined_median_residual < self.coarse_median_residual
        ):
            raise ValueError("an accepted refinement must strictly lower the median residual")


def purify(
    aligned_source: PointCloud, target_index: SpatialIndex, alpha: float = 3.0
) -> PurificationResult:
    """Split an aligned cloud into static background and likely changes.

    A point is static when its nearest-neighbor distance into the target is
    strictly below alpha times the median distance; the median adapts the
    threshold to the scene's own residual level.

    Raises:
        EmptyCloud: on an empty source cloud.
    """
    if alpha < 0.0:
        raise ValueError("alpha must be non-negative")
    if len(aligned_source) == 0:
        raise EmptyCloud("cannot purify an empty cloud")
    distances, nn_idx = nn_distances(aligned_source, target_index)
    median = lower_median(distances)
    threshold = alpha * median
    return PurificationResult(
        distances=distances,
        nn_indices=nn_idx,
        static_mask=distances < threshold,
        median_distance=median,
        threshold=threshold,
        alpha=alpha,
    )


def refine_translation(
    source: PointCloud,
    target_index: SpatialIndex,
    coarse: Sim3Transform,
    purification: PurificationResult,
) -> np.ndarray:
    """Replacement translation from the purified static correspondences.

    Averages target_nn - s*R*p over the static set, reusing the nearest
    neighbors frozen in ``purification`` (single-shot, not iterative).

    Raises:
        EmptyStaticSet: if the static mask selects nothing.
    """
    mask = purification.static_mask
    if not mask.any():
        raise EmptyStaticSet("no static correspondences to refine from")
    rotated = coarse.scale * (source.points[mask] @ coarse.rotation.T)
    matched = target_index.points[purification.nn_indices[mask]]
    return np.mean(matched - rotated, axis=0)


def fine_stage(
    source: PointCloud,
    target: PointCloud,
    coarse: Sim3Transform,
    alpha: float = 3.0,
    min_static: int = MIN_STATIC_POINTS,
) -> FineResult:
    """Run the full translation refinement on downsampled epoch clouds.

    Aligns ``source`` with the coarse transform, purifies the static set,
    and computes the candidate translation.  The coarse translation is kept
    unchanged when fewer than ``min_static`` static points survive, or when
    the candidate fails the self-check (its median nearest-neighbor residual
    over all points is not strictly below the coarse one).  Scale and
    rotation are never modified.

    Raises:
        EmptyCloud: on empty inputs.
    """
    if len(source) == 0 or len(target) == 0:
        raise EmptyCloud("fine stage requires non-empty clouds")
    index = build_index(target)
    # Both alignments go through Sim3Transform.apply so the medians compared
    # here reproduce bit for bit when recomputed from the returned transform.
    aligned = coarse.apply(source.points)
    purification = purify(source.with_points(aligned), index, alpha)
    n_static = purification.n_static
    coarse_median = purification.median_distance

    if n_static < min_static:
        return FineResult(
            translation=coarse.translation,
            accepted_refinement=False,
            coarse_median_residual=coarse_median,
            refined_median_residual=coarse_median,
            n_static=n_static,
        )

    candidate = refine_translation(source, index, coarse, purification)
    shifted = Sim3Transform(coarse.scale, coarse.rotation, candidate).apply(source.points)
    refined_distances, _ = index.query(shifted)
    refined_median = lower_median(refined_distances)

    if refined_median < coarse_median:
        return FineResult(
            translation=candidate,
            accepted_refinement=True,
            coarse_median_residual=coarse_median,
            refined_median_residual=refined_median,
            n_static=n_static,
        )
    return FineResult(
        translation=coarse.translation,
        accepted_refinement=False,
        coarse_median_residual=coarse_median,
        refined_median_residual=refined_median,
        n_static=n_static,
    )
