"""Shape evaluation metrics: IoU, Chamfer distance over farthest-point
sampled surface clouds, F-score, and the two hierarchy metrics HMD
(Chamfer between generations from general vs. detailed captions) and HD
(mean hyperbolic distance-to-origin of the three denoiser feature levels).
"""

from __future__ import annotations

import numpy as np

from .errors import ContractViolationError
from .shape_codec import TsdfGrid

DEFAULT_FPS_POINTS = 512


def iou(a: TsdfGrid, b: TsdfGrid) -> float:
    """Occupancy IoU in percent; two empty grids count as 100."""
    if a.resolution != b.resolution:
        raise ContractViolationError("IoU requires equal resolutions")
    occ_a, occ_b = a.occupancy(), b.occupancy()
    union = np.logical_or(occ_a, occ_b).sum()
    if union == 0:
        return 100.0
    return 100.0 * np.logical_and(occ_a, occ_b).sum() / union


def surface_points(grid: TsdfGrid) -> np.ndarray:
    """Centers of occupied voxels with at least one unoccupied 6-neighbor.

    Out-of-bounds neighbors count as unoccupied, so shapes touching the
    grid edge still expose a surface there.
    """
    occ = grid.occupancy()
    padded = np.pad(occ, 1, constant_values=False)
    exposed = np.zeros_like(occ)
    for axis in range(3):
        for shift in (-1, 1):
            neighbor = np.roll(padded, shift, axis=axis)[1:-1, 1:-1, 1:-1]
            exposed |= occ & ~neighbor
    coords = np.argwhere(exposed).astype(np.float64) + 0.5
    return coords


def fps(points: np.ndarray, n: int) -> np.ndarray:
    """Greedy farthest-point subsample, seeded at index 0 for determinism."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 3:
        raise ContractViolationError("point set must be N x 3")
    if n > len(points) or n < 1:
        raise ContractViolationError(f"cannot sample {n} of {len(points)} points")
    chosen = np.empty(n, dtype=np.int64)
    chosen[0] = 0
    dist = np.sum((points - points[0]) ** 2, axis=1)
    for i in range(1, n):
        idx = int(np.argmax(dist))
        chosen[i] = idx
        dist = np.minimum(dist, np.sum((points - points[idx]) ** 2, axis=1))
    return points[chosen]


def chamfer(a: np.ndarray, b: np.ndarray) -> float:
    """Sum of the two directed mean-squared nearest-neighbor terms."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if len(a) == 0 or len(b) == 0:
        raise ContractViolationError("chamfer distance of an empty point set")
    d2 = (
        np.sum(a**2, axis=1)[:, None]
        - 2 * a @ b.T
        + np.sum(b**2, axis=1)[None, :]
    )
    d2 = np.maximum(d2, 0.0)
    return float(d2.min(axis=1).mean() + d2.min(axis=0).mean())


def fscore(a: np.ndarray, b: np.ndarray, threshold: float | None = None) -> float:
    """F-score in percent; default threshold is 1% of b's bbox diagonal.

    `a` is the generated cloud, `b` the ground truth.
    """
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if len(a) == 0 or len(b) == 0:
        raise ContractViolationError("f-score of an empty point set")
    if threshold is None:
        diag = np.linalg.norm(b.max(axis=0) - b.min(axis=0))
        threshold = 0.01 * diag
    if threshold <= 0:
        raise ContractViolationError("threshold must be positive")
    d2 = (
        np.sum(a**2, axis=1)[:, None]
        - 2 * a @ b.T
        + np.sum(b**2, axis=1)[None, :]
    )
    d2 = np.maximum(d2, 0.0)
    precision = float((np.sqrt(d2.min(axis=1)) <= threshold).mean())
    recall = float((np.sqrt(d2.min(axis=0)) <= threshold).mean())
    if precision + recall == 0:
        return 0.0
    return 200.0 * precision * recall / (precision + recall)


def shape_cloud(grid: TsdfGrid, n_points: int = DEFAULT_FPS_POINTS) -> np.ndarray:
    """Surface cloud of a grid, FPS-subsampled to at most n_points."""
    pts = surface_points(grid)
    if len(pts) == 0:
        # empty shape: a single sentinel at the grid center keeps the
        # metrics finite on untrained models
        r = grid.resolution
        return np.array([[r / 2.0, r / 2.0, r / 2.0]])
    return fps(pts, min(n_points, len(pts)))


def hmd(
    general: list[TsdfGrid],
    detailed: list[TsdfGrid],
    n_points: int = DEFAULT_FPS_POINTS,
) -> float:
    """Mean Chamfer distance over seed-matched (general, detailed) pairs."""
    if len(general) != len(detailed):
        raise ContractViolationError("HMD lists must be seed-matched, equal length")
    if not general:
        raise ContractViolationError("HMD of empty lists")
    values = [
        chamfer(shape_cloud(g, n_points), shape_cloud(d, n_points))
        for g, d in zip(general, detailed)
    ]
    return float(np.mean(values))


def hd(level_dists: np.ndarray) -> tuple[float, float, float]:
    """Mean hyperbolic distance-to-origin per feature level.

    `level_dists` is (n_generations, 3): per generation, dist0 of the deep,
    middle, and shallow lifted features (computed with the same heads and
    ball lift used in training).
    """
    arr = np.asarray(level_dists, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3 or arr.shape[0] == 0:
        raise ContractViolationError("HD input must be nonempty (n, 3)")
    d1, d2, d3 = arr.mean(axis=0)
    return float(d1), float(d2), float(d3)
