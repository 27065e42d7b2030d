"""Poincare-ball (gyrovector) operations.

All operations act row-wise on batches of points. A point x lies on the
ball of curvature c > 0 when sqrt(c) * ||x|| < 1; every ball-valued result
is re-projected to keep a safety margin EPS_BALL away from the boundary,
where artanh/arcosh blow up.

Convention: the geodesic distance is d(x, y) = (2/sqrt(c)) * artanh(
sqrt(c) * ||(-x) (+) y||), which reduces to the familiar arcosh form at
c = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError

# Margin kept between any ball point and the boundary.
EPS_BALL = 1e-5
# Floor for norms appearing in denominators.
MIN_NORM = 1e-15


def artanh(x: np.ndarray) -> np.ndarray:
    """Inverse hyperbolic tangent, clamped away from +-1."""
    x = np.clip(x, -1.0 + MIN_NORM, 1.0 - MIN_NORM)
    return np.arctanh(x)


@dataclass(frozen=True)
class BallTensor:
    """A batch of points on the Poincare ball of curvature c."""

    values: np.ndarray
    curvature: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        if self.curvature <= 0:
            raise ContractViolationError(f"curvature must be > 0, got {self.curvature}")
        if not np.all(np.isfinite(v)):
            raise ContractViolationError("ball points must be finite")
        norms = np.sqrt(self.curvature) * np.linalg.norm(v, axis=-1)
        if np.any(norms > 1.0 - EPS_BALL + 1e-12):
            raise ContractViolationError(
                "point outside the ball margin; use project() first"
            )

    @property
    def dim(self) -> int:
        return self.values.shape[-1]


@dataclass(frozen=True)
class TangentTensor:
    """A batch of tangent vectors at the origin."""

    values: np.ndarray
    curvature: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        if self.curvature <= 0:
            raise ContractViolationError(f"curvature must be > 0, got {self.curvature}")
        if not np.all(np.isfinite(v)):
            raise ContractViolationError("tangent vectors must be finite")

    @property
    def dim(self) -> int:
        return self.values.shape[-1]


def _check_pair(x: BallTensor, y: BallTensor) -> None:
    if x.dim != y.dim:
        raise ContractViolationError(f"dimension mismatch: {x.dim} vs {y.dim}")
    if x.curvature != y.curvature:
        raise ContractViolationError(
            f"curvature mismatch: {x.curvature} vs {y.curvature}"
        )


def project(x: np.ndarray, c: float = 1.0) -> BallTensor:
    """Rescale rows with sqrt(c)*||x|| > 1 - EPS_BALL onto that radius.

    Rows already inside the margin are returned unchanged.
    """
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ContractViolationError("project() requires finite input")
    max_norm = (1.0 - EPS_BALL) / np.sqrt(c)
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    scale = np.where(norms > max_norm, max_norm / np.maximum(norms, MIN_NORM), 1.0)
    return BallTensor(x * scale, c)


def mobius_add(x: BallTensor, y: BallTensor) -> BallTensor:
    """Mobius addition x (+)_c y."""
    _check_pair(x, y)
    c = x.curvature
    xv, yv = x.values, y.values
    x2 = np.sum(xv * xv, axis=-1, keepdims=True)
    y2 = np.sum(yv * yv, axis=-1, keepdims=True)
    xy = np.sum(xv * yv, axis=-1, keepdims=True)
    num = (1 + 2 * c * xy + c * y2) * xv + (1 - c * x2) * yv
    denom = 1 + 2 * c * xy + c * c * x2 * y2
    return project(num / np.maximum(denom, MIN_NORM), c)


def exp0(v: TangentTensor) -> BallTensor:
    """Exponential map at the origin; the zero vector maps to zero."""
    c = v.curvature
    sqrt_c = np.sqrt(c)
    norms = np.linalg.norm(v.values, axis=-1, keepdims=True)
    safe = np.maximum(norms, MIN_NORM)
    out = np.tanh(sqrt_c * norms) * v.values / (sqrt_c * safe)
    return project(out, c)


def log0(y: BallTensor) -> TangentTensor:
    """Logarithmic map at the origin; inverse of exp0."""
    c = y.curvature
    sqrt_c = np.sqrt(c)
    norms = np.linalg.norm(y.values, axis=-1, keepdims=True)
    safe = np.maximum(norms, MIN_NORM)
    out = artanh(sqrt_c * norms) * y.values / (sqrt_c * safe)
    return TangentTensor(out, c)


def dist(x: BallTensor, y: BallTensor) -> np.ndarray:
    """Geodesic distance per row."""
    _check_pair(x, y)
    c = x.curvature
    neg_x = BallTensor(-x.values, c)
    diff = mobius_add(neg_x, y)
    norms = np.linalg.norm(diff.values, axis=-1)
    return (2.0 / np.sqrt(c)) * artanh(np.sqrt(c) * norms)


def dist0(x: BallTensor) -> np.ndarray:
    """Geodesic distance from each row to the origin."""
    c = x.curvature
    norms = np.linalg.norm(x.values, axis=-1)
    return (2.0 / np.sqrt(c)) * artanh(np.sqrt(c) * norms)


def mobius_matvec(M: np.ndarray, x: BallTensor) -> BallTensor:
    """Mobius matrix-vector action, the hyperbolic linear layer.

    Rows with x = 0 or Mx = 0 map to zero (the analytic limit).
    """
    M = np.asarray(M, dtype=np.float64)
    if M.shape[1] != x.dim:
        raise ContractViolationError(
            f"matrix has {M.shape[1]} columns but points have dim {x.dim}"
        )
    c = x.curvature
    sqrt_c = np.sqrt(c)
    xv = x.values
    mx = xv @ M.T
    x_norm = np.linalg.norm(xv, axis=-1, keepdims=True)
    mx_norm = np.linalg.norm(mx, axis=-1, keepdims=True)
    ratio = mx_norm / np.maximum(x_norm, MIN_NORM)
    scaled = np.tanh(ratio * artanh(sqrt_c * x_norm)) / sqrt_c
    out = scaled * mx / np.maximum(mx_norm, MIN_NORM)
    # zero rows (either x = 0 or Mx = 0) stay exactly zero
    zero = (x_norm < MIN_NORM) | (mx_norm < MIN_NORM)
    out = np.where(zero, 0.0, out)
    return project(out, c)
