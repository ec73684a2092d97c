"""Shared geometric primitives: image points, correspondences, intrinsics, poses.

Conventions:
- Image points are pixel coordinates. Normalized points are 3-vectors on the
  z=1 plane obtained through the inverse calibration matrix.
- A pose maps camera-1 coordinates into camera-2 coordinates: Y = R @ X + t.
- Translations carry absolute scale (3 degrees of freedom). They are NOT
  normalized to unit length: the depth priors fix the scene scale up to the
  first image's depth-scale factor.
- Per-image depth priors relate to true depth through depth_true = scale *
  (measured + shift), with an independent shift per image and a single scale
  ratio once the first image's scale is absorbed into the translation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "ImagePoint",
    "Correspondence",
    "CameraIntrinsics",
    "Rotation",
    "Pose",
    "DepthAffineParams",
    "PoseCandidate",
    "EliminationSystem",
    "normalize_point",
    "lift_point",
    "rotation_angle_deg",
    "random_rotation",
]

_ROT_TOL = 1e-9


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ImagePoint:
    """A pixel location in one image."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"image point must be finite, got ({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=np.float64)


@dataclass(frozen=True)
class Correspondence:
    """A 2D-2D match with optional per-image depth priors.

    depth1/depth2 are the raw monocular depth values at the matched pixels in
    image 1 and image 2. They may be missing (None); a shift applied later can
    make depth + shift temporarily non-positive, so no positivity is enforced
    at ingest.
    """

    p: ImagePoint
    q: ImagePoint
    depth1: Optional[float] = None
    depth2: Optional[float] = None

    def __post_init__(self):
        for name, d in (("depth1", self.depth1), ("depth2", self.depth2)):
            if d is not None and not math.isfinite(d):
                raise ValueError(f"{name} must be finite, got {d}")


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics with a single focal length and a principal point."""

    f: float
    cx: float = 0.0
    cy: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.f) and self.f > 0):
            raise ValueError(f"focal length must be positive, got {self.f}")
        if not (math.isfinite(self.cx) and math.isfinite(self.cy)):
            raise ValueError("principal point must be finite")

    @property
    def K(self) -> np.ndarray:
        return np.array(
            [[self.f, 0.0, self.cx], [0.0, self.f, self.cy], [0.0, 0.0, 1.0]]
        )

    @property
    def K_inv(self) -> np.ndarray:
        return np.array(
            [
                [1.0 / self.f, 0.0, -self.cx / self.f],
                [0.0, 1.0 / self.f, -self.cy / self.f],
                [0.0, 0.0, 1.0],
            ]
        )


@dataclass(frozen=True)
class Rotation:
    """A proper rotation, stored as a 3x3 orthonormal matrix with det +1."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _readonly(np.asarray(self.matrix, dtype=np.float64))
        if m.shape != (3, 3):
            raise ValueError(f"rotation matrix must be 3x3, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("rotation matrix must be finite")
        err = np.max(np.abs(m.T @ m - np.eye(3)))
        if err > _ROT_TOL:
            raise ValueError(f"matrix is not orthonormal (|R^T R - I| = {err:.2e})")
        det = np.linalg.det(m)
        if abs(det - 1.0) > _ROT_TOL:
            raise ValueError(f"matrix must have determinant +1, got {det}")
        object.__setattr__(self, "matrix", m)

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(v, dtype=np.float64)

    @staticmethod
    def identity() -> "Rotation":
        return Rotation(np.eye(3))


@dataclass(frozen=True)
class Pose:
    """Rigid motion from camera-1 into camera-2 coordinates, Y = R X + t.

    The translation is a full 3-DOF vector in units of camera-1 depth divided
    by the first image's depth scale; it is not normalized to unit length.
    """

    rotation: Rotation
    translation: np.ndarray

    def __post_init__(self):
        t = _readonly(np.asarray(self.translation, dtype=np.float64).reshape(3))
        if not np.all(np.isfinite(t)):
            raise ValueError("translation must be finite")
        object.__setattr__(self, "translation", t)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return X @ self.rotation.matrix.T + self.translation

    @staticmethod
    def identity() -> "Pose":
        return Pose(Rotation.identity(), np.zeros(3))


@dataclass(frozen=True)
class DepthAffineParams:
    """Depth-prior correction recovered jointly with the pose.

    scale is the ratio of the second image's depth scale to the first's and
    must be positive; shift1/shift2 are the per-image additive corrections in
    raw depth units.
    """

    scale: float
    shift1: float = 0.0
    shift2: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"depth scale ratio must be positive, got {self.scale}")
        if not (math.isfinite(self.shift1) and math.isfinite(self.shift2)):
            raise ValueError("depth shifts must be finite")


@dataclass(frozen=True)
class PoseCandidate:
    """One solution of a minimal solve.

    depth_params is None for solvers that do not observe enough depth to
    recover the scale/shift parameters (e.g. single-sided depth). f1/f2 are
    the recovered focal lengths in pixels when the solver estimates them.
    residual is the worst per-point algebraic residual of the defining
    equations, in normalized-scene units.
    """

    pose: Pose
    depth_params: Optional[DepthAffineParams] = None
    f1: Optional[float] = None
    f2: Optional[float] = None
    residual: float = 0.0

    def __post_init__(self):
        for name, f in (("f1", self.f1), ("f2", self.f2)):
            if f is not None and not (math.isfinite(f) and f > 0):
                raise ValueError(f"{name} must be positive, got {f}")
        if not (math.isfinite(self.residual) and self.residual >= 0):
            raise ValueError(f"residual must be >= 0, got {self.residual}")


@dataclass(frozen=True)
class EliminationSystem:
    """A dense coefficient matrix over an ordered monomial basis.

    Each row is one constraint equation; coeffs has exactly one column per
    monomial tag.
    """

    coeffs: np.ndarray
    monomials: tuple[str, ...]

    def __post_init__(self):
        c = _readonly(np.asarray(self.coeffs, dtype=np.float64))
        if c.ndim != 2 or c.shape[1] != len(self.monomials):
            raise ValueError(
                f"coefficient matrix {c.shape} does not match "
                f"{len(self.monomials)} monomials"
            )
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "monomials", tuple(self.monomials))


def normalize_point(K: CameraIntrinsics, pt: ImagePoint) -> np.ndarray:
    """Back-project a pixel onto the z=1 plane: ((x-cx)/f, (y-cy)/f, 1)."""
    return np.array([(pt.x - K.cx) / K.f, (pt.y - K.cy) / K.f, 1.0])


def lift_point(
    direction: np.ndarray, depth_est: float, shift: float, scale: float
) -> np.ndarray:
    """Lift a viewing direction to 3D: scale * (depth_est + shift) * direction.

    Positivity of the corrected depth is a downstream (cheirality) check, not
    enforced here.
    """
    return scale * (depth_est + shift) * np.asarray(direction, dtype=np.float64)


def rotation_angle_deg(R: np.ndarray) -> float:
    """Rotation angle of a 3x3 rotation matrix in degrees, in [0, 180].

    Uses atan2 of the skew-symmetric part against (trace-1)/2, which is exact
    near 0 and 180 degrees where the pure arccos form loses half its digits.
    """
    R = np.asarray(R, dtype=np.float64)
    c = (np.trace(R) - 1.0) / 2.0
    s = 0.5 * math.sqrt(
        (R[2, 1] - R[1, 2]) ** 2 + (R[0, 2] - R[2, 0]) ** 2 + (R[1, 0] - R[0, 1]) ** 2
    )
    return math.degrees(math.atan2(s, min(max(c, -1.0), 1.0)))


def random_rotation(rng: np.random.Generator, angle_deg: float) -> np.ndarray:
    """Rotation by a fixed angle about a uniformly random axis."""
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    a = math.radians(angle_deg)
    K = np.array(
        [[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]]
    )
    return np.eye(3) + math.sin(a) * K + (1.0 - math.cos(a)) * (K @ K)
