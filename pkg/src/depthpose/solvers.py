"""Minimal solvers for two-view pose with monocular depth priors.

Seven solvers, grouped by calibration knowledge:

- calibrated: solve_3pt_suv (joint scale + two shifts), solve_p3p (single-side
  depth, shift-free);
- shared unknown focal: solve_3pt_s00_f (scale-only), solve_4pt_suv_f (scale +
  shifts, hidden-variable eigen form);
- two unknown focals: solve_3pt_s00_f12 (scale-only, linear),
  solve_4pt_suv_f12 (scale + shifts, hidden-variable eigen form);
- depth-free baseline: solve_7pt (fundamental matrix).

Each solver returns every geometrically feasible candidate (cheirality
filtered, ordered by ascending algebraic residual). A structurally degenerate
sample raises DegenerateSampleError so robust estimators can tell a bad
sample from a sample with no real solution.

Focal-length solvers expect pixel coordinates centered on the principal
point; pass center1/center2 to have the subtraction applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .geometry import (
    CameraIntrinsics,
    Correspondence,
    DepthAffineParams,
    EliminationSystem,
    Pose,
    PoseCandidate,
    Rotation,
)
from .smallmath import QuadraticPoly

__all__ = [
    "DegenerateSampleError",
    "MinimalSample",
    "SolverSpec",
    "SOLVERS",
    "solve_3pt_suv",
    "solve_p3p",
    "solve_3pt_s00_f",
    "solve_3pt_s00_f12",
    "solve_4pt_suv_f",
    "solve_4pt_suv_f12",
    "solve_7pt",
    "build_length_system",
    "reduce_length_system",
    "solve_minimal",
]


class DegenerateSampleError(ValueError):
    """The minimal sample cannot determine the model (rank loss, collinearity)."""


@dataclass(frozen=True)
class SolverSpec:
    """Static metadata of one minimal solver."""

    name: str
    sample_size: int
    needs_depth1: bool
    needs_depth2: bool
    needs_intrinsics: bool
    estimates_focal: int          # 0, 1 (shared) or 2
    max_solutions: int


SOLVERS: dict[str, SolverSpec] = {
    "3pt_suv": SolverSpec("3pt_suv", 3, True, True, True, 0, 4),
    "p3p": SolverSpec("p3p", 3, True, False, True, 0, 4),
    "3pt_s00_f": SolverSpec("3pt_s00_f", 3, True, True, False, 1, 4),
    "3pt_s00_f12": SolverSpec("3pt_s00_f12", 3, True, True, False, 2, 1),
    "4pt_suv_f": SolverSpec("4pt_suv_f", 4, True, True, False, 1, 2),
    "4pt_suv_f12": SolverSpec("4pt_suv_f12", 4, True, True, False, 2, 2),
    "7pt": SolverSpec("7pt", 7, False, False, False, 0, 3),
}


@dataclass(frozen=True)
class MinimalSample:
    """A solver-sized set of correspondences plus optional intrinsics."""

    correspondences: tuple[Correspondence, ...]
    intrinsics1: Optional[CameraIntrinsics] = None
    intrinsics2: Optional[CameraIntrinsics] = None

    def __post_init__(self):
        object.__setattr__(self, "correspondences", tuple(self.correspondences))

    def validate_for(self, solver: str) -> None:
        spec = SOLVERS[solver]
        n = len(self.correspondences)
        if n != spec.sample_size:
            raise ValueError(f"{solver} needs {spec.sample_size} correspondences, got {n}")
        for idx, c in enumerate(self.correspondences):
            if spec.needs_depth1 and c.depth1 is None:
                raise ValueError(f"{solver}: correspondence {idx} is missing depth1")
            # the scale-only shared-focal solver uses image-2 depth on the
            # first two correspondences only
            needs_d2 = spec.needs_depth2 and not (solver == "3pt_s00_f" and idx == 2)
            if needs_d2 and c.depth2 is None:
                raise ValueError(f"{solver}: correspondence {idx} is missing depth2")
        if spec.needs_intrinsics and (self.intrinsics1 is None or self.intrinsics2 is None):
            raise ValueError(f"{solver} requires both camera intrinsics")


# ---------------------------------------------------------------------------
# array marshalling
# ---------------------------------------------------------------------------

def _pixels(corrs: Sequence[Correspondence]):
    n = len(corrs)
    p = np.empty((n, 2))
    q = np.empty((n, 2))
    for i, c in enumerate(corrs):
        p[i, 0] = c.p.x
        p[i, 1] = c.p.y
        q[i, 0] = c.q.x
        q[i, 1] = c.q.y
    return p, q


def _depths(corrs: Sequence[Correspondence], which: int, count: Optional[int] = None):
    count = len(corrs) if count is None else count
    d = np.empty(count)
    for i in range(count):
        v = corrs[i].depth1 if which == 1 else corrs[i].depth2
        if v is None:
            raise ValueError(f"correspondence {i} is missing depth{which}")
        d[i] = v
    return d


def _normalized(corrs: Sequence[Correspondence], K1: CameraIntrinsics, K2: CameraIntrinsics):
    n = len(corrs)
    pn = np.empty((n, 3))
    qn = np.empty((n, 3))
    for i, c in enumerate(corrs):
        pn[i, 0] = (c.p.x - K1.cx) / K1.f
        pn[i, 1] = (c.p.y - K1.cy) / K1.f
        pn[i, 2] = 1.0
        qn[i, 0] = (c.q.x - K2.cx) / K2.f
        qn[i, 1] = (c.q.y - K2.cy) / K2.f
        qn[i, 2] = 1.0
    return pn, qn


def _centered(corrs: Sequence[Correspondence], center1, center2):
    p, q = _pixels(corrs)
    if center1 is not None:
        p[:, 0] -= center1[0]
        p[:, 1] -= center1[1]
    if center2 is not None:
        q[:, 0] -= center2[0]
        q[:, 1] -= center2[1]
    return p, q


def _unpack(out: np.ndarray, count: int, has_depth_params: bool, n_focal: int):
    """Packed kernel rows -> PoseCandidate list, ascending residual."""
    cands = []
    for k in range(count):
        row = out[k]
        R = Rotation(row[_kernels.C_R:_kernels.C_R + 9].reshape(3, 3))
        pose = Pose(R, row[_kernels.C_T:_kernels.C_T + 3])
        params = None
        if has_depth_params:
            params = DepthAffineParams(
                scale=float(row[_kernels.C_S]),
                shift1=float(row[_kernels.C_U]),
                shift2=float(row[_kernels.C_V]),
            )
        f1 = float(row[_kernels.C_F1]) if n_focal >= 1 else None
        f2 = float(row[_kernels.C_F2]) if n_focal >= 1 else None
        cands.append(
            PoseCandidate(pose=pose, depth_params=params, f1=f1, f2=f2,
                          residual=float(row[_kernels.C_RES]))
        )
    cands.sort(key=lambda c: c.residual)
    return cands


# ---------------------------------------------------------------------------
# array-level entry points (used per RANSAC iteration; no object marshalling)
# ---------------------------------------------------------------------------

def solve_3pt_suv_arrays(pn, qn, d1, d2, out=None):
    """pn, qn: (3, 3) normalized homogeneous points; d1, d2: (3,) depths.

    Returns packed candidate rows (k, 18); raises DegenerateSampleError.
    """
    if out is None:
        out = np.empty((4, _kernels.C_LEN))
    n = _kernels.solve_3pt_suv(pn, qn, d1, d2, out)
    if n < 0:
        raise DegenerateSampleError("rank-deficient length system")
    return out[:n]


def solve_p3p_arrays(pn, qn, d1, out=None):
    """pn, qn: (3, 3) normalized points; d1: (3,) depths in image 1."""
    if out is None:
        out = np.empty((4, _kernels.C_LEN))
    X = d1[:, None] * pn
    bearings = qn / np.linalg.norm(qn, axis=1)[:, None]
    n = _kernels.solve_p3p(X, bearings, out)
    if n < 0:
        raise DegenerateSampleError("collinear or coincident points")
    return out[:n]


def solve_3pt_s00_f_arrays(pc, qc, d1, d2, out=None):
    """pc, qc: (3, 2) centered pixels; d1: (3,), d2: (2,) image-2 depths."""
    if out is None:
        out = np.empty((4, _kernels.C_LEN))
    n = _kernels.solve_3pt_s00f(pc, qc, d1, d2, out)
    if n < 0:
        raise DegenerateSampleError("degenerate focal/scale reduction")
    return out[:n]


def solve_3pt_s00_f12_arrays(pc, qc, d1, d2, out=None):
    if out is None:
        out = np.empty((4, _kernels.C_LEN))
    n = _kernels.solve_3pt_s00f12(pc, qc, d1, d2, out)
    if n < 0:
        raise DegenerateSampleError("singular linear system")
    return out[:n]


def solve_4pt_suv_f_arrays(pc, qc, d1, d2, out=None):
    if out is None:
        out = np.empty((4, _kernels.C_LEN))
    n = _kernels.solve_4pt_suv_f(pc, qc, d1, d2, out)
    if n < 0:
        raise DegenerateSampleError("singular hidden-variable system")
    return out[:n]


def solve_4pt_suv_f12_arrays(pc, qc, d1, d2, out=None):
    if out is None:
        out = np.empty((4, _kernels.C_LEN))
    n = _kernels.solve_4pt_suv_f12(pc, qc, d1, d2, out)
    if n < 0:
        raise DegenerateSampleError("singular hidden-variable system")
    return out[:n]


def solve_7pt_arrays(p, q, out=None):
    """p, q: (7, 2) pixel points. Returns (k, 3, 3) fundamental matrices."""
    if out is None:
        out = np.empty((3, 3, 3))
    n = _kernels.solve_7pt(p, q, out)
    if n < 0:
        raise DegenerateSampleError("constraint matrix has nullspace dimension > 2")
    return out[:n]


# ---------------------------------------------------------------------------
# friendly wrappers
# ---------------------------------------------------------------------------

def solve_3pt_suv(
    corrs: Sequence[Correspondence], K1: CameraIntrinsics, K2: CameraIntrinsics
) -> list[PoseCandidate]:
    """Calibrated pose + depth scale ratio + both shifts from three points.

    Pairwise-length elimination gives a 3x6 system over [c v^2, c v, c, u^2,
    u, 1] (c = scale^2); the identity (c v)^2 = c * (c v^2) turns it into a
    quartic in the first-image shift. At most 4 candidates.
    """
    MinimalSample(tuple(corrs), K1, K2).validate_for("3pt_suv")
    pn, qn = _normalized(corrs, K1, K2)
    rows = solve_3pt_suv_arrays(pn, qn, _depths(corrs, 1), _depths(corrs, 2))
    return _unpack(rows, len(rows), True, 0)


def solve_p3p(
    corrs: Sequence[Correspondence], K1: CameraIntrinsics, K2: CameraIntrinsics
) -> list[PoseCandidate]:
    """Absolute-pose P3P on points lifted with image-1 depth only.

    The depth scale folds into the translation, so no depth parameters are
    reported. At most 4 candidates.
    """
    MinimalSample(tuple(corrs), K1, K2).validate_for("p3p")
    pn, qn = _normalized(corrs, K1, K2)
    rows = solve_p3p_arrays(pn, qn, _depths(corrs, 1))
    return _unpack(rows, len(rows), False, 0)


def solve_3pt_s00_f(
    corrs: Sequence[Correspondence], center1=None, center2=None
) -> list[PoseCandidate]:
    """Shared unknown focal length with scale-only (zero-shift) depth.

    Uses image-2 depth of the first two correspondences; the third
    contributes its ray only. At most 4 candidates.
    """
    MinimalSample(tuple(corrs)).validate_for("3pt_s00_f")
    pc, qc = _centered(corrs, center1, center2)
    rows = solve_3pt_s00_f_arrays(pc, qc, _depths(corrs, 1), _depths(corrs, 2, 2))
    return _unpack(rows, len(rows), True, 1)


def solve_3pt_s00_f12(
    corrs: Sequence[Correspondence], center1=None, center2=None
) -> list[PoseCandidate]:
    """Two unknown focal lengths with scale-only depth: one linear solve.

    At most 1 candidate.
    """
    MinimalSample(tuple(corrs)).validate_for("3pt_s00_f12")
    pc, qc = _centered(corrs, center1, center2)
    rows = solve_3pt_s00_f12_arrays(pc, qc, _depths(corrs, 1), _depths(corrs, 2))
    return _unpack(rows, len(rows), True, 2)


def solve_4pt_suv_f(
    corrs: Sequence[Correspondence], center1=None, center2=None
) -> list[PoseCandidate]:
    """Shared unknown focal + scale + two shifts from four correspondences.

    Hidden-variable eigen formulation; at most 2 candidates.
    """
    MinimalSample(tuple(corrs)).validate_for("4pt_suv_f")
    pc, qc = _centered(corrs, center1, center2)
    rows = solve_4pt_suv_f_arrays(pc, qc, _depths(corrs, 1), _depths(corrs, 2))
    return _unpack(rows, len(rows), True, 1)


def solve_4pt_suv_f12(
    corrs: Sequence[Correspondence], center1=None, center2=None
) -> list[PoseCandidate]:
    """Two unknown focals + scale + two shifts from four correspondences.

    Hidden-variable form in the image-2 shift; at most 2 candidates.
    """
    MinimalSample(tuple(corrs)).validate_for("4pt_suv_f12")
    pc, qc = _centered(corrs, center1, center2)
    rows = solve_4pt_suv_f12_arrays(pc, qc, _depths(corrs, 1), _depths(corrs, 2))
    return _unpack(rows, len(rows), True, 2)


def solve_7pt(corrs: Sequence[Correspondence]) -> list[np.ndarray]:
    """Seven-point fundamental matrices (up to 3), Frobenius-normalized."""
    MinimalSample(tuple(corrs)).validate_for("7pt")
    p, q = _pixels(corrs)
    rows = solve_7pt_arrays(p, q)
    return [np.array(rows[i]) for i in range(len(rows))]


def solve_minimal(
    solver: str,
    corrs: Sequence[Correspondence],
    K1: Optional[CameraIntrinsics] = None,
    K2: Optional[CameraIntrinsics] = None,
):
    """Dispatch a minimal solve by solver id.

    For focal-length solvers, provided intrinsics contribute their principal
    point as the centering offset (their focal is ignored by construction).
    The 7pt baseline returns fundamental matrices, everything else
    PoseCandidate lists.
    """
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}")
    if solver == "3pt_suv":
        return solve_3pt_suv(corrs, K1, K2)
    if solver == "p3p":
        return solve_p3p(corrs, K1, K2)
    c1 = (K1.cx, K1.cy) if K1 is not None else None
    c2 = (K2.cx, K2.cy) if K2 is not None else None
    if solver == "3pt_s00_f":
        return solve_3pt_s00_f(corrs, c1, c2)
    if solver == "3pt_s00_f12":
        return solve_3pt_s00_f12(corrs, c1, c2)
    if solver == "4pt_suv_f":
        return solve_4pt_suv_f(corrs, c1, c2)
    if solver == "4pt_suv_f12":
        return solve_4pt_suv_f12(corrs, c1, c2)
    return solve_7pt(corrs)


# ---------------------------------------------------------------------------
# diagnostic construction of the calibrated three-point elimination system
# ---------------------------------------------------------------------------

_MONOMIALS_3PT = ("c*v^2", "c*v", "c", "u^2", "u", "1")


def build_length_system(
    corrs: Sequence[Correspondence], K1: CameraIntrinsics, K2: CameraIntrinsics
) -> EliminationSystem:
    """The 3x6 pairwise-length coefficient matrix of the calibrated solver.

    Row order: pairs (0,1), (0,2), (1,2); columns follow the monomial tags.
    This mirrors the compiled fast path and exists for inspection and tests.
    """
    pn, qn = _normalized(corrs, K1, K2)
    a = _depths(corrs, 1)
    b = _depths(corrs, 2)
    M = np.empty((3, 6))
    row = 0
    for i in range(2):
        for j in range(i + 1, 3):
            qq = qn[i] @ qn[i], qn[i] @ qn[j], qn[j] @ qn[j]
            pp = pn[i] @ pn[i], pn[i] @ pn[j], pn[j] @ pn[j]
            M[row, 0] = qq[0] - 2 * qq[1] + qq[2]
            M[row, 1] = 2 * (b[i] * qq[0] - (b[i] + b[j]) * qq[1] + b[j] * qq[2])
            M[row, 2] = b[i] ** 2 * qq[0] - 2 * b[i] * b[j] * qq[1] + b[j] ** 2 * qq[2]
            M[row, 3] = -(pp[0] - 2 * pp[1] + pp[2])
            M[row, 4] = -2 * (a[i] * pp[0] - (a[i] + a[j]) * pp[1] + a[j] * pp[2])
            M[row, 5] = -(a[i] ** 2 * pp[0] - 2 * a[i] * a[j] * pp[1] + a[j] ** 2 * pp[2])
            row += 1
    return EliminationSystem(M, _MONOMIALS_3PT)


def reduce_length_system(system: EliminationSystem):
    """Gauss-Jordan the 3x6 system and read off the three shift quadratics.

    Returns (g1, g2, g3) with c*v^2 = g1(u), c*v = g2(u), c = g3(u). Raises
    DegenerateSampleError on rank loss.
    """
    from .smallmath import gauss_jordan

    red, rank, pivots = gauss_jordan(system.coeffs)
    if rank < 3 or pivots != (0, 1, 2):
        raise DegenerateSampleError("length system is rank-deficient")
    gs = []
    for r in range(3):
        gs.append(QuadraticPoly(-red[r, 3], -red[r, 4], -red[r, 5]))
    return tuple(gs)
