"""LO-RANSAC around the minimal solvers.

Scoring uses the truncated (MSAC) Sampson error of the epipolar matrix the
candidate induces:

- calibrated solvers score through the essential matrix on normalized points
  with the pixel threshold divided by the mean focal length;
- focal-estimating solvers compose a fundamental matrix from their recovered
  focals and score on principal-point-centered pixels;
- the 7pt baseline scores its fundamental matrix on raw pixels.

Candidates with (numerically) zero translation have no epipolar matrix; they
are scored by reprojecting depth-lifted points into the second image instead,
truncated at the same threshold.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from . import _kernels
from .geometry import (
    CameraIntrinsics,
    Correspondence,
    DepthAffineParams,
    ImagePoint,
    Pose,
    PoseCandidate,
    Rotation,
)
from .solvers import SOLVERS, DegenerateSampleError

__all__ = [
    "PureRotationError",
    "RansacConfig",
    "EstimateReport",
    "essential_from_pose",
    "fundamental_from",
    "sampson_error",
    "score_msac",
    "local_optimize",
    "ransac_estimate",
    "pose_from_fundamental",
]

_PURE_ROTATION_REL = 1e-9


class PureRotationError(ValueError):
    """The pose has (numerically) no translation, so no epipolar matrix exists."""


@dataclass(frozen=True)
class RansacConfig:
    """Robust-estimation settings.

    confidence drives the optional adaptive stop; it is implemented but
    disabled by default (early_exit=False) so runs use the fixed iteration
    budget. refine_focal controls whether local optimization also adjusts
    recovered focal lengths.
    """

    max_iterations: int = 1000
    threshold_px: float = 2.0
    seed: int = 0
    lo_enabled: bool = True
    lo_max_refine_iters: int = 25
    confidence: float = 0.9999
    early_exit: bool = False
    refine_focal: bool = True

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not (self.threshold_px > 0):
            raise ValueError("threshold_px must be > 0")
        if not (0 < self.confidence < 1):
            raise ValueError("confidence must be in (0, 1)")


@dataclass
class EstimateReport:
    """Robust-estimation output.

    fundamental is the scored epipolar matrix mapped back to input pixel
    coordinates when one exists (None for a pure-rotation best model).
    elapsed_us is wall-clock diagnostic only and excluded from serialized
    comparisons.
    """

    best: Optional[PoseCandidate]
    fundamental: Optional[np.ndarray]
    inlier_mask: np.ndarray
    score: float
    iterations_run: int
    solver_calls: int
    elapsed_us: float = 0.0
    solver: str = ""

    @property
    def num_inliers(self) -> int:
        return int(np.count_nonzero(self.inlier_mask))

    def to_dict(self, include_timing: bool = False) -> dict:
        d: dict = {
            "solver": self.solver,
            "score": float(self.score),
            "iterations": int(self.iterations_run),
            "solver_calls": int(self.solver_calls),
            "num_inliers": self.num_inliers,
            "inliers": [int(i) for i in np.flatnonzero(self.inlier_mask)],
        }
        if self.best is not None:
            c = self.best
            d["pose"] = {
                "rotation": [float(x) for x in c.pose.rotation.matrix.ravel()],
                "translation": [float(x) for x in c.pose.translation],
            }
            if c.depth_params is not None:
                d["depth_params"] = {
                    "s": float(c.depth_params.scale),
                    "u": float(c.depth_params.shift1),
                    "v": float(c.depth_params.shift2),
                }
            else:
                d["depth_params"] = None
            d["f1"] = None if c.f1 is None else float(c.f1)
            d["f2"] = None if c.f2 is None else float(c.f2)
        else:
            d["pose"] = None
            d["depth_params"] = None
            d["f1"] = None
            d["f2"] = None
        if self.fundamental is not None:
            d["fundamental"] = [float(x) for x in np.asarray(self.fundamental).ravel()]
        else:
            d["fundamental"] = None
        if include_timing:
            d["elapsed_us"] = float(self.elapsed_us)
        return d


# ---------------------------------------------------------------------------
# epipolar matrices and Sampson scoring
# ---------------------------------------------------------------------------

def _skew(t: np.ndarray) -> np.ndarray:
    return np.array(
        [[0.0, -t[2], t[1]], [t[2], 0.0, -t[0]], [-t[1], t[0], 0.0]]
    )


def essential_from_pose(pose: Pose) -> np.ndarray:
    """E = [t]x R, Frobenius-normalized. Raises PureRotationError for |t| ~ 0."""
    t = pose.translation
    if np.linalg.norm(t) <= 1e-12:
        raise PureRotationError("translation is numerically zero")
    E = _skew(t) @ pose.rotation.matrix
    return E / np.linalg.norm(E)


def fundamental_from(
    K1: CameraIntrinsics, K2: CameraIntrinsics, pose: Pose
) -> np.ndarray:
    """F = K2^-T [t]x R K1^-1, Frobenius-normalized."""
    E = essential_from_pose(pose)
    F = K2.K_inv.T @ E @ K1.K_inv
    return F / np.linalg.norm(F)


def sampson_error(F: np.ndarray, p: ImagePoint, q: ImagePoint) -> float:
    """First-order squared epipolar distance of one correspondence.

    Returns +inf when both points sit on the epipoles (vanishing gradient).
    """
    F = np.asarray(F, dtype=np.float64)
    x1 = np.array([p.x, p.y, 1.0])
    x2 = np.array([q.x, q.y, 1.0])
    Fx = F @ x1
    Ftx = F.T @ x2
    den = Fx[0] ** 2 + Fx[1] ** 2 + Ftx[0] ** 2 + Ftx[1] ** 2
    if den < 1e-20:
        return float("inf")
    return float((x2 @ Fx) ** 2 / den)


def score_msac(
    F: np.ndarray,
    correspondences: Sequence[Correspondence],
    threshold_px: float,
):
    """Truncated-Sampson score over pixel correspondences; lower is better.

    Returns (score, inlier_mask); a point is an inlier when its squared
    Sampson error is strictly below threshold_px**2.
    """
    n = len(correspondences)
    p = np.empty((n, 2))
    q = np.empty((n, 2))
    for i, c in enumerate(correspondences):
        p[i] = (c.p.x, c.p.y)
        q[i] = (c.q.x, c.q.y)
    mask = np.zeros(n, dtype=np.bool_)
    score = _kernels.msac_score(
        np.ascontiguousarray(F, dtype=np.float64), p, q, float(threshold_px) ** 2, mask
    )
    return float(score), mask


# ---------------------------------------------------------------------------
# scoring context: per-solver frames and thresholds
# ---------------------------------------------------------------------------

class _ScoringContext:
    """Precomputed point arrays in the frame a solver's models are scored in."""

    def __init__(self, solver, p_px, q_px, d1, d2, K1, K2, threshold_px):
        self.solver = solver
        spec = SOLVERS[solver]
        self.spec = spec
        self.K1 = K1
        self.K2 = K2
        self.d1 = d1
        self.d2 = d2
        if solver in ("3pt_suv", "p3p"):
            self.sp = np.column_stack(
                [(p_px[:, 0] - K1.cx) / K1.f, (p_px[:, 1] - K1.cy) / K1.f]
            )
            self.sq = np.column_stack(
                [(q_px[:, 0] - K2.cx) / K2.f, (q_px[:, 1] - K2.cy) / K2.f]
            )
            self.threshold = threshold_px / (0.5 * (K1.f + K2.f))
            self.frame = "normalized"
        elif spec.estimates_focal:
            c1 = (K1.cx, K1.cy) if K1 is not None else (0.0, 0.0)
            c2 = (K2.cx, K2.cy) if K2 is not None else (0.0, 0.0)
            self.sp = p_px - np.array(c1)
            self.sq = q_px - np.array(c2)
            self.threshold = threshold_px
            self.frame = "centered"
            self.centers = (c1, c2)
        else:
            self.sp = p_px.copy()
            self.sq = q_px.copy()
            self.threshold = threshold_px
            self.frame = "pixel"
        self.sp = np.ascontiguousarray(self.sp)
        self.sq = np.ascontiguousarray(self.sq)
        self.thr2 = self.threshold ** 2
        self._mask = np.zeros(len(p_px), dtype=np.bool_)

    # -- model construction ------------------------------------------------

    def depth_scale(self) -> float:
        d = self.d1[np.isfinite(self.d1)]
        return float(np.median(np.abs(d))) if d.size else 1.0

    def matrix_for(self, cand: PoseCandidate) -> Optional[np.ndarray]:
        """Scoring matrix in this context's frame; None for pure rotation."""
        t = cand.pose.translation
        if np.linalg.norm(t) <= _PURE_ROTATION_REL * max(self.depth_scale(), 1e-30):
            return None
        E = _skew(t) @ cand.pose.rotation.matrix
        E /= np.linalg.norm(E)
        if self.frame == "normalized":
            return E
        if self.frame == "centered":
            f1 = cand.f1 if cand.f1 is not None else (self.K1.f if self.K1 else None)
            f2 = cand.f2 if cand.f2 is not None else (self.K2.f if self.K2 else None)
            if f1 is None or f2 is None:
                return None
            D1 = np.diag([1.0 / f1, 1.0 / f1, 1.0])
            D2 = np.diag([1.0 / f2, 1.0 / f2, 1.0])
            F = D2 @ E @ D1
            return F / np.linalg.norm(F)
        raise RuntimeError("pose candidates are not scored in the raw pixel frame")

    def to_input_pixels(self, M: np.ndarray) -> np.ndarray:
        """Map a scoring matrix back to the raw input pixel frame."""
        if self.frame == "pixel":
            F = M
        elif self.frame == "normalized":
            F = self.K2.K_inv.T @ M @ self.K1.K_inv
        else:
            (cx1, cy1), (cx2, cy2) = self.centers
            C1 = np.array([[1, 0, -cx1], [0, 1, -cy1], [0, 0, 1]], dtype=np.float64)
            C2 = np.array([[1, 0, -cx2], [0, 1, -cy2], [0, 0, 1]], dtype=np.float64)
            F = C2.T @ M @ C1
        return F / np.linalg.norm(F)

    # -- scoring -----------------------------------------------------------

    def score_matrix(self, M: np.ndarray):
        mask = np.zeros(self.sp.shape[0], dtype=np.bool_)
        score = _kernels.msac_score(
            np.ascontiguousarray(M, dtype=np.float64), self.sp, self.sq, self.thr2, mask
        )
        return score, mask

    def score_reprojection(self, cand: PoseCandidate):
        """Truncated squared reprojection error of depth-lifted points.

        Used when the candidate carries no usable epipolar geometry (pure
        rotation). Points without image-1 depth or behind the camera count as
        outliers.
        """
        u = cand.depth_params.shift1 if cand.depth_params is not None else 0.0
        depths = self.d1 + u
        if self.frame == "normalized":
            dirs = np.column_stack([self.sp, np.ones(len(self.sp))])
            proj_scale = 1.0
            q2 = self.sq
        else:
            f1 = cand.f1 if cand.f1 is not None else (self.K1.f if self.K1 else None)
            f2 = cand.f2 if cand.f2 is not None else (self.K2.f if self.K2 else None)
            if f1 is None or f2 is None:
                return float("inf"), np.zeros(len(self.sp), dtype=np.bool_)
            dirs = np.column_stack([self.sp / f1, np.ones(len(self.sp))])
            proj_scale = f2
            q2 = self.sq
        X = depths[:, None] * dirs
        Y = X @ cand.pose.rotation.matrix.T + cand.pose.translation
        good = np.isfinite(depths) & (depths > 0) & (Y[:, 2] > 1e-12)
        err = np.full(len(self.sp), np.inf)
        Yg = Y[good]
        proj = proj_scale * Yg[:, :2] / Yg[:, 2:3]
        err[good] = np.sum((proj - q2[good]) ** 2, axis=1)
        mask = err < self.thr2
        score = float(np.sum(np.minimum(err, self.thr2)))
        return score, mask

    def score_candidate(self, cand: PoseCandidate):
        M = self.matrix_for(cand)
        if M is None:
            score, mask = self.score_reprojection(cand)
            return score, mask, None
        score, mask = self.score_matrix(M)
        return score, mask, M


# ---------------------------------------------------------------------------
# local optimization
# ---------------------------------------------------------------------------

def _exp_so3(w: np.ndarray) -> np.ndarray:
    th = np.linalg.norm(w)
    if th < 1e-12:
        return np.eye(3)
    k = w / th
    K = _skew(k)
    return np.eye(3) + math.sin(th) * K + (1.0 - math.cos(th)) * (K @ K)


def _refine_pose_params(cand, ctx, inlier_mask, config, truncate=True):
    """LM refinement of rotation/translation (and focals when estimated).

    With truncate=False the Sampson residuals of the masked points enter
    unclipped, which keeps a useful gradient when the starting model already
    pushes most of them past the threshold.
    """
    R0 = cand.pose.rotation.matrix
    t0 = cand.pose.translation
    refine_f = ctx.spec.estimates_focal and config.refine_focal
    x0 = [0.0, 0.0, 0.0, t0[0], t0[1], t0[2]]
    if refine_f:
        x0.append(cand.f1)
        if ctx.spec.estimates_focal == 2:
            x0.append(cand.f2)
    sp = ctx.sp[inlier_mask]
    sq = ctx.sq[inlier_mask]
    thr2 = ctx.thr2

    def residuals(x):
        R = R0 @ _exp_so3(np.asarray(x[:3]))
        t = np.asarray(x[3:6])
        tn = np.linalg.norm(t)
        if tn <= 1e-300:
            return np.full(len(sp), math.sqrt(thr2))
        E = _skew(t) @ R
        E /= np.linalg.norm(E)
        if ctx.frame == "centered":
            if refine_f:
                f1 = abs(x[6])
                f2 = abs(x[7]) if ctx.spec.estimates_focal == 2 else f1
            else:
                f1 = cand.f1
                f2 = cand.f2
            M = np.diag([1.0 / f2, 1.0 / f2, 1.0]) @ E @ np.diag([1.0 / f1, 1.0 / f1, 1.0])
        else:
            M = E
        e = np.empty(len(sp))
        _kernels.sampson_errors(np.ascontiguousarray(M), sp, sq, e)
        if truncate:
            e = np.minimum(e, thr2)
        return np.sqrt(e)

    try:
        res = least_squares(
            residuals,
            np.asarray(x0, dtype=np.float64),
            method="lm",
            max_nfev=config.lo_max_refine_iters * (len(x0) + 1),
        )
    except Exception:
        return None
    x = res.x
    R = R0 @ _exp_so3(x[:3])
    t = np.asarray(x[3:6])
    f1 = cand.f1
    f2 = cand.f2
    if refine_f:
        f1 = abs(float(x[6]))
        if ctx.spec.estimates_focal == 2:
            f2 = abs(float(x[7]))
        else:
            f2 = f1
        if f1 <= 0 or f2 <= 0:
            return None
    try:
        return PoseCandidate(
            pose=Pose(Rotation(_orthonormalize(R)), t),
            depth_params=cand.depth_params,
            f1=f1,
            f2=f2,
            residual=cand.residual,
        )
    except ValueError:
        return None


def _orthonormalize(R: np.ndarray) -> np.ndarray:
    U, _, Vt = np.linalg.svd(R)
    D = np.diag([1.0, 1.0, float(np.sign(np.linalg.det(U @ Vt)))])
    return U @ D @ Vt


def _refine_fundamental(F0, ctx, inlier_mask, config):
    """LM refinement of a raw fundamental matrix over its nine entries."""
    sp = ctx.sp[inlier_mask]
    sq = ctx.sq[inlier_mask]
    thr2 = ctx.thr2

    def residuals(x):
        M = x.reshape(3, 3)
        nf = np.linalg.norm(M)
        if nf <= 1e-300:
            return np.full(len(sp), math.sqrt(thr2))
        e = np.empty(len(sp))
        _kernels.sampson_errors(np.ascontiguousarray(M / nf), sp, sq, e)
        return np.sqrt(np.minimum(e, thr2))

    try:
        res = least_squares(
            residuals,
            np.asarray(F0, dtype=np.float64).ravel(),
            method="lm",
            max_nfev=config.lo_max_refine_iters * 10,
        )
    except Exception:
        return None
    F = res.x.reshape(3, 3)
    nf = np.linalg.norm(F)
    if nf <= 0 or not np.isfinite(nf):
        return None
    # re-impose rank 2
    U, S, Vt = np.linalg.svd(F / nf)
    F = U @ np.diag([S[0], S[1], 0.0]) @ Vt
    return F / np.linalg.norm(F)


def local_optimize(
    candidate: PoseCandidate,
    correspondences: Sequence[Correspondence],
    inlier_mask: np.ndarray,
    config: RansacConfig,
    K1: Optional[CameraIntrinsics] = None,
    K2: Optional[CameraIntrinsics] = None,
    solver: str = "3pt_suv",
) -> PoseCandidate:
    """Refine a pose candidate on its inliers; returns it unchanged unless the
    truncated-Sampson score over all correspondences improves.

    Depth parameters are left untouched: they do not enter the epipolar
    matrix. Requires at least a minimal sample's worth of inliers.
    """
    n = len(correspondences)
    mask = np.asarray(inlier_mask, dtype=bool)
    if mask.shape != (n,):
        raise ValueError("inlier mask length must match the correspondences")
    if int(mask.sum()) < SOLVERS[solver].sample_size:
        return candidate
    p_px = np.array([[c.p.x, c.p.y] for c in correspondences])
    q_px = np.array([[c.q.x, c.q.y] for c in correspondences])
    d1 = np.array([c.depth1 if c.depth1 is not None else np.nan for c in correspondences])
    d2 = np.array([c.depth2 if c.depth2 is not None else np.nan for c in correspondences])
    ctx = _ScoringContext(solver, p_px, q_px, d1, d2, K1, K2, config.threshold_px)
    base_score, _, M0 = ctx.score_candidate(candidate)
    if M0 is None:
        return candidate
    refined = _refine_pose_params(candidate, ctx, mask, config)
    if refined is None:
        return candidate
    new_score, _, _ = ctx.score_candidate(refined)
    return refined if new_score < base_score else candidate


# ---------------------------------------------------------------------------
# the estimator
# ---------------------------------------------------------------------------

def _sample_without_replacement(rng, pool: np.ndarray, k: int, scratch: np.ndarray):
    """Partial Fisher-Yates over scratch (a copy-on-call view of pool)."""
    n = len(pool)
    scratch[:n] = pool
    for i in range(k):
        j = int(rng.integers(i, n))
        scratch[i], scratch[j] = scratch[j], scratch[i]
    return scratch[:k]


def pose_from_fundamental(
    F: np.ndarray,
    K1: CameraIntrinsics,
    K2: CameraIntrinsics,
    correspondences: Sequence[Correspondence],
    inlier_mask: Optional[np.ndarray] = None,
) -> Pose:
    """Decompose F into the cheirality-consistent pose (unit translation).

    Triangulates the (inlier) correspondences under the four (R, +-t)
    hypotheses and keeps the one with the most points in front of both
    cameras.
    """
    E = K2.K.T @ np.asarray(F, dtype=np.float64) @ K1.K
    U, _, Vt = np.linalg.svd(E)
    if np.linalg.det(U) < 0:
        U = -U
    if np.linalg.det(Vt) < 0:
        Vt = -Vt
    W = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    Rs = [U @ W @ Vt, U @ W.T @ Vt]
    tvec = U[:, 2]
    idx = (
        np.flatnonzero(inlier_mask)
        if inlier_mask is not None
        else np.arange(len(correspondences))
    )
    if idx.size == 0:
        idx = np.arange(len(correspondences))
    pn = np.array(
        [
            [(correspondences[i].p.x - K1.cx) / K1.f, (correspondences[i].p.y - K1.cy) / K1.f, 1.0]
            for i in idx
        ]
    )
    qn = np.array(
        [
            [(correspondences[i].q.x - K2.cx) / K2.f, (correspondences[i].q.y - K2.cy) / K2.f, 1.0]
            for i in idx
        ]
    )
    best = None
    best_votes = -1
    for R in Rs:
        for sgn in (1.0, -1.0):
            t = sgn * tvec
            votes = 0
            P2 = np.hstack([R, t[:, None]])
            for a, b in zip(pn, qn):
                A = np.empty((4, 4))
                A[0] = [-1.0, 0.0, a[0], 0.0]
                A[1] = [0.0, -1.0, a[1], 0.0]
                A[2] = P2[2] * b[0] - P2[0]
                A[3] = P2[2] * b[1] - P2[1]
                _, _, Vt4 = np.linalg.svd(A)
                X = Vt4[3]
                if abs(X[3]) < 1e-300:
                    continue
                X = X[:3] / X[3]
                z2 = R[2] @ X + t[2]
                if X[2] > 0 and z2 > 0:
                    votes += 1
            if votes > best_votes:
                best_votes = votes
                best = Pose(Rotation(_orthonormalize(R)), t)
    return best


def ransac_estimate(
    correspondences: Sequence[Correspondence],
    K1: Optional[CameraIntrinsics] = None,
    K2: Optional[CameraIntrinsics] = None,
    solver: str = "3pt_suv",
    config: Optional[RansacConfig] = None,
) -> EstimateReport:
    """LO-RANSAC estimate with a fixed, seeded iteration budget.

    Samples uniformly without replacement among correspondences carrying the
    depth fields the chosen solver needs; every drawn sample consumes one
    iteration whether or not it is degenerate. Local optimization runs when a
    new best model appears and once more at the end. Deterministic for fixed
    inputs and seed (single-threaded).
    """
    t_start = time.perf_counter()
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}")
    spec = SOLVERS[solver]
    config = config or RansacConfig()
    if spec.needs_intrinsics and (K1 is None or K2 is None):
        raise ValueError(f"{solver} requires both camera intrinsics")
    n = len(correspondences)
    p_px = np.array([[c.p.x, c.p.y] for c in correspondences]).reshape(n, 2)
    q_px = np.array([[c.q.x, c.q.y] for c in correspondences]).reshape(n, 2)
    d1 = np.array([c.depth1 if c.depth1 is not None else np.nan for c in correspondences])
    d2 = np.array([c.depth2 if c.depth2 is not None else np.nan for c in correspondences])

    eligible = np.ones(n, dtype=bool)
    if spec.needs_depth1:
        eligible &= np.isfinite(d1)
    if spec.needs_depth2:
        eligible &= np.isfinite(d2)
    pool = np.flatnonzero(eligible)
    if len(pool) < spec.sample_size:
        raise ValueError(
            f"{solver} needs {spec.sample_size} correspondences with its required "
            f"depth fields, found {len(pool)}"
        )

    ctx = _ScoringContext(solver, p_px, q_px, d1, d2, K1, K2, config.threshold_px)
    rng = np.random.default_rng(config.seed)
    scratch = np.empty(len(pool), dtype=np.int64)
    out = np.empty((4, _kernels.C_LEN), dtype=np.float64)
    Fout = np.empty((3, 3, 3), dtype=np.float64)
    k = spec.sample_size

    best_score = math.inf
    best_cand: Optional[PoseCandidate] = None
    best_matrix: Optional[np.ndarray] = None
    best_mask = np.zeros(n, dtype=np.bool_)
    solver_calls = 0
    iterations = 0

    def try_lo(cand, mask):
        """One LO pass; returns (cand, score, mask, matrix) of the winner."""
        s0, m0, M0 = ctx.score_candidate(cand)
        if not config.lo_enabled or M0 is None or int(m0.sum()) < k:
            return cand, s0, m0, M0
        refined = _refine_pose_params(cand, ctx, m0, config)
        if refined is None:
            return cand, s0, m0, M0
        s1, m1, M1 = ctx.score_candidate(refined)
        if s1 < s0:
            return refined, s1, m1, M1
        return cand, s0, m0, M0

    for it in range(config.max_iterations):
        iterations += 1
        idx = _sample_without_replacement(rng, pool, k, scratch)
        solver_calls += 1
        new_best = False
        if solver == "7pt":
            nf = _kernels.solve_7pt(p_px[idx], q_px[idx], Fout)
            if nf < 0:
                continue
            for m in range(nf):
                F = Fout[m]
                score, mask = ctx.score_matrix(F)
                if score < best_score:
                    best_score = score
                    best_cand = None
                    best_matrix = F.copy()
                    best_mask = mask.copy()
                    new_best = True
            if new_best and config.lo_enabled and int(best_mask.sum()) >= k:
                Fr = _refine_fundamental(best_matrix, ctx, best_mask, config)
                if Fr is not None:
                    s1, m1 = ctx.score_matrix(Fr)
                    if s1 < best_score:
                        best_score, best_matrix, best_mask = s1, Fr, m1
        else:
            si = idx
            if solver == "3pt_suv":
                pn3 = np.column_stack([ctx.sp[si], np.ones(k)])
                qn3 = np.column_stack([ctx.sq[si], np.ones(k)])
                cnt = _kernels.solve_3pt_suv(pn3, qn3, d1[si], d2[si], out)
            elif solver == "p3p":
                pn3 = np.column_stack([ctx.sp[si], np.ones(k)])
                qn3 = np.column_stack([ctx.sq[si], np.ones(k)])
                X = d1[si][:, None] * pn3
                bear = qn3 / np.linalg.norm(qn3, axis=1)[:, None]
                cnt = _kernels.solve_p3p(X, bear, out)
            elif solver == "3pt_s00_f":
                cnt = _kernels.solve_3pt_s00f(ctx.sp[si], ctx.sq[si], d1[si], d2[si][:2], out)
            elif solver == "3pt_s00_f12":
                cnt = _kernels.solve_3pt_s00f12(ctx.sp[si], ctx.sq[si], d1[si], d2[si], out)
            elif solver == "4pt_suv_f":
                cnt = _kernels.solve_4pt_suv_f(ctx.sp[si], ctx.sq[si], d1[si], d2[si], out)
            elif solver == "4pt_suv_f12":
                cnt = _kernels.solve_4pt_suv_f12(ctx.sp[si], ctx.sq[si], d1[si], d2[si], out)
            else:
                raise AssertionError(solver)
            if cnt < 0:
                continue
            for m in range(cnt):
                cand = _candidate_from_row(out[m], spec)
                if cand is None:
                    continue
                score, mask, M = ctx.score_candidate(cand)
                if score < best_score:
                    best_score = score
                    best_cand = cand
                    best_matrix = None if M is None else M.copy()
                    best_mask = mask.copy()
                    new_best = True
            if new_best and best_cand is not None:
                best_cand, best_score, best_mask, best_matrix = try_lo(best_cand, best_mask)
        if config.early_exit and best_score < math.inf:
            ratio = best_mask.sum() / max(len(pool), 1)
            if ratio > 0:
                denom = math.log(max(1.0 - ratio ** k, 1e-300))
                if denom < 0:
                    needed = math.log(1.0 - config.confidence) / denom
                    if it + 1 >= needed:
                        break

    # final polish
    if best_cand is not None:
        best_cand, best_score, best_mask, best_matrix = try_lo(best_cand, best_mask)
    elif best_matrix is not None and config.lo_enabled and int(best_mask.sum()) >= k:
        Fr = _refine_fundamental(best_matrix, ctx, best_mask, config)
        if Fr is not None:
            s1, m1 = ctx.score_matrix(Fr)
            if s1 < best_score:
                best_score, best_matrix, best_mask = s1, Fr, m1

    if best_cand is None and best_matrix is None:
        raise DegenerateSampleError("no model found: all samples were degenerate")

    # package: for the depth-free baseline, decompose into a pose if possible
    final_cand = best_cand
    F_pixels = None
    if best_matrix is not None:
        F_pixels = ctx.to_input_pixels(best_matrix)
    if solver == "7pt" and K1 is not None and K2 is not None and F_pixels is not None:
        pose = pose_from_fundamental(F_pixels, K1, K2, correspondences, best_mask)
        if pose is not None:
            final_cand = PoseCandidate(pose=pose, depth_params=None, residual=0.0)

    elapsed = (time.perf_counter() - t_start) * 1e6
    return EstimateReport(
        best=final_cand,
        fundamental=F_pixels,
        inlier_mask=best_mask,
        score=best_score,
        iterations_run=iterations,
        solver_calls=solver_calls,
        elapsed_us=elapsed,
        solver=solver,
    )


def _candidate_from_row(row: np.ndarray, spec) -> Optional[PoseCandidate]:
    """Packed kernel row -> PoseCandidate; None when the row fails validation."""
    try:
        R = Rotation(row[_kernels.C_R:_kernels.C_R + 9].reshape(3, 3))
        pose = Pose(R, row[_kernels.C_T:_kernels.C_T + 3])
        params = None
        if math.isfinite(row[_kernels.C_S]):
            params = DepthAffineParams(
                scale=float(row[_kernels.C_S]),
                shift1=float(row[_kernels.C_U]),
                shift2=float(row[_kernels.C_V]),
            )
        f1 = float(row[_kernels.C_F1]) if spec.estimates_focal else None
        f2 = float(row[_kernels.C_F2]) if spec.estimates_focal else None
        return PoseCandidate(
            pose=pose, depth_params=params, f1=f1, f2=f2,
            residual=float(row[_kernels.C_RES]),
        )
    except ValueError:
        return None
