"""Synthetic two-view scenes with depth-prior corruption, accuracy metrics and
a Monte-Carlo benchmark runner.

Scenes are sampled inside the intersection of both camera frustums; depth
priors are derived from the true depths through the configured corruption
model (metric, scale-invariant or affine-invariant), optionally with
multiplicative noise, matching how monocular depth predictions degrade with
distance.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .geometry import (
    CameraIntrinsics,
    Correspondence,
    DepthAffineParams,
    ImagePoint,
    Pose,
    Rotation,
    random_rotation,
    rotation_angle_deg,
)
from .robust import RansacConfig, ransac_estimate
from .solvers import SOLVERS

__all__ = [
    "DepthCorruption",
    "SceneConfig",
    "ScenePair",
    "generate_scene",
    "rotation_error_deg",
    "translation_error_deg",
    "pose_error",
    "focal_error",
    "focal_error_two",
    "mean_average_accuracy",
    "BenchCell",
    "run_benchmark",
]

_KINDS = ("metric", "scale_invariant", "affine_invariant")


@dataclass(frozen=True)
class DepthCorruption:
    """How observed depth priors relate to true depth.

    true_depth_1 = s1 * (observed + u), true_depth_2 = s2 * (observed + v);
    depth_noise_sigma is the relative sigma of multiplicative Gaussian noise
    applied to the observed values.
    """

    kind: str = "affine_invariant"
    s1: float = 1.0
    s2: float = 1.0
    u: float = 0.0
    v: float = 0.0
    depth_noise_sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if self.s1 <= 0 or self.s2 <= 0:
            raise ValueError("depth scales must be positive")
        if self.kind == "metric" and not (
            self.s1 == 1.0 and self.s2 == 1.0 and self.u == 0.0 and self.v == 0.0
        ):
            raise ValueError("metric depth fixes s1 = s2 = 1 and u = v = 0")
        if self.kind == "scale_invariant" and not (self.u == 0.0 and self.v == 0.0):
            raise ValueError("scale-invariant depth fixes u = v = 0")
        if self.depth_noise_sigma < 0:
            raise ValueError("depth_noise_sigma must be >= 0")


@dataclass(frozen=True)
class SceneConfig:
    """Parameters of one synthetic two-view scene."""

    n_points: int = 200
    depth_range: tuple[float, float] = (4.0, 10.0)
    rotation_magnitude_deg: float = 15.0
    baseline: float = 0.5
    f1: float = 600.0
    f2: float = 600.0
    image_size: float = 640.0
    pixel_noise_sigma: float = 0.0
    outlier_fraction: float = 0.0
    depth: DepthCorruption = field(default_factory=DepthCorruption)
    seed: int = 0

    def __post_init__(self):
        if self.depth_range[0] <= 0 or self.depth_range[1] < self.depth_range[0]:
            raise ValueError("depth_range must satisfy 0 < min <= max")
        if not (0.0 <= self.outlier_fraction < 1.0):
            raise ValueError("outlier_fraction must lie in [0, 1)")
        if self.n_points < 1:
            raise ValueError("n_points must be >= 1")


@dataclass(frozen=True)
class ScenePair:
    """A generated scene: ground truth plus the observable correspondences.

    gt_pose.translation is the true camera translation divided by the first
    image's depth scale, the frame depth-aware solvers estimate in;
    gt_depths_1/2 are the true per-point depths before corruption.
    """

    gt_pose: Pose
    gt_params: DepthAffineParams
    K1: CameraIntrinsics
    K2: CameraIntrinsics
    correspondences: tuple[Correspondence, ...]
    gt_depths_1: np.ndarray
    gt_depths_2: np.ndarray
    outlier_mask: np.ndarray


def generate_scene(config: SceneConfig) -> ScenePair:
    """Sample a consistent scene, then corrupt depths / pixels / matches.

    Inlier correspondences satisfy the two-view projection model exactly
    before pixel noise. Raises ValueError when the two frustums do not
    overlap enough to place the requested number of points.
    """
    rng = np.random.default_rng(config.seed)
    half = config.image_size / 2.0
    K1 = CameraIntrinsics(config.f1, half, half)
    K2 = CameraIntrinsics(config.f2, half, half)
    R = random_rotation(rng, config.rotation_magnitude_deg)
    tdir = rng.normal(size=3)
    tdir /= np.linalg.norm(tdir)
    T = config.baseline * tdir

    n = config.n_points
    pts_p = np.empty((n, 2))
    pts_q = np.empty((n, 2))
    eta = np.empty(n)
    lam = np.empty(n)
    accepted = 0
    attempts = 0
    max_attempts = 500 * n + 1000
    size = config.image_size
    while accepted < n:
        attempts += 1
        if attempts > max_attempts:
            raise ValueError(
                "scene configuration infeasible: camera frustums barely overlap"
            )
        px = rng.uniform(0.0, size, size=2)
        z = rng.uniform(config.depth_range[0], config.depth_range[1])
        X = z * np.array([(px[0] - half) / config.f1, (px[1] - half) / config.f1, 1.0])
        Y = R @ X + T
        if Y[2] <= 0.1 * config.depth_range[0]:
            continue
        qx = config.f2 * Y[0] / Y[2] + half
        qy = config.f2 * Y[1] / Y[2] + half
        if not (0.0 <= qx <= size and 0.0 <= qy <= size):
            continue
        pts_p[accepted] = px
        pts_q[accepted] = (qx, qy)
        eta[accepted] = X[2]
        lam[accepted] = Y[2]
        accepted += 1

    if config.pixel_noise_sigma > 0:
        pts_p += rng.normal(0.0, config.pixel_noise_sigma, size=(n, 2))
        pts_q += rng.normal(0.0, config.pixel_noise_sigma, size=(n, 2))

    n_out = int(round(config.outlier_fraction * n))
    outlier_mask = np.zeros(n, dtype=bool)
    lam_obs = lam.copy()
    if n_out > 0:
        out_idx = rng.choice(n, size=n_out, replace=False)
        outlier_mask[out_idx] = True
        pts_q[out_idx] = rng.uniform(0.0, size, size=(n_out, 2))
        lam_obs[out_idx] = rng.uniform(
            config.depth_range[0], config.depth_range[1], size=n_out
        )

    dc = config.depth
    alpha = eta / dc.s1 - dc.u
    beta = lam_obs / dc.s2 - dc.v
    if dc.depth_noise_sigma > 0:
        alpha = alpha * (1.0 + rng.normal(0.0, dc.depth_noise_sigma, size=n))
        beta = beta * (1.0 + rng.normal(0.0, dc.depth_noise_sigma, size=n))

    corrs = tuple(
        Correspondence(
            ImagePoint(float(pts_p[i, 0]), float(pts_p[i, 1])),
            ImagePoint(float(pts_q[i, 0]), float(pts_q[i, 1])),
            float(alpha[i]),
            float(beta[i]),
        )
        for i in range(n)
    )
    return ScenePair(
        gt_pose=Pose(Rotation(R), T / dc.s1),
        gt_params=DepthAffineParams(dc.s2 / dc.s1, dc.u, dc.v),
        K1=K1,
        K2=K2,
        correspondences=corrs,
        gt_depths_1=eta,
        gt_depths_2=lam,
        outlier_mask=outlier_mask,
    )


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def rotation_error_deg(R_est: np.ndarray, R_gt: np.ndarray) -> float:
    """Angle of R_est^T R_gt in degrees, in [0, 180]."""
    R_est = np.asarray(R_est, dtype=np.float64)
    R_gt = np.asarray(R_gt, dtype=np.float64)
    return rotation_angle_deg(R_est.T @ R_gt)


def translation_error_deg(t_est: np.ndarray, t_gt: np.ndarray) -> float:
    """Angle between translation directions in degrees; inputs must be nonzero.

    Evaluated as atan2(|cross|, dot), which keeps full precision near 0 and
    180 degrees where the plain arccos form loses half its digits.
    """
    t_est = np.asarray(t_est, dtype=np.float64)
    t_gt = np.asarray(t_gt, dtype=np.float64)
    ne = np.linalg.norm(t_est)
    ng = np.linalg.norm(t_gt)
    if ne == 0.0 or ng == 0.0:
        raise ValueError("translation direction undefined for a zero vector")
    c = float(np.dot(t_est, t_gt))
    s = float(np.linalg.norm(np.cross(t_est, t_gt)))
    return math.degrees(math.atan2(s, c))


def pose_error(
    pose_est: Pose, pose_gt: Pose, t_zero_tol: float = 1e-9
) -> float:
    """Maximum of rotation and translation angular errors in degrees.

    When the true translation is zero the translation term is 0 if the
    estimate is also (numerically) zero and 180 otherwise; angular error is
    undefined at exactly zero motion.
    """
    r_err = rotation_error_deg(pose_est.rotation.matrix, pose_gt.rotation.matrix)
    ng = float(np.linalg.norm(pose_gt.translation))
    if ng == 0.0:
        t_err = 0.0 if float(np.linalg.norm(pose_est.translation)) < t_zero_tol else 180.0
    else:
        t_err = translation_error_deg(pose_est.translation, pose_gt.translation)
    return max(r_err, t_err)


def focal_error(f_est: float, f_gt: float) -> float:
    """Relative focal-length error |f_est - f_gt| / f_gt."""
    return abs(f_est - f_gt) / f_gt


def focal_error_two(f1_est: float, f2_est: float, f1_gt: float, f2_gt: float) -> float:
    """Geometric mean of the two cameras' relative focal errors."""
    return math.sqrt(focal_error(f1_est, f1_gt) * focal_error(f2_est, f2_gt))


def mean_average_accuracy(
    errors: Sequence[float], max_threshold: float, n_bins: int = 10
) -> float:
    """Mean over thresholds k*max/n (k = 1..n) of the fraction of errors below.

    NaN or infinite errors never count as accurate.
    """
    if max_threshold <= 0 or n_bins < 1:
        raise ValueError("max_threshold and n_bins must be positive")
    e = np.asarray(list(errors), dtype=np.float64)
    if e.size == 0:
        return 0.0
    acc = 0.0
    for k in range(1, n_bins + 1):
        tau = k * max_threshold / n_bins
        acc += float(np.mean(e < tau))
    return acc / n_bins


# ---------------------------------------------------------------------------
# benchmark runner
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchCell:
    """One benchmark condition: a scene family, a solver, a RANSAC config."""

    scene: SceneConfig
    solver: str
    ransac: RansacConfig = field(default_factory=RansacConfig)

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")


def _child_seed(base: int, trial: int) -> int:
    return int(np.random.SeedSequence([int(base), int(trial)]).generate_state(1)[0])


def _run_trial(cell: BenchCell, cell_idx: int, trial: int) -> dict:
    scene_cfg = replace(cell.scene, seed=_child_seed(cell.scene.seed, trial))
    scene = generate_scene(scene_cfg)
    ransac_cfg = replace(cell.ransac, seed=_child_seed(cell.ransac.seed, trial))
    rec: dict = {
        "cell": cell_idx,
        "trial": trial,
        "solver": cell.solver,
        "noise_px": cell.scene.pixel_noise_sigma,
        "outlier_fraction": cell.scene.outlier_fraction,
    }
    spec = SOLVERS[cell.solver]
    try:
        report = ransac_estimate(
            scene.correspondences, scene.K1, scene.K2, cell.solver, ransac_cfg
        )
    except ValueError:
        rec.update(
            failed=True, pose_err_deg=math.inf, rot_err_deg=math.inf,
            trans_err_deg=math.inf, focal_err=math.inf if spec.estimates_focal else None,
            num_inliers=0, score=math.inf, runtime_us=0.0,
        )
        return rec
    best = report.best
    if best is None:
        pe = re_ = te = math.inf
    else:
        re_ = rotation_error_deg(best.pose.rotation.matrix, scene.gt_pose.rotation.matrix)
        pe = pose_error(best.pose, scene.gt_pose)
        if (
            np.linalg.norm(best.pose.translation) > 0
            and np.linalg.norm(scene.gt_pose.translation) > 0
        ):
            te = translation_error_deg(best.pose.translation, scene.gt_pose.translation)
        else:
            te = 0.0
    fe = None
    if spec.estimates_focal and best is not None and best.f1 is not None:
        if spec.estimates_focal == 1:
            fe = focal_error(best.f1, scene.K1.f)
        else:
            fe = focal_error_two(best.f1, best.f2, scene.K1.f, scene.K2.f)
    rec.update(
        failed=False,
        pose_err_deg=float(pe),
        rot_err_deg=float(re_),
        trans_err_deg=float(te),
        focal_err=None if fe is None else float(fe),
        num_inliers=report.num_inliers,
        score=float(report.score),
        runtime_us=float(report.elapsed_us),
    )
    return rec


def run_benchmark(
    grid: Sequence[BenchCell], trials: int, threads: int = 1
) -> tuple[list[dict], list[dict]]:
    """Run every (cell, trial) combination; returns (rows, per-trial records).

    Per-trial seeds derive from the cell's configured seeds and the trial
    index only, so cells differing in nothing but the solver consume
    identical scenes (paired comparison), and parallel execution returns the
    same records as serial.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    jobs = [
        (cell, ci, t) for ci, cell in enumerate(grid) for t in range(trials)
    ]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            records = list(ex.map(lambda j: _run_trial(*j), jobs))
    else:
        records = [_run_trial(*j) for j in jobs]

    rows = []
    for ci, cell in enumerate(grid):
        cell_recs = [r for r in records if r["cell"] == ci]
        pose_errs = [r["pose_err_deg"] for r in cell_recs]
        focal_errs = [r["focal_err"] for r in cell_recs if r["focal_err"] is not None]
        runtimes = [r["runtime_us"] for r in cell_recs]
        rows.append(
            {
                "solver": cell.solver,
                "noise_px": cell.scene.pixel_noise_sigma,
                "outlier_fraction": cell.scene.outlier_fraction,
                "median_pose_err_deg": float(np.median(pose_errs)),
                "maa_pose": mean_average_accuracy(pose_errs, 10.0),
                "maa_focal": (
                    mean_average_accuracy(focal_errs, 0.10) if focal_errs else None
                ),
                "median_runtime_us": float(np.median(runtimes)),
            }
        )
    return rows, records
