"""Scikit-learn style front end for robust two-view pose estimation.

RelativePoseRansac wraps the LO-RANSAC entry point behind the familiar
fit / get_params / set_params surface so it drops into sklearn tooling
(cloning, grid search over thresholds, pipelines that treat the inlier mask
as a prediction).
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array

from .geometry import CameraIntrinsics, Correspondence, ImagePoint
from .robust import RansacConfig, ransac_estimate
from .solvers import SOLVERS

__all__ = ["RelativePoseRansac", "validate_matches", "matches_to_correspondences"]


def validate_matches(X) -> np.ndarray:
    """Check and coerce a match array of shape (n, 4..6).

    Columns are x1, y1, x2, y2, then optionally the image-1 and image-2 depth
    priors. Depth columns may contain NaN for missing values; the pixel
    columns must be finite.
    """
    X = check_array(X, dtype=np.float64, ensure_2d=True, ensure_all_finite=False)
    if X.shape[1] not in (4, 5, 6):
        raise ValueError(
            f"expected 4 to 6 columns (x1, y1, x2, y2[, d1[, d2]]), got {X.shape[1]}"
        )
    if not np.all(np.isfinite(X[:, :4])):
        raise ValueError("pixel coordinates must be finite")
    return X


def matches_to_correspondences(X) -> list[Correspondence]:
    X = validate_matches(X)
    out = []
    for row in X:
        d1 = float(row[4]) if X.shape[1] >= 5 and np.isfinite(row[4]) else None
        d2 = float(row[5]) if X.shape[1] >= 6 and np.isfinite(row[5]) else None
        out.append(
            Correspondence(
                ImagePoint(float(row[0]), float(row[1])),
                ImagePoint(float(row[2]), float(row[3])),
                d1,
                d2,
            )
        )
    return out


def _as_intrinsics(value) -> Optional[CameraIntrinsics]:
    if value is None or isinstance(value, CameraIntrinsics):
        return value
    f, cx, cy = value
    return CameraIntrinsics(float(f), float(cx), float(cy))


class RelativePoseRansac(BaseEstimator):
    """Robust two-view relative pose estimator over point matches.

    Parameters
    ----------
    solver : str
        One of the registered minimal solvers (see depthpose.solvers.SOLVERS).
    intrinsics1, intrinsics2 : CameraIntrinsics, (f, cx, cy) tuple, or None
        Required for the calibrated solvers; for focal-estimating solvers only
        the principal point is used (as the centering offset) if provided.
    threshold_px : float
        MSAC inlier threshold in pixels.
    max_iterations, seed, lo_enabled, refine_focal
        Forwarded to the underlying RANSAC configuration.

    Attributes (after fit)
    ----------------------
    rotation_ : (3, 3) ndarray
    translation_ : (3,) ndarray
    scale_, shift1_, shift2_ : float or None
    focal1_, focal2_ : float or None
    fundamental_ : (3, 3) ndarray or None
    inlier_mask_ : (n,) bool ndarray
    score_ : float
    report_ : EstimateReport
    """

    def __init__(
        self,
        solver: str = "3pt_suv",
        intrinsics1=None,
        intrinsics2=None,
        threshold_px: float = 2.0,
        max_iterations: int = 1000,
        seed: int = 0,
        lo_enabled: bool = True,
        refine_focal: bool = True,
    ):
        self.solver = solver
        self.intrinsics1 = intrinsics1
        self.intrinsics2 = intrinsics2
        self.threshold_px = threshold_px
        self.max_iterations = max_iterations
        self.seed = seed
        self.lo_enabled = lo_enabled
        self.refine_focal = refine_focal

    def fit(self, X, y=None):
        """Estimate the pose from matches X of shape (n, 4..6)."""
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")
        corrs = matches_to_correspondences(X)
        config = RansacConfig(
            max_iterations=self.max_iterations,
            threshold_px=self.threshold_px,
            seed=self.seed,
            lo_enabled=self.lo_enabled,
            refine_focal=self.refine_focal,
        )
        report = ransac_estimate(
            corrs,
            _as_intrinsics(self.intrinsics1),
            _as_intrinsics(self.intrinsics2),
            self.solver,
            config,
        )
        self.report_ = report
        best = report.best
        self.rotation_ = None if best is None else best.pose.rotation.matrix
        self.translation_ = None if best is None else best.pose.translation
        if best is not None and best.depth_params is not None:
            self.scale_ = best.depth_params.scale
            self.shift1_ = best.depth_params.shift1
            self.shift2_ = best.depth_params.shift2
        else:
            self.scale_ = self.shift1_ = self.shift2_ = None
        self.focal1_ = None if best is None else best.f1
        self.focal2_ = None if best is None else best.f2
        self.fundamental_ = report.fundamental
        self.inlier_mask_ = report.inlier_mask
        self.score_ = report.score
        return self

    def _check_fitted(self):
        if not hasattr(self, "report_"):
            raise AttributeError("estimator is not fitted; call fit first")

    def score_samples(self, X) -> np.ndarray:
        """Squared Sampson error of each match against the fitted model (px^2)."""
        self._check_fitted()
        if self.fundamental_ is None:
            raise ValueError("fitted model has no epipolar matrix (pure rotation)")
        X = validate_matches(X)
        from ._kernels import sampson_errors

        out = np.empty(len(X))
        sampson_errors(
            np.ascontiguousarray(self.fundamental_),
            np.ascontiguousarray(X[:, 0:2]),
            np.ascontiguousarray(X[:, 2:4]),
            out,
        )
        return out

    def predict(self, X) -> np.ndarray:
        """Boolean inlier labels of matches under the fitted model."""
        return self.score_samples(X) < float(self.threshold_px) ** 2
