"""Shared test helpers: forward-generated scenes with exact depth-prior algebra.

These construct instances directly from the projection equations (independent
of the library's own synthetic generator) so solver tests check against a
genuinely separate forward model: points X in camera 1 (already divided by the
first depth scale), Y = R X + t, priors d1 = depth1 - u, d2 = depth2/s - v.
"""

from dataclasses import dataclass

import numpy as np

from depthpose.geometry import (
    CameraIntrinsics,
    Correspondence,
    ImagePoint,
    random_rotation,
)


@dataclass
class Instance:
    corrs: list
    K1: CameraIntrinsics
    K2: CameraIntrinsics
    R: np.ndarray
    t: np.ndarray
    s: float
    u: float
    v: float
    pn: np.ndarray      # (n,3) normalized points, image 1
    qn: np.ndarray      # (n,3) normalized points, image 2
    d1: np.ndarray
    d2: np.ndarray


def make_instance(
    rng,
    n=3,
    s=1.0,
    u=0.0,
    v=0.0,
    f1=600.0,
    f2=600.0,
    cx=320.0,
    cy=240.0,
    rot_deg=None,
    pure_rotation=False,
    depth_range=(2.0, 10.0),
    spread=0.45,
):
    """One exact scene with affine-corrupted depth priors."""
    if rot_deg is None:
        rot_deg = rng.uniform(2.0, 40.0)
    while True:
        eta = rng.uniform(depth_range[0], depth_range[1], size=n)
        xy = rng.uniform(-spread, spread, size=(n, 2)) * eta[:, None]
        X = np.column_stack([xy, eta])
        R = random_rotation(rng, rot_deg)
        t = np.zeros(3) if pure_rotation else rng.normal(size=3)
        Y = X @ R.T + t
        lam = Y[:, 2]
        if np.all(lam > 0.15 * depth_range[0]):
            break
    d1 = eta - u
    d2 = lam / s - v
    pn = X / eta[:, None]
    qn = Y / lam[:, None]
    K1 = CameraIntrinsics(f1, cx, cy)
    K2 = CameraIntrinsics(f2, cx, cy)
    corrs = [
        Correspondence(
            ImagePoint(f1 * pn[i, 0] + cx, f1 * pn[i, 1] + cy),
            ImagePoint(f2 * qn[i, 0] + cx, f2 * qn[i, 1] + cy),
            float(d1[i]),
            float(d2[i]),
        )
        for i in range(n)
    ]
    return Instance(corrs, K1, K2, R, t, s, u, v, pn, qn, d1, d2)


def model_residual(inst: Instance, R, t, s, u, v):
    """Worst per-point residual of the depth-lifted rigid relation."""
    X = (inst.d1 + u)[:, None] * inst.pn
    Y = s * (inst.d2 + v)[:, None] * inst.qn
    return float(np.max(np.linalg.norm(Y - (X @ np.asarray(R).T + t), axis=1)))


def rot_err_deg(Ra, Rb):
    M = np.asarray(Ra).T @ np.asarray(Rb)
    c = (np.trace(M) - 1.0) / 2.0
    s = 0.5 * np.linalg.norm(
        [M[2, 1] - M[1, 2], M[0, 2] - M[2, 0], M[1, 0] - M[0, 1]]
    )
    return np.degrees(np.arctan2(s, min(max(c, -1.0), 1.0)))


def ang_err_deg(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = float(np.dot(a, b))
    s = float(np.linalg.norm(np.cross(a, b)))
    return np.degrees(np.arctan2(s, c))
