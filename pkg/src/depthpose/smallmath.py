"""Fixed-size numerical kernels: elimination, small real roots, small
eigenproblems and rigid point-set alignment.

These are the only linear-algebra primitives the minimal solvers need; all of
them stay within 8x8 problems and favor deterministic closed forms over
iterative machinery where a closed form exists.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import Rotation

__all__ = [
    "QuadraticPoly",
    "DegenerateGeometryError",
    "gauss_jordan",
    "solve_quartic",
    "eig_real_small",
    "rigid_align",
]


class DegenerateGeometryError(ValueError):
    """Raised when a geometric configuration cannot pin down the unknowns."""


@dataclass(frozen=True)
class QuadraticPoly:
    """c2 * x**2 + c1 * x + c0 with finite coefficients."""

    c2: float
    c1: float
    c0: float

    def __post_init__(self):
        if not all(map(math.isfinite, (self.c2, self.c1, self.c0))):
            raise ValueError("coefficients must be finite")

    def __call__(self, x: float) -> float:
        return (self.c2 * x + self.c1) * x + self.c0

    def coeffs(self) -> np.ndarray:
        return np.array([self.c2, self.c1, self.c0])


def gauss_jordan(M: np.ndarray, pivot_tol: float = 1e-12):
    """Reduced row echelon form with partial pivoting.

    Returns (reduced, rank, pivot_cols). Requires m <= n; the rank counts
    pivots whose magnitude exceeds pivot_tol times the largest absolute entry
    of the input, so a rank below m flags a degenerate (dependent) system.
    """
    M = np.array(M, dtype=np.float64, order="C")
    if M.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    m, n = M.shape
    if m > n:
        raise ValueError(f"expected m <= n, got shape {M.shape}")
    rank, pivots = _kernels.gauss_jordan(M, float(pivot_tol))
    return M, int(rank), tuple(int(p) for p in pivots[:rank])


def solve_quartic(a4: float, a3: float, a2: float, a1: float, a0: float) -> list[float]:
    """All real roots of a4 x^4 + a3 x^3 + a2 x^2 + a1 x + a0, ascending.

    Closed form (resolvent cubic) with two Newton polish steps per root;
    degrades to cubic/quadratic/linear solving when leading coefficients
    vanish. Complex root pairs are never returned.
    """
    roots = np.empty(4)
    n = _kernels.quartic_real(float(a4), float(a3), float(a2), float(a1), float(a0), roots)
    if n < 0:
        raise ValueError("polynomial is identically zero")
    return [float(r) for r in roots[:n]]


def eig_real_small(A: np.ndarray):
    """Real eigenpairs of a small (k <= 8) dense matrix.

    Returns a list of (eigenvalue, eigenvector) with eigenvalues whose
    imaginary part is below 1e-8 times the spectral radius; 2x2 inputs use
    the closed-form characteristic quadratic. Non-convergence yields an empty
    list with a warning instead of an exception.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got {A.shape}")
    k = A.shape[0]
    if k > 8 or k < 1:
        raise ValueError(f"matrix size {k} outside the supported 1..8 range")
    if k == 2:
        evs = np.empty(2)
        n = _kernels.eig2x2_real(A[0, 0], A[0, 1], A[1, 0], A[1, 1], evs)
        out = []
        for i in range(n):
            lam = evs[i]
            # null vector of the better-conditioned row of (A - lam I)
            r0 = (A[0, 0] - lam, A[0, 1])
            r1 = (A[1, 0], A[1, 1] - lam)
            if abs(r0[0]) + abs(r0[1]) >= abs(r1[0]) + abs(r1[1]):
                v = np.array([-r0[1], r0[0]])
            else:
                v = np.array([-r1[1], r1[0]])
            nv = np.linalg.norm(v)
            v = v / nv if nv > 0.0 else np.array([1.0, 0.0])
            out.append((float(lam), v))
        return out
    try:
        evals, evecs = np.linalg.eig(A)
    except np.linalg.LinAlgError:
        warnings.warn("eigenvalue iteration did not converge; returning no pairs")
        return []
    rad = float(np.max(np.abs(evals))) if evals.size else 0.0
    out = []
    for i in range(k):
        if abs(evals[i].imag) < 1e-8 * max(rad, 1e-300):
            v = np.real(evecs[:, i])
            nv = np.linalg.norm(v)
            if nv > 0:
                v = v / nv
            out.append((float(evals[i].real), v))
    return out


def rigid_align(X, Y):
    """Least-squares rigid transform with Y_i ~= R X_i + t.

    X, Y: (n, 3) with n >= 3. Returns (Rotation, t, rms). Raises
    DegenerateGeometryError when the source points are collinear, where the
    rotation about the common axis is unobservable.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    if X.shape != Y.shape or X.ndim != 2 or X.shape[1] != 3:
        raise ValueError(f"expected matching (n, 3) arrays, got {X.shape} and {Y.shape}")
    n = X.shape[0]
    if n < 3:
        raise DegenerateGeometryError(f"need at least 3 points, got {n}")
    Xc = X - X.mean(axis=0)
    sv = np.linalg.svd(Xc, compute_uv=False)
    if sv[1] <= 1e-9 * max(sv[0], 1e-300):
        raise DegenerateGeometryError("source points are collinear")
    R, t, rms, _ = _kernels.kabsch_align(X, Y)
    return Rotation(R), t, float(rms)
