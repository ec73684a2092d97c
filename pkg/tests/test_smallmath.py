import numpy as np
import pytest

from depthpose.geometry import random_rotation
from depthpose.smallmath import (
    DegenerateGeometryError,
    QuadraticPoly,
    eig_real_small,
    gauss_jordan,
    rigid_align,
    solve_quartic,
)


class TestGaussJordan:
    def test_already_reduced(self):
        M = np.hstack([np.eye(3), np.zeros((3, 3))])
        red, rank, pivots = gauss_jordan(M)
        assert rank == 3
        assert pivots == (0, 1, 2)
        np.testing.assert_allclose(red, M)

    def test_dependent_rows(self):
        _, rank, _ = gauss_jordan(np.array([[2.0, 4.0], [1.0, 2.0]]))
        assert rank == 1

    def test_nullspace_preserved(self):
        # M x = 0 iff reduced x = 0, checked both ways via SVD nullspaces
        rng = np.random.default_rng(11)
        for _ in range(50):
            M = rng.normal(size=(3, 6))
            red, rank, _ = gauss_jordan(M)
            assert rank == 3
            _, _, Vt = np.linalg.svd(M)
            for k in range(3, 6):
                assert np.max(np.abs(red @ Vt[k])) < 1e-9
            _, _, Vtr = np.linalg.svd(red)
            for k in range(3, 6):
                assert np.max(np.abs(M @ Vtr[k])) < 1e-9 * np.max(np.abs(M))

    def test_rejects_wide_input_only(self):
        with pytest.raises(ValueError):
            gauss_jordan(np.zeros((4, 3)))


class TestQuartic:
    def test_x4_minus_1(self):
        roots = solve_quartic(1, 0, 0, 0, -1)
        np.testing.assert_allclose(roots, [-1.0, 1.0], atol=1e-12)

    def test_quadratic_fallback(self):
        roots = solve_quartic(0, 0, 1, -3, 2)
        np.testing.assert_allclose(roots, [1.0, 2.0], atol=1e-12)

    def test_identically_zero(self):
        with pytest.raises(ValueError):
            solve_quartic(0, 0, 0, 0, 0)

    def test_root_reconstruction(self):
        rng = np.random.default_rng(5)
        for _ in range(500):
            r = np.sort(rng.uniform(-10, 10, size=4))
            coeffs = np.poly(r)
            roots = solve_quartic(*coeffs)
            assert len(roots) == 4
            np.testing.assert_allclose(roots, r, atol=1e-6)

    def test_complex_pairs_excluded(self):
        # (x^2+1)(x-2)(x-3): only 2 real roots
        coeffs = np.poly([1j, -1j, 2.0, 3.0]).real
        roots = solve_quartic(*coeffs)
        np.testing.assert_allclose(roots, [2.0, 3.0], atol=1e-9)

    def test_residual_bound(self):
        rng = np.random.default_rng(6)
        for _ in range(300):
            c = rng.normal(size=5) * 10.0 ** rng.integers(-3, 4)
            try:
                roots = solve_quartic(*c)
            except ValueError:
                continue
            assert len(roots) <= 4
            bound = 1e-8 * np.max(np.abs(c))
            for r in roots:
                val = np.polyval(c, r)
                assert abs(val) <= bound * max(1.0, abs(r)) ** 4

    def test_biquadratic(self):
        # x^4 - 5x^2 + 4 = (x^2-1)(x^2-4)
        roots = solve_quartic(1, 0, -5, 0, 4)
        np.testing.assert_allclose(roots, [-2, -1, 1, 2], atol=1e-10)

    def test_linear_fallback(self):
        assert solve_quartic(0, 0, 0, 2.0, -4.0) == [2.0]


class TestEig:
    def test_diagonal(self):
        pairs = eig_real_small(np.diag([3.0, -1.0]))
        vals = sorted(v for v, _ in pairs)
        np.testing.assert_allclose(vals, [-1.0, 3.0])

    def test_pure_rotation_matrix_has_no_real_eigs(self):
        assert eig_real_small(np.array([[0.0, 1.0], [-1.0, 0.0]])) == []

    def test_eigenvector_residual(self):
        rng = np.random.default_rng(7)
        for k in (2, 3, 4, 8):
            for _ in range(30):
                A = rng.normal(size=(k, k))
                for lam, vec in eig_real_small(A):
                    r = np.linalg.norm(A @ vec - lam * vec)
                    assert r <= 1e-7 * np.linalg.norm(A) * np.linalg.norm(vec)

    def test_symmetric_matches_charpoly_roots(self):
        # independent oracle: roots of the characteristic polynomial
        rng = np.random.default_rng(8)
        for _ in range(50):
            A = rng.normal(size=(4, 4))
            A = A + A.T
            got = sorted(v for v, _ in eig_real_small(A))
            expect = sorted(np.roots(np.poly(A)).real)
            np.testing.assert_allclose(got, expect, atol=1e-6)

    def test_size_limit(self):
        with pytest.raises(ValueError):
            eig_real_small(np.eye(9))


class TestRigidAlign:
    def test_identity(self):
        X = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
        R, t, rms = rigid_align(X, X)
        np.testing.assert_allclose(R.matrix, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(t, 0, atol=1e-12)
        assert rms < 1e-12

    def test_forward_transform_oracle(self):
        rng = np.random.default_rng(9)
        for n in (3, 4, 10):
            for _ in range(50):
                X = rng.normal(size=(n, 3)) * rng.uniform(0.1, 10)
                R0 = random_rotation(rng, rng.uniform(1, 179))
                t0 = rng.normal(size=3) * 5
                Y = X @ R0.T + t0
                R, t, rms = rigid_align(X, Y)
                scale = np.max(np.abs(X))
                assert np.max(np.abs(R.matrix - R0)) < 1e-9
                assert np.max(np.abs(t - t0)) < 1e-9 * max(scale, 1)
                assert rms <= 1e-9 * max(scale, 1)

    def test_collinear_raises(self):
        d = np.array([1.0, 1.0, 1.0])
        X = np.outer([0.0, 1.0, 2.0], d)
        Y = X + 1.0
        with pytest.raises(DegenerateGeometryError):
            rigid_align(X, Y)

    def test_too_few_points(self):
        X = np.zeros((2, 3))
        with pytest.raises(DegenerateGeometryError):
            rigid_align(X, X)

    def test_rotation_invariants_always_hold(self):
        # noisy, reflected, whatever: output is still a proper rotation
        rng = np.random.default_rng(10)
        for _ in range(50):
            X = rng.normal(size=(5, 3))
            Y = rng.normal(size=(5, 3))
            R, t, rms = rigid_align(X, Y)  # Rotation type validates internally
            assert abs(np.linalg.det(R.matrix) - 1) < 1e-9


def test_quadratic_poly_eval():
    g = QuadraticPoly(2.0, -3.0, 1.0)
    assert g(0.0) == 1.0
    assert g(1.0) == 0.0
    np.testing.assert_allclose(g.coeffs(), [2.0, -3.0, 1.0])
