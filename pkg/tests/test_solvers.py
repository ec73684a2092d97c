import numpy as np
import pytest

from depthpose.geometry import (
    CameraIntrinsics,
    Correspondence,
    ImagePoint,
    random_rotation,
)
from depthpose.solvers import (
    SOLVERS,
    DegenerateSampleError,
    MinimalSample,
    build_length_system,
    reduce_length_system,
    solve_3pt_s00_f,
    solve_3pt_s00_f12,
    solve_3pt_suv,
    solve_4pt_suv_f,
    solve_4pt_suv_f12,
    solve_7pt,
    solve_minimal,
    solve_p3p,
)

from util import ang_err_deg, make_instance, model_residual, rot_err_deg

CENTER = (320.0, 240.0)


def identity_corrs(rng, n, depth_equal=True):
    """Both cameras identical: p == q, equal depths, unit intrinsics."""
    corrs = []
    for _ in range(n):
        z = rng.uniform(2, 8)
        x, y = rng.uniform(-0.5, 0.5, 2) * z
        d = z
        px = ImagePoint(x / z, y / z)
        corrs.append(Correspondence(px, px, d, d))
    return corrs


def recovery_error(cand, inst, check_focal=0):
    errs = [
        rot_err_deg(cand.pose.rotation.matrix, inst.R),
    ]
    tn = np.linalg.norm(inst.t)
    if tn > 0:
        errs.append(np.linalg.norm(cand.pose.translation - inst.t) / tn)
    if cand.depth_params is not None:
        errs.append(abs(cand.depth_params.scale - inst.s))
        errs.append(abs(cand.depth_params.shift1 - inst.u))
        errs.append(abs(cand.depth_params.shift2 - inst.v))
    if check_focal >= 1:
        errs.append(abs(cand.f1 - inst.K1.f) / inst.K1.f)
    if check_focal == 2:
        errs.append(abs(cand.f2 - inst.K2.f) / inst.K2.f)
    return max(errs)


class Test3ptSuv:
    def test_identity_cameras(self):
        rng = np.random.default_rng(0)
        Kid = CameraIntrinsics(1.0)
        cands = solve_3pt_suv(identity_corrs(rng, 3), Kid, Kid)
        best = min(cands, key=lambda c: rot_err_deg(c.pose.rotation.matrix, np.eye(3)))
        assert rot_err_deg(best.pose.rotation.matrix, np.eye(3)) < 1e-7
        assert np.linalg.norm(best.pose.translation) < 1e-9
        assert abs(best.depth_params.scale - 1) < 1e-9
        assert abs(best.depth_params.shift1) < 1e-9
        assert abs(best.depth_params.shift2) < 1e-9
        assert best.residual < 1e-9

    def test_forward_generation_recovery(self):
        rng = np.random.default_rng(1)
        inst = make_instance(rng, 3, s=1.7, u=0.31, v=-0.12)
        cands = solve_3pt_suv(inst.corrs, inst.K1, inst.K2)
        assert min(recovery_error(c, inst) for c in cands) < 1e-6

    def test_randomized_recovery(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            s = rng.uniform(0.3, 3.0)
            u = rng.uniform(-1, 1)
            v = rng.uniform(-1, 1)
            inst = make_instance(rng, 3, s=s, u=u, v=v)
            cands = solve_3pt_suv(inst.corrs, inst.K1, inst.K2)
            assert min(recovery_error(c, inst) for c in cands) < 1e-6

    def test_count_cap(self):
        rng = np.random.default_rng(3)
        for _ in range(2000):
            inst = make_instance(rng, 3, s=rng.uniform(0.3, 3), u=rng.uniform(-1, 1),
                                 v=rng.uniform(-1, 1))
            assert len(solve_3pt_suv(inst.corrs, inst.K1, inst.K2)) <= 4

    def test_scale_always_positive_and_cheiral(self):
        rng = np.random.default_rng(4)
        for _ in range(300):
            inst = make_instance(rng, 3, s=rng.uniform(0.3, 3), u=rng.uniform(-1, 1),
                                 v=rng.uniform(-1, 1))
            for c in solve_3pt_suv(inst.corrs, inst.K1, inst.K2):
                assert c.depth_params.scale > 0
                lifted1 = inst.d1 + c.depth_params.shift1
                lifted2 = inst.d2 + c.depth_params.shift2
                assert np.all(lifted1 > 0) and np.all(lifted2 > 0)

    def test_residual_closure(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            inst = make_instance(rng, 3, s=rng.uniform(0.5, 2), u=rng.uniform(-.5, .5),
                                 v=rng.uniform(-.5, .5))
            scale = float(np.max(inst.d1))
            for c in solve_3pt_suv(inst.corrs, inst.K1, inst.K2):
                res = model_residual(
                    inst, c.pose.rotation.matrix, c.pose.translation,
                    c.depth_params.scale, c.depth_params.shift1, c.depth_params.shift2,
                )
                assert res <= 1e-6 * scale
                assert abs(res - c.residual) <= 1e-6 * scale

    def test_pure_rotation(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            inst = make_instance(rng, 3, s=1.4, u=0.25, v=-0.3, pure_rotation=True)
            cands = solve_3pt_suv(inst.corrs, inst.K1, inst.K2)
            scale = float(np.max(inst.d1))
            best = min(np.linalg.norm(c.pose.translation) for c in cands)
            assert best < 1e-6 * scale

    def test_degenerate_duplicate_points(self):
        rng = np.random.default_rng(7)
        inst = make_instance(rng, 3, s=1.2)
        corrs = [inst.corrs[0], inst.corrs[0], inst.corrs[1]]
        with pytest.raises(DegenerateSampleError):
            solve_3pt_suv(corrs, inst.K1, inst.K2)

    def test_candidates_sorted_by_residual(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            inst = make_instance(rng, 3, s=rng.uniform(0.5, 2), u=rng.uniform(-.5, .5),
                                 v=rng.uniform(-.5, .5))
            cands = solve_3pt_suv(inst.corrs, inst.K1, inst.K2)
            rs = [c.residual for c in cands]
            assert rs == sorted(rs)

    def test_missing_depth_rejected(self):
        rng = np.random.default_rng(9)
        inst = make_instance(rng, 3)
        bad = list(inst.corrs)
        bad[1] = Correspondence(bad[1].p, bad[1].q, bad[1].depth1, None)
        with pytest.raises(ValueError):
            solve_3pt_suv(bad, inst.K1, inst.K2)


class TestEliminationSystemPath:
    def test_matches_fast_path(self):
        """The inspectable 3x6 construction agrees with the compiled solver."""
        rng = np.random.default_rng(10)
        for _ in range(20):
            inst = make_instance(rng, 3, s=rng.uniform(0.5, 2), u=rng.uniform(-.5, .5),
                                 v=rng.uniform(-.5, .5))
            system = build_length_system(inst.corrs, inst.K1, inst.K2)
            assert system.coeffs.shape == (3, 6)
            assert system.monomials == ("c*v^2", "c*v", "c", "u^2", "u", "1")
            g1, g2, g3 = reduce_length_system(system)
            # the true (c, v, u) satisfies all three reduced relations
            c = inst.s ** 2
            assert abs(g1(inst.u) - c * inst.v ** 2) < 1e-8 * max(1, c)
            assert abs(g2(inst.u) - c * inst.v) < 1e-8 * max(1, c)
            assert abs(g3(inst.u) - c) < 1e-8 * max(1, c)

    def test_quartic_vanishes_at_true_shift(self):
        rng = np.random.default_rng(11)
        inst = make_instance(rng, 3, s=1.3, u=0.4, v=-0.2)
        g1, g2, g3 = reduce_length_system(build_length_system(inst.corrs, inst.K1, inst.K2))
        val = g2(inst.u) ** 2 - g1(inst.u) * g3(inst.u)
        assert abs(val) < 1e-8


class TestP3P:
    def test_identity(self):
        rng = np.random.default_rng(12)
        Kid = CameraIntrinsics(1.0)
        cands = solve_p3p(identity_corrs(rng, 3), Kid, Kid)
        best = min(cands, key=lambda c: rot_err_deg(c.pose.rotation.matrix, np.eye(3)))
        assert rot_err_deg(best.pose.rotation.matrix, np.eye(3)) < 1e-7
        assert np.linalg.norm(best.pose.translation) < 1e-9

    def test_forward_projection_recovery(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            inst = make_instance(rng, 3, s=1.0, u=0.0, v=0.0)
            cands = solve_p3p(inst.corrs, inst.K1, inst.K2)
            best = min(
                max(rot_err_deg(c.pose.rotation.matrix, inst.R),
                    np.linalg.norm(c.pose.translation - inst.t) / np.linalg.norm(inst.t))
                for c in cands
            )
            assert best < 1e-6

    def test_count_cap(self):
        rng = np.random.default_rng(14)
        for _ in range(2000):
            inst = make_instance(rng, 3)
            assert len(solve_p3p(inst.corrs, inst.K1, inst.K2)) <= 4

    def test_no_depth_params_reported(self):
        rng = np.random.default_rng(15)
        inst = make_instance(rng, 3)
        for c in solve_p3p(inst.corrs, inst.K1, inst.K2):
            assert c.depth_params is None

    def test_collinear_degenerate(self):
        K = CameraIntrinsics(1.0)
        corrs = [
            Correspondence(ImagePoint(0.1 * i, 0.1 * i), ImagePoint(0.05 * i, 0.0), 5.0, None)
            for i in range(3)
        ]
        # all three lifted points lie on one ray through the origin direction
        corrs = [
            Correspondence(ImagePoint(0.2, 0.1), ImagePoint(0.1, 0.0), float(2 + i), None)
            for i in range(3)
        ]
        with pytest.raises(DegenerateSampleError):
            solve_p3p(corrs, K, K)


class Test3ptS00F:
    def test_identity_cameras_degenerate(self):
        # two identical views satisfy the length equations for EVERY focal
        # length, so the sample cannot pin f: degenerate or empty, never a
        # spurious confident answer
        rng = np.random.default_rng(16)
        f = 600.0
        corrs = []
        for _ in range(3):
            z = rng.uniform(2, 8)
            x, y = rng.uniform(-0.4, 0.4, 2) * z
            px = ImagePoint(f * x / z, f * y / z)
            corrs.append(Correspondence(px, px, z, z))
        try:
            cands = solve_3pt_s00_f(corrs)
        except DegenerateSampleError:
            return
        assert cands == []

    def test_forward_generation_recovery(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            s = rng.uniform(0.4, 2.5)
            f = rng.uniform(300, 1500)
            inst = make_instance(rng, 3, s=s, f1=f, f2=f)
            cands = solve_3pt_s00_f(inst.corrs, CENTER, CENTER)
            assert cands, "no candidates on a consistent instance"
            assert min(recovery_error(c, inst, check_focal=1) for c in cands) < 1e-6

    def test_count_cap(self):
        rng = np.random.default_rng(18)
        for _ in range(2000):
            f = rng.uniform(300, 1500)
            inst = make_instance(rng, 3, s=rng.uniform(0.4, 2.5), f1=f, f2=f)
            assert len(solve_3pt_s00_f(inst.corrs, CENTER, CENTER)) <= 4

    def test_zero_shift_semantics(self):
        rng = np.random.default_rng(19)
        inst = make_instance(rng, 3, s=1.5, f1=700.0, f2=700.0)
        for c in solve_3pt_s00_f(inst.corrs, CENTER, CENTER):
            assert c.depth_params.shift1 == 0.0
            assert c.depth_params.shift2 == 0.0
            assert c.f1 == c.f2

    def test_third_point_needs_no_second_depth(self):
        rng = np.random.default_rng(20)
        inst = make_instance(rng, 3, s=1.5, f1=700.0, f2=700.0)
        corrs = list(inst.corrs)
        corrs[2] = Correspondence(corrs[2].p, corrs[2].q, corrs[2].depth1, None)
        cands = solve_3pt_s00_f(corrs, CENTER, CENTER)
        assert min(recovery_error(c, inst, check_focal=1) for c in cands) < 1e-6


class Test3ptS00F12:
    def test_identity_cameras_degenerate(self):
        # focal lengths are unobservable between two identical views
        rng = np.random.default_rng(21)
        f = 500.0
        corrs = []
        for _ in range(3):
            z = rng.uniform(2, 8)
            x, y = rng.uniform(-0.4, 0.4, 2) * z
            px = ImagePoint(f * x / z, f * y / z)
            corrs.append(Correspondence(px, px, z, z))
        try:
            cands = solve_3pt_s00_f12(corrs)
        except DegenerateSampleError:
            return
        assert cands == []

    def test_forward_generation_recovery(self):
        rng = np.random.default_rng(22)
        for _ in range(200):
            inst = make_instance(
                rng, 3, s=rng.uniform(0.4, 2.5),
                f1=rng.uniform(300, 1200), f2=rng.uniform(300, 1200),
            )
            cands = solve_3pt_s00_f12(inst.corrs, CENTER, CENTER)
            assert len(cands) == 1
            assert recovery_error(cands[0], inst, check_focal=2) < 1e-6

    def test_unique_candidate(self):
        rng = np.random.default_rng(23)
        for _ in range(2000):
            inst = make_instance(
                rng, 3, s=rng.uniform(0.4, 2.5),
                f1=rng.uniform(300, 1200), f2=rng.uniform(300, 1200),
            )
            assert len(solve_3pt_s00_f12(inst.corrs, CENTER, CENTER)) <= 1

    def test_specific_example(self):
        rng = np.random.default_rng(24)
        inst = make_instance(rng, 3, s=2.5, f1=400.0, f2=800.0)
        c = solve_3pt_s00_f12(inst.corrs, CENTER, CENTER)[0]
        assert abs(c.f1 - 400.0) / 400.0 < 1e-6
        assert abs(c.f2 - 800.0) / 800.0 < 1e-6
        assert rot_err_deg(c.pose.rotation.matrix, inst.R) < 1e-6


class Test4ptSuvF:
    def test_identity_cameras_degenerate(self):
        # identical views leave (shift, focal) directions unconstrained
        rng = np.random.default_rng(25)
        f = 700.0
        corrs = []
        for _ in range(4):
            z = rng.uniform(2, 8)
            x, y = rng.uniform(-0.4, 0.4, 2) * z
            px = ImagePoint(f * x / z, f * y / z)
            corrs.append(Correspondence(px, px, z, z))
        try:
            cands = solve_4pt_suv_f(corrs)
        except DegenerateSampleError:
            return
        assert cands == []

    def test_forward_generation_recovery(self):
        rng = np.random.default_rng(26)
        inst = make_instance(rng, 4, s=1.3, u=0.2, v=-0.1, f1=700.0, f2=700.0)
        cands = solve_4pt_suv_f(inst.corrs, CENTER, CENTER)
        assert min(recovery_error(c, inst, check_focal=1) for c in cands) < 1e-6

    def test_randomized_recovery(self):
        rng = np.random.default_rng(27)
        for _ in range(200):
            f = rng.uniform(300, 1500)
            inst = make_instance(rng, 4, s=rng.uniform(0.5, 2), u=rng.uniform(-.5, .5),
                                 v=rng.uniform(-.5, .5), f1=f, f2=f)
            cands = solve_4pt_suv_f(inst.corrs, CENTER, CENTER)
            assert min(recovery_error(c, inst, check_focal=1) for c in cands) < 1e-6

    def test_count_cap(self):
        rng = np.random.default_rng(28)
        for _ in range(2000):
            f = rng.uniform(300, 1500)
            inst = make_instance(rng, 4, s=rng.uniform(0.5, 2), u=rng.uniform(-.5, .5),
                                 v=rng.uniform(-.5, .5), f1=f, f2=f)
            assert len(solve_4pt_suv_f(inst.corrs, CENTER, CENTER)) <= 2


class Test4ptSuvF12:
    def test_identity_cameras_degenerate(self):
        rng = np.random.default_rng(29)
        f = 650.0
        corrs = []
        for _ in range(4):
            z = rng.uniform(2, 8)
            x, y = rng.uniform(-0.4, 0.4, 2) * z
            px = ImagePoint(f * x / z, f * y / z)
            corrs.append(Correspondence(px, px, z, z))
        try:
            cands = solve_4pt_suv_f12(corrs)
        except DegenerateSampleError:
            return
        assert cands == []

    def test_forward_generation_recovery(self):
        rng = np.random.default_rng(30)
        inst = make_instance(rng, 4, s=0.8, u=0.15, v=0.25, f1=500.0, f2=900.0)
        cands = solve_4pt_suv_f12(inst.corrs, CENTER, CENTER)
        best = min(cands, key=lambda c: recovery_error(c, inst, check_focal=2))
        assert recovery_error(best, inst, check_focal=2) < 1e-6
        # geometric-mean focal error, the two-camera reporting convention
        ge = np.sqrt(
            abs(best.f1 - 500.0) / 500.0 * abs(best.f2 - 900.0) / 900.0
        )
        assert ge < 1e-6

    def test_randomized_recovery(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            inst = make_instance(
                rng, 4, s=rng.uniform(0.5, 2), u=rng.uniform(-.5, .5),
                v=rng.uniform(-.5, .5),
                f1=rng.uniform(300, 1500), f2=rng.uniform(300, 1500),
            )
            cands = solve_4pt_suv_f12(inst.corrs, CENTER, CENTER)
            assert min(recovery_error(c, inst, check_focal=2) for c in cands) < 1e-6

    def test_count_cap(self):
        rng = np.random.default_rng(32)
        for _ in range(2000):
            inst = make_instance(
                rng, 4, s=rng.uniform(0.5, 2), u=rng.uniform(-.5, .5),
                v=rng.uniform(-.5, .5),
                f1=rng.uniform(300, 1500), f2=rng.uniform(300, 1500),
            )
            assert len(solve_4pt_suv_f12(inst.corrs, CENTER, CENTER)) <= 2


def sampson_px(F, c):
    x1 = np.array([c.p.x, c.p.y, 1.0])
    x2 = np.array([c.q.x, c.q.y, 1.0])
    Fx = F @ x1
    Ftx = F.T @ x2
    return (x2 @ Fx) ** 2 / (Fx[0] ** 2 + Fx[1] ** 2 + Ftx[0] ** 2 + Ftx[1] ** 2)


class Test7pt:
    def test_forward_projection(self):
        rng = np.random.default_rng(33)
        for _ in range(100):
            inst = make_instance(rng, 7)
            Fs = solve_7pt(inst.corrs)
            # ground-truth F up to scale: K2^-T [t]x R K1^-1
            tx = np.array([
                [0, -inst.t[2], inst.t[1]],
                [inst.t[2], 0, -inst.t[0]],
                [-inst.t[1], inst.t[0], 0],
            ])
            Fgt = inst.K2.K_inv.T @ tx @ inst.R @ inst.K1.K_inv
            Fgt /= np.linalg.norm(Fgt)
            found = False
            for F in Fs:
                d = min(np.max(np.abs(F - Fgt)), np.max(np.abs(F + Fgt)))
                if d < 1e-6:
                    found = True
                assert max(sampson_px(F, c) for c in inst.corrs) < 1e-9
            assert found

    def test_count_cap(self):
        rng = np.random.default_rng(34)
        for _ in range(2000):
            inst = make_instance(rng, 7)
            assert len(solve_7pt(inst.corrs)) <= 3

    def test_pure_rotation_epipolar_residuals(self):
        # zero baseline admits a >2-dimensional family of compatible F's; the
        # solver may flag the rank loss, and anything it does return must
        # still satisfy the epipolar constraint on all seven points
        rng = np.random.default_rng(35)
        for _ in range(20):
            inst = make_instance(rng, 7, pure_rotation=True)
            try:
                Fs = solve_7pt(inst.corrs)
            except DegenerateSampleError:
                continue
            for F in Fs:
                assert max(sampson_px(F, c) for c in inst.corrs) < 1e-9

    def test_duplicate_points_degenerate(self):
        rng = np.random.default_rng(36)
        inst = make_instance(rng, 7)
        corrs = list(inst.corrs)
        corrs[1] = corrs[0]
        corrs[2] = corrs[0]
        with pytest.raises(DegenerateSampleError):
            solve_7pt(corrs)

    def test_frobenius_normalized(self):
        rng = np.random.default_rng(37)
        inst = make_instance(rng, 7)
        for F in solve_7pt(inst.corrs):
            assert abs(np.linalg.norm(F) - 1.0) < 1e-12
            assert abs(np.linalg.det(F)) < 1e-9


class TestDispatchAndSample:
    def test_minimal_sample_validation(self):
        rng = np.random.default_rng(38)
        inst = make_instance(rng, 3)
        MinimalSample(inst.corrs, inst.K1, inst.K2).validate_for("3pt_suv")
        with pytest.raises(ValueError):
            MinimalSample(inst.corrs[:2], inst.K1, inst.K2).validate_for("3pt_suv")
        with pytest.raises(ValueError):
            MinimalSample(inst.corrs).validate_for("3pt_suv")  # intrinsics missing

    def test_solver_registry_complete(self):
        assert set(SOLVERS) == {
            "3pt_suv", "p3p", "3pt_s00_f", "3pt_s00_f12",
            "4pt_suv_f", "4pt_suv_f12", "7pt",
        }
        caps = {k: v.max_solutions for k, v in SOLVERS.items()}
        assert caps == {
            "3pt_suv": 4, "p3p": 4, "3pt_s00_f": 4, "3pt_s00_f12": 1,
            "4pt_suv_f": 2, "4pt_suv_f12": 2, "7pt": 3,
        }

    def test_dispatch_matches_direct_call(self):
        rng = np.random.default_rng(39)
        inst = make_instance(rng, 3, s=1.2, u=0.1, v=-0.1)
        a = solve_minimal("3pt_suv", inst.corrs, inst.K1, inst.K2)
        b = solve_3pt_suv(inst.corrs, inst.K1, inst.K2)
        assert len(a) == len(b)
        for ca, cb in zip(a, b):
            assert np.allclose(ca.pose.rotation.matrix, cb.pose.rotation.matrix)

    def test_unknown_solver(self):
        with pytest.raises(ValueError):
            solve_minimal("5pt", [], None, None)
