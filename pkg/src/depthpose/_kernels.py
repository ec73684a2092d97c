"""Compiled numerical kernels.

Everything here is numba-jitted, operates on plain float64 arrays and returns
either counts (>= 0) or -1 for a degenerate input. Pose candidates are packed
as rows of 18 floats: R (9, row-major), t (3), scale, shift1, shift2, f1, f2,
residual; NaN marks fields a solver does not estimate.

The public modules wrap these kernels with validated types; keep the kernels
free of Python objects so a whole minimal solve stays a single compiled call.
"""

import math

import numpy as np
from numba import njit

NAN = np.nan

# candidate row layout
C_R = 0      # 0..8   rotation, row-major
C_T = 9      # 9..11  translation
C_S = 12     # scale ratio
C_U = 13     # shift image 1
C_V = 14     # shift image 2
C_F1 = 15
C_F2 = 16
C_RES = 17
C_LEN = 18


# ---------------------------------------------------------------------------
# linear algebra helpers
# ---------------------------------------------------------------------------

@njit(cache=True)
def gauss_jordan(M, pivot_tol):
    """In-place Gauss-Jordan with partial pivoting by max absolute value.

    Returns (rank, pivot_cols) where pivot_cols[:rank] holds the pivot column
    of each reduced row. A pivot counts only if its magnitude exceeds
    pivot_tol times the largest absolute entry of the input.
    """
    m, n = M.shape
    scale = 0.0
    for i in range(m):
        for j in range(n):
            a = abs(M[i, j])
            if a > scale:
                scale = a
    pivot_cols = np.full(m, -1, dtype=np.int64)
    if scale == 0.0:
        return 0, pivot_cols
    thresh = pivot_tol * scale
    rank = 0
    col = 0
    while rank < m and col < n:
        best = rank
        best_val = abs(M[rank, col])
        for i in range(rank + 1, m):
            if abs(M[i, col]) > best_val:
                best_val = abs(M[i, col])
                best = i
        if best_val <= thresh:
            col += 1
            continue
        if best != rank:
            for j in range(n):
                tmp = M[rank, j]
                M[rank, j] = M[best, j]
                M[best, j] = tmp
        piv = M[rank, col]
        for j in range(n):
            M[rank, j] /= piv
        M[rank, col] = 1.0
        for i in range(m):
            if i == rank:
                continue
            fac = M[i, col]
            if fac != 0.0:
                for j in range(n):
                    M[i, j] -= fac * M[rank, j]
                M[i, col] = 0.0
        pivot_cols[rank] = col
        rank += 1
        col += 1
    return rank, pivot_cols


@njit(cache=True)
def kabsch_align(X, Y):
    """Least-squares rotation + translation with Y ~= R X + t.

    Returns (R, t, rms, sv_ratio) with sv_ratio the ratio of the second to the
    first singular value of the cross-covariance; near-zero signals the point
    sets cannot pin the rotation (collinear configuration).
    """
    n = X.shape[0]
    mx = np.zeros(3)
    my = np.zeros(3)
    for i in range(n):
        for k in range(3):
            mx[k] += X[i, k]
            my[k] += Y[i, k]
    for k in range(3):
        mx[k] /= n
        my[k] /= n
    H = np.zeros((3, 3))
    for i in range(n):
        for a in range(3):
            xa = X[i, a] - mx[a]
            for b in range(3):
                H[a, b] += xa * (Y[i, b] - my[b])
    U, S, Vt = np.linalg.svd(H)
    d = np.linalg.det(U) * np.linalg.det(Vt)
    R = np.empty((3, 3))
    for a in range(3):
        for b in range(3):
            acc = 0.0
            for k in range(3):
                sk = 1.0 if k < 2 else (1.0 if d > 0 else -1.0)
                acc += Vt[k, a] * sk * U[b, k]
            R[a, b] = acc
    t = np.empty(3)
    for a in range(3):
        t[a] = my[a] - (R[a, 0] * mx[0] + R[a, 1] * mx[1] + R[a, 2] * mx[2])
    rms = 0.0
    for i in range(n):
        e = 0.0
        for a in range(3):
            pred = R[a, 0] * X[i, 0] + R[a, 1] * X[i, 1] + R[a, 2] * X[i, 2] + t[a]
            e += (Y[i, a] - pred) ** 2
        rms += e
    rms = math.sqrt(rms / n)
    ratio = S[1] / S[0] if S[0] > 0.0 else 0.0
    return R, t, rms, ratio


@njit(cache=True)
def _det3(a):
    return (
        a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
        - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
        + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0])
    )


@njit(cache=True)
def _solve3(A, b, out):
    """Cramer solve of a 3x3 system; returns False when near-singular."""
    d = _det3(A)
    scale = 0.0
    for i in range(3):
        for j in range(3):
            if abs(A[i, j]) > scale:
                scale = abs(A[i, j])
    if abs(d) <= 1e-14 * scale ** 3 or d == 0.0:
        return False
    T = A.copy()
    for j in range(3):
        for i in range(3):
            T[i, j] = b[i]
        out[j] = _det3(T) / d
        for i in range(3):
            T[i, j] = A[i, j]
    return True


# ---------------------------------------------------------------------------
# real roots of low-degree polynomials (closed form, Newton-polished)
# ---------------------------------------------------------------------------

@njit(cache=True)
def quadratic_real(b, c, roots):
    """Real roots of x^2 + b x + c, stable two-root form. Returns count."""
    disc = b * b - 4.0 * c
    if disc < 0.0:
        return 0
    sq = math.sqrt(disc)
    if b >= 0.0:
        q = -0.5 * (b + sq)
    else:
        q = -0.5 * (b - sq)
    if q != 0.0:
        roots[0] = q
        roots[1] = c / q
    else:
        roots[0] = 0.0
        roots[1] = -b
    return 2


@njit(cache=True)
def cubic_real(b, c, d, roots):
    """Real roots of x^3 + b x^2 + c x + d. Returns count (1 or 3)."""
    third = 1.0 / 3.0
    sh = b * third
    p = c - b * b * third
    q = d + sh * (2.0 * sh * sh - c)
    # t^3 + p t + q = 0
    if p == 0.0 and q == 0.0:
        roots[0] = -sh
        return 1
    disc = 0.25 * q * q + p * p * p / 27.0
    if disc > 0.0:
        sq = math.sqrt(disc)
        u1 = -0.5 * q + sq
        u2 = -0.5 * q - sq
        t = math.copysign(abs(u1) ** third, u1) + math.copysign(abs(u2) ** third, u2)
        roots[0] = t - sh
        n = 1
    else:
        m = 2.0 * math.sqrt(max(-p * third, 0.0))
        if m == 0.0:
            roots[0] = -sh
            return 1
        arg = 3.0 * q / (p * m)
        if arg > 1.0:
            arg = 1.0
        elif arg < -1.0:
            arg = -1.0
        theta = math.acos(arg) * third
        for k in range(3):
            roots[k] = m * math.cos(theta - 2.0943951023931953 * k) - sh
        n = 3
    # one Newton step per root against the monic cubic
    for i in range(n):
        x = roots[i]
        fp = (3.0 * x + 2.0 * b) * x + c
        if fp != 0.0:
            f = ((x + b) * x + c) * x + d
            roots[i] = x - f / fp
    return n


@njit(cache=True)
def quartic_real(c4, c3, c2, c1, c0, roots):
    """Real roots of c4 x^4 + ... + c0, ascending order.

    Closed-form (resolvent cubic) with two Newton polish steps per root and
    graceful degradation to cubic/quadratic/linear when leading coefficients
    vanish. Returns the root count, or -1 for the identically zero polynomial.
    """
    scale = max(abs(c4), abs(c3), abs(c2), abs(c1), abs(c0))
    if scale == 0.0:
        return -1
    lead_tol = 1e-13 * scale
    if abs(c4) <= lead_tol:
        if abs(c3) <= lead_tol:
            if abs(c2) <= lead_tol:
                if abs(c1) <= lead_tol:
                    return 0
                roots[0] = -c0 / c1
                return 1
            tmp = np.empty(2)
            n = quadratic_real(c1 / c2, c0 / c2, tmp)
            for i in range(n):
                roots[i] = tmp[i]
        else:
            tmp = np.empty(3)
            n = cubic_real(c2 / c3, c1 / c3, c0 / c3, tmp)
            for i in range(n):
                roots[i] = tmp[i]
    else:
        b = c3 / c4
        c = c2 / c4
        d = c1 / c4
        e = c0 / c4
        # depressed quartic y^4 + p y^2 + q y + r, x = y - b/4
        qb = 0.25 * b
        p = c - 6.0 * qb * qb
        q = d - 2.0 * c * qb + 8.0 * qb ** 3
        r = e - d * qb + c * qb * qb - 3.0 * qb ** 4
        n = 0
        use_biquad = q == 0.0
        m = 0.0
        if not use_biquad:
            # resolvent: 8 m^3 + 8 p m^2 + (2 p^2 - 8 r) m - q^2 = 0
            rr = np.empty(3)
            nr = cubic_real(p, 0.25 * p * p - r, -0.125 * q * q, rr)
            m = rr[0]
            for i in range(1, nr):
                if rr[i] > m:
                    m = rr[i]
            if m <= 1e-14 * max(1.0, abs(p), math.sqrt(abs(r))):
                use_biquad = True
        if use_biquad:
            zz = np.empty(2)
            nz = quadratic_real(p, r, zz)
            for i in range(nz):
                if zz[i] >= 0.0:
                    s = math.sqrt(zz[i])
                    roots[n] = s - qb
                    n += 1
                    roots[n] = -s - qb
                    n += 1
        else:
            s2m = math.sqrt(2.0 * m)
            half = 0.5 * p + m
            shift = 0.5 * q / s2m
            tmp = np.empty(2)
            n2 = quadratic_real(-s2m, half + shift, tmp)
            for i in range(n2):
                roots[n] = tmp[i] - qb
                n += 1
            n2 = quadratic_real(s2m, half - shift, tmp)
            for i in range(n2):
                roots[n] = tmp[i] - qb
                n += 1
    # two Newton polish steps on the original quartic
    for i in range(n):
        x = roots[i]
        for _ in range(2):
            fp = ((4.0 * c4 * x + 3.0 * c3) * x + 2.0 * c2) * x + c1
            if fp == 0.0:
                break
            f = (((c4 * x + c3) * x + c2) * x + c1) * x + c0
            x = x - f / fp
        roots[i] = x
    # ascending insertion sort
    for i in range(1, n):
        key = roots[i]
        j = i - 1
        while j >= 0 and roots[j] > key:
            roots[j + 1] = roots[j]
            j -= 1
        roots[j + 1] = key
    return n


@njit(cache=True)
def quartic_real_companion(c4, c3, c2, c1, c0, roots):
    """Real roots via balanced companion eigenvalues.

    Slower than the closed form but stable when root magnitudes span many
    decades (remote spurious roots next to clustered ones). Same interface as
    quartic_real.
    """
    coefs = np.array([c4, c3, c2, c1, c0])
    scale = np.max(np.abs(coefs))
    if scale == 0.0:
        return -1
    tol = 1e-13 * scale
    lead = 0
    while lead < 4 and abs(coefs[lead]) <= tol:
        lead += 1
    deg = 4 - lead
    if deg == 0:
        return 0
    if deg == 1:
        roots[0] = -coefs[4] / coefs[3]
        return 1
    mon = coefs[lead:] / coefs[lead]
    # complex dtype: real companions with complex spectra are a domain change
    C = np.zeros((deg, deg), dtype=np.complex128)
    for i in range(1, deg):
        C[i, i - 1] = 1.0
    for i in range(deg):
        C[i, deg - 1] = -mon[deg - i]
    ev = np.linalg.eigvals(C)
    n = 0
    for k in range(deg):
        if abs(ev[k].imag) <= 1e-6 * (1.0 + abs(ev[k].real)):
            x = ev[k].real
            for _ in range(2):
                fp = ((4.0 * c4 * x + 3.0 * c3) * x + 2.0 * c2) * x + c1
                if fp == 0.0:
                    break
                f = (((c4 * x + c3) * x + c2) * x + c1) * x + c0
                x = x - f / fp
            roots[n] = x
            n += 1
    for i in range(1, n):
        key = roots[i]
        j = i - 1
        while j >= 0 and roots[j] > key:
            roots[j + 1] = roots[j]
            j -= 1
        roots[j + 1] = key
    return n


@njit(cache=True)
def eig2x2_real(a, b, c, d, out):
    """Real eigenvalues of [[a, b], [c, d]]. Returns count (0 or 2)."""
    tr = a + d
    disc = 0.25 * (a - d) ** 2 + b * c
    if disc < 0.0:
        return 0
    sq = math.sqrt(disc)
    out[0] = 0.5 * tr + sq
    out[1] = 0.5 * tr - sq
    return 2


# ---------------------------------------------------------------------------
# candidate packing helpers
# ---------------------------------------------------------------------------

@njit(cache=True)
def _write_candidate(out, k, R, t, s, u, v, f1, f2, res):
    for a in range(3):
        for b in range(3):
            out[k, C_R + 3 * a + b] = R[a, b]
        out[k, C_T + a] = t[a]
    out[k, C_S] = s
    out[k, C_U] = u
    out[k, C_V] = v
    out[k, C_F1] = f1
    out[k, C_F2] = f2
    out[k, C_RES] = res


@njit(cache=True)
def _align_and_pack(X, Y, out, k, s, u, v, f1, f2):
    """Rigid-align X->Y, store candidate k; returns False on degenerate geometry."""
    R, t, rms, ratio = kabsch_align(X, Y)
    if ratio < 1e-9:
        return False
    res = 0.0
    n = X.shape[0]
    for i in range(n):
        e = 0.0
        for a in range(3):
            pred = R[a, 0] * X[i, 0] + R[a, 1] * X[i, 1] + R[a, 2] * X[i, 2] + t[a]
            e += (Y[i, a] - pred) ** 2
        e = math.sqrt(e)
        if e > res:
            res = e
    _write_candidate(out, k, R, t, s, u, v, f1, f2, res)
    return True


# ---------------------------------------------------------------------------
# calibrated three-point solver with joint scale and two shifts
# ---------------------------------------------------------------------------

@njit(cache=True)
def solve_3pt_suv(pn, qn, d1, d2, out):
    """Three normalized 3D-3D correspondences -> pose + (scale, shift, shift).

    pn, qn: (3, 3) normalized homogeneous points (z = 1); d1, d2: (3,) depth
    priors. Writes up to 4 candidates into out (4, 18); returns the count or
    -1 when the elimination system is rank-deficient.
    """
    sd = (abs(d1[0]) + abs(d1[1]) + abs(d1[2]) + abs(d2[0]) + abs(d2[1]) + abs(d2[2])) / 6.0
    if sd <= 0.0 or not math.isfinite(sd):
        return -1
    a = d1 / sd
    b = d2 / sd

    M = np.empty((3, 6))
    row = 0
    for i in range(2):
        for j in range(i + 1, 3):
            qq_ii = qn[i, 0] * qn[i, 0] + qn[i, 1] * qn[i, 1] + qn[i, 2] * qn[i, 2]
            qq_jj = qn[j, 0] * qn[j, 0] + qn[j, 1] * qn[j, 1] + qn[j, 2] * qn[j, 2]
            qq_ij = qn[i, 0] * qn[j, 0] + qn[i, 1] * qn[j, 1] + qn[i, 2] * qn[j, 2]
            pp_ii = pn[i, 0] * pn[i, 0] + pn[i, 1] * pn[i, 1] + pn[i, 2] * pn[i, 2]
            pp_jj = pn[j, 0] * pn[j, 0] + pn[j, 1] * pn[j, 1] + pn[j, 2] * pn[j, 2]
            pp_ij = pn[i, 0] * pn[j, 0] + pn[i, 1] * pn[j, 1] + pn[i, 2] * pn[j, 2]
            # c*| (b_i+v)q_i - (b_j+v)q_j |^2 = | (a_i+u)p_i - (a_j+u)p_j |^2
            M[row, 0] = qq_ii - 2.0 * qq_ij + qq_jj
            M[row, 1] = 2.0 * (b[i] * qq_ii - (b[i] + b[j]) * qq_ij + b[j] * qq_jj)
            M[row, 2] = b[i] * b[i] * qq_ii - 2.0 * b[i] * b[j] * qq_ij + b[j] * b[j] * qq_jj
            M[row, 3] = -(pp_ii - 2.0 * pp_ij + pp_jj)
            M[row, 4] = -2.0 * (a[i] * pp_ii - (a[i] + a[j]) * pp_ij + a[j] * pp_jj)
            M[row, 5] = -(a[i] * a[i] * pp_ii - 2.0 * a[i] * a[j] * pp_ij + a[j] * a[j] * pp_jj)
            row += 1

    rank, pivots = gauss_jordan(M, 1e-12)
    if rank < 3 or pivots[0] != 0 or pivots[1] != 1 or pivots[2] != 2:
        return -1
    # cv^2 = g1(u), cv = g2(u), c = g3(u); coefficients descending in u
    g1 = np.array([-M[0, 3], -M[0, 4], -M[0, 5]])
    g2 = np.array([-M[1, 3], -M[1, 4], -M[1, 5]])
    g3 = np.array([-M[2, 3], -M[2, 4], -M[2, 5]])
    # quartic g2^2 - g1*g3 (degree 4 in u)
    q4 = np.zeros(5)
    for i in range(3):
        for j in range(3):
            q4[i + j] += g2[i] * g2[j] - g1[i] * g3[j]
    roots = np.empty(4)
    nr = quartic_real(q4[0], q4[1], q4[2], q4[3], q4[4], roots)
    if nr < 0:
        # identically zero quartic: a one-parameter solution family (e.g. two
        # identical views); report the zero-shift representative
        roots[0] = 0.0
        nr = 1
    n_out = 0
    X = np.empty((3, 3))
    Y = np.empty((3, 3))
    for ir in range(nr):
        u = roots[ir]
        c = (g3[0] * u + g3[1]) * u + g3[2]
        if c <= 0.0:
            continue
        s = math.sqrt(c)
        v = ((g2[0] * u + g2[1]) * u + g2[2]) / c
        ok = True
        for i in range(3):
            if a[i] + u <= 0.0 or b[i] + v <= 0.0:
                ok = False
                break
        if not ok:
            continue
        for i in range(3):
            au = a[i] + u
            bv = s * (b[i] + v)
            for k in range(3):
                X[i, k] = au * pn[i, k]
                Y[i, k] = bv * qn[i, k]
        if _align_and_pack(X, Y, out, n_out, s, u * sd, v * sd, NAN, NAN):
            # rescale translation and residual back to input depth units
            for k in range(3):
                out[n_out, C_T + k] *= sd
            out[n_out, C_RES] *= sd
            n_out += 1
            if n_out == 4:
                break
    return n_out


# ---------------------------------------------------------------------------
# P3P: three 3D points in camera 1, bearings in camera 2
# ---------------------------------------------------------------------------

@njit(cache=True)
def solve_p3p(Xw, bearings, out):
    """Classical three-point absolute pose via the distance-ratio quartic.

    Xw: (3, 3) scene points; bearings: (3, 3) unit rays in the target camera.
    Writes up to 4 candidates (pose only); returns count or -1 (degenerate).
    """
    # condition: scale scene to unit-ish size
    sd = 0.0
    for i in range(3):
        for k in range(3):
            sd += abs(Xw[i, k])
    sd /= 9.0
    if sd <= 0.0 or not math.isfinite(sd):
        return -1
    X = Xw / sd

    ca = bearings[1, 0] * bearings[2, 0] + bearings[1, 1] * bearings[2, 1] + bearings[1, 2] * bearings[2, 2]
    cb = bearings[0, 0] * bearings[2, 0] + bearings[0, 1] * bearings[2, 1] + bearings[0, 2] * bearings[2, 2]
    cg = bearings[0, 0] * bearings[1, 0] + bearings[0, 1] * bearings[1, 1] + bearings[0, 2] * bearings[1, 2]
    a2 = 0.0
    b2 = 0.0
    c2 = 0.0
    for k in range(3):
        a2 += (X[1, k] - X[2, k]) ** 2
        b2 += (X[0, k] - X[2, k]) ** 2
        c2 += (X[0, k] - X[1, k]) ** 2
    if b2 <= 0.0 or a2 <= 0.0 or c2 <= 0.0:
        return -1
    # collinear scene points leave a free rotation about their common line
    e1x = X[1, 0] - X[0, 0]
    e1y = X[1, 1] - X[0, 1]
    e1z = X[1, 2] - X[0, 2]
    e2x = X[2, 0] - X[0, 0]
    e2y = X[2, 1] - X[0, 1]
    e2z = X[2, 2] - X[0, 2]
    cxx = e1y * e2z - e1z * e2y
    cyy = e1z * e2x - e1x * e2z
    czz = e1x * e2y - e1y * e2x
    if cxx * cxx + cyy * cyy + czz * czz <= 1e-18 * c2 * b2:
        return -1
    A = a2 / b2
    B = c2 / b2

    q4 = A * A - 2.0 * A * B - 2.0 * A + B * B - 4.0 * B * ca * ca + 2.0 * B + 1.0
    q3 = -4.0 * (A * A * cb - 2.0 * A * B * cb - A * ca * cg - A * cb
                 + B * B * cb - 2.0 * B * ca * ca * cb - B * ca * cg + B * cb + ca * cg)
    q2 = 2.0 * (2.0 * A * A * cb * cb + A * A - 4.0 * A * B * cb * cb - 2.0 * A * B
                - 4.0 * A * ca * cb * cg - 2.0 * A * cg * cg + 2.0 * B * B * cb * cb
                + B * B - 2.0 * B * ca * ca - 4.0 * B * ca * cb * cg
                + 2.0 * ca * ca + 2.0 * cg * cg - 1.0)
    q1 = -4.0 * (A * A * cb - 2.0 * A * B * cb - A * ca * cg - 2.0 * A * cb * cg * cg
                 + A * cb + B * B * cb - B * ca * cg - B * cb + ca * cg)
    q0 = A * A - 2.0 * A * B - 4.0 * A * cg * cg + 2.0 * A + B * B - 2.0 * B + 1.0

    roots = np.empty(4)
    nr = quartic_real(q4, q3, q2, q1, q0, roots)
    if nr < 0:
        return -1
    n_out = 0
    Y = np.empty((3, 3))
    for ir in range(nr):
        y = roots[ir]
        if y <= 0.0:
            continue
        den = 2.0 * (cg - ca * y)
        poly13 = y * y - 2.0 * cb * y + 1.0
        if abs(den) > 1e-10:
            x = ((A - B) * poly13 - y * y + 1.0) / den
        else:
            # x from the pair-(1,2) quadratic, disambiguated by the first equation
            tmp = np.empty(2)
            nq = quadratic_real(-2.0 * cg, 1.0 - B * poly13, tmp)
            if nq == 0:
                continue
            best_err = 1e300
            x = 0.0
            for iq in range(nq):
                xx = tmp[iq]
                err = abs(xx * xx + y * y - 2.0 * xx * y * ca - A * poly13)
                if err < best_err:
                    best_err = err
                    x = xx
        # Newton on the two ratio equations in (x, y)
        for _ in range(5):
            f1 = x * x + y * y - 2.0 * x * y * ca - A * (1.0 + y * y - 2.0 * y * cb)
            f2 = 1.0 + x * x - 2.0 * x * cg - B * (1.0 + y * y - 2.0 * y * cb)
            j00 = 2.0 * x - 2.0 * y * ca
            j01 = 2.0 * y - 2.0 * x * ca - A * (2.0 * y - 2.0 * cb)
            j10 = 2.0 * x - 2.0 * cg
            j11 = -B * (2.0 * y - 2.0 * cb)
            det = j00 * j11 - j01 * j10
            if abs(det) < 1e-300:
                break
            dx = (-f1 * j11 + f2 * j01) / det
            dy = (-j00 * f2 + j10 * f1) / det
            x += dx
            y += dy
            if abs(dx) + abs(dy) < 1e-15 * (abs(x) + abs(y) + 1.0):
                break
        if x <= 0.0 or y <= 0.0:
            continue
        d13 = 1.0 + y * y - 2.0 * y * cb
        if d13 <= 0.0:
            continue
        r1 = math.sqrt(b2 / d13)
        for k in range(3):
            Y[0, k] = r1 * bearings[0, k]
            Y[1, k] = x * r1 * bearings[1, k]
            Y[2, k] = y * r1 * bearings[2, k]
        if _align_and_pack(X, Y, out, n_out, NAN, NAN, NAN, NAN, NAN):
            for k in range(3):
                out[n_out, C_T + k] *= sd
            out[n_out, C_RES] *= sd
            n_out += 1
            if n_out == 4:
                break
    return n_out


# ---------------------------------------------------------------------------
# shared focal, scale-only (zero shifts): 2 full + 1 single-depth points
# ---------------------------------------------------------------------------

@njit(cache=True)
def _poly_mul(a, b):
    out = np.zeros(a.shape[0] + b.shape[0] - 1)
    for i in range(a.shape[0]):
        for j in range(b.shape[0]):
            out[i + j] += a[i] * b[j]
    return out


@njit(cache=True)
def _s00f_system(x, cf, F, J):
    """Residuals/Jacobian of the three length equations at x = (s, w, tau)."""
    s, w, tau = x[0], x[1], x[2]
    c = s * s
    F[0] = c * (w * cf[0] + cf[1]) - (w * cf[2] + cf[3])
    J[0, 0] = 2.0 * s * (w * cf[0] + cf[1])
    J[0, 1] = c * cf[0] - cf[2]
    J[0, 2] = 0.0
    aco = w * cf[4] + 1.0
    for k in range(2):
        b = cf[5 + k]
        Bk = cf[7 + k]
        Ak = cf[9 + k]
        PA = cf[11 + k]
        PZ = cf[13 + k]
        bb = -2.0 * s * b * (w * Bk + 1.0)
        cc = c * b * b * (w * Ak + 1.0) - w * PA - PZ
        F[1 + k] = aco * tau * tau + bb * tau + cc
        J[1 + k, 0] = -2.0 * b * (w * Bk + 1.0) * tau + 2.0 * s * b * b * (w * Ak + 1.0)
        J[1 + k, 1] = cf[4] * tau * tau - 2.0 * s * b * Bk * tau + c * b * b * Ak - PA
        J[1 + k, 2] = 2.0 * aco * tau + bb
    return


@njit(cache=True)
def solve_3pt_s00f(pc, qc, d1, d2, out):
    """Shared unknown focal length with scale-only depth (zero shifts).

    pc, qc: (3, 2) pixel coordinates centered on the principal point; d1: (3,)
    depths in image 1; d2: (2,) depths in image 2 for the first two points.
    The third correspondence contributes its image-2 ray only. Up to 4
    candidates; -1 when the reduction degenerates.
    """
    # conditioning scales
    sp = 0.0
    for i in range(3):
        sp += abs(pc[i, 0]) + abs(pc[i, 1]) + abs(qc[i, 0]) + abs(qc[i, 1])
    sp /= 12.0
    sd = (abs(d1[0]) + abs(d1[1]) + abs(d1[2]) + abs(d2[0]) + abs(d2[1])) / 5.0
    if sp <= 0.0 or sd <= 0.0 or not (math.isfinite(sp) and math.isfinite(sd)):
        return -1
    a1 = d1[0] / sd
    a2 = d1[1] / sd
    a3 = d1[2] / sd
    b1 = d2[0] / sd
    b2 = d2[1] / sd
    p = pc / sp
    q = qc / sp

    A1 = q[0, 0] ** 2 + q[0, 1] ** 2
    A2 = q[1, 0] ** 2 + q[1, 1] ** 2
    C3 = q[2, 0] ** 2 + q[2, 1] ** 2
    B13 = q[0, 0] * q[2, 0] + q[0, 1] * q[2, 1]
    B23 = q[1, 0] * q[2, 0] + q[1, 1] * q[2, 1]
    QA12 = (b1 * q[0, 0] - b2 * q[1, 0]) ** 2 + (b1 * q[0, 1] - b2 * q[1, 1]) ** 2
    QZ12 = (b1 - b2) ** 2
    PA12 = (a1 * p[0, 0] - a2 * p[1, 0]) ** 2 + (a1 * p[0, 1] - a2 * p[1, 1]) ** 2
    PZ12 = (a1 - a2) ** 2
    PA13 = (a1 * p[0, 0] - a3 * p[2, 0]) ** 2 + (a1 * p[0, 1] - a3 * p[2, 1]) ** 2
    PZ13 = (a1 - a3) ** 2
    PA23 = (a2 * p[1, 0] - a3 * p[2, 0]) ** 2 + (a2 * p[1, 1] - a3 * p[2, 1]) ** 2
    PZ23 = (a2 - a3) ** 2

    if QZ12 + PZ12 <= 1e-24:
        return -1

    # w = N(c)/D(c) from the depth-complete pair; remaining two equations are
    # quadratics in tau = s * eta3 sharing their tau^2 coefficient.
    N = np.array([-QZ12, PZ12])
    D = np.array([QA12, -PA12])
    A_ = np.array([D[0] + C3 * N[0], D[1] + C3 * N[1]])
    B1_ = np.array([b1 * (B13 * N[0] + D[0]), b1 * (B13 * N[1] + D[1])])
    B2_ = np.array([b2 * (B23 * N[0] + D[0]), b2 * (B23 * N[1] + D[1])])
    t1 = np.array([A1 * N[0] + D[0], A1 * N[1] + D[1]])
    C1_ = np.array([b1 * b1 * t1[0], b1 * b1 * t1[1] - PA13 * N[0] - PZ13 * D[0],
                    -PA13 * N[1] - PZ13 * D[1]])
    t2 = np.array([A2 * N[0] + D[0], A2 * N[1] + D[1]])
    C2_ = np.array([b2 * b2 * t2[0], b2 * b2 * t2[1] - PA23 * N[0] - PZ23 * D[0],
                    -PA23 * N[1] - PZ23 * D[1]])
    Gc = B1_ - B2_
    Hc = C2_ - C1_
    # resultant, degree 5 in c
    P5 = _poly_mul(A_, _poly_mul(Hc, Hc))
    T2_ = 4.0 * _poly_mul(B1_, _poly_mul(Gc, Hc))
    T3_ = 4.0 * _poly_mul(C1_, _poly_mul(Gc, Gc))
    for i in range(5):
        # T2_/T3_ are degree 4; adding at index i multiplies them by c
        P5[i] += T2_[i] + T3_[i]
    # exact structural factor (QZ12 * c - PZ12) <-> the focal-at-infinity branch
    Q4 = np.empty(5)
    if abs(QZ12) >= abs(PZ12):
        cstar = PZ12 / QZ12
        acc = 0.0
        for k in range(5):
            acc = P5[k] + cstar * acc
            Q4[k] = acc / QZ12
    else:
        xstar = QZ12 / PZ12
        acc = 0.0
        for k in range(5):
            acc = P5[5 - k] + xstar * acc
            Q4[4 - k] = acc / (-PZ12)

    roots = np.empty(4)
    nr = quartic_real_companion(Q4[0], Q4[1], Q4[2], Q4[3], Q4[4], roots)
    if nr < 0:
        return -1

    cf = np.array([QA12, QZ12, PA12, PZ12, C3, b1, b2, B13, B23, A1, A2,
                   PA13, PA23, PZ13, PZ23])
    fscale = 0.0
    for k in range(4):
        if abs(cf[k]) > fscale:
            fscale = abs(cf[k])
    for k in range(11, 15):
        if abs(cf[k]) > fscale:
            fscale = abs(cf[k])

    sols = np.empty((4, 3))
    nsol = 0
    F = np.empty(3)
    J = np.empty((3, 3))
    xcur = np.empty(3)
    dx = np.empty(3)
    starts = np.empty(3)
    for ir in range(nr):
        c = roots[ir]
        if c <= 0.0:
            continue
        Dv = D[0] * c + D[1]
        if Dv == 0.0:
            continue
        w = (N[0] * c + N[1]) / Dv
        if w <= 1e-12:
            continue
        s = math.sqrt(c)
        aco = w * C3 + 1.0
        bb1 = -2.0 * s * b1 * (w * B13 + 1.0)
        bb2 = -2.0 * s * b2 * (w * B23 + 1.0)
        cc1 = c * b1 * b1 * (w * A1 + 1.0) - w * PA13 - PZ13
        cc2 = c * b2 * b2 * (w * A2 + 1.0) - w * PA23 - PZ23
        nst = 0
        den = bb1 - bb2
        if abs(den) > 1e-300:
            starts[nst] = (cc2 - cc1) / den
            nst += 1
        disc = bb1 * bb1 - 4.0 * aco * cc1
        if disc >= 0.0 and aco != 0.0:
            sq = math.sqrt(disc)
            starts[nst] = (-bb1 + sq) / (2.0 * aco)
            nst += 1
            starts[nst] = (-bb1 - sq) / (2.0 * aco)
            nst += 1
        for ist in range(nst):
            xcur[0] = s
            xcur[1] = w
            xcur[2] = starts[ist]
            best_f = 1e300
            bs = s
            bw = w
            bt = starts[ist]
            ok = True
            for _ in range(60):
                _s00f_system(xcur, cf, F, J)
                fn = max(abs(F[0]), abs(F[1]), abs(F[2]))
                if fn < best_f:
                    best_f = fn
                    bs = xcur[0]
                    bw = xcur[1]
                    bt = xcur[2]
                if not _solve3(J, -F, dx):
                    ok = False
                    break
                xcur[0] += dx[0]
                xcur[1] += dx[1]
                xcur[2] += dx[2]
                xm = max(abs(xcur[0]), abs(xcur[1]), abs(xcur[2]), 1.0)
                if max(abs(dx[0]), abs(dx[1]), abs(dx[2])) <= 1e-14 * xm:
                    _s00f_system(xcur, cf, F, J)
                    fn = max(abs(F[0]), abs(F[1]), abs(F[2]))
                    if fn < best_f:
                        best_f = fn
                        bs = xcur[0]
                        bw = xcur[1]
                        bt = xcur[2]
                    break
            if not ok or best_f > 1e-9 * fscale:
                continue
            if bs <= 0.0 or bw <= 1e-12 or bt <= 0.0:
                continue
            dup = False
            for isol in range(nsol):
                ds = abs(sols[isol, 0] - bs) / max(abs(sols[isol, 0]), 1e-30)
                dw = abs(sols[isol, 1] - bw) / max(abs(sols[isol, 1]), 1e-30)
                dt = abs(sols[isol, 2] - bt) / max(abs(sols[isol, 2]), 1e-30)
                if max(ds, dw, dt) < 1e-6:
                    dup = True
                    break
            if not dup and nsol < 4:
                sols[nsol, 0] = bs
                sols[nsol, 1] = bw
                sols[nsol, 2] = bt
                nsol += 1

    n_out = 0
    X = np.empty((3, 3))
    Y = np.empty((3, 3))
    for isol in range(nsol):
        s = sols[isol, 0]
        w = sols[isol, 1]
        tau = sols[isol, 2]
        fsc = 1.0 / math.sqrt(w)   # focal in conditioned pixel units
        if a1 <= 0.0 or a2 <= 0.0 or a3 <= 0.0 or b1 <= 0.0 or b2 <= 0.0:
            continue
        X[0, 0] = a1 * p[0, 0] / fsc
        X[0, 1] = a1 * p[0, 1] / fsc
        X[0, 2] = a1
        X[1, 0] = a2 * p[1, 0] / fsc
        X[1, 1] = a2 * p[1, 1] / fsc
        X[1, 2] = a2
        X[2, 0] = a3 * p[2, 0] / fsc
        X[2, 1] = a3 * p[2, 1] / fsc
        X[2, 2] = a3
        Y[0, 0] = s * b1 * q[0, 0] / fsc
        Y[0, 1] = s * b1 * q[0, 1] / fsc
        Y[0, 2] = s * b1
        Y[1, 0] = s * b2 * q[1, 0] / fsc
        Y[1, 1] = s * b2 * q[1, 1] / fsc
        Y[1, 2] = s * b2
        Y[2, 0] = tau * q[2, 0] / fsc
        Y[2, 1] = tau * q[2, 1] / fsc
        Y[2, 2] = tau
        f_px = fsc * sp
        if _align_and_pack(X, Y, out, n_out, s, 0.0, 0.0, f_px, f_px):
            for k in range(3):
                out[n_out, C_T + k] *= sd
            out[n_out, C_RES] *= sd
            n_out += 1
            if n_out == 4:
                break
    return n_out


# ---------------------------------------------------------------------------
# two unknown focal lengths, scale-only depth: 3 full points, linear solve
# ---------------------------------------------------------------------------

@njit(cache=True)
def solve_3pt_s00f12(pc, qc, d1, d2, out):
    """Two unknown focals with scale-only depth: a single linear 3x3 solve.

    pc, qc: (3, 2) centered pixels; d1, d2: (3,) depths. At most 1 candidate.
    """
    sp = 0.0
    for i in range(3):
        sp += abs(pc[i, 0]) + abs(pc[i, 1]) + abs(qc[i, 0]) + abs(qc[i, 1])
    sp /= 12.0
    sd = 0.0
    for i in range(3):
        sd += abs(d1[i]) + abs(d2[i])
    sd /= 6.0
    if sp <= 0.0 or sd <= 0.0 or not (math.isfinite(sp) and math.isfinite(sd)):
        return -1
    p = pc / sp
    q = qc / sp
    a = d1 / sd
    b = d2 / sd

    # rows: QA * (c w2) + QZ * c - PA * w1 = PZ
    L = np.empty((3, 3))
    rhs = np.empty(3)
    row = 0
    for i in range(2):
        for j in range(i + 1, 3):
            QA = (b[i] * q[i, 0] - b[j] * q[j, 0]) ** 2 + (b[i] * q[i, 1] - b[j] * q[j, 1]) ** 2
            QZ = (b[i] - b[j]) ** 2
            PA = (a[i] * p[i, 0] - a[j] * p[j, 0]) ** 2 + (a[i] * p[i, 1] - a[j] * p[j, 1]) ** 2
            PZ = (a[i] - a[j]) ** 2
            L[row, 0] = QA
            L[row, 1] = QZ
            L[row, 2] = -PA
            rhs[row] = PZ
            row += 1
    sol = np.empty(3)
    if not _solve3(L, rhs, sol):
        return -1
    cw2 = sol[0]
    c = sol[1]
    w1 = sol[2]
    if c <= 0.0 or w1 <= 1e-12 or cw2 <= 0.0:
        return 0
    w2 = cw2 / c
    if w2 <= 1e-12:
        return 0
    s = math.sqrt(c)
    f1s = 1.0 / math.sqrt(w1)
    f2s = 1.0 / math.sqrt(w2)
    for i in range(3):
        if a[i] <= 0.0 or b[i] <= 0.0:
            return 0
    X = np.empty((3, 3))
    Y = np.empty((3, 3))
    for i in range(3):
        X[i, 0] = a[i] * p[i, 0] / f1s
        X[i, 1] = a[i] * p[i, 1] / f1s
        X[i, 2] = a[i]
        Y[i, 0] = s * b[i] * q[i, 0] / f2s
        Y[i, 1] = s * b[i] * q[i, 1] / f2s
        Y[i, 2] = s * b[i]
    if not _align_and_pack(X, Y, out, 0, s, 0.0, 0.0, f1s * sp, f2s * sp):
        return -1
    for k in range(3):
        out[0, C_T + k] *= sd
    out[0, C_RES] *= sd
    return 1


# ---------------------------------------------------------------------------
# four-point solvers with joint scale + shifts + focal(s), hidden-variable form
# ---------------------------------------------------------------------------

_PAIRS4 = np.array([[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]], dtype=np.int64)


@njit(cache=True)
def _pair_terms(p, q, a, b, i, j, terms):
    """Squared-length expansion terms for one pair (xy parts + z parts)."""
    dqx = q[i, 0] - q[j, 0]
    dqy = q[i, 1] - q[j, 1]
    bqx = b[i] * q[i, 0] - b[j] * q[j, 0]
    bqy = b[i] * q[i, 1] - b[j] * q[j, 1]
    dpx = p[i, 0] - p[j, 0]
    dpy = p[i, 1] - p[j, 1]
    apx = a[i] * p[i, 0] - a[j] * p[j, 0]
    apy = a[i] * p[i, 1] - a[j] * p[j, 1]
    terms[0] = bqx * bqx + bqy * bqy          # QA
    terms[1] = bqx * dqx + bqy * dqy          # QB
    terms[2] = dqx * dqx + dqy * dqy          # QC
    terms[3] = apx * apx + apy * apy          # PA
    terms[4] = apx * dpx + apy * dpy          # PB
    terms[5] = dpx * dpx + dpy * dpy          # PC
    terms[6] = (b[i] - b[j]) ** 2             # QZ
    terms[7] = (a[i] - a[j]) ** 2             # PZ


@njit(cache=True)
def _gn_refine_4pt(p, q, a, b, x, shared_f):
    """Gauss-Newton on the six pairwise length equations.

    x = (s, u, v, w1, w2); with shared_f the two inverse-square focals are tied.
    Returns the max-|residual| at the returned (best) parameters.
    """
    npar = 4 if shared_f else 5
    terms = np.empty(8)
    r = np.empty(6)
    Jf = np.empty((6, 5))
    best = x.copy()
    best_f = 1e300
    for _ in range(8):
        s, u, v, w1, w2 = x[0], x[1], x[2], x[3], x[4]
        c = s * s
        for row in range(6):
            i = _PAIRS4[row, 0]
            j = _PAIRS4[row, 1]
            _pair_terms(p, q, a, b, i, j, terms)
            Qxy = terms[0] + 2.0 * v * terms[1] + v * v * terms[2]
            Pxy = terms[3] + 2.0 * u * terms[4] + u * u * terms[5]
            r[row] = c * (w2 * Qxy + terms[6]) - (w1 * Pxy + terms[7])
            Jf[row, 0] = 2.0 * s * (w2 * Qxy + terms[6])
            Jf[row, 1] = -w1 * (2.0 * terms[4] + 2.0 * u * terms[5])
            Jf[row, 2] = c * w2 * (2.0 * terms[1] + 2.0 * v * terms[2])
            Jf[row, 3] = -Pxy
            Jf[row, 4] = c * Qxy
        fn = 0.0
        for row in range(6):
            if abs(r[row]) > fn:
                fn = abs(r[row])
        if fn < best_f:
            best_f = fn
            best = x.copy()
        # normal equations
        JtJ = np.zeros((5, 5))
        Jtr = np.zeros(5)
        for row in range(6):
            if shared_f:
                Jf[row, 3] = Jf[row, 3] + Jf[row, 4]
            for A_ in range(npar):
                Jtr[A_] += Jf[row, A_] * r[row]
                for B_ in range(npar):
                    JtJ[A_, B_] += Jf[row, A_] * Jf[row, B_]
        # solve npar x npar
        Asub = JtJ[:npar, :npar].copy()
        bsub = -Jtr[:npar].copy()
        # gaussian elimination with partial pivoting
        ok = True
        for k in range(npar):
            piv = k
            pv = abs(Asub[k, k])
            for i2 in range(k + 1, npar):
                if abs(Asub[i2, k]) > pv:
                    pv = abs(Asub[i2, k])
                    piv = i2
            if pv <= 1e-300:
                ok = False
                break
            if piv != k:
                for j2 in range(npar):
                    tmp = Asub[k, j2]
                    Asub[k, j2] = Asub[piv, j2]
                    Asub[piv, j2] = tmp
                tmp = bsub[k]
                bsub[k] = bsub[piv]
                bsub[piv] = tmp
            for i2 in range(k + 1, npar):
                fac = Asub[i2, k] / Asub[k, k]
                for j2 in range(k, npar):
                    Asub[i2, j2] -= fac * Asub[k, j2]
                bsub[i2] -= fac * bsub[k]
        if not ok:
            break
        dxv = np.zeros(5)
        for k in range(npar - 1, -1, -1):
            acc = bsub[k]
            for j2 in range(k + 1, npar):
                acc -= Asub[k, j2] * dxv[j2]
            dxv[k] = acc / Asub[k, k]
        x[0] += dxv[0]
        x[1] += dxv[1]
        x[2] += dxv[2]
        x[3] += dxv[3]
        if shared_f:
            x[4] = x[3]
        else:
            x[4] += dxv[4]
        step = max(abs(dxv[0]), abs(dxv[1]), abs(dxv[2]), abs(dxv[3]), abs(dxv[4]))
        if step <= 1e-14 * max(1.0, abs(x[0]), abs(x[1]), abs(x[2]), abs(x[3]), abs(x[4])):
            break
    # final evaluation
    s, u, v, w1, w2 = x[0], x[1], x[2], x[3], x[4]
    c = s * s
    fn = 0.0
    for row in range(6):
        i = _PAIRS4[row, 0]
        j = _PAIRS4[row, 1]
        _pair_terms(p, q, a, b, i, j, terms)
        Qxy = terms[0] + 2.0 * v * terms[1] + v * v * terms[2]
        Pxy = terms[3] + 2.0 * u * terms[4] + u * u * terms[5]
        rr = c * (w2 * Qxy + terms[6]) - (w1 * Pxy + terms[7])
        if abs(rr) > fn:
            fn = abs(rr)
    if fn < best_f:
        best_f = fn
    else:
        x[0] = best[0]
        x[1] = best[1]
        x[2] = best[2]
        x[3] = best[3]
        x[4] = best[4]
    return best_f


@njit(cache=True)
def _pack_4pt(p, q, a, b, x, sp, sd, out, n_out, shared_f):
    """Lift, align and pack one refined four-point solution; cheirality-gated."""
    s, u, v, w1, w2 = x[0], x[1], x[2], x[3], x[4]
    if s <= 0.0 or w1 <= 1e-12 or w2 <= 1e-12:
        return False
    f1s = 1.0 / math.sqrt(w1)
    f2s = 1.0 / math.sqrt(w2)
    X = np.empty((4, 3))
    Y = np.empty((4, 3))
    for i in range(4):
        au = a[i] + u
        bv = b[i] + v
        if au <= 0.0 or bv <= 0.0:
            return False
        X[i, 0] = au * p[i, 0] / f1s
        X[i, 1] = au * p[i, 1] / f1s
        X[i, 2] = au
        Y[i, 0] = s * bv * q[i, 0] / f2s
        Y[i, 1] = s * bv * q[i, 1] / f2s
        Y[i, 2] = s * bv
    if shared_f:
        ff1 = f1s * sp
        ff2 = ff1
    else:
        ff1 = f1s * sp
        ff2 = f2s * sp
    if not _align_and_pack(X, Y, out, n_out, s, u * sd, v * sd, ff1, ff2):
        return False
    for k in range(3):
        out[n_out, C_T + k] *= sd
    out[n_out, C_RES] *= sd
    return True


@njit(cache=True)
def _build_m68(p, q, a, b, M):
    """Six pairwise rows over [1, c, cv, cv^2, u, u^2, w, c*w] (shared focal)."""
    terms = np.empty(8)
    for row in range(6):
        i = _PAIRS4[row, 0]
        j = _PAIRS4[row, 1]
        _pair_terms(p, q, a, b, i, j, terms)
        M[row, 0] = -terms[3]          # 1
        M[row, 1] = terms[0]           # c
        M[row, 2] = 2.0 * terms[1]     # c v
        M[row, 3] = terms[2]           # c v^2
        M[row, 4] = -2.0 * terms[4]    # u
        M[row, 5] = -terms[5]          # u^2
        M[row, 6] = -terms[7]          # w
        M[row, 7] = terms[6]           # c w


@njit(cache=True)
def solve_4pt_suv_f(pc, qc, d1, d2, out):
    """Shared unknown focal + scale + two shifts from four full correspondences.

    Hidden-variable form in w = (f/pixel-scale)^-2: the six equations become
    (M0 + w M1) m = 0 over the six remaining monomials; M1 has two nonzero
    columns, so 1/w comes from a 2x2 eigenproblem. Up to 2 candidates.
    """
    sp = 0.0
    for i in range(4):
        sp += abs(pc[i, 0]) + abs(pc[i, 1]) + abs(qc[i, 0]) + abs(qc[i, 1])
    sp /= 16.0
    sd = 0.0
    for i in range(4):
        sd += abs(d1[i]) + abs(d2[i])
    sd /= 8.0
    if sp <= 0.0 or sd <= 0.0 or not (math.isfinite(sp) and math.isfinite(sd)):
        return -1
    p = pc / sp
    q = qc / sp
    a = d1 / sd
    b = d2 / sd

    M = np.empty((6, 8))
    _build_m68(p, q, a, b, M)
    # row equilibration
    for i in range(6):
        m = 0.0
        for j in range(8):
            if abs(M[i, j]) > m:
                m = abs(M[i, j])
        if m == 0.0:
            return -1
        for j in range(8):
            M[i, j] /= m
    M0 = np.ascontiguousarray(M[:, :6])
    if abs(np.linalg.det(M0)) < 1e-14:
        return -1
    rhs = np.empty((6, 2))
    for i in range(6):
        rhs[i, 0] = M[i, 6]
        rhs[i, 1] = M[i, 7]
    Ncols = np.linalg.solve(M0, rhs)
    evs = np.empty(2)
    nev = eig2x2_real(Ncols[0, 0], Ncols[0, 1], Ncols[1, 0], Ncols[1, 1], evs)
    n_out = 0
    xpar = np.empty(5)
    for ie in range(nev):
        mu = evs[ie]
        if abs(mu) < 1e-300:
            continue
        w = -1.0 / mu
        if w <= 1e-12:
            continue
        Mw = M0.copy()
        for i in range(6):
            Mw[i, 0] += w * rhs[i, 0]
            Mw[i, 1] += w * rhs[i, 1]
        U_, S_, Vt_ = np.linalg.svd(Mw)
        x0 = Vt_[5, 0]
        if abs(x0) < 1e-14:
            continue
        inv0 = 1.0 / x0
        c = Vt_[5, 1] * inv0
        cv = Vt_[5, 2] * inv0
        cv2 = Vt_[5, 3] * inv0
        uu = Vt_[5, 4] * inv0
        u2 = Vt_[5, 5] * inv0
        if c <= 0.0:
            continue
        vv = cv / c
        if abs(cv2 - c * vv * vv) > 1e-4 * max(1.0, abs(cv2)):
            continue
        if abs(u2 - uu * uu) > 1e-4 * max(1.0, abs(u2)):
            continue
        xpar[0] = math.sqrt(c)
        xpar[1] = uu
        xpar[2] = vv
        xpar[3] = w
        xpar[4] = w
        _gn_refine_4pt(p, q, a, b, xpar, True)
        dup = False
        for k in range(n_out):
            if abs(out[k, C_S] - xpar[0]) < 1e-9 * max(1.0, xpar[0]) and \
               abs(out[k, C_U] - xpar[1] * sd) < 1e-9 * max(1.0, abs(xpar[1] * sd)):
                dup = True
                break
        if dup:
            continue
        if _pack_4pt(p, q, a, b, xpar, sp, sd, out, n_out, True):
            n_out += 1
            if n_out == 2:
                break
    return n_out


@njit(cache=True)
def solve_4pt_suv_f12(pc, qc, d1, d2, out):
    """Two unknown focals + scale + two shifts from four full correspondences.

    Hidden variable is the image-2 shift v, entering a single column of the
    6x6 system, so det M(v) is an exact quadratic. Up to 2 candidates.
    """
    sp = 0.0
    for i in range(4):
        sp += abs(pc[i, 0]) + abs(pc[i, 1]) + abs(qc[i, 0]) + abs(qc[i, 1])
    sp /= 16.0
    sd = 0.0
    for i in range(4):
        sd += abs(d1[i]) + abs(d2[i])
    sd /= 8.0
    if sp <= 0.0 or sd <= 0.0 or not (math.isfinite(sp) and math.isfinite(sd)):
        return -1
    p = pc / sp
    q = qc / sp
    a = d1 / sd
    b = d2 / sd

    # rows over [1, c, cw2, cw2 v, cw2 v^2, w1, w1 u, w1 u^2]
    terms = np.empty(8)
    M = np.empty((6, 8))
    for row in range(6):
        i = _PAIRS4[row, 0]
        j = _PAIRS4[row, 1]
        _pair_terms(p, q, a, b, i, j, terms)
        M[row, 0] = -terms[7]
        M[row, 1] = terms[6]
        M[row, 2] = terms[0]
        M[row, 3] = 2.0 * terms[1]
        M[row, 4] = terms[2]
        M[row, 5] = -terms[3]
        M[row, 6] = -2.0 * terms[4]
        M[row, 7] = -terms[5]
    for i in range(6):
        m = 0.0
        for j in range(8):
            if abs(M[i, j]) > m:
                m = abs(M[i, j])
        if m == 0.0:
            return -1
        for j in range(8):
            M[i, j] /= m
    base = np.zeros((6, 6))
    for i in range(6):
        base[i, 0] = M[i, 0]
        base[i, 1] = M[i, 1]
        base[i, 3] = M[i, 5]
        base[i, 4] = M[i, 6]
        base[i, 5] = M[i, 7]
    # det M(v) = dA + dB v + dC v^2 by column multilinearity
    T = base.copy()
    for i in range(6):
        T[i, 2] = M[i, 2]
    dA = np.linalg.det(T)
    for i in range(6):
        T[i, 2] = M[i, 3]
    dB = np.linalg.det(T)
    for i in range(6):
        T[i, 2] = M[i, 4]
    dC = np.linalg.det(T)
    sc = max(abs(dA), abs(dB), abs(dC))
    if sc == 0.0:
        return -1
    vroots = np.empty(2)
    if abs(dC) <= 1e-14 * sc:
        if abs(dB) <= 1e-14 * sc:
            return -1
        vroots[0] = -dA / dB
        nv = 1
    else:
        nv = quadratic_real(dB / dC, dA / dC, vroots)
    n_out = 0
    xpar = np.empty(5)
    for iv in range(nv):
        vv = vroots[iv]
        Mv = base.copy()
        for i in range(6):
            Mv[i, 2] = M[i, 2] + vv * M[i, 3] + vv * vv * M[i, 4]
        U_, S_, Vt_ = np.linalg.svd(Mv)
        x0 = Vt_[5, 0]
        if abs(x0) < 1e-14:
            continue
        inv0 = 1.0 / x0
        c = Vt_[5, 1] * inv0
        cw2 = Vt_[5, 2] * inv0
        w1 = Vt_[5, 3] * inv0
        w1u = Vt_[5, 4] * inv0
        w1u2 = Vt_[5, 5] * inv0
        if c <= 0.0 or w1 <= 1e-12:
            continue
        w2 = cw2 / c
        if w2 <= 1e-12:
            continue
        uu = w1u / w1
        if abs(w1u2 - w1 * uu * uu) > 1e-4 * max(1.0, abs(w1u2)):
            continue
        xpar[0] = math.sqrt(c)
        xpar[1] = uu
        xpar[2] = vv
        xpar[3] = w1
        xpar[4] = w2
        _gn_refine_4pt(p, q, a, b, xpar, False)
        dup = False
        for k in range(n_out):
            if abs(out[k, C_S] - xpar[0]) < 1e-9 * max(1.0, xpar[0]) and \
               abs(out[k, C_V] - xpar[2] * sd) < 1e-9 * max(1.0, abs(xpar[2] * sd)):
                dup = True
                break
        if dup:
            continue
        if _pack_4pt(p, q, a, b, xpar, sp, sd, out, n_out, False):
            n_out += 1
            if n_out == 2:
                break
    return n_out


# ---------------------------------------------------------------------------
# seven-point fundamental matrix
# ---------------------------------------------------------------------------

@njit(cache=True)
def _norm_transform(pts):
    """Hartley conditioning: centroid shift + isotropic sqrt(2) mean distance."""
    n = pts.shape[0]
    mx = 0.0
    my = 0.0
    for i in range(n):
        mx += pts[i, 0]
        my += pts[i, 1]
    mx /= n
    my /= n
    md = 0.0
    for i in range(n):
        md += math.sqrt((pts[i, 0] - mx) ** 2 + (pts[i, 1] - my) ** 2)
    md /= n
    s = math.sqrt(2.0) / md if md > 0.0 else 1.0
    T = np.array([[s, 0.0, -s * mx], [0.0, s, -s * my], [0.0, 0.0, 1.0]])
    return T


@njit(cache=True)
def solve_7pt(p_px, q_px, Fs):
    """Classic seven-point fundamental-matrix solver.

    p_px, q_px: (7, 2) pixel points. Writes up to 3 matrices into Fs (3, 3, 3),
    each Frobenius-normalized with a deterministic sign. Returns count or -1
    when the constraint matrix loses rank (nullspace dimension > 2).
    """
    T1 = _norm_transform(p_px)
    T2 = _norm_transform(q_px)
    A = np.empty((7, 9))
    for i in range(7):
        x1 = T1[0, 0] * p_px[i, 0] + T1[0, 2]
        y1 = T1[1, 1] * p_px[i, 1] + T1[1, 2]
        x2 = T2[0, 0] * q_px[i, 0] + T2[0, 2]
        y2 = T2[1, 1] * q_px[i, 1] + T2[1, 2]
        A[i, 0] = x2 * x1
        A[i, 1] = x2 * y1
        A[i, 2] = x2
        A[i, 3] = y2 * x1
        A[i, 4] = y2 * y1
        A[i, 5] = y2
        A[i, 6] = x1
        A[i, 7] = y1
        A[i, 8] = 1.0
    U_, S_, Vt_ = np.linalg.svd(A)
    if S_[6] <= 1e-10 * S_[0]:
        return -1
    F1 = np.empty((3, 3))
    F2 = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            F1[i, j] = Vt_[7, 3 * i + j]
            F2[i, j] = Vt_[8, 3 * i + j]
    # det(F2 + lam G) cubic via column multilinearity, G = F1 - F2
    G = F1 - F2
    work = np.empty((3, 3))
    coef = np.zeros(4)  # lam^0 .. lam^3
    for mask in range(8):
        k = 0
        for j in range(3):
            if mask & (1 << j):
                k += 1
                for i in range(3):
                    work[i, j] = G[i, j]
            else:
                for i in range(3):
                    work[i, j] = F2[i, j]
        coef[k] += _det3(work)
    roots = np.empty(4)
    nr = quartic_real(0.0, coef[3], coef[2], coef[1], coef[0], roots)
    if nr < 0:
        return -1
    n_out = 0
    for ir in range(nr):
        lam = roots[ir]
        Fh = F2 + lam * G
        # denormalize: F = T2^T Fh T1
        Fd = T2.T @ Fh @ T1
        nf = 0.0
        for i in range(3):
            for j in range(3):
                nf += Fd[i, j] ** 2
        nf = math.sqrt(nf)
        if nf <= 0.0 or not math.isfinite(nf):
            continue
        # deterministic sign: largest |entry| positive
        bi = 0
        bj = 0
        bv = 0.0
        for i in range(3):
            for j in range(3):
                if abs(Fd[i, j]) > bv:
                    bv = abs(Fd[i, j])
                    bi = i
                    bj = j
        sgn = 1.0 if Fd[bi, bj] > 0 else -1.0
        for i in range(3):
            for j in range(3):
                Fs[n_out, i, j] = sgn * Fd[i, j] / nf
        n_out += 1
        if n_out == 3:
            break
    return n_out


# ---------------------------------------------------------------------------
# epipolar scoring
# ---------------------------------------------------------------------------

@njit(cache=True)
def sampson_errors(F, p, q, out):
    """Squared Sampson distances for each correspondence row of p, q (n, 2)."""
    n = p.shape[0]
    for i in range(n):
        x1 = p[i, 0]
        y1 = p[i, 1]
        x2 = q[i, 0]
        y2 = q[i, 1]
        Fx0 = F[0, 0] * x1 + F[0, 1] * y1 + F[0, 2]
        Fx1 = F[1, 0] * x1 + F[1, 1] * y1 + F[1, 2]
        Fx2 = F[2, 0] * x1 + F[2, 1] * y1 + F[2, 2]
        Ftx0 = F[0, 0] * x2 + F[1, 0] * y2 + F[2, 0]
        Ftx1 = F[0, 1] * x2 + F[1, 1] * y2 + F[2, 1]
        num = x2 * Fx0 + y2 * Fx1 + Fx2
        den = Fx0 * Fx0 + Fx1 * Fx1 + Ftx0 * Ftx0 + Ftx1 * Ftx1
        if den < 1e-20:
            out[i] = np.inf
        else:
            out[i] = num * num / den


@njit(cache=True)
def msac_score(F, p, q, thr2, mask):
    """Truncated-Sampson score; fills the inlier mask. Lower is better."""
    n = p.shape[0]
    score = 0.0
    for i in range(n):
        x1 = p[i, 0]
        y1 = p[i, 1]
        x2 = q[i, 0]
        y2 = q[i, 1]
        Fx0 = F[0, 0] * x1 + F[0, 1] * y1 + F[0, 2]
        Fx1 = F[1, 0] * x1 + F[1, 1] * y1 + F[1, 2]
        Ftx0 = F[0, 0] * x2 + F[1, 0] * y2 + F[2, 0]
        Ftx1 = F[0, 1] * x2 + F[1, 1] * y2 + F[2, 1]
        num = x2 * Fx0 + y2 * Fx1 + (F[2, 0] * x1 + F[2, 1] * y1 + F[2, 2])
        den = Fx0 * Fx0 + Fx1 * Fx1 + Ftx0 * Ftx0 + Ftx1 * Ftx1
        if den < 1e-20:
            e = np.inf
        else:
            e = num * num / den
        if e < thr2:
            score += e
            mask[i] = True
        else:
            score += thr2
            mask[i] = False
    return score
