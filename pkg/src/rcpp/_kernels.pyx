# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; same signatures and semantics as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, fabs, frexp, ldexp

cnp.import_array()

IDENTITY, QN, TOPK, QTN, UNIFORM = 0, 1, 2, 3, 4
RAW_BITS = 64
UNIFORM_HEADER_BITS = 6

cdef enum:
    C_RAW_BITS = 64
    C_UNIFORM_HEADER_BITS = 6

cdef enum:
    K_IDENTITY = 0
    K_QN = 1
    K_TOPK = 2
    K_QTN = 3
    K_UNIFORM = 4


cdef inline long long _bitlen_floor(double t) noexcept nogil:
    cdef int e
    if t < 1.0:
        return 0
    frexp(t, &e)
    return e


cdef inline int _index_bits(Py_ssize_t d) noexcept nogil:
    cdef int nb = 0
    cdef Py_ssize_t x = d - 1
    while x > 0:
        nb += 1
        x >>= 1
    return nb


cdef inline double _sign(double x) noexcept nogil:
    if x > 0:
        return 1.0
    if x < 0:
        return -1.0
    return 0.0


cdef void _topk_row(const double[::1] z, Py_ssize_t k, double[::1] out, char[::1] kept) noexcept nogil:
    cdef Py_ssize_t d = z.shape[0]
    cdef Py_ssize_t r, j, best
    cdef double bv, a
    for j in range(d):
        kept[j] = 0
        out[j] = 0.0
    for r in range(k):
        best = -1
        bv = -1.0
        for j in range(d):
            if not kept[j]:
                a = fabs(z[j])
                if a > bv:  # strict: lowest index wins ties
                    bv = a
                    best = j
        kept[best] = 1
        out[best] = z[best]


cdef long long _qn_row(const double[::1] z, int b, const double[::1] u, double[::1] out) noexcept nogil:
    """Quantise one row in place of ``out``; return bit length of floor(norm) or -1 for zero."""
    cdef Py_ssize_t d = z.shape[0]
    cdef Py_ssize_t j
    cdef double t = 0.0, ft, h, lev, m
    for j in range(d):
        if fabs(z[j]) > t:
            t = fabs(z[j])
    if t == 0.0:
        for j in range(d):
            out[j] = 0.0
        return -1
    ft = floor(t)
    if u[0] < t - ft:
        h = ft + 1.0
    else:
        h = ft
    lev = ldexp(1.0, b - 1)
    for j in range(d):
        m = floor(lev * fabs(z[j]) / t + u[j + 1])
        out[j] = (h / lev) * (_sign(z[j]) * m)
    return _bitlen_floor(t)


cdef long long _compress_row(const double[::1] z, int kind, int b, Py_ssize_t k, double level,
                             const double[::1] u, double[::1] out, double[::1] tmp,
                             char[::1] kept) noexcept nogil:
    cdef Py_ssize_t d = z.shape[0]
    cdef Py_ssize_t j
    cdef long long hb
    cdef double y, q, M
    if kind == K_IDENTITY:
        for j in range(d):
            out[j] = z[j]
        return C_RAW_BITS * d
    if kind == K_QN:
        hb = _qn_row(z, b, u, out)
        if hb < 0:
            return 1
        return d * b + hb + 1
    if kind == K_TOPK:
        _topk_row(z, k, out, kept)
        return k * (C_RAW_BITS + _index_bits(d))
    if kind == K_QTN:
        _topk_row(z, k, tmp, kept)
        hb = _qn_row(tmp, b, u, out)
        if hb < 0:
            return 1
        return k * (b + _index_bits(d)) + hb + 1
    # uniform
    M = 0.0
    for j in range(d):
        y = z[j] / level
        q = floor(y)
        if y - q >= 0.5:
            q = q + 1.0
        out[j] = q * level
        if fabs(q) > M:
            M = fabs(q)
    if M == 0.0:
        return C_UNIFORM_HEADER_BITS
    return d * (_bitlen_floor(M) + 1) + C_UNIFORM_HEADER_BITS


def compress_rows(Z, int kind, int b, Py_ssize_t k, double level, U):
    if kind < 0 or kind > 4:
        raise ValueError(f"unknown compressor kind code {kind}")
    cdef const double[:, ::1] z = np.ascontiguousarray(Z, dtype=np.float64)
    cdef Py_ssize_t m = z.shape[0], d = z.shape[1], i
    out_arr = np.empty((m, d))
    costs_arr = np.empty(m, dtype=np.int64)
    cdef double[:, ::1] out = out_arr
    cdef long long[::1] costs = costs_arr
    cdef const double[:, ::1] u
    if kind == K_QN or kind == K_QTN:
        u = np.ascontiguousarray(U, dtype=np.float64)
    else:
        u = np.zeros((m, d + 1))
    cdef double[::1] tmp = np.empty(d)
    cdef char[::1] kept = np.empty(d, dtype=np.int8)
    with nogil:
        for i in range(m):
            costs[i] = _compress_row(z[i], kind, b, k, level, u[i], out[i], tmp, kept)
    return out_arr, costs_arr


def mix_half_step(Vt_arr, H_arr, HW_arr, W_arr, double s, double alpha, double gamma,
                  int kind, int b, Py_ssize_t k, double level, U, outdeg):
    cdef const double[:, ::1] Vt = Vt_arr
    cdef double[:, ::1] H = H_arr
    cdef double[:, ::1] HW = HW_arr
    cdef const double[:, ::1] W = W_arr
    cdef Py_ssize_t n = Vt.shape[0], d = Vt.shape[1], i, j, l
    cdef const long long[::1] deg = np.ascontiguousarray(outdeg, dtype=np.int64)
    cdef const double[:, ::1] u
    if kind == K_QN or kind == K_QTN:
        u = np.ascontiguousarray(U, dtype=np.float64)
    else:
        u = np.zeros((n, d + 1))
    Vn_arr = np.empty((n, d))
    cdef double[:, ::1] Vn = Vn_arr
    cdef double[:, ::1] D = np.empty((n, d))
    cdef double[:, ::1] P = np.empty((n, d))
    cdef double[:, ::1] Q = np.empty((n, d))
    cdef double[::1] tmp = np.empty(d)
    cdef char[::1] kept = np.empty(d, dtype=np.int8)
    cdef long long bits = 0
    cdef double acc, vhat, vw
    with nogil:
        for i in range(n):
            for j in range(d):
                D[i, j] = (Vt[i, j] - H[i, j]) / s
            bits += _compress_row(D[i], kind, b, k, level, u[i], P[i], tmp, kept) * deg[i]
            for j in range(d):
                Q[i, j] = s * P[i, j]
        for i in range(n):
            for j in range(d):
                acc = 0.0
                for l in range(n):
                    acc = acc + W[i, l] * Q[l, j]
                vhat = H[i, j] + Q[i, j]
                vw = HW[i, j] + acc
                H[i, j] = (1.0 - alpha) * H[i, j] + alpha * vhat
                HW[i, j] = (1.0 - alpha) * HW[i, j] + alpha * vw
                Vn[i, j] = Vt[i, j] - gamma * (vhat - vw)
    return Vn_arr, bits


def ridge_gradient_rows(Uf_arr, v_arr, double rho, X_arr):
    cdef const double[:, ::1] Uf = Uf_arr
    cdef const double[::1] v = v_arr
    cdef const double[:, ::1] X = np.ascontiguousarray(X_arr, dtype=np.float64)
    cdef Py_ssize_t n = X.shape[0], p = X.shape[1], i, j
    G_arr = np.empty((n, p))
    cdef double[:, ::1] G = G_arr
    cdef double r
    with nogil:
        for i in range(n):
            r = 0.0
            for j in range(p):
                r = r + Uf[i, j] * X[i, j]
            r = r - v[i]
            for j in range(p):
                G[i, j] = 2.0 * Uf[i, j] * r + 2.0 * rho * X[i, j]
    return G_arr


def snapshot_metrics(X_arr, Y_arr, Hx_arr, Hy_arr, lam_arr, uR_arr, uC_arr):
    cdef const double[:, ::1] X = X_arr
    cdef const double[:, ::1] Y = Y_arr
    cdef const double[:, ::1] Hx = Hx_arr
    cdef const double[:, ::1] Hy = Hy_arr
    cdef const double[::1] lam = lam_arr
    cdef const double[::1] uR = uR_arr
    cdef const double[::1] uC = uC_arr
    cdef Py_ssize_t n = X.shape[0], p = X.shape[1], i, j
    xbar_arr = np.zeros(p)
    cdef double[::1] xbar = xbar_arr
    cdef double[::1] ybar = np.zeros(p)
    cdef double cons = 0.0, trk = 0.0, cx = 0.0, cy = 0.0, e
    with nogil:
        for i in range(n):
            for j in range(p):
                xbar[j] += uR[i] * X[i, j]
                ybar[j] += Y[i, j]
        for j in range(p):
            xbar[j] = xbar[j] / n
            ybar[j] = ybar[j] / n
        for i in range(n):
            for j in range(p):
                e = X[i, j] - xbar[j]
                cons += e * e
                e = Y[i, j] - uC[i] * ybar[j]
                trk += e * e
                e = X[i, j] - lam[i] * Y[i, j] - Hx[i, j]
                cx += e * e
                e = Y[i, j] - Hy[i, j]
                cy += e * e
    return xbar_arr, cons, trk, cx, cy
