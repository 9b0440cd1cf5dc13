"""Pure numpy kernels; reference implementation and fallback for ``_kernels``.

Every function here has a twin with the same signature in ``_kernels.pyx``.
Element-wise arithmetic is written in the same operation order as the
compiled version so both produce identical compressor outputs on identical
inputs; only the matrix products may differ in the last bits.
"""

import numpy as np

IDENTITY, QN, TOPK, QTN, UNIFORM = 0, 1, 2, 3, 4
RAW_BITS = 64
UNIFORM_HEADER_BITS = 6


def bitlen_floor(t):
    """Bit length of floor(t) for non-negative t (0 for t < 1)."""
    t = np.asarray(t, dtype=float)
    return np.where(t >= 1.0, np.frexp(t)[1], 0).astype(np.int64)


def _index_bits(d):
    return int(d - 1).bit_length()


def _qn(Z, b, U):
    t = np.abs(Z).max(axis=1)
    zero = t == 0.0
    ts = np.where(zero, 1.0, t)
    ft = np.floor(ts)
    h = np.where(U[:, 0] < ts - ft, ft + 1.0, ft)
    lev = float(2 ** (b - 1))
    m = np.floor(lev * np.abs(Z) / ts[:, None] + U[:, 1:])
    out = (h / lev)[:, None] * (np.sign(Z) * m)
    out[zero] = 0.0
    return out, t, zero


def _topk(Z, k):
    order = np.argsort(-np.abs(Z), axis=1, kind="stable")[:, :k]
    out = np.zeros_like(Z)
    np.put_along_axis(out, order, np.take_along_axis(Z, order, axis=1), axis=1)
    return out


def compress_rows(Z, kind, b, k, level, U):
    """Compress each row of ``Z``; return (outputs, per-row bit costs).

    ``U`` holds uniforms in [0, 1): column 0 drives the random norm map,
    columns 1..d the dithers.  Only the quantising kinds read it.
    """
    Z = np.ascontiguousarray(Z, dtype=float)
    m, d = Z.shape
    if kind == IDENTITY:
        return Z.copy(), np.full(m, RAW_BITS * d, dtype=np.int64)
    if kind == QN:
        out, t, zero = _qn(Z, b, U)
        costs = np.where(zero, 1, d * b + bitlen_floor(t) + 1)
        return out, costs.astype(np.int64)
    if kind == TOPK:
        return _topk(Z, k), np.full(m, k * (RAW_BITS + _index_bits(d)), dtype=np.int64)
    if kind == QTN:
        out, t, zero = _qn(_topk(Z, k), b, U)
        costs = np.where(zero, 1, k * (b + _index_bits(d)) + bitlen_floor(t) + 1)
        return out, costs.astype(np.int64)
    if kind == UNIFORM:
        y = Z / level
        q = np.floor(y)
        q = np.where(y - q >= 0.5, q + 1.0, q)
        M = np.abs(q).max(axis=1)
        costs = np.where(M == 0.0, UNIFORM_HEADER_BITS, d * (bitlen_floor(M) + 1) + UNIFORM_HEADER_BITS)
        return q * level, costs.astype(np.int64)
    raise ValueError(f"unknown compressor kind code {kind}")


def mix_half_step(Vt, H, HW, W, s, alpha, gamma, kind, b, k, level, U, outdeg):
    """Compress-recover-communicate-update for one variable.

    Updates ``H`` and ``HW`` in place and returns (next iterate, bits sent).
    """
    P, costs = compress_rows((Vt - H) / s, kind, b, k, level, U)
    Q = s * P
    Vhat = H + Q
    VW = HW + W @ Q
    H[...] = (1.0 - alpha) * H + alpha * Vhat
    HW[...] = (1.0 - alpha) * HW + alpha * VW
    Vn = Vt - gamma * (Vhat - VW)
    return Vn, int(costs @ outdeg)


def ridge_gradient_rows(Uf, v, rho, X):
    r = (Uf * X).sum(axis=1) - v
    return 2.0 * Uf * r[:, None] + 2.0 * rho * X


def snapshot_metrics(X, Y, Hx, Hy, lam, uR, uC):
    """(xbar, consensus, tracking, compression-x, compression-y) errors."""
    n = X.shape[0]
    xbar = uR @ X / n
    cons = float(((X - xbar) ** 2).sum())
    ybar = Y.sum(axis=0) / n
    trk = float(((Y - np.outer(uC, ybar)) ** 2).sum())
    cx = float(((X - lam[:, None] * Y - Hx) ** 2).sum())
    cy = float(((Y - Hy) ** 2).sum())
    return xbar, cons, trk, cx, cy
