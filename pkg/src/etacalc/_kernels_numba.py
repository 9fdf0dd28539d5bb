"""numba-jitted implementations of the hot array kernels.

Same contracts as ``_kernels_numpy``; see that module for the layout and
weighting conventions.  Import fails cleanly when numba is unavailable so the
backend selector can fall back.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def band_conv(c1, c2, wv):
    w1 = (c1.shape[0] - 1) // 2
    w2 = (c2.shape[0] - 1) // 2
    F = c1.shape[1]
    out = np.zeros((2 * (w1 + w2) + 1, F, F), dtype=np.complex128)
    for j1 in range(2 * w1 + 1):
        for j2 in range(2 * w2 + 1):
            for a in range(F):
                for b in range(F):
                    z = c1[j1, a, b] * wv[b]
                    if z != 0.0:
                        for d in range(F):
                            out[j1 + j2, a, d] += z * c2[j2, b, d]
    return out


@njit(cache=True)
def toeplitz_window(c, ns):
    w = (c.shape[0] - 1) // 2
    F = c.shape[1]
    out = np.zeros((ns * F, ns * F), dtype=np.complex128)
    for si in range(ns):
        lo = max(0, si - w)
        hi = min(ns - 1, si + w)
        for sj in range(lo, hi + 1):
            blk = c[si - sj + w]
            for a in range(F):
                for b in range(F):
                    out[si * F + a, sj * F + b] = blk[a, b]
    return out


@njit(cache=True)
def deep_repair(mat, c, ns, F, dlo):
    w = (c.shape[0] - 1) // 2
    for si in range(ns):
        for sj in range(ns):
            if si > dlo and sj > dlo:
                continue
            n = si - sj
            if -w <= n <= w:
                blk = c[n + w]
                for a in range(F):
                    for b in range(F):
                        mat[si * F + a, sj * F + b] = blk[a, b]
            else:
                for a in range(F):
                    for b in range(F):
                        mat[si * F + a, sj * F + b] = 0.0
    return mat


@njit(cache=True)
def deep_residual(mat, c, ns, F, dlo):
    w = (c.shape[0] - 1) // 2
    res = 0.0
    for si in range(ns):
        for sj in range(ns):
            if si > dlo and sj > dlo:
                continue
            n = si - sj
            for a in range(F):
                for b in range(F):
                    v = mat[si * F + a, sj * F + b]
                    if -w <= n <= w:
                        v = v - c[n + w, a, b]
                    d = abs(v)
                    if d > res:
                        res = d
    return res


@njit(cache=True)
def band_times_local(c, x4, wv):
    w = (c.shape[0] - 1) // 2
    nr, nc, F, _ = x4.shape
    out = np.zeros((nr + 2 * w, nc, F, F), dtype=np.complex128)
    for m in range(-w, w + 1):
        blk = c[m + w]
        for ip in range(max(0, w + m), min(nr + 2 * w, nr + w + m)):
            r = ip - w - m
            for j in range(nc):
                for a in range(F):
                    for b in range(F):
                        z = blk[a, b] * wv[b]
                        if z != 0.0:
                            for d in range(F):
                                out[ip, j, a, d] += z * x4[r, j, b, d]
    return out


@njit(cache=True)
def local_times_band(x4, c, wv):
    w = (c.shape[0] - 1) // 2
    nr, nc, F, _ = x4.shape
    out = np.zeros((nr, nc + 2 * w, F, F), dtype=np.complex128)
    for m in range(-w, w + 1):
        blk = c[m + w]
        for jp in range(max(0, w - m), min(nc + 2 * w, nc + w - m)):
            jt = jp - w + m
            for i in range(nr):
                for a in range(F):
                    for b in range(F):
                        z = x4[i, jt, a, b] * wv[b]
                        if z != 0.0:
                            for d in range(F):
                                out[i, jp, a, d] += z * blk[b, d]
    return out
