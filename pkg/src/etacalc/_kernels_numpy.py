"""Reference implementations of the hot array kernels (pure numpy).

Conventions shared by both backends:

* A band coefficient array ``c`` has shape ``(2*w+1, F, F)`` with ``c[j]``
  the fiber block for slice offset ``n = j - w``.  The induced kernel entry
  is ``k(s, s') = c[(s - s') + w]`` for ``|s - s'| <= w`` and zero otherwise.
* Compositions are taken against the site volume weights: the fiber weight
  vector ``wv`` (length F, positive) enters every contraction as
  ``a . diag(wv) . b``.
* Dense window matrices are slice-major: site index ``i = si * F + y`` where
  ``si = 0`` is the deepest slice of the window.
"""

import numpy as np


def band_conv(c1, c2, wv):
    """Convolve two band coefficient arrays against the volume weights.

    Returns the coefficients of the composed kernel, bandwidth ``w1 + w2``.
    """
    w1 = (c1.shape[0] - 1) // 2
    w2 = (c2.shape[0] - 1) // 2
    F = c1.shape[1]
    out = np.zeros((2 * (w1 + w2) + 1, F, F), dtype=np.complex128)
    c1w = c1 * wv[None, None, :]  # right-weight each block by diag(wv)
    for j1 in range(2 * w1 + 1):
        out[j1 : j1 + 2 * w2 + 1] += np.einsum("ab,jbc->jac", c1w[j1], c2)
    return out


def toeplitz_window(c, ns):
    """Dense window matrix of a band kernel over ``ns`` slices."""
    w = (c.shape[0] - 1) // 2
    F = c.shape[1]
    out = np.zeros((ns, F, ns, F), dtype=np.complex128)
    for n in range(-w, w + 1):
        i0 = max(0, n)
        i1 = min(ns - 1, ns - 1 + n)
        if i1 < i0:
            continue
        rows = np.arange(i0, i1 + 1)
        out[rows, :, rows - n, :] = c[n + w]
    return out.reshape(ns * F, ns * F)


def deep_repair(mat, c, ns, F, dlo):
    """Overwrite the deep region of ``mat`` with the band kernel's values.

    The deep region is every entry whose row or column slice index is
    ``<= dlo``.  ``mat`` is modified in place.
    """
    w = (c.shape[0] - 1) // 2
    m4 = mat.reshape(ns, F, ns, F)
    # deep rows (all columns), then deep columns (all rows); overlap is fine
    for si in range(min(dlo + 1, ns)):
        for sj in range(ns):
            n = si - sj
            m4[si, :, sj, :] = c[n + w] if -w <= n <= w else 0.0
    for sj in range(min(dlo + 1, ns)):
        for si in range(dlo + 1, ns):
            n = si - sj
            m4[si, :, sj, :] = c[n + w] if -w <= n <= w else 0.0
    return mat


def deep_residual(mat, c, ns, F, dlo):
    """Max abs deviation of the deep region of ``mat`` from the band values."""
    w = (c.shape[0] - 1) // 2
    m4 = mat.reshape(ns, F, ns, F)
    res = 0.0
    for si in range(ns):
        for sj in range(ns):
            if si > dlo and sj > dlo:
                continue
            n = si - sj
            blk = c[n + w] if -w <= n <= w else 0.0
            d = np.abs(m4[si, :, sj, :] - blk).max()
            if d > res:
                res = d
    return res


def band_times_local(c, x4, wv):
    """Band kernel times a localized block array.

    ``x4`` has shape ``(nr, nc, F, F)`` over an explicit slice range; the
    result extends the row range by ``w`` on both sides (bookkeeping of the
    actual slice labels is the caller's).
    """
    w = (c.shape[0] - 1) // 2
    nr, nc, F, _ = x4.shape
    out = np.zeros((nr + 2 * w, nc, F, F), dtype=np.complex128)
    cw = c * wv[None, None, :]
    for m in range(-w, w + 1):
        # output row i' takes c(m) @ x4[i' - w - m]
        lo = max(0, w + m)
        hi = min(nr + 2 * w, nr + w + m)
        out[lo:hi] += np.einsum("ab,rcbd->rcad", cw[m + w], x4[lo - w - m : hi - w - m])
    return out


def local_times_band(x4, c, wv):
    """Localized block array times a band kernel; column range extends by w."""
    w = (c.shape[0] - 1) // 2
    nr, nc, F, _ = x4.shape
    out = np.zeros((nr, nc + 2 * w, F, F), dtype=np.complex128)
    xw = x4 * wv[None, None, None, :]
    for m in range(-w, w + 1):
        lo = max(0, w - m)
        hi = min(nc + 2 * w, nc + w - m)
        out[:, lo:hi] += np.einsum("rcab,bd->rcad", xw[:, lo - w + m : hi - w + m], c[m + w])
    return out
