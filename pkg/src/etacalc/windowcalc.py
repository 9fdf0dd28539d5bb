"""Window operators with machine-floor band tails.

The index pipeline works with resolvents and parametrices whose tails decay
exponentially but are not supported in a small declared band.  This module
carries a plain (unweighted) window calculus for such operators: a finite
matrix over slices [-S, L] x fiber together with banded tail coefficients
cut at a coefficient floor, valid on min(s, s') <= -lam.  Products repair
the deep corner with the tail convolution exactly as the typed cylinder
algebra does; compact elements are snapped to exact zeros after asserting
the deep residual.

Composition here is plain matrix composition (operator convention); the
stabilized trace is the plain diagonal sum minus the linear cylinder term.
"""

import numpy as np

from .backend import band_conv, deep_repair, toeplitz_window
from .cylinder import WindowTooSmall

FLOOR = 1e-14


def floor_band(coeffs, floor=FLOOR):
    """Trim leading/trailing coefficient blocks below the floor."""
    c = np.asarray(coeffs, dtype=np.complex128)
    w = (c.shape[0] - 1) // 2
    mags = np.abs(c).max(axis=(1, 2))
    keep = np.flatnonzero(mags > floor)
    if keep.size == 0:
        return np.zeros((1,) + c.shape[1:], dtype=np.complex128)
    half = max(w - keep[0], keep[-1] - w)
    return np.array(c[w - half : w + half + 1])


def symbol_band(bsym, m, floor=FLOOR):
    """Band coefficients of a symbol family sampled on m grid points.

    ``bsym(mu)`` returns (m, F, F); coefficients come from the inverse
    transform c(n) = (1/m) sum_j bhat(mu_j) e^{i n mu_j} and are cut at the
    floor.  The trailing kept coefficient must sit well inside the grid.
    """
    mu = 2 * np.pi * np.arange(m) / m
    sym = bsym(mu)
    c = np.fft.ifft(sym, axis=0)  # c[k] couples offset n = k (mod m)
    w = m // 2 - 1
    full = np.empty((2 * w + 1,) + sym.shape[1:], dtype=np.complex128)
    for n in range(-w, w + 1):
        full[n + w] = c[n % m]
    out = floor_band(full, floor)
    if out.shape[0] >= 2 * w - 1:
        raise WindowTooSmall(
            "frequency grid too small: band did not decay below the floor"
        )
    return out


class WindowOperator:
    """Finite window of an operator with banded deep-cylinder behavior.

    ``tail=None`` marks a compact element (entries vanish on
    min(s,s') <= -depth); otherwise the matrix equals the tail's Toeplitz
    values on min(s,s') <= -lam.
    """

    def __init__(self, S, L, F, matrix, tail=None, lam=0, depth=0):
        self.S = int(S)
        self.L = int(L)
        self.F = int(F)
        self.matrix = matrix
        self.tail = tail
        self.lam = int(lam)
        self.depth = int(depth)

    @property
    def nslices(self):
        return self.S + self.L + 1

    @property
    def bandwidth(self):
        return 0 if self.tail is None else (self.tail.shape[0] - 1) // 2

    @property
    def compact(self):
        return self.tail is None

    def idx(self, s):
        return s + self.S

    def block(self, si, sj):
        F = self.F
        return self.matrix[si * F : (si + 1) * F, sj * F : (sj + 1) * F]

    def adjoint(self):
        t = None if self.tail is None else np.conj(
            np.swapaxes(self.tail[::-1], 1, 2)
        )
        return WindowOperator(
            self.S, self.L, self.F, self.matrix.conj().T, t, self.lam, self.depth
        )

    def __add__(self, other):
        if self.compact and other.compact:
            return WindowOperator(
                self.S, self.L, self.F, self.matrix + other.matrix,
                None, 0, max(self.depth, other.depth),
            )
        if self.compact or other.compact:
            ext, cp = (other, self) if self.compact else (self, other)
            return WindowOperator(
                self.S, self.L, self.F, self.matrix + other.matrix,
                ext.tail, max(ext.lam, cp.depth), 0,
            )
        w = max(self.bandwidth, other.bandwidth)
        return WindowOperator(
            self.S, self.L, self.F, self.matrix + other.matrix,
            _pad_band(self.tail, w) + _pad_band(other.tail, w),
            max(self.lam, other.lam), 0,
        )

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, z):
        t = None if self.tail is None else self.tail * z
        return WindowOperator(
            self.S, self.L, self.F, self.matrix * z, t, self.lam, self.depth
        )

    __rmul__ = __mul__


def _pad_band(c, w):
    w0 = (c.shape[0] - 1) // 2
    if w0 == w:
        return c
    out = np.zeros((2 * w + 1,) + c.shape[1:], dtype=np.complex128)
    out[w - w0 : w + w0 + 1] = c
    return out


def wop_identity(S, L, F):
    tail = np.eye(F, dtype=np.complex128)[None]
    ns = S + L + 1
    return WindowOperator(S, L, F, np.eye(ns * F, dtype=np.complex128), tail, 0)


def wop_from_tail(tail, S, L):
    """Full-window Toeplitz realization of banded tail coefficients."""
    tail = np.asarray(tail, dtype=np.complex128)
    ns = S + L + 1
    if tail.shape[0] >= 2 * ns - 1:
        raise WindowTooSmall("window too small for the operator band")
    return WindowOperator(S, L, tail.shape[1], toeplitz_window(tail, ns), tail, 0)


def wop_compose(a, b, floor=FLOOR):
    """Plain product with exact deep repair from the tail convolution."""
    if (a.S, a.L, a.F) != (b.S, b.L, b.F):
        raise ValueError("window mismatch")
    m = a.matrix @ b.matrix
    wa, wb = a.bandwidth, b.bandwidth
    if a.compact and b.compact:
        return WindowOperator(
            a.S, a.L, a.F, m, None, 0, max(a.depth, b.depth)
        )
    if a.compact:
        return WindowOperator(
            a.S, a.L, a.F, m, None, 0, max(b.lam, a.depth + wb)
        )
    if b.compact:
        return WindowOperator(
            a.S, a.L, a.F, m, None, 0, max(a.lam, b.depth + wa)
        )
    ones = np.ones(a.F)
    tail = floor_band(band_conv(a.tail, b.tail, ones), floor)
    lam = max(a.lam + wb, b.lam + wa)
    # Wide bands (floored parametrix inverses) push the structural depth
    # past the window.  Entries below slice -(S-2) are window-truncation
    # garbage in the plain product either way; the repair replaces them
    # with the exact cylinder convolution and the depth claim caps there.
    # Downstream snap/retail asserts measure the strip that remains.
    lam = min(lam, a.S - 2)
    if lam < 0:
        raise WindowTooSmall(
            "window too small: composed operator has no stable deep slices"
        )
    deep_repair(m, tail, a.nslices, a.F, a.S - lam)
    return WindowOperator(a.S, a.L, a.F, m, tail, lam, 0)


def deep_residual(w, depth):
    """Largest entry on the region min(s,s') <= -depth."""
    F, ns = w.F, w.nslices
    cut = w.idx(-depth) + 1  # slices -S .. -depth
    if cut <= 0:
        return 0.0
    m4 = np.abs(w.matrix.reshape(ns, F, ns, F))
    top = m4[:cut].max() if cut > 0 else 0.0
    left = m4[:, :, :cut].max() if cut > 0 else 0.0
    return float(max(top, left))


def snap_compact(w, depth, tol=1e-10, what="remainder"):
    """Zero the deep region after asserting it is numerically negligible."""
    r = deep_residual(w, depth)
    if not w.compact:
        # a leftover tail is part of the claimed deep behavior
        r = max(r, float(np.abs(w.tail).max()))
    if r > tol:
        raise WindowTooSmall(
            f"window too small for {what} decay "
            f"(residual norm on deep block {r:.3e} > {tol:.0e})"
        )
    F, ns = w.F, w.nslices
    m = w.matrix.copy()
    m4 = m.reshape(ns, F, ns, F)
    cut = w.idx(-depth) + 1
    m4[:cut] = 0.0
    m4[:, :, :cut] = 0.0
    return WindowOperator(w.S, w.L, w.F, m, None, 0, depth)


def retail(w, tail, lam, tol=1e-8, what="projection", edge_skip=0):
    """Declare banded deep behavior: assert the deep region matches the
    Toeplitz values of ``tail`` within ``tol``, then overwrite it exactly.

    Entries within ``edge_skip`` slices of the bottom cut are excluded
    from the residual measure: a window realization of a smoothing
    operator carries truncation garbage in that corner, which is exactly
    what the overwrite replaces.  The verified strip certifies agreement
    where the window is trustworthy.
    """
    ns, F = w.nslices, w.F
    ref = toeplitz_window(np.asarray(tail, dtype=np.complex128), ns)
    m = w.matrix.copy()
    m4 = m.reshape(ns, F, ns, F)
    r4 = ref.reshape(ns, F, ns, F)
    cut = w.idx(-lam) + 1
    diff = np.abs(m4 - r4)
    if edge_skip > 0:
        diff[:edge_skip] = 0.0
        diff[:, :, :edge_skip] = 0.0
    res = max(
        diff[:cut].max() if cut > 0 else 0.0,
        diff[:, :, :cut].max() if cut > 0 else 0.0,
    )
    res = float(res)
    if res > tol:
        raise WindowTooSmall(
            f"window too small: {what} deep block is not translation "
            f"invariant (residual {res:.3e} > {tol:.0e})"
        )
    m4[:cut] = r4[:cut]
    m4[:, :, :cut] = r4[:, :, :cut]
    return WindowOperator(w.S, w.L, w.F, m, np.array(tail), lam, 0), float(res)


def wop_trace(w):
    """Plain trace; finite only for compact elements."""
    if not w.compact:
        raise ValueError("trace of a non-compact window operator")
    return complex(np.trace(w.matrix))


def wop_reg_trace(w):
    """Stabilized trace: diagonal sum minus the linear cylinder term."""
    if w.compact:
        return wop_trace(w)
    ns, F = w.nslices, w.F
    d = np.einsum("sysy->s", w.matrix.reshape(ns, F, ns, F))
    lam = w.lam
    if lam + 2 > w.S:
        raise WindowTooSmall("window too small: no deep slices to stabilize")
    bterm = d[w.idx(-lam - 1)]
    if d[w.idx(-lam - 2)] - bterm != 0.0:
        raise WindowTooSmall(
            "window too small: stabilized trace increment is nonzero"
        )
    return complex(np.sum(d[w.idx(-lam) :]) - (lam + 1) * bterm)
