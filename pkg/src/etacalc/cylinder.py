"""Kernel algebra on a one-ended lattice cylinder window.

Sites are (s, y) with slice s in [-S, L] and fiber index y in [0, nY).  The
deep end (s -> -infinity) is translation invariant; a finite window plus an
explicit invariant tail represents operators on the infinite cylinder:

* ``InvariantKernel``: fully translation-invariant band kernel, given by its
  coefficient blocks ell(n) acting as (ell u)(s) = sum_n ell(n) u(s - n).
* ``ExtendedKernel``: window matrix that agrees with a tail kernel's Toeplitz
  values on every entry with min(s, s') <= -lam.
* ``CompactKernel``: window matrix vanishing on every entry with
  min(s, s') <= -depth.

All compositions are taken against the site volumes hs * volY[y].  Products
of extended kernels are exact: the finite matrix product corrupts only a
bottom corner of the window, and that corner is overwritten with the tail
convolution's Toeplitz values, which provably equal the infinite-cylinder
product there.  This repair is what makes regularized traces stabilize to
the last bit and index computations come out nonzero.
"""

import io

import numpy as np

from . import backend


class WindowTooSmall(ValueError):
    """Window cannot hold the requested object; message says what overflowed."""


class MalformedKernel(ValueError):
    """Window matrix does not satisfy the declared deep-block structure."""


# ---------------------------------------------------------------------------
# geometry


class GridGeometry:
    """Window geometry and volumes.

    Parameters
    ----------
    nY : int
        Number of fiber sites.
    S, L : int
        Slice range is [-S, L].
    w : int
        Bandwidth cap: no kernel handled on this geometry may couple slices
        further apart than w.
    lambda0 : int
        Stability margin: every extended kernel must be tail-exact at depth
        lambda0, every compact kernel must vanish there.  Requires
        S >= lambda0 + 2 w + 2 so that one composition stays repairable.
    hs : float
        Slice step (volume weight of the R-direction).
    volY : array or None
        Positive fiber volumes, default all-ones.
    """

    def __init__(self, nY, S, L, w, lambda0, hs=1.0, volY=None):
        if nY < 1 or S < 1 or L < 0 or w < 0 or lambda0 < 1:
            raise ValueError("bad geometry sizes")
        if S < lambda0 + 2 * w + 2:
            raise WindowTooSmall(
                "window too small: need S >= lambda0 + 2w + 2, got "
                f"S={S}, lambda0={lambda0}, w={w}"
            )
        if hs <= 0:
            raise ValueError("hs must be positive")
        vy = np.ones(nY) if volY is None else np.array(volY, dtype=float)
        if vy.shape != (nY,) or np.any(vy <= 0):
            raise ValueError("volY must be positive with length nY")
        self.nY = int(nY)
        self.S = int(S)
        self.L = int(L)
        self.w = int(w)
        self.lambda0 = int(lambda0)
        self.hs = float(hs)
        self.volY = vy
        self.volY.setflags(write=False)

    @property
    def nslices(self):
        return self.S + self.L + 1

    @property
    def nsites(self):
        return self.nslices * self.nY

    @property
    def slices(self):
        return np.arange(-self.S, self.L + 1)

    @property
    def fiber_weights(self):
        """Volume weights hs * volY entering every composition."""
        return self.hs * self.volY

    @property
    def site_volumes(self):
        return np.tile(self.hs * self.volY, self.nslices)

    def slice_index(self, s):
        return s + self.S

    def chi_sites(self, lam=0):
        """Indicator of the half cylinder s <= -lam, per site."""
        mask = (self.slices <= -lam).astype(float)
        return np.repeat(mask, self.nY)

    def same_grid(self, other):
        return (
            self.nY == other.nY
            and self.S == other.S
            and self.L == other.L
            and self.w == other.w
            and self.lambda0 == other.lambda0
            and self.hs == other.hs
            and np.array_equal(self.volY, other.volY)
        )

    def __repr__(self):
        return (
            f"GridGeometry(nY={self.nY}, S={self.S}, L={self.L}, w={self.w}, "
            f"lambda0={self.lambda0}, hs={self.hs})"
        )


def _check_same(a, b):
    if not a.geom.same_grid(b.geom):
        raise ValueError("kernels live on different geometries")


# ---------------------------------------------------------------------------
# invariant band kernels


class InvariantKernel:
    """Translation-invariant band kernel on the infinite cylinder."""

    def __init__(self, geom, coeffs):
        coeffs = np.array(coeffs, dtype=np.complex128)
        if coeffs.ndim != 3 or coeffs.shape[1:] != (geom.nY, geom.nY):
            raise ValueError("coeffs must have shape (2w+1, nY, nY)")
        if coeffs.shape[0] % 2 != 1:
            raise ValueError("coeffs first axis must have odd length")
        w = (coeffs.shape[0] - 1) // 2
        if w > geom.w:
            raise WindowTooSmall(
                f"window too small: kernel bandwidth {w} exceeds cap {geom.w}"
            )
        self.geom = geom
        self.coeffs = coeffs
        self.coeffs.setflags(write=False)

    @property
    def bandwidth(self):
        return (self.coeffs.shape[0] - 1) // 2

    def block(self, n):
        w = self.bandwidth
        if -w <= n <= w:
            return self.coeffs[n + w]
        return np.zeros((self.geom.nY, self.geom.nY), dtype=np.complex128)

    def adjoint(self):
        # ell*(n) = ell(-n)^dagger
        c = np.conj(np.swapaxes(self.coeffs[::-1], 1, 2))
        return InvariantKernel(self.geom, c)

    def symbol(self, mu):
        """Fiber matrix sum_n ell(n) exp(-i n mu) at frequencies mu."""
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        w = self.bandwidth
        n = np.arange(-w, w + 1)
        phase = np.exp(-1j * np.outer(mu, n))
        return np.einsum("mj,jab->mab", phase, self.coeffs)

    def trimmed(self, tol=0.0):
        """Drop outer coefficient blocks that are uniformly <= tol."""
        w = self.bandwidth
        keep = w
        while keep > 0:
            outer = max(
                np.abs(self.coeffs[w - keep]).max(),
                np.abs(self.coeffs[w + keep]).max(),
            )
            if outer > tol:
                break
            keep -= 1
        if keep == w:
            return self
        return InvariantKernel(self.geom, self.coeffs[w - keep : w + keep + 1])

    def norm(self):
        return float(np.abs(self.coeffs).max())

    def __add__(self, other):
        _check_same(self, other)
        w = max(self.bandwidth, other.bandwidth)
        c = pad_coeffs(self.coeffs, w) + pad_coeffs(other.coeffs, w)
        return InvariantKernel(self.geom, c)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, z):
        return InvariantKernel(self.geom, self.coeffs * z)

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)


def pad_coeffs(c, w):
    w0 = (c.shape[0] - 1) // 2
    if w0 == w:
        return c
    out = np.zeros((2 * w + 1,) + c.shape[1:], dtype=np.complex128)
    out[w - w0 : w + w0 + 1] = c
    return out


def zero_invariant(geom):
    return InvariantKernel(geom, np.zeros((1, geom.nY, geom.nY)))


def identity_invariant(geom):
    """Unit of the volume-weighted convolution algebra."""
    c = np.zeros((1, geom.nY, geom.nY), dtype=np.complex128)
    c[0] = np.diag(1.0 / (geom.hs * geom.volY))
    return InvariantKernel(geom, c)


def shift_kernel(geom, n, block=None):
    """Kernel with a single coefficient block at offset n."""
    if abs(n) > geom.w:
        raise WindowTooSmall(f"window too small: shift {n} exceeds cap {geom.w}")
    c = np.zeros((2 * abs(n) + 1, geom.nY, geom.nY), dtype=np.complex128)
    c[-1 if n >= 0 else 0] = np.eye(geom.nY) if block is None else block
    if n == 0:
        c = c[:1]
    return InvariantKernel(geom, c)


# ---------------------------------------------------------------------------
# extended and compact kernels


class ExtendedKernel:
    """Window matrix equal to its tail's Toeplitz values at depth >= lam."""

    def __init__(self, geom, matrix, tail, lam, validate=True):
        matrix = np.array(matrix, dtype=np.complex128)
        if matrix.shape != (geom.nsites, geom.nsites):
            raise ValueError("matrix has wrong shape for geometry")
        if not isinstance(tail, InvariantKernel):
            raise TypeError("tail must be an InvariantKernel")
        if not tail.geom.same_grid(geom):
            raise ValueError("tail lives on a different geometry")
        if not (0 <= lam <= geom.lambda0):
            raise WindowTooSmall(
                f"window too small: lam={lam} outside [0, lambda0={geom.lambda0}]"
            )
        if validate:
            res = backend.deep_residual(
                matrix, tail.coeffs, geom.nslices, geom.nY, geom.slice_index(-lam)
            )
            if res != 0.0:
                raise MalformedKernel(
                    f"deep block deviates from tail by {res:.3e} (tolerance 0)"
                )
        self.geom = geom
        self.matrix = matrix
        self.matrix.setflags(write=False)
        self.tail = tail
        self.lam = int(lam)

    def adjoint(self):
        return ExtendedKernel(
            self.geom,
            np.conj(self.matrix.T),
            self.tail.adjoint(),
            self.lam,
            validate=False,
        )

    def __add__(self, other):
        _check_same(self, other)
        if isinstance(other, CompactKernel):
            return ExtendedKernel(
                self.geom,
                self.matrix + other.matrix,
                self.tail,
                max(self.lam, other.depth),
                validate=False,
            )
        return ExtendedKernel(
            self.geom,
            self.matrix + other.matrix,
            self.tail + other.tail,
            max(self.lam, other.lam),
            validate=False,
        )

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, z):
        return ExtendedKernel(
            self.geom, self.matrix * z, self.tail * z, self.lam, validate=False
        )

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)


class CompactKernel:
    """Window matrix vanishing on every entry with min(s, s') <= -depth."""

    def __init__(self, geom, matrix, depth, validate=True):
        matrix = np.array(matrix, dtype=np.complex128)
        if matrix.shape != (geom.nsites, geom.nsites):
            raise ValueError("matrix has wrong shape for geometry")
        if not (0 <= depth <= geom.lambda0):
            raise WindowTooSmall(
                f"window too small: compact depth {depth} exceeds lambda0={geom.lambda0}"
            )
        if validate:
            dlo = geom.slice_index(-depth)
            m4 = matrix.reshape(geom.nslices, geom.nY, geom.nslices, geom.nY)
            if dlo >= 0:
                r = max(
                    np.abs(m4[: dlo + 1]).max() if dlo + 1 > 0 else 0.0,
                    np.abs(m4[:, :, : dlo + 1]).max(),
                )
                if r != 0.0:
                    raise MalformedKernel(
                        f"compact kernel has deep entries of size {r:.3e}"
                    )
        self.geom = geom
        self.matrix = matrix
        self.matrix.setflags(write=False)
        self.depth = int(depth)

    def adjoint(self):
        return CompactKernel(
            self.geom, np.conj(self.matrix.T), self.depth, validate=False
        )

    def __add__(self, other):
        _check_same(self, other)
        if isinstance(other, ExtendedKernel):
            return other + self
        return CompactKernel(
            self.geom,
            self.matrix + other.matrix,
            max(self.depth, other.depth),
            validate=False,
        )

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, z):
        return CompactKernel(self.geom, self.matrix * z, self.depth, validate=False)

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)


def toeplitz_extend(tail):
    """Full-window Toeplitz realization of an invariant kernel (lam = 0)."""
    g = tail.geom
    m = backend.toeplitz_window(tail.coeffs, g.nslices)
    return ExtendedKernel(g, m, tail, 0, validate=False)


def identity_extended(geom):
    return toeplitz_extend(identity_invariant(geom))


def zero_compact(geom):
    return CompactKernel(
        geom, np.zeros((geom.nsites, geom.nsites)), 0, validate=False
    )


# ---------------------------------------------------------------------------
# structure maps


def section_s(tail):
    """Compress an invariant kernel to the half cylinder s <= 0.

    Linear section of the symbol map; not multiplicative (the defect of
    multiplicativity near slice 0 is what the boundary cocycles measure).
    """
    g = tail.geom
    lam = tail.bandwidth + 1
    if lam > g.lambda0:
        raise WindowTooSmall(
            f"window too small: section depth {lam} exceeds lambda0={g.lambda0}"
        )
    chi = g.chi_sites(0)
    m = backend.toeplitz_window(tail.coeffs, g.nslices)
    m *= chi[:, None]
    m *= chi[None, :]
    return ExtendedKernel(g, m, tail, lam, validate=False)


def project_pi(k):
    """Symbol map: read the invariant tail off the deep end."""
    if isinstance(k, CompactKernel):
        return zero_invariant(k.geom)
    g = k.geom
    res = backend.deep_residual(
        k.matrix, k.tail.coeffs, g.nslices, g.nY, g.slice_index(-k.lam)
    )
    if res != 0.0:
        raise MalformedKernel(f"deep block deviates from tail by {res:.3e}")
    return k.tail


def section_t(k):
    """Compact deviation t(k) = k - s(pi(k)); exact zeros on the deep block."""
    if isinstance(k, CompactKernel):
        return k
    g = k.geom
    sk = section_s(k.tail)
    depth = max(k.lam, k.tail.bandwidth + 1)
    return CompactKernel(g, k.matrix - sk.matrix, depth, validate=True)


def compose(a, b):
    """Product in the cylinder algebra (volume-weighted).

    extended x extended -> extended (deep block re-established exactly from
    the tail convolution); any product with a compact factor is compact.
    """
    _check_same(a, b)
    g = a.geom
    vol = g.site_volumes
    m = a.matrix @ (vol[:, None] * b.matrix)
    a_ext = isinstance(a, ExtendedKernel)
    b_ext = isinstance(b, ExtendedKernel)
    if a_ext and b_ext:
        wa, wb = a.tail.bandwidth, b.tail.bandwidth
        if wa + wb > g.w:
            raise WindowTooSmall(
                f"window too small: composed bandwidth {wa + wb} exceeds cap {g.w}"
            )
        tail = InvariantKernel(
            g, backend.band_conv(a.tail.coeffs, b.tail.coeffs, g.fiber_weights)
        )
        lam = max(a.lam + wb, b.lam + wa)
        if lam > g.lambda0:
            raise WindowTooSmall(
                f"window too small: composed lam {lam} exceeds lambda0={g.lambda0}"
            )
        backend.deep_repair(m, tail.coeffs, g.nslices, g.nY, g.slice_index(-lam))
        return ExtendedKernel(g, m, tail, lam, validate=False)
    if a_ext:  # extended x compact
        depth = max(a.lam, b.depth + a.tail.bandwidth)
    elif b_ext:  # compact x extended
        depth = max(b.lam, a.depth + b.tail.bandwidth)
    else:
        depth = max(a.depth, b.depth)
    if depth > g.lambda0:
        raise WindowTooSmall(
            f"window too small: compact product depth {depth} exceeds "
            f"lambda0={g.lambda0}"
        )
    return CompactKernel(g, m, depth, validate=False)


def commutator(a, b):
    return compose(a, b) - compose(b, a)


def chi_commutator(k, lam):
    """[chi^lam, k] as a compact kernel.

    For an invariant kernel the commutator is taken with its full Toeplitz
    realization; support sits in the band |s + lam| <= w around the cut.
    """
    g = k.geom
    if isinstance(k, InvariantKernel):
        wk = k.bandwidth
        klam = k.bandwidth  # deviation depth of the Toeplitz realization
        mat = backend.toeplitz_window(k.coeffs, g.nslices)
    else:
        wk = k.tail.bandwidth
        klam = k.lam
        mat = k.matrix
    if lam + wk > g.S or wk - lam > g.L:
        raise WindowTooSmall(
            f"window too small: chi commutator support at lam={lam}, w={wk} "
            "leaves the window"
        )
    chi = g.chi_sites(lam)
    m = (chi[:, None] - chi[None, :]) * mat
    depth = max(lam + wk, klam)
    return CompactKernel(g, m, depth, validate=True)


# ---------------------------------------------------------------------------
# serialization (exact decimal round trip)


def _fmt(z):
    return f"{float(z.real)!r} {float(z.imag)!r}"


def write_kernel(k, f):
    """Serialize a kernel to a text stream; repr floats give exact round trip."""
    own = isinstance(f, str)
    if own:
        f = open(f, "w")
    try:
        g = k.geom
        f.write("etacalc-kernel v1\n")
        kind = {
            InvariantKernel: "invariant",
            ExtendedKernel: "extended",
            CompactKernel: "compact",
        }[type(k)]
        f.write(f"kind {kind}\n")
        f.write(f"nY {g.nY}\nS {g.S}\nL {g.L}\nw {g.w}\nlambda0 {g.lambda0}\n")
        f.write(f"hs {g.hs!r}\n")
        f.write("volY " + " ".join(repr(float(v)) for v in g.volY) + "\n")
        if kind == "extended":
            f.write(f"lambda {k.lam}\n")
        if kind == "compact":
            f.write(f"depth {k.depth}\n")
        if kind in ("invariant", "extended"):
            tail = k if kind == "invariant" else k.tail
            f.write(f"tailw {tail.bandwidth}\n")
            w = tail.bandwidth
            for n in range(-w, w + 1):
                blk = tail.coeffs[n + w]
                f.write(f"tail {n} " + " ".join(_fmt(z) for z in blk.ravel()) + "\n")
        if kind in ("extended", "compact"):
            n = g.nsites
            f.write(f"matrix {n}\n")
            for row in k.matrix:
                f.write(" ".join(_fmt(z) for z in row) + "\n")
        f.write("end\n")
    finally:
        if own:
            f.close()


def read_kernel(f):
    """Parse a kernel written by :func:`write_kernel`."""
    own = isinstance(f, str)
    if own:
        f = open(f)
    try:
        lines = iter(f.read().splitlines())
    finally:
        if own:
            f.close()
    if next(lines) != "etacalc-kernel v1":
        raise ValueError("not an etacalc kernel file")
    head = {}
    tail_rows = {}
    matrix = None
    for line in lines:
        if line == "end":
            break
        key, _, rest = line.partition(" ")
        if key == "tail":
            n, _, vals = rest.partition(" ")
            tail_rows[int(n)] = _parse_complex(vals)
        elif key == "matrix":
            nsites = int(rest)
            matrix = np.empty((nsites, nsites), dtype=np.complex128)
            for i in range(nsites):
                matrix[i] = _parse_complex(next(lines))
        else:
            head[key] = rest
    nY = int(head["nY"])
    geom = GridGeometry(
        nY,
        int(head["S"]),
        int(head["L"]),
        int(head["w"]),
        int(head["lambda0"]),
        hs=float(head["hs"]),
        volY=np.array([float(x) for x in head["volY"].split()]),
    )
    kind = head["kind"]
    tail = None
    if "tailw" in head:
        w = int(head["tailw"])
        coeffs = np.empty((2 * w + 1, nY, nY), dtype=np.complex128)
        for n in range(-w, w + 1):
            coeffs[n + w] = tail_rows[n].reshape(nY, nY)
        tail = InvariantKernel(geom, coeffs)
    if kind == "invariant":
        return tail
    if kind == "extended":
        return ExtendedKernel(geom, matrix, tail, int(head["lambda"]))
    return CompactKernel(geom, matrix, int(head["depth"]))


def _parse_complex(text):
    vals = np.array([float(x) for x in text.split()])
    return vals[0::2] + 1j * vals[1::2]


def kernel_to_text(k):
    buf = io.StringIO()
    write_kernel(k, buf)
    return buf.getvalue()


def kernel_from_text(text):
    return read_kernel(io.StringIO(text))
