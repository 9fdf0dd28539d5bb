"""Leafwise kernels over a finite transversal with a free group action.

A toy consists of a fiber site set, a finite transversal T, and a finite
group acting freely on (theta, y) pairs by permutations (theta-independent on
the fiber).  Kernels are families k(theta) of fiber matrices (closed flavor),
band kernels over the cylinder (invariant flavor), or window kernels
(extended flavor); all carry exact equivariance
k(gamma theta)[gamma y, gamma y'] = k(theta)[y, y'].

The weight sums masked, volume-weighted diagonals over a fundamental domain
of the action; on the cylinder it also sums over all slices, which is finite
whenever the kernel chain contains one cutoff commutator.
"""

import numpy as np

from . import backend
from .cyclic import Cochain, cyclicize, suspension_sum
from .cylinder import (
    ExtendedKernel,
    GridGeometry,
    InvariantKernel,
    MalformedKernel,
    compose,
    section_t,
)

TOL_EQUIV = 1e-12


class FoliatedToy:
    """Fiber sites, transversal, free action, invariant volumes."""

    def __init__(self, nB, nT, group, vol=None):
        self.nB = int(nB)
        self.nT = int(nT)
        self.group = [
            (np.asarray(pt, dtype=int), np.asarray(py, dtype=int)) for pt, py in group
        ]
        pt0, py0 = self.group[0]
        if not (np.array_equal(pt0, np.arange(nT)) and np.array_equal(py0, np.arange(nB))):
            raise ValueError("group[0] must be the identity")
        for pt, py in self.group[1:]:
            # free diagonal action: no (theta, y) fixed by a nontrivial element
            th_fix = np.flatnonzero(pt == np.arange(nT))
            y_fix = np.flatnonzero(py == np.arange(nB))
            if th_fix.size and y_fix.size:
                raise ValueError("action is not free on (theta, y) pairs")
        if vol is None:
            vol = np.ones((nT, nB))
        self.vol = np.array(vol, dtype=float)
        if self.vol.shape != (nT, nB) or np.any(self.vol <= 0):
            raise ValueError("vol must be positive with shape (nT, nB)")
        for pt, py in self.group[1:]:
            if not np.array_equal(self.vol[pt][:, py], self.vol):
                raise MalformedKernel("volumes are not invariant under the action")

    @property
    def order(self):
        return len(self.group)

    def orbit_pairs(self, theta, y):
        return [(pt[theta], py[y]) for pt, py in self.group]

    def stamp_sites(self, rng, low=0.0, high=1.0):
        """Random values over (theta, y), constant along orbits, exact."""
        out = np.full((self.nT, self.nB), np.nan)
        for th in range(self.nT):
            for y in range(self.nB):
                if np.isnan(out[th, y]):
                    v = rng.uniform(low, high)
                    for pt, py in self.group:
                        out[pt[th], py[y]] = v
        return out

    def fundamental_mask(self, rng=None):
        """Greedy fundamental-domain indicator; rng shuffles the claim order."""
        order = np.arange(self.nT * self.nB)
        if rng is not None:
            rng.shuffle(order)
        mask = np.zeros((self.nT, self.nB))
        claimed = np.zeros((self.nT, self.nB), bool)
        for idx in order:
            th, y = divmod(int(idx), self.nB)
            if claimed[th, y]:
                continue
            mask[th, y] = 1.0
            for pt, py in self.group:
                claimed[pt[th], py[y]] = True
        return mask

    def stamp_kernel(self, rng, w=None, real=False):
        """Random equivariant kernel family; band flavor when w is given."""
        nb, nt = self.nB, self.nT
        shape = (nt, nb, nb) if w is None else (nt, 2 * w + 1, nb, nb)
        out = np.full(shape, np.nan, dtype=np.complex128)

        def draw():
            z = rng.standard_normal()
            return z if real else z + 1j * rng.standard_normal()

        offs = range(1) if w is None else range(2 * w + 1)
        for th in range(nt):
            for j in offs:
                for y in range(nb):
                    for yp in range(nb):
                        tgt = out[th, y, yp] if w is None else out[th, j, y, yp]
                        if not np.isnan(tgt.real):
                            continue
                        v = draw()
                        for pt, py in self.group:
                            if w is None:
                                out[pt[th], py[y], py[yp]] = v
                            else:
                                out[pt[th], j, py[y], py[yp]] = v
        return out


def z2_swap_toy(nB=4, nT=2, rng=None, flat=False):
    """Z2 toy: rotate the fiber by half a turn and swap transversal leaves."""
    if nB % 2:
        raise ValueError("nB must be even")
    if nT > 1 and nT % 2:
        raise ValueError("nT must be 1 or even for an involutive leaf swap")
    pt = np.roll(np.arange(nT), nT // 2) if nT > 1 else np.arange(nT)
    py = np.roll(np.arange(nB), nB // 2)
    group = [(np.arange(nT), np.arange(nB)), (pt, py)]
    toy = FoliatedToy(nB, nT, group)
    if not flat and rng is not None:
        toy = FoliatedToy(nB, nT, group, vol=toy.stamp_sites(rng, 0.5, 1.5))
    return toy


def cyclic_cover_toy(nB, q, rng=None, flat=False):
    """Z_q covering of a circle: rotate nB fiber sites by nB/q, trivial T."""
    if nB % q:
        raise ValueError("q must divide nB")
    group = [(np.zeros(1, int), np.roll(np.arange(nB), k * (nB // q))) for k in range(q)]
    toy = FoliatedToy(nB, 1, group)
    if not flat and rng is not None:
        toy = FoliatedToy(nB, 1, group, vol=toy.stamp_sites(rng, 0.5, 1.5))
    return toy


# ---------------------------------------------------------------------------
# weights and multipliers


class Weight:
    """Masked volume weight over (theta, y); mask must tile under the action."""

    def __init__(self, toy, mask, hs=1.0):
        self.toy = toy
        self.mask = np.array(mask, dtype=float)
        self.hs = float(hs)
        if self.mask.shape != (toy.nT, toy.nB):
            raise ValueError("mask must have shape (nT, nB)")
        cover = np.zeros_like(self.mask)
        for pt, py in toy.group:
            cover += self.mask[pt][:, py]
        if not np.array_equal(cover, np.ones_like(cover)):
            raise MalformedKernel("mask translates do not tile exactly once")

    @property
    def site_weights(self):
        return self.mask * self.toy.vol

    def fiber_weights(self, theta):
        """Unmasked composition weights hs * vol(theta, .)."""
        return self.hs * self.toy.vol[theta]


class Multiplier:
    """Per-(theta, y) values whose induced commutators are invariant."""

    def __init__(self, toy, values, tol=TOL_EQUIV):
        self.toy = toy
        self.values = np.array(values, dtype=np.complex128)
        if self.values.shape != (toy.nT, toy.nB):
            raise ValueError("values must have shape (nT, nB)")
        # [phi, k] is invariant for every invariant k iff phi o gamma - phi
        # is constant along each fiber
        for pt, py in toy.group[1:]:
            d = self.values[pt][:, py] - self.values
            if np.abs(d - d[:, :1]).max() > tol:
                raise MalformedKernel(
                    "multiplier does not induce invariant commutators"
                )


def random_multiplier(toy, rng, real=True):
    vals = toy.stamp_sites(rng, -1.0, 1.0)
    if not real:
        vals = vals + 1j * toy.stamp_sites(rng, -1.0, 1.0)
    return Multiplier(toy, vals)


# ---------------------------------------------------------------------------
# kernel families


def _check_equivariant(toy, arr, tol, axes):
    """arr indexed by theta on axis 0 and fiber on the given axes."""
    for pt, py in toy.group[1:]:
        moved = arr[pt]
        for ax in axes:
            moved = np.take(moved, py, axis=ax)
        if np.abs(moved - arr).max() > tol:
            return float(np.abs(moved - arr).max())
    return 0.0


class FoliatedKernel:
    """Closed flavor: one fiber matrix per leaf."""

    def __init__(self, toy, mats, validate=True, tol=0.0):
        self.toy = toy
        self.mats = np.array(mats, dtype=np.complex128)
        if self.mats.shape != (toy.nT, toy.nB, toy.nB):
            raise ValueError("mats must have shape (nT, nB, nB)")
        if validate:
            r = _check_equivariant(toy, self.mats, tol, (1, 2))
            if r:
                raise MalformedKernel(f"kernel not equivariant (residual {r:.3e})")

    def adjoint(self):
        return FoliatedKernel(
            self.toy, np.conj(np.swapaxes(self.mats, 1, 2)), validate=False
        )

    def __add__(self, other):
        return FoliatedKernel(self.toy, self.mats + other.mats, validate=False)

    def __sub__(self, other):
        return FoliatedKernel(self.toy, self.mats - other.mats, validate=False)

    def __mul__(self, z):
        return FoliatedKernel(self.toy, self.mats * z, validate=False)

    __rmul__ = __mul__


def fmul_closed(a, b):
    """Leafwise volume-weighted product."""
    toy = a.toy
    out = np.einsum("tab,tb,tbc->tac", a.mats, toy.vol, b.mats)
    return FoliatedKernel(toy, out, validate=False)


def identity_closed(toy):
    mats = np.stack([np.diag(1.0 / toy.vol[t]) for t in range(toy.nT)])
    return FoliatedKernel(toy, mats, validate=False)


def random_closed(toy, rng, selfadjoint=False):
    k = FoliatedKernel(toy, toy.stamp_kernel(rng))
    if selfadjoint:
        k = 0.5 * (k + k.adjoint())
    return k


class FoliatedBandKernel:
    """Invariant cylinder flavor: per-leaf band coefficients."""

    def __init__(self, toy, coeffs, hs=1.0, validate=True, tol=0.0):
        self.toy = toy
        self.hs = float(hs)
        self.coeffs = np.array(coeffs, dtype=np.complex128)
        if (
            self.coeffs.ndim != 4
            or self.coeffs.shape[0] != toy.nT
            or self.coeffs.shape[2:] != (toy.nB, toy.nB)
            or self.coeffs.shape[1] % 2 != 1
        ):
            raise ValueError("coeffs must have shape (nT, 2w+1, nB, nB)")
        if validate:
            r = _check_equivariant(toy, self.coeffs, tol, (2, 3))
            if r:
                raise MalformedKernel(f"kernel not equivariant (residual {r:.3e})")

    @property
    def bandwidth(self):
        return (self.coeffs.shape[1] - 1) // 2

    def adjoint(self):
        c = np.conj(np.swapaxes(self.coeffs[:, ::-1], 2, 3))
        return FoliatedBandKernel(self.toy, c, self.hs, validate=False)

    def __add__(self, other):
        w = max(self.bandwidth, other.bandwidth)
        return FoliatedBandKernel(
            self.toy,
            _pad4(self.coeffs, w) + _pad4(other.coeffs, w),
            self.hs,
            validate=False,
        )

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, z):
        return FoliatedBandKernel(self.toy, self.coeffs * z, self.hs, validate=False)

    __rmul__ = __mul__


def _pad4(c, w):
    w0 = (c.shape[1] - 1) // 2
    if w0 == w:
        return c
    out = np.zeros((c.shape[0], 2 * w + 1) + c.shape[2:], dtype=np.complex128)
    out[:, w - w0 : w + w0 + 1] = c
    return out


def fmul_band(a, b):
    toy = a.toy
    out = [
        backend.band_conv(a.coeffs[t], b.coeffs[t], a.hs * toy.vol[t])
        for t in range(toy.nT)
    ]
    return FoliatedBandKernel(toy, np.stack(out), a.hs, validate=False)


def random_band(toy, w, rng, hs=1.0, selfadjoint=False):
    k = FoliatedBandKernel(toy, toy.stamp_kernel(rng, w=w), hs)
    if selfadjoint:
        k = 0.5 * (k + k.adjoint())
    return k


class FoliatedExtendedKernel:
    """Window flavor: one extended kernel per leaf on volume-matched grids."""

    def __init__(self, toy, kernels, validate=True, tol=TOL_EQUIV):
        if len(kernels) != toy.nT:
            raise ValueError("need one window kernel per leaf")
        self.toy = toy
        self.kernels = list(kernels)
        g0 = kernels[0].geom
        for k in kernels:
            g = k.geom
            if (g.S, g.L, g.w, g.lambda0, g.hs) != (g0.S, g0.L, g0.w, g0.lambda0, g0.hs):
                raise ValueError("leaf geometries differ in window shape")
        if validate:
            ns = g0.nslices
            for pt, py in toy.group[1:]:
                for t in range(toy.nT):
                    a = self.kernels[pt[t]].matrix.reshape(ns, toy.nB, ns, toy.nB)
                    b = self.kernels[t].matrix.reshape(ns, toy.nB, ns, toy.nB)
                    r = np.abs(a[:, py][:, :, :, py] - b).max()
                    if r > tol:
                        raise MalformedKernel(
                            f"window family not equivariant (residual {r:.3e})"
                        )

    @property
    def geom(self):
        return self.kernels[0].geom

    def tail(self):
        c = np.stack([k.tail.coeffs for k in self.kernels])
        return FoliatedBandKernel(self.toy, c, self.geom.hs, validate=False)

    def deviation(self):
        return [section_t(k) for k in self.kernels]

    def __add__(self, other):
        return FoliatedExtendedKernel(
            self.toy,
            [a + b for a, b in zip(self.kernels, other.kernels)],
            validate=False,
        )

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, z):
        return FoliatedExtendedKernel(
            self.toy, [k * z for k in self.kernels], validate=False
        )

    __rmul__ = __mul__


def fmul_ext(a, b):
    return FoliatedExtendedKernel(
        a.toy, [compose(x, y) for x, y in zip(a.kernels, b.kernels)], validate=False
    )


def leaf_geometries(toy, S, L, w, lambda0, hs=1.0):
    return [
        GridGeometry(toy.nB, S, L, w, lambda0, hs=hs, volY=toy.vol[t])
        for t in range(toy.nT)
    ]


def random_foliated_extended(toy, geoms, w, lam, rng):
    """Equivariant tail plus equivariant window deviation."""
    tail = toy.stamp_kernel(rng, w=w)
    ns = geoms[0].nslices
    dev = np.full((toy.nT, ns, toy.nB, ns, toy.nB), np.nan, dtype=np.complex128)
    keep = geoms[0].slices > -lam
    for t in range(toy.nT):
        for si in range(ns):
            for sj in range(ns):
                for y in range(toy.nB):
                    for yp in range(toy.nB):
                        if not np.isnan(dev[t, si, y, sj, yp].real):
                            continue
                        v = 0.0
                        if keep[si] and keep[sj]:
                            v = rng.standard_normal() + 1j * rng.standard_normal()
                        for pt, py in toy.group:
                            dev[pt[t], si, py[y], sj, py[yp]] = v
    kernels = []
    for t in range(toy.nT):
        g = geoms[t]
        base = backend.toeplitz_window(tail[t], ns)
        m = base + dev[t].reshape(g.nsites, g.nsites)
        kernels.append(
            ExtendedKernel(g, m, InvariantKernel(g, tail[t]), lam, validate=True)
        )
    return FoliatedExtendedKernel(toy, kernels, validate=True)


# ---------------------------------------------------------------------------
# weights on kernels


def weight_omega(k, weight):
    """Masked volume-weighted diagonal sum (closed flavor)."""
    sw = weight.site_weights
    return complex(np.einsum("tyy,ty->", k.mats, sw))


def weight_omega_compact(kernels, weight):
    """Cylinder flavor on a list of per-leaf compact/window matrices."""
    toy = weight.toy
    total = 0.0 + 0.0j
    for t in range(toy.nT):
        k = kernels[t]
        g = k.geom
        m4 = k.matrix.reshape(g.nslices, g.nY, g.nslices, g.nY)
        wvec = weight.hs * weight.site_weights[t]
        total += np.einsum("sysy,y->", m4, wvec)
    return complex(total)


def masked_regularized_trace(k, wvec):
    """Stabilized masked trace of one extended kernel.

    ``wvec`` are the masked per-fiber weights (already times hs).  The
    boundary density is read off the deepest slice; two consecutive deep
    densities come from bit-identical blocks through identical float
    operations, so the stabilization check is exact.
    """
    g = k.geom
    lam = k.lam
    if lam + 2 > g.S:
        raise MalformedKernel("no deep slices left to check stabilization")
    m4 = k.matrix.reshape(g.nslices, g.nY, g.nslices, g.nY)
    d = np.einsum("sysy,y->s", m4, wvec)
    bterm = d[g.slice_index(-lam - 1)]
    inc = d[g.slice_index(-lam - 2)] - bterm
    if inc != 0.0:
        raise MalformedKernel(
            f"masked regularized trace not stabilized (inc={abs(inc):.3e})"
        )
    return complex(np.sum(d[g.slice_index(-lam) :]) - (lam + 1) * bterm)


def weight_omega_reg(fk, weight):
    """Stabilized masked trace of a foliated extended kernel, all leaves."""
    total = 0.0 + 0.0j
    for t in range(weight.toy.nT):
        k = fk.kernels[t]
        wvec = weight.hs * weight.site_weights[t]
        total += masked_regularized_trace(k, wvec)
    return complex(total)


# ---------------------------------------------------------------------------
# localized chain engine (cylinder suspensions, exact)


class _FoliatedLoc:
    """Per-leaf block arrays over an explicit slice rectangle."""

    def __init__(self, toy, lo_r, lo_c, x4s, hs):
        self.toy = toy
        self.lo_r = int(lo_r)
        self.lo_c = int(lo_c)
        self.x4s = x4s  # (nT, nr, nc, F, F)
        self.hs = hs


def chi_localized(k, lam, order="chi-first"):
    """[chi^lam, k] (or [k, chi^lam]) of a foliated band kernel, localized."""
    toy = k.toy
    w = k.bandwidth
    n = 2 * w + 1
    lo = -lam - w
    ss = np.arange(lo, -lam + w + 1)
    chi = (ss <= -lam).astype(float)
    sgn = chi[:, None] - chi[None, :]
    if order == "chi-last":
        sgn = -sgn
    x4s = np.zeros((toy.nT, n, n, toy.nB, toy.nB), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            off = ss[i] - ss[j]
            if -w <= off <= w and sgn[i, j] != 0.0:
                x4s[:, i, j] = sgn[i, j] * k.coeffs[:, off + w]
    return _FoliatedLoc(toy, lo, lo, x4s, k.hs)


def _mul_chain(a, b):
    """Product in the mixed band/localized calculus, leafwise and exact."""
    toy = a.toy
    if isinstance(a, FoliatedBandKernel) and isinstance(b, FoliatedBandKernel):
        return fmul_band(a, b)
    if isinstance(a, FoliatedBandKernel):
        w = a.bandwidth
        outs = np.stack(
            [
                backend.band_times_local(
                    a.coeffs[t], b.x4s[t], a.hs * toy.vol[t]
                )
                for t in range(toy.nT)
            ]
        )
        return _FoliatedLoc(toy, b.lo_r - w, b.lo_c, outs, a.hs)
    if isinstance(b, FoliatedBandKernel):
        w = b.bandwidth
        outs = np.stack(
            [
                backend.local_times_band(
                    a.x4s[t], b.coeffs[t], a.hs * toy.vol[t]
                )
                for t in range(toy.nT)
            ]
        )
        return _FoliatedLoc(toy, a.lo_r, a.lo_c - w, outs, a.hs)
    # localized x localized: contract the overlap of a's columns and b's rows
    a_hi_c = a.lo_c + a.x4s.shape[2] - 1
    b_hi_r = b.lo_r + b.x4s.shape[1] - 1
    lo = max(a.lo_c, b.lo_r)
    hi = min(a_hi_c, b_hi_r)
    nr, nc, F = a.x4s.shape[1], b.x4s.shape[2], a.x4s.shape[3]
    if hi < lo:
        outs = np.zeros((toy.nT, nr, nc, F, F), dtype=np.complex128)
        return _FoliatedLoc(toy, a.lo_r, b.lo_c, outs, a.hs)
    outs = []
    for t in range(toy.nT):
        am = a.x4s[t][:, lo - a.lo_c : hi - a.lo_c + 1]
        bm = b.x4s[t][lo - b.lo_r : hi - b.lo_r + 1]
        wv = a.hs * toy.vol[t]
        am = am * wv[None, None, None, :]
        nt = hi - lo + 1
        prod = (
            am.transpose(0, 2, 1, 3).reshape(nr * F, nt * F)
            @ bm.transpose(0, 2, 1, 3).reshape(nt * F, nc * F)
        )
        outs.append(prod.reshape(nr, F, nc, F).transpose(0, 2, 1, 3))
    return _FoliatedLoc(toy, a.lo_r, b.lo_c, np.stack(outs), a.hs)


def loc_trace(loc, weight):
    """Masked weighted trace over the diagonal of a localized family."""
    toy = loc.toy
    hi_r = loc.lo_r + loc.x4s.shape[1] - 1
    hi_c = loc.lo_c + loc.x4s.shape[2] - 1
    lo = max(loc.lo_r, loc.lo_c)
    hi = min(hi_r, hi_c)
    if hi < lo:
        return 0.0 + 0.0j
    total = 0.0 + 0.0j
    for t in range(toy.nT):
        wv = weight.hs * weight.site_weights[t]
        for s in range(lo, hi + 1):
            blk = loc.x4s[t, s - loc.lo_r, s - loc.lo_c]
            total += np.sum(np.diag(blk) * wv)
    return complex(total)


def chain_omega(weight):
    """Weight of an ordered product of band/localized factors."""

    def ev(factors):
        acc = factors[0]
        for f in factors[1:]:
            acc = _mul_chain(acc, f)
        if not isinstance(acc, _FoliatedLoc):
            raise ValueError("chain has no localized factor; weight diverges")
        return loc_trace(acc, weight)

    return ev


def chain_omega_closed(weight):
    def ev(factors):
        acc = factors[0]
        for f in factors[1:]:
            acc = fmul_closed(acc, f)
        return weight_omega(acc, weight)

    return ev


# ---------------------------------------------------------------------------
# derivations


def d_multiplier(phi, gv_order=True):
    """[phi, .] (gv order) or [., phi] on band or closed kernels."""

    def d(k):
        vals = phi.values
        if isinstance(k, FoliatedBandKernel):
            diff = vals[:, None, :, None] - vals[:, None, None, :]
            c = diff * k.coeffs
            if not gv_order:
                c = -c
            return FoliatedBandKernel(k.toy, c, k.hs, validate=False)
        if isinstance(k, FoliatedKernel):
            diff = vals[:, :, None] - vals[:, None, :]
            m = diff * k.mats
            if not gv_order:
                m = -m
            return FoliatedKernel(k.toy, m, validate=False)
        # window flavor: s-independent multiplier; compute both matrix and
        # tail as difference-then-multiply so deep blocks stay bit-identical
        outs = []
        for t, kt in enumerate(k.kernels):
            g = kt.geom
            f = np.tile(vals[t], g.nslices)
            dm = f[:, None] - f[None, :]
            m = dm * kt.matrix
            diff = vals[t][:, None] - vals[t][None, :]
            tail = InvariantKernel(g, diff[None] * kt.tail.coeffs)
            if not gv_order:
                m, tail = -m, -1.0 * tail
            outs.append(ExtendedKernel(g, m, tail, kt.lam, validate=False))
        return FoliatedExtendedKernel(k.toy, outs, validate=False)

    return d


def d_chi(lam=0, order="chi-first"):
    def d(k):
        return chi_localized(k, lam, order=order)

    return d


# ---------------------------------------------------------------------------
# suspension and the named cocycles


def suspend(weight, derivations, chi_lam=0, chi_order="chi-first"):
    """Degree k+1 cocycle from a weight, k derivations and one cutoff slot.

    The cutoff commutator slot is mandatory; without it the cylinder weight
    has no reason to be finite.
    """
    if chi_lam is None:
        raise ValueError("suspension requires the cutoff commutator slot")
    derivs = list(derivations) + [d_chi(chi_lam, chi_order)]
    omega_chain = chain_omega(weight)

    def fn(*ells):
        return suspension_sum(omega_chain, derivs, list(ells))

    return Cochain(
        len(derivs), fn, fmul_band, carrier="foliated-band",
        name=f"suspend[{len(derivations)}]",
    )


def gv_tau(weight, phi, phidot):
    """Leafwise 2-cocycle pairing two transverse variations (closed flavor)."""
    derivs = [d_multiplier(phi), d_multiplier(phidot)]
    omega_chain = chain_omega_closed(weight)

    def fn(a0, a1, a2):
        return suspension_sum(omega_chain, derivs, [a0, a1, a2])

    return Cochain(2, fn, fmul_closed, carrier="foliated-closed", name="gv_tau")


def gv_sigma(weight, phi, phidot, lam=0, chi_order="chi-first"):
    sig = suspend(weight, [d_multiplier(phi), d_multiplier(phidot)], lam, chi_order)
    sig.name = "gv_sigma"
    return sig


def gv_tau_r(weight, phi, phidot):
    """Regularized window 2-cochain: stabilized masked sums, then cyclicized."""
    derivs = [d_multiplier(phi), d_multiplier(phidot)]

    def omega_chain(factors):
        acc = factors[0]
        for f in factors[1:]:
            acc = fmul_ext(acc, f)
        return weight_omega_reg(acc, weight)

    def raw(a0, a1, a2):
        return suspension_sum(omega_chain, derivs, [a0, a1, a2])

    return cyclicize(
        Cochain(2, raw, fmul_ext, carrier="foliated-extended", name="gv_tau_r")
    )


def as_tau_phi(weight, f_terms):
    """Closed-flavor p-cocycle from decomposable antisymmetric multipliers.

    ``f_terms`` is a list of p-tuples of multipliers; p must be even.
    """
    p = len(f_terms[0])
    if p % 2:
        raise ValueError("only even degrees pair with idempotents")
    omega_chain = chain_omega_closed(weight)
    term_derivs = [
        [d_multiplier(f, gv_order=False) for f in fs] for fs in f_terms
    ]

    def fn(*ks):
        return sum(suspension_sum(omega_chain, ds, list(ks)) for ds in term_derivs)

    return Cochain(p, fn, fmul_closed, carrier="foliated-closed", name="as_tau")


def as_sigma_phi(weight, f_terms, lam=0, chi_order="chi-first"):
    """Cylinder suspension of the decomposable cocycle; degree p+1."""
    p = len(f_terms[0]) if f_terms else 0
    omega_chain = chain_omega(weight)
    term_derivs = [
        [d_multiplier(f, gv_order=False) for f in fs] + [d_chi(lam, chi_order)]
        for fs in f_terms
    ] or [[d_chi(lam, chi_order)]]

    def fn(*ells):
        return sum(suspension_sum(omega_chain, ds, list(ells)) for ds in term_derivs)

    return Cochain(
        p + 1, fn, fmul_band, carrier="foliated-band", name="as_sigma"
    )


def as_tau_phi_r(weight, f_terms):
    """Window flavor of the decomposable cocycle, stabilized and cyclicized."""
    term_derivs = [
        [d_multiplier(f, gv_order=False) for f in fs] for fs in f_terms
    ]

    def omega_chain(factors):
        acc = factors[0]
        for f in factors[1:]:
            acc = fmul_ext(acc, f)
        return weight_omega_reg(acc, weight)

    def raw(*ks):
        return sum(suspension_sum(omega_chain, ds, list(ks)) for ds in term_derivs)

    p = len(f_terms[0])
    return cyclicize(
        Cochain(p, raw, fmul_ext, carrier="foliated-extended", name="as_tau_r")
    )


# ---------------------------------------------------------------------------
# Shatten norms


def shatten_norm(k, weight, m):
    """sup over leaves of the masked trace norm of the m-th absolute power."""
    toy = k.toy
    best = 0.0
    for t in range(toy.nT):
        v = np.sqrt(toy.vol[t])
        op = v[:, None] * k.mats[t] * v[None, :]
        h = op @ op.conj().T
        evals, vecs = np.linalg.eigh(h)
        evals = np.clip(evals, 0.0, None)
        # fractional powers blow up roundoff-level eigenvalues; floor them
        if evals.size and evals[-1] > 0:
            evals[evals < evals[-1] * 1e-14] = 0.0
        powm = (vecs * evals ** (m / 2.0)) @ vecs.conj().T
        mask = weight.mask[t].astype(bool)
        val = float(np.real(np.trace(powm[np.ix_(mask, mask)])))
        best = max(best, val)
    return best ** (1.0 / m)


def shatten_hs_check(k, weight):
    """For positive kernels the m=2 norm agrees with the masked HS norm."""
    toy = k.toy
    best_tr, best_hs = 0.0, 0.0
    for t in range(toy.nT):
        v = np.sqrt(toy.vol[t])
        op = v[:, None] * k.mats[t] * v[None, :]
        mask = weight.mask[t].astype(bool)
        tr2 = float(np.real(np.trace((op @ op)[np.ix_(mask, mask)])))
        hs2 = float(np.sum(np.abs(op[:, mask]) ** 2))
        best_tr = max(best_tr, tr2)
        best_hs = max(best_hs, hs2)
    return abs(best_tr - best_hs)
