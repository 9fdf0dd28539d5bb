"""Lattice Dirac operators on cylinder-ended grids.

A model is a finite window of the half-infinite cylinder (slices -S..L,
deep end at -S) carrying D+ = discretized d/ds + A(s).  The forward step
uses the exponential transfer factor T(s) = exp(-hs A(s)):

    (D+ u)(s) = (u(s+1) - T(s) u(s)) / hs,      D- = (D+)^*.

The pair is exactly adjoint on the lattice, translation invariant on deep
slices, and T's spectrum crosses the unit circle only where an eigenvalue
of A crosses zero, so the operator's zero-mode count matches the continuum
operator for every step size.  (A plain Euler factor 1 - hs A also crosses
the unit circle when an eigenvalue of A sweeps 2/hs, creating spurious
index; see the scheme comparison test.)

Two-ended line problems are folded onto a single cylinder end: the fiber
doubles into (left copy, reflected right copy) and the two copies couple
through one cap entry at the top slice.

Projections (graph, Wassermann, Connes-Skandalis) and the per-frequency
projection path p_t with analytic t-derivatives live here as well.
"""

import numpy as np

from .windowcalc import (
    FLOOR,
    WindowOperator,
    floor_band,
    snap_compact,
    symbol_band,
    wop_compose,
    wop_from_tail,
    wop_identity,
    wop_trace,
)
from .cylinder import MalformedKernel, WindowTooSmall

HERMITIAN_TOL = 1e-13


# ---------------------------------------------------------------------------
# boundary profiles


class BoundaryOperator:
    """Hermitian boundary family A(s): interior samples plus exact clamps.

    ``interior`` has shape (nj, nY, nY); A(s) = interior[clip(s, 0, nj-1)],
    so the profile is constant (bitwise) outside the interior window.
    """

    def __init__(self, interior):
        a = np.asarray(interior, dtype=np.complex128)
        if a.ndim == 2:
            a = a[None]
        if a.ndim != 3 or a.shape[1] != a.shape[2]:
            raise MalformedKernel("boundary profile must be (nj, nY, nY)")
        herm = np.abs(a - np.conj(np.swapaxes(a, 1, 2))).max()
        if herm > HERMITIAN_TOL:
            raise MalformedKernel(
                f"boundary operator not Hermitian (residual {herm:.3e})"
            )
        self.interior = a
        self.nj = a.shape[0]
        self.nY = a.shape[1]

    def at(self, s):
        return self.interior[min(max(int(s), 0), self.nj - 1)]

    @property
    def left(self):
        return self.interior[0]

    @property
    def right(self):
        return self.interior[-1]

    @property
    def constant(self):
        return all(
            np.array_equal(self.interior[j], self.interior[0])
            for j in range(self.nj)
        )


def scalar_profile(values):
    v = np.asarray(values, dtype=np.complex128)
    return BoundaryOperator(v[:, None, None])


def spectral_gap_check(A, eps):
    """(min |eig| >= eps, min |eig|) over the boundary family's end values."""
    if isinstance(A, BoundaryOperator):
        mats = [A.left, A.right]
    else:
        mats = [np.asarray(A)]
    margin = min(float(np.abs(np.linalg.eigvalsh(m)).min()) for m in mats)
    return margin >= eps, margin


def circle_dtheta(nY):
    """Spectral circulant for -i d/dtheta on an nY-point circle.

    Eigenvalues are the integer frequencies by construction.
    """
    k = np.fft.fftfreq(nY, d=1.0 / nY)
    F = np.fft.fft(np.eye(nY), axis=0)
    M = np.fft.ifft(k[:, None] * F, axis=0)
    return 0.5 * (M + M.conj().T)


def _transfer(A, hs, scheme="exp"):
    """Forward transfer block: exp(-hs A), or 1 - hs A for plain Euler.

    The Euler factor is kept for comparison: its modulus crosses 1 both
    where an eigenvalue of A crosses 0 and where one sweeps 2/hs, so it
    can manufacture spurious index at coarse steps.
    """
    if scheme == "euler":
        return np.eye(A.shape[0]) - hs * np.asarray(A, dtype=np.complex128)
    if scheme != "exp":
        raise ValueError(f"unknown difference scheme '{scheme}'")
    lam, V = np.linalg.eigh(A)
    return (V * np.exp(-hs * lam)[None, :]) @ V.conj().T


# ---------------------------------------------------------------------------
# models


class DiracModel:
    """Window realization of D+ together with its deep-cylinder symbol.

    fields: S, L (window slices -S..L), F (total fiber), hs, scale,
    Dplus (WindowOperator, extended), profile (line samples used by the
    spectral-flow oracle), ends (boundary matrices governing the gap),
    name.
    """

    def __init__(self, S, L, F, hs, Dplus, profile, ends, name, scale=1.0):
        self.S = int(S)
        self.L = int(L)
        self.F = int(F)
        self.hs = float(hs)
        self.scale = float(scale)
        self.Dplus = Dplus
        self.profile = profile
        self.ends = ends
        self.name = name

    @property
    def nslices(self):
        return self.S + self.L + 1

    @property
    def Dminus(self):
        return self.Dplus.adjoint()

    def bsym(self, mu):
        """Deep-cylinder symbol B(mu) = sum_n l(n) e^{-i n mu}, (m, F, F)."""
        c = self.Dplus.tail
        w = (c.shape[0] - 1) // 2
        n = np.arange(-w, w + 1)
        ph = np.exp(-1j * np.outer(mu, n))
        return np.einsum("mn,nab->mab", ph, c)

    def rescaled(self, s):
        """The model for s*D: every coefficient scales, the grid does not."""
        d = self.Dplus
        D2 = WindowOperator(d.S, d.L, d.F, d.matrix * s, d.tail * s, d.lam)
        return DiracModel(
            self.S, self.L, self.F, self.hs, D2, self.profile, self.ends,
            self.name, scale=self.scale * s,
        )


def pure_cylinder_model(A0, S, L, hs=1.0, name="constant", scheme="exp"):
    """Translation-invariant D+ everywhere; the top row is the plain cut."""
    A0 = np.asarray(A0, dtype=np.complex128)
    if A0.ndim == 0:
        A0 = A0[None, None]
    F = A0.shape[0]
    T0 = _transfer(A0, hs, scheme)
    tail = np.zeros((3, F, F), dtype=np.complex128)
    tail[0] = np.eye(F) / hs  # offset -1: couples the slice above
    tail[1] = -T0 / hs
    D = wop_from_tail(tail, S, L)
    profile = BoundaryOperator(A0[None])
    return DiracModel(S, L, F, hs, D, profile, [A0], name)


def folded_line_model(boundary, S, L, hs=1.0, name="folded", scheme="exp"):
    """Fold a two-ended line profile onto one cylinder end.

    Line site of copy 1 at slice m is c + (m - L); copy 2 sits at
    (c + 1) - (m - L), with c the fold site just left of the profile
    midpoint.  The single cap entry couples copy 1 to copy 2 at the top
    slice; deep slices are bitwise translation invariant because the
    profile clamps exactly.
    """
    nb = boundary.nY
    nj = boundary.nj
    F = 2 * nb
    c = (nj - 1) // 2
    if L < max(c, nj - c - 2) + 1:
        raise WindowTooSmall(
            "window too small: interior profile does not fit below the cap"
        )
    ns = S + L + 1
    # transfer blocks per clamped line site, computed once per site index
    sites = range(c - (S + L), c + 2 + (S + L))
    T = {j: _transfer(boundary.at(j), hs, scheme) for j in sites}
    m4 = np.zeros((ns, F, ns, F), dtype=np.complex128)
    eye = np.eye(nb) / hs
    for i in range(ns):
        m = i - S
        j1 = c + (m - L)
        j2 = c + 1 - (m - L)
        m4[i, :nb, i, :nb] = -T[j1] / hs
        m4[i, nb:, i, nb:] = -T[j2] / hs
        if i + 1 < ns:
            m4[i, :nb, i + 1, :nb] = eye
        if i - 1 >= 0:
            m4[i, nb:, i - 1, nb:] = eye
    m4[ns - 1, :nb, ns - 1, nb:] = eye  # fold cap
    tail = np.zeros((3, F, F), dtype=np.complex128)
    tail[0, :nb, :nb] = eye
    tail[1, :nb, :nb] = -T[c - (S + L)] / hs
    tail[1, nb:, nb:] = -T[c + 2 + (S + L) - 1] / hs
    tail[2, nb:, nb:] = eye
    D = WindowOperator(S, L, F, m4.reshape(ns * F, ns * F), tail, lam=0)
    ends = [boundary.left, boundary.right]
    return DiracModel(S, L, F, hs, D, boundary, ends, name)


def tanh_profile(nj, alpha=1.0, amp=1.0):
    """Scalar crossing profile, antisymmetric about the fold pair."""
    j = np.arange(nj)
    return scalar_profile(amp * np.tanh(alpha * (j - (nj - 1) / 2.0)))


def mode_decompose(boundary, tol=1e-12):
    """Split a commuting boundary family into scalar profiles.

    Returns (U, profiles) with U unitary and profiles a list of per-mode
    scalar BoundaryOperators, or None when the family does not commute
    (off-diagonal residual above tol in the common eigenbasis).
    """
    a = boundary.interior
    spread = [float(np.ptp(np.linalg.eigvalsh(m))) for m in a]
    ref = a[int(np.argmax(spread))]
    _, U = np.linalg.eigh(ref)
    rot = np.einsum("ya,jyz,zb->jab", U.conj(), a, U)
    off = rot - rot * np.eye(boundary.nY)[None]
    if np.abs(off).max() > tol:
        return None
    diags = np.real(np.einsum("jaa->ja", rot))
    profiles = [scalar_profile(diags[:, k]) for k in range(boundary.nY)]
    return U, profiles


# ---------------------------------------------------------------------------
# presets


def circle_twist_profile(nY=32, nj=8, alpha=2.0, amp=0.5):
    """-i d/dtheta on an nY circle plus a scalar twist sweeping -amp..+amp."""
    dth = circle_dtheta(nY)
    j = np.arange(nj)
    a = amp * np.tanh(alpha * (j - (nj - 1) / 2.0))
    return BoundaryOperator(dth[None] + a[:, None, None] * np.eye(nY)[None])


def preset_model(name, S=30, L=30, hs=1.0, scheme="exp", **kw):
    """Named models: constant, tanh-crossing, circle-dirac-with-twist.

    The circle preset returns a list of per-Fourier-mode scalar models
    (the boundary family commutes, so the model splits exactly).
    """
    if name == "constant":
        a0 = kw.get("a0", -1.0)
        return [pure_cylinder_model(np.array([[a0]]), S, L, hs, name=name,
                                    scheme=scheme)]
    if name == "tanh-crossing":
        prof = tanh_profile(kw.get("nj", 14), kw.get("alpha", 1.0),
                            kw.get("amp", 1.0))
        return [folded_line_model(prof, S, L, hs, name=name, scheme=scheme)]
    if name == "circle-dirac-with-twist":
        prof = circle_twist_profile(
            kw.get("nY", 32), kw.get("nj", 8), kw.get("alpha", 2.0),
            kw.get("amp", 0.5)
        )
        dec = mode_decompose(prof)
        if dec is None:
            raise MalformedKernel("circle twist family failed to commute")
        _, profiles = dec
        return [
            folded_line_model(p, S, L, hs, name=f"{name}[mode {k}]",
                              scheme=scheme)
            for k, p in enumerate(profiles)
        ]
    raise ValueError(f"unknown preset '{name}'")


PRESETS = ("constant", "tanh-crossing", "circle-dirac-with-twist")


# ---------------------------------------------------------------------------
# block projections (plain matrices)


def graph_projection(Dp, Dm=None):
    """Projection onto the graph of D+ in the doubled space."""
    Dp = np.asarray(Dp, dtype=np.complex128)
    if Dm is None:
        Dm = Dp.conj().T
    n = Dp.shape[0]
    R = np.linalg.inv(np.eye(n) + Dm @ Dp)
    RD = R @ Dm
    return np.block([[R, RD], [RD.conj().T, Dp @ RD]])


def wassermann_projection(Dp, Dm=None):
    """Heat-smoothed idempotent representing the same class as the graph."""
    Dp = np.asarray(Dp, dtype=np.complex128)
    if Dm is None:
        Dm = Dp.conj().T
    lam, V = np.linalg.eigh(Dm @ Dp)
    lam = np.clip(lam, 0.0, None)
    e = np.exp(-lam)
    # g(x) = (1 - e^{-x})/x, smooth through x = 0
    g = np.where(lam > 1e-8, -np.expm1(-lam) / np.where(lam > 0, lam, 1.0),
                 1.0 - lam / 2.0 + lam * lam / 6.0)
    top = (V * e[None, :]) @ V.conj().T
    offd = (V * (np.exp(-lam / 2.0) * np.sqrt(g))[None, :]) @ V.conj().T @ Dm
    bot = Dp @ (V * g[None, :]) @ V.conj().T @ Dm
    return np.block([[top, offd], [offd.conj().T, bot]])


# ---------------------------------------------------------------------------
# per-frequency projection path


class ProjectionPath:
    """p_t over the deep cylinder, per Fourier frequency, with analytic dp/dt.

    The SVD of the symbol B(mu) = U diag(sig) V* is computed once; every
    p_t and its derivative are closed-form functions of t*sig in that frame.
    """

    def __init__(self, bsym, kind="wassermann", M=256, eps=1e-8, tgrid=None):
        if kind not in ("graph", "wassermann"):
            raise ValueError(f"unknown path kind '{kind}'")
        self.kind = kind
        self.M = int(M)
        mu = 2 * np.pi * np.arange(self.M) / self.M
        self.mu = mu
        B = bsym(mu)
        self.F = B.shape[1]
        self.U, self.sig, Vh = np.linalg.svd(B)
        self.V = np.conj(np.swapaxes(Vh, 1, 2))
        self.gap = float(self.sig.min())
        if self.gap < eps:
            raise WindowTooSmall(
                f"spectral gap failure: symbol margin {self.gap:.3e} < "
                f"{eps:.0e}, eta integral would diverge"
            )
        if tgrid is None:
            tgrid = self._default_tgrid()
        self.ts = np.asarray(tgrid, dtype=float)
        self._check_samples()

    def _frame(self, diag_v, diag_uv, diag_u):
        """Assemble [[V a V*, V b U*],[U b* V*, 1 - U c U*]] blocks."""
        F = self.F
        out = np.empty((self.M, 2 * F, 2 * F), dtype=np.complex128)
        Vc = np.conj(np.swapaxes(self.V, 1, 2))
        Uc = np.conj(np.swapaxes(self.U, 1, 2))
        out[:, :F, :F] = (self.V * diag_v[:, None, :]) @ Vc
        tr = (self.V * diag_uv[:, None, :]) @ Uc
        out[:, :F, F:] = tr
        out[:, F:, :F] = np.conj(np.swapaxes(tr, 1, 2))
        out[:, F:, F:] = np.eye(F)[None] - (self.U * diag_u[:, None, :]) @ Uc
        return out

    def at(self, t):
        """(p_t, dp_t/dt) as (M, 2F, 2F) frequency samples."""
        x = t * self.sig
        if self.kind == "graph":
            f0 = 1.0 / (1.0 + x * x)
            p = self._frame(f0, x * f0, f0)
            dv = -2.0 * x * self.sig * f0 * f0
            duv = self.sig * f0 * f0 * (1.0 - x * x)
            pd = self._dframe(dv, duv, -dv)
        else:
            y = x * x
            e = np.exp(-y)
            h = np.exp(-y / 2.0) * np.sqrt(-np.expm1(-y))
            p = self._frame(e, h, e)
            de = -2.0 * x * self.sig * e
            r = np.sqrt(y / np.where(y > 0, -np.expm1(-y), 1.0))
            dh = self.sig * r * (2.0 * e - 1.0) * np.exp(-y / 2.0)
            pd = self._dframe(de, dh, -de)
        return p, pd

    def _dframe(self, dv, duv, du):
        F = self.F
        out = np.empty((self.M, 2 * F, 2 * F), dtype=np.complex128)
        Vc = np.conj(np.swapaxes(self.V, 1, 2))
        Uc = np.conj(np.swapaxes(self.U, 1, 2))
        out[:, :F, :F] = (self.V * dv[:, None, :]) @ Vc
        tr = (self.V * duv[:, None, :]) @ Uc
        out[:, :F, F:] = tr
        out[:, F:, :F] = np.conj(np.swapaxes(tr, 1, 2))
        out[:, F:, F:] = (self.U * du[:, None, :]) @ Uc
        return out

    def commutator_norm(self, t):
        p, pd = self.at(t)
        c = pd @ p - p @ pd
        return float(np.abs(c).max())

    def _default_tgrid(self, t0=1.0, tol=1e-12, npts=33):
        tmax = t0 * 2.0
        for _ in range(40):
            if self.commutator_norm(tmax) <= tol:
                break
            tmax *= 1.5
        else:
            raise WindowTooSmall("path commutator did not decay; no gap?")
        return np.geomspace(t0, tmax, npts)

    def _check_samples(self, tol=1e-10):
        for t in (self.ts[0], self.ts[-1]):
            p, _ = self.at(t)
            r = float(np.abs(p @ p - p).max())
            if r > tol:
                raise MalformedKernel(
                    f"path sample not idempotent (residual {r:.3e})"
                )

    def band_coeffs(self, t, floor=FLOOR):
        p, _ = self.at(t)
        c = np.fft.ifft(p, axis=0)
        w = self.M // 2 - 1
        full = np.empty((2 * w + 1,) + p.shape[1:], dtype=np.complex128)
        for n in range(-w, w + 1):
            full[n + w] = c[n % self.M]
        return floor_band(full, floor)

    def band_decay(self, w):
        """Largest band coefficient beyond bandwidth w over the t grid."""
        worst = 0.0
        for t in self.ts:
            c = np.fft.ifft(self.at(t)[0], axis=0)
            mags = np.abs(c).max(axis=(1, 2))
            n = np.fft.fftfreq(self.M, d=1.0 / self.M).astype(int)
            beyond = mags[np.abs(n) > w].max() if (np.abs(n) > w).any() else 0.0
            worst = max(worst, float(beyond))
        return worst


def freq_derivative(samples):
    """Spectral d/dmu of band-limited frequency samples (M, F, F)."""
    M = samples.shape[0]
    n = np.fft.fftfreq(M, d=1.0 / M)
    if M % 2 == 0:
        n[M // 2] = 0.0
    c = np.fft.ifft(samples, axis=0)
    return np.fft.fft(c * (-1j * n)[:, None, None], axis=0)


def sigma1_freq(ahat, bhat):
    """Degree-1 cocycle on invariant operators, frequency form.

    Equals sum_n n tr(a(n) b(-n)) for band-limited samples.
    """
    da = freq_derivative(ahat)
    return complex(1j * np.mean(np.einsum("mab,mba->m", da, bhat)))


def eta_integrand_lattice(path, t):
    """sigma_1([dp/dt, p], p) at time t on the lattice frequency grid."""
    p, pd = path.at(t)
    c = pd @ p - p @ pd
    return sigma1_freq(c, p)


# ---------------------------------------------------------------------------
# spectral flow oracle


def spectral_flow(profile, refine_tol=1e-8):
    """Signed count of eigenvalue crossings through zero along the profile.

    The net count comes from the exact negative-eigenvalue counts at the
    (invertible) endpoints; the crossing list is refined by bisection on
    the linear interpolation between samples and must reproduce the net.
    """
    if isinstance(profile, BoundaryOperator):
        samples = profile.interior
    else:
        samples = np.asarray(profile, dtype=np.complex128)
        if samples.ndim == 1:
            samples = samples[:, None, None]
    evs = np.linalg.eigvalsh(samples)
    for end in (0, -1):
        if np.abs(evs[end]).min() == 0.0:
            raise MalformedKernel(
                "spectral flow undefined: eigenvalue exactly zero at an endpoint"
            )
    net = int((evs[-1] > 0).sum() - (evs[0] > 0).sum())
    crossings = []
    for i in range(len(samples) - 1):
        for k in range(evs.shape[1]):
            lo, hi = evs[i, k], evs[i + 1, k]
            if lo == 0.0 or lo * hi >= 0:
                continue
            sgn = 1 if hi > lo else -1
            a, b = 0.0, 1.0
            va = lo
            for _ in range(60):
                m = 0.5 * (a + b)
                Am = (1 - m) * samples[i] + m * samples[i + 1]
                vm = np.linalg.eigvalsh(Am)[k]
                if abs(vm) <= refine_tol or b - a <= refine_tol:
                    break
                if (va < 0) == (vm < 0):
                    a, va = m, vm
                else:
                    b = m
            crossings.append((i + 0.5 * (a + b), sgn))
    if sum(s for _, s in crossings) != net:
        raise MalformedKernel(
            "spectral flow tracker inconsistent with endpoint counts"
        )
    return net, crossings


# ---------------------------------------------------------------------------
# parametrix and the Connes-Skandalis projector


def _partition(ns, S, g0, width):
    """Cosine ramp: phi2 = 0 for m <= g0, 1 for m >= g0 + width."""
    m = np.arange(ns) - S
    th = np.clip((m - g0) / float(width), 0.0, 1.0)
    phi2 = 0.5 * (1.0 - np.cos(np.pi * th))
    return 1.0 - phi2, phi2


def aps_parametrix(model, eps_reg=1e-6, glue=None, glue_width=4,
                   tol_deep=1e-10, M=512, qcut_tol=1e-11):
    """Glued parametrix: exact cylinder inverse deep, regularized interior
    inverse near the cap, joined by a cosine partition on slices.

    Returns a dict with Q (extended WindowOperator), Splus/Sminus (compact,
    deep blocks asserted <= tol_deep then zeroed), and diagnostics.
    """
    D = model.Dplus
    S, L, F = model.S, model.L, model.F
    ns = model.nslices
    qtail = symbol_band(lambda mu: np.linalg.inv(model.bsym(mu)), M)
    # A slow symbol decay can push the floored band past the window; trim
    # to what fits as long as the discarded coefficients stay negligible
    # against the remainder tolerance, otherwise refuse.
    wq = (qtail.shape[0] - 1) // 2
    wfit = ns - 2
    qcut = 0.0
    if wq > wfit:
        cutmags = np.abs(
            np.concatenate([qtail[: wq - wfit], qtail[wq + wfit + 1 :]])
        )
        qcut = float(cutmags.max())
        if qcut > qcut_tol:
            raise WindowTooSmall(
                f"window too small for the parametrix band "
                f"(trimmed coefficient {qcut:.3e} > {qcut_tol:.0e})"
            )
        qtail = np.array(qtail[wq - wfit : wq + wfit + 1])
    if glue is None:
        glue = -max(2, (S + L) // 6)
    phi1, phi2 = _partition(ns, S, glue, glue_width)
    Qcyl = wop_from_tail(qtail, S, L)
    Dm = model.Dminus
    H = Dm.matrix @ D.matrix + (eps_reg ** 2) * np.eye(ns * F)
    Qint = np.linalg.solve(H, Dm.matrix)
    qmat = Qcyl.matrix * np.repeat(phi1, F)[None, :] + \
        Qint * np.repeat(phi2, F)[None, :]
    Q = WindowOperator(S, L, F, qmat, qtail, lam=Qcyl.lam)
    ident = wop_identity(S, L, F)
    depth = max(2, S - 2)
    # The compactness tolerance widens with two honest error sources: a
    # trimmed band leaves deep entries of order the cut size times the
    # overlap count, and steep profiles give transfer entries so large
    # that the product QD carries float noise at eps * |D| * |Q| * ns.
    fpnoise = np.finfo(float).eps * ns * float(np.abs(D.matrix).max()) * max(
        1.0, float(np.abs(qmat).max())
    )
    tol_eff = max(tol_deep, 100.0 * qcut, fpnoise)
    Splus = snap_compact(ident - wop_compose(Q, D), depth, tol_eff)
    Sminus = snap_compact(ident - wop_compose(D, Q), depth, tol_eff)
    return {
        "Q": Q,
        "Splus": Splus,
        "Sminus": Sminus,
        "glue": glue,
        "glue_width": glue_width,
        "depth": depth,
        "qband": (qtail.shape[0] - 1) // 2,
        "qcut": qcut,
    }


def connes_skandalis_projector(Q, Splus, Sminus, Dplus):
    """e_Q = [[S+^2, S+(1+S+)Q],[S- D+, 1 - S-^2]] plus diagnostics.

    The absolute degree-0 pairing tau_0(e_Q - e_1) reduces to
    tr(S+^2) - tr(S-^2); both blocks are compact so the traces are plain.
    """
    ident = wop_identity(Q.S, Q.L, Q.F)
    sp2 = wop_compose(Splus, Splus)
    sm2 = wop_compose(Sminus, Sminus)
    topright = wop_compose(wop_compose(Splus, Splus + ident), Q)
    botleft = wop_compose(Sminus, Dplus)
    index = wop_trace(sp2) - wop_trace(sm2)
    n = Q.matrix.shape[0]
    E = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    E[:n, :n] = sp2.matrix
    E[:n, n:] = topright.matrix
    E[n:, :n] = botleft.matrix
    E[n:, n:] = np.eye(n) - sm2.matrix
    idem = float(np.abs(E @ E - E).max())
    return {
        "blocks": (sp2, topright, botleft, sm2),
        "matrix": E,
        "idempotency": idem,
        "index": complex(index),
    }
