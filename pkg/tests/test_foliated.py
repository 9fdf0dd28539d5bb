"""Leafwise weights, suspensions, and the transverse cocycle identities."""

import numpy as np
import pytest

from etacalc.cocycles import roe_sigma1
from etacalc.cyclic import hochschild_b
from etacalc.cylinder import GridGeometry, MalformedKernel
from etacalc.foliated import (
    FoliatedBandKernel,
    FoliatedKernel,
    FoliatedToy,
    Multiplier,
    Weight,
    as_sigma_phi,
    as_tau_phi,
    as_tau_phi_r,
    cyclic_cover_toy,
    d_multiplier,
    fmul_closed,
    fmul_ext,
    gv_sigma,
    gv_tau,
    gv_tau_r,
    identity_closed,
    leaf_geometries,
    random_band,
    random_closed,
    random_foliated_extended,
    random_multiplier,
    shatten_hs_check,
    shatten_norm,
    suspend,
    weight_omega,
    weight_omega_compact,
    weight_omega_reg,
)
from etacalc.samples import random_invariant


def swap_toy(rng, nB=4, nT=2):
    group = [
        (np.arange(nT), np.arange(nB)),
        (np.roll(np.arange(nT), nT // 2), np.roll(np.arange(nB), nB // 2)),
    ]
    toy = FoliatedToy(nB, nT, group)
    return FoliatedToy(nB, nT, group, vol=toy.stamp_sites(rng, 0.5, 1.5))


def trivial_toy(rng, nB=3):
    vol = rng.uniform(0.5, 1.5, (1, nB)) if rng is not None else None
    return FoliatedToy(nB, 1, [(np.arange(1), np.arange(nB))], vol=vol)


# ---------------------------------------------------------------------------
# toys, weights, multipliers


def test_toy_rejects_non_free_action():
    # gamma fixes (theta=0, y=0)
    group = [
        (np.arange(2), np.arange(4)),
        (np.arange(2), np.array([0, 2, 1, 3])),
    ]
    with pytest.raises(ValueError):
        FoliatedToy(4, 2, group)


def test_toy_rejects_non_invariant_volumes():
    group = [
        (np.arange(1), np.arange(4)),
        (np.arange(1), np.roll(np.arange(4), 2)),
    ]
    with pytest.raises(MalformedKernel):
        FoliatedToy(4, 1, group, vol=[[1.0, 2.0, 3.0, 4.0]])


def test_weight_mask_must_tile():
    rng = np.random.default_rng(2)
    toy = swap_toy(rng)
    Weight(toy, toy.fundamental_mask())  # tiles
    bad = np.ones((toy.nT, toy.nB))  # covers every orbit twice
    with pytest.raises(MalformedKernel):
        Weight(toy, bad)


def test_multiplier_invariance_enforced():
    rng = np.random.default_rng(3)
    toy = swap_toy(rng)
    random_multiplier(toy, rng)  # stamped values pass
    bad = np.zeros((toy.nT, toy.nB))
    bad[0, 0] = 1.0  # breaks constancy of the induced differences
    with pytest.raises(MalformedKernel):
        Multiplier(toy, bad)


def test_equivariance_enforced_on_kernels():
    rng = np.random.default_rng(5)
    toy = swap_toy(rng)
    k = random_closed(toy, rng)
    m = k.mats.copy()
    m[0, 0, 1] += 1e-9
    with pytest.raises(MalformedKernel):
        FoliatedKernel(toy, m)
    b = random_band(toy, 2, rng)
    c = b.coeffs.copy()
    c[0, 1, 0, 0] += 1e-9
    with pytest.raises(MalformedKernel):
        FoliatedBandKernel(toy, c)


# ---------------------------------------------------------------------------
# leafwise weight


def test_weight_of_unit_counts_fundamental_domain():
    # 3 leaves x 4 sites, half-turn rotation: |domain| = 6 exactly
    group = [
        (np.arange(3), np.arange(4)),
        (np.arange(3), np.roll(np.arange(4), 2)),
    ]
    rng = np.random.default_rng(7)
    toy0 = FoliatedToy(4, 3, group)
    toy = FoliatedToy(4, 3, group, vol=toy0.stamp_sites(rng, 0.5, 1.5))
    w8 = Weight(toy, toy.fundamental_mask())
    val = weight_omega(identity_closed(toy), w8)
    assert val == 6.0 + 0.0j


def test_weight_is_a_trace_on_invariant_kernels():
    rng = np.random.default_rng(11)
    toy = swap_toy(rng)
    w8 = Weight(toy, toy.fundamental_mask())
    a = random_closed(toy, rng)
    b = random_closed(toy, rng)
    comm = fmul_closed(a, b) - fmul_closed(b, a)
    scale = max(abs(weight_omega(fmul_closed(a, b), w8)), 1.0)
    assert abs(weight_omega(comm, w8)) / scale < 1e-12


def test_weight_mask_independence():
    rng = np.random.default_rng(13)
    toy = swap_toy(rng)
    m1 = toy.fundamental_mask()
    m2 = toy.fundamental_mask(rng=np.random.default_rng(99))
    assert np.abs(m1 - m2).max() > 0  # genuinely different domains
    k = random_closed(toy, rng)
    v1 = weight_omega(k, Weight(toy, m1))
    v2 = weight_omega(k, Weight(toy, m2))
    assert abs(v1 - v2) < 1e-12 * max(abs(v1), 1.0)


# ---------------------------------------------------------------------------
# suspension on the cylinder


def test_suspend_degree_one_recovers_boundary_cocycle():
    rng = np.random.default_rng(17)
    toy = trivial_toy(rng)
    w8 = Weight(toy, np.ones((1, toy.nB)))
    g = GridGeometry(toy.nB, 16, 16, 3, 6, volY=toy.vol[0])
    l0 = random_invariant(g, 2, rng)
    l1 = random_invariant(g, 2, rng)
    f0 = FoliatedBandKernel(toy, l0.coeffs[None], validate=False)
    f1 = FoliatedBandKernel(toy, l1.coeffs[None], validate=False)
    got = suspend(w8, [])(f0, f1)
    want = roe_sigma1(l0, l1)
    assert abs(got - want) < 1e-12 * max(abs(want), 1.0)


def test_suspend_requires_cutoff_slot():
    rng = np.random.default_rng(19)
    toy = swap_toy(rng)
    w8 = Weight(toy, toy.fundamental_mask())
    with pytest.raises(ValueError):
        suspend(w8, [], chi_lam=None)


def test_suspend_equal_derivations_vanish():
    rng = np.random.default_rng(23)
    toy = swap_toy(rng)
    w8 = Weight(toy, toy.fundamental_mask())
    phi = random_multiplier(toy, rng)
    sig = suspend(w8, [d_multiplier(phi), d_multiplier(phi)])
    ells = [random_band(toy, 1, rng) for _ in range(4)]
    ref = gv_sigma(w8, phi, random_multiplier(toy, rng))
    scale = max(abs(ref(*ells)), 1.0)
    assert abs(sig(*ells)) / scale < 1e-12


def test_gv_sigma_lambda_and_mask_independent():
    rng = np.random.default_rng(29)
    toy = swap_toy(rng)
    m1 = toy.fundamental_mask()
    m2 = toy.fundamental_mask(rng=np.random.default_rng(98))
    phi, phidot = random_multiplier(toy, rng), random_multiplier(toy, rng)
    ells = [random_band(toy, 1, rng) for _ in range(4)]
    vals = []
    for lam in (0, 1, 3):
        for m in (m1, m2):
            sig = gv_sigma(Weight(toy, m), phi, phidot, lam=lam)
            vals.append(sig(*ells))
    for v in vals[1:]:
        assert abs(v - vals[0]) < 1e-10 * max(abs(vals[0]), 1.0)


def test_gv_sigma_is_hochschild_closed():
    rng = np.random.default_rng(31)
    toy = swap_toy(rng)
    w8 = Weight(toy, toy.fundamental_mask())
    phi, phidot = random_multiplier(toy, rng), random_multiplier(toy, rng)
    sig = gv_sigma(w8, phi, phidot)
    bsig = hochschild_b(sig)
    ells = [random_band(toy, 1, rng) for _ in range(5)]
    scale = max(abs(sig(*ells[:4])), 1.0)
    assert abs(bsig(*ells)) / scale < 1e-10


def test_chi_order_flips_sign():
    rng = np.random.default_rng(37)
    toy = swap_toy(rng)
    w8 = Weight(toy, toy.fundamental_mask())
    phi, phidot = random_multiplier(toy, rng), random_multiplier(toy, rng)
    ells = [random_band(toy, 1, rng) for _ in range(4)]
    a = gv_sigma(w8, phi, phidot, chi_order="chi-first")(*ells)
    b = gv_sigma(w8, phi, phidot, chi_order="chi-last")(*ells)
    assert abs(a + b) < 1e-12 * max(abs(a), 1.0)


# ---------------------------------------------------------------------------
# closed-flavor pair cocycle


def test_gv_tau_matches_hand_expansion():
    rng = np.random.default_rng(41)
    toy = swap_toy(rng)
    w8 = Weight(toy, toy.fundamental_mask())
    phi, phidot = random_multiplier(toy, rng), random_multiplier(toy, rng)
    a0, a1, a2 = (random_closed(toy, rng) for _ in range(3))
    got = gv_tau(w8, phi, phidot)(a0, a1, a2)

    # independent expansion with explicit loops
    vol, mask = toy.vol, w8.mask
    f, fd = phi.values, phidot.values
    want = 0.0 + 0.0j
    for t in range(toy.nT):
        c1 = (f[t][:, None] - f[t][None, :]) * a1.mats[t]
        c2 = (fd[t][:, None] - fd[t][None, :]) * a2.mats[t]
        d1 = (fd[t][:, None] - fd[t][None, :]) * a1.mats[t]
        d2 = (f[t][:, None] - f[t][None, :]) * a2.mats[t]
        v = np.diag(vol[t])
        m_plus = a0.mats[t] @ v @ c1 @ v @ c2
        m_minus = a0.mats[t] @ v @ d1 @ v @ d2
        want += 0.5 * np.sum(np.diag(m_plus - m_minus) * (mask[t] * vol[t]))
    assert abs(got - want) < 1e-12 * max(abs(want), 1.0)


def test_as_tau_single_term_equals_gv_tau():
    rng = np.random.default_rng(43)
    toy = swap_toy(rng)
    w8 = Weight(toy, toy.fundamental_mask())
    f1, f2 = random_multiplier(toy, rng), random_multiplier(toy, rng)
    args = [random_closed(toy, rng) for _ in range(3)]
    a = as_tau_phi(w8, [(f1, f2)])(*args)
    b = gv_tau(w8, f1, f2)(*args)
    assert abs(a - b) < 1e-12 * max(abs(a), 1.0)


def test_as_tau_rejects_odd_degree():
    rng = np.random.default_rng(47)
    toy = swap_toy(rng)
    w8 = Weight(toy, toy.fundamental_mask())
    f = random_multiplier(toy, rng)
    with pytest.raises(ValueError):
        as_tau_phi(w8, [(f,)])


def test_constant_multiplier_gives_zero():
    rng = np.random.default_rng(53)
    toy = swap_toy(rng)
    w8 = Weight(toy, toy.fundamental_mask())
    const = Multiplier(toy, np.full((toy.nT, toy.nB), 0.7))
    f2 = random_multiplier(toy, rng)
    args = [random_closed(toy, rng) for _ in range(3)]
    assert as_tau_phi(w8, [(const, f2)])(*args) == 0.0


# ---------------------------------------------------------------------------
# window flavor: stabilized traces and the relative condition


def reg_setup(seed, nterms=4):
    rng = np.random.default_rng(seed)
    toy = swap_toy(rng)
    w8 = Weight(toy, toy.fundamental_mask())
    geoms = leaf_geometries(toy, S=20, L=20, w=4, lambda0=8)
    ks = [
        random_foliated_extended(toy, geoms, w=1, lam=1, rng=rng)
        for _ in range(nterms)
    ]
    return rng, toy, w8, geoms, ks


def test_weight_reg_equals_weight_of_deviation():
    rng, toy, w8, geoms, ks = reg_setup(59, nterms=2)
    k = fmul_ext(ks[0], ks[1])
    a = weight_omega_reg(k, w8)
    b = weight_omega_compact(k.deviation(), w8)
    assert abs(a - b) < 1e-10 * max(abs(a), 1.0)


def test_gv_relative_condition():
    rng, toy, w8, geoms, ks = reg_setup(61)
    phi, phidot = random_multiplier(toy, rng), random_multiplier(toy, rng)
    tau_r = gv_tau_r(w8, phi, phidot)
    lhs = hochschild_b(tau_r)(*ks)
    sig = gv_sigma(w8, phi, phidot, lam=0, chi_order="chi-first")
    rhs = sig(*[k.tail() for k in ks])
    assert abs(rhs) > 1e-6  # nondegenerate instance
    assert abs(lhs - rhs) < 1e-9 * max(abs(rhs), 1.0)


def test_as_relative_condition():
    rng, toy, w8, geoms, ks = reg_setup(67)
    f_terms = [
        (random_multiplier(toy, rng), random_multiplier(toy, rng))
        for _ in range(2)
    ]
    tau_r = as_tau_phi_r(w8, f_terms)
    lhs = hochschild_b(tau_r)(*ks)
    sig = as_sigma_phi(w8, f_terms, lam=0, chi_order="chi-first")
    rhs = sig(*[k.tail() for k in ks])
    assert abs(rhs) > 1e-6
    assert abs(lhs - rhs) < 1e-9 * max(abs(rhs), 1.0)


def test_gv_tau_r_reduces_to_plain_masked_expansion_on_zero_tail():
    # with vanishing tails the stabilized sums are plain masked traces
    rng, toy, w8, geoms, ks = reg_setup(71, nterms=0)
    phi, phidot = random_multiplier(toy, rng), random_multiplier(toy, rng)

    def invariant_part(k):
        from etacalc.cylinder import project_pi, section_s
        from etacalc.foliated import FoliatedExtendedKernel

        outs = [section_s(project_pi(kt)) for kt in k.kernels]
        return FoliatedExtendedKernel(toy, outs, validate=False)

    def compact_ext(seed):
        k = random_foliated_extended(
            toy, geoms, w=1, lam=1, rng=np.random.default_rng(seed)
        )
        return k - invariant_part(k)

    args = [compact_ext(s) for s in (301, 302, 303)]
    got = gv_tau_r(w8, phi, phidot)(*args)

    # independent evaluation: cyclic average of the two-term expansion with
    # plain masked traces over the window
    f, fd = phi.values, phidot.values
    total = 0.0 + 0.0j
    mats = [
        [k.kernels[t].matrix for t in range(toy.nT)] for k in args
    ]
    g0 = geoms[0]
    for j in range(3):
        o = [(j + i) % 3 for i in range(3)]
        for t in range(toy.nT):
            vol = np.tile(toy.vol[t], g0.nslices)
            fs = np.tile(f[t], g0.nslices)
            fds = np.tile(fd[t], g0.nslices)
            a0, a1, a2 = (mats[o[i]][t] for i in range(3))
            c1 = (fs[:, None] - fs[None, :]) * a1
            c2 = (fds[:, None] - fds[None, :]) * a2
            d1 = (fds[:, None] - fds[None, :]) * a1
            d2 = (fs[:, None] - fs[None, :]) * a2
            m = a0 @ (vol[:, None] * c1) @ (vol[:, None] * c2)
            m -= a0 @ (vol[:, None] * d1) @ (vol[:, None] * d2)
            wsite = np.tile(w8.mask[t] * toy.vol[t], g0.nslices) * w8.hs
            total += 0.5 * np.sum(np.diag(m) * wsite)
    want = total / 3.0
    assert abs(got - want) < 1e-10 * max(abs(want), 1.0)


# ---------------------------------------------------------------------------
# cyclic covers and norms


def test_cyclic_cover_stamping_is_exactly_invariant():
    rng = np.random.default_rng(73)
    toy = cyclic_cover_toy(6, 3, rng=rng)
    k = random_closed(toy, rng)  # constructor validates exactly
    b = random_band(toy, 2, rng)
    p = fmul_closed(k, k.adjoint())
    # functional values are rotation independent
    m1 = toy.fundamental_mask()
    m2 = toy.fundamental_mask(rng=np.random.default_rng(5))
    v1 = weight_omega(p, Weight(toy, m1))
    v2 = weight_omega(p, Weight(toy, m2))
    assert abs(v1 - v2) < 1e-12 * max(abs(v1), 1.0)


def test_shatten_norm_of_weighted_projection_is_one():
    rng = np.random.default_rng(79)
    toy = trivial_toy(rng, nB=3)
    w8 = Weight(toy, np.ones((1, 3)))
    u = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    u /= np.linalg.norm(u)
    v = np.sqrt(toy.vol[0])
    mats = (np.outer(u, u.conj()) / v[:, None] / v[None, :])[None]
    p = FoliatedKernel(toy, mats, validate=False)
    # idempotent in the weighted calculus
    pp = fmul_closed(p, p)
    assert np.abs(pp.mats - p.mats).max() < 1e-12
    for m in (1, 2, 4):
        assert abs(shatten_norm(p, w8, m) - 1.0) < 1e-12


def test_shatten_hs_agreement_for_positive_kernels():
    rng = np.random.default_rng(83)
    toy = swap_toy(rng)
    w8 = Weight(toy, toy.fundamental_mask())
    a = random_closed(toy, rng)
    k = fmul_closed(a, a.adjoint())
    assert shatten_hs_check(k, w8) < 1e-10
    # and the norm is monotone under masking sites
    full = shatten_norm(k, Weight(toy, toy.fundamental_mask()), 2)
    assert full > 0
