"""Window operator calculus: bands, composition repair, stabilized traces."""

import numpy as np
import pytest

from etacalc.cylinder import WindowTooSmall
from etacalc.windowcalc import (
    FLOOR,
    WindowOperator,
    deep_residual,
    floor_band,
    retail,
    snap_compact,
    symbol_band,
    wop_compose,
    wop_from_tail,
    wop_identity,
    wop_reg_trace,
    wop_trace,
)


def band(offsets, F=1):
    """Centered band array from {offset: scalar} for F=1 fibers."""
    w = max(abs(n) for n in offsets)
    c = np.zeros((2 * w + 1, F, F), dtype=np.complex128)
    for n, v in offsets.items():
        c[n + w] += v * np.eye(F)
    return c


def random_band(w, F, rng):
    c = rng.normal(size=(2 * w + 1, F, F)) + 1j * rng.normal(
        size=(2 * w + 1, F, F))
    return c


# ---------------------------------------------------------------------------
# band helpers


def test_floor_band_trims_symmetrically():
    c = band({-3: 1e-16, -1: 2.0, 0: 1.0, 2: 0.5, 3: 1e-15})
    out = floor_band(c)
    assert out.shape[0] == 5  # halfwidth 2, the +2 coefficient rules
    assert out[2 - 1, 0, 0] == 2.0 + 0j
    assert out[2 + 2, 0, 0] == 0.5 + 0j


def test_floor_band_all_below_floor_collapses():
    c = band({-2: 1e-16, 1: 1e-16})
    out = floor_band(c)
    assert out.shape[0] == 1 and out[0, 0, 0] == 0.0


def test_symbol_band_of_shift_plus_constant():
    # 2 + e^{-i mu} has exactly two coefficients: 2 at offset 0, 1 at +1
    def bsym(mu):
        return (2.0 + np.exp(-1j * mu))[:, None, None]

    c = symbol_band(bsym, 64)
    assert c.shape == (3, 1, 1)
    assert np.allclose(c[:, 0, 0], [0.0, 2.0, 1.0], atol=1e-13)


def test_symbol_band_geometric_decay_matches_series():
    # 1/(1 - r e^{-i mu}) = sum r^n e^{-i n mu}
    r = 0.3

    def bsym(mu):
        return (1.0 / (1.0 - r * np.exp(-1j * mu)))[:, None, None]

    c = symbol_band(bsym, 256)
    w = (c.shape[0] - 1) // 2
    n = np.arange(-w, w + 1)
    want = np.where(n >= 0, r ** np.maximum(n, 0), 0.0)
    assert np.abs(c[:, 0, 0] - want).max() < 1e-13


def test_symbol_band_refuses_undecayed_band():
    def bsym(mu):
        return (1.0 / (1.0 - 0.995 * np.exp(-1j * mu)))[:, None, None]

    with pytest.raises(WindowTooSmall):
        symbol_band(bsym, 64)


# ---------------------------------------------------------------------------
# window operators


def test_wop_from_tail_is_toeplitz():
    rng = np.random.default_rng(3)
    c = random_band(2, 2, rng)
    w = wop_from_tail(c, 6, 5)
    for si in range(w.nslices):
        for sj in range(w.nslices):
            n = si - sj
            want = c[n + 2] if abs(n) <= 2 else 0.0
            assert np.abs(w.block(si, sj) - want).max() < 1e-15


def test_wop_from_tail_band_overflow_raises():
    c = np.zeros((23, 1, 1))
    c[0] = c[-1] = 1.0
    with pytest.raises(WindowTooSmall):
        wop_from_tail(c, 5, 5)  # 11 slices, band 11 needs >= 12


def test_adjoint_matches_dense_and_involution():
    rng = np.random.default_rng(5)
    c = random_band(2, 2, rng)
    w = wop_from_tail(c, 6, 6)
    a = w.adjoint()
    assert np.abs(a.matrix - w.matrix.conj().T).max() == 0.0
    aa = a.adjoint()
    assert np.abs(aa.tail - w.tail).max() == 0.0


def test_add_pads_bands_and_tracks_lam():
    rng = np.random.default_rng(7)
    a = wop_from_tail(random_band(1, 1, rng), 8, 8)
    b = wop_from_tail(random_band(3, 1, rng), 8, 8)
    s = a + b
    assert s.bandwidth == 3
    assert np.abs(s.matrix - (a.matrix + b.matrix)).max() == 0.0
    # compact + extended keeps the tail and lifts lam to the depth
    ns = a.nslices
    compact = WindowOperator(8, 8, 1, np.zeros((ns, ns)), None, 0, depth=4)
    s2 = a + compact
    assert s2.lam == 4 and s2.bandwidth == 1


def test_compose_matches_oversized_window():
    # the repaired product must agree with a much larger window cut down
    rng = np.random.default_rng(11)
    ca = random_band(2, 2, rng)
    cb = random_band(1, 2, rng)
    S, L, pad = 8, 6, 16
    small = wop_compose(wop_from_tail(ca, S, L), wop_from_tail(cb, S, L))
    big = wop_compose(
        wop_from_tail(ca, S + pad, L + pad),
        wop_from_tail(cb, S + pad, L + pad),
    )
    F = 2
    nb = big.nslices
    cut = big.matrix.reshape(nb, F, nb, F)[
        pad : pad + small.nslices, :, pad : pad + small.nslices
    ].reshape(small.nslices * F, small.nslices * F)
    # interior rows away from the top edge agree; the repair made the
    # deep rows exact
    m4 = small.matrix.reshape(small.nslices, F, small.nslices, F)
    c4 = cut.reshape(small.nslices, F, small.nslices, F)
    deep = small.nslices - (small.lam + small.S)  # count of repaired slices
    assert deep > 0
    assert np.abs(m4[:deep] - c4[:deep]).max() < 1e-12
    assert np.abs(m4[:, :, :deep] - c4[:, :, :deep]).max() < 1e-12


def test_compose_with_identity_is_identity_map():
    rng = np.random.default_rng(13)
    c = random_band(2, 1, rng)
    w = wop_from_tail(c, 8, 8)
    e = wop_identity(8, 8, 1)
    out = wop_compose(e, w)
    assert np.abs(out.matrix - w.matrix).max() < 1e-12
    assert out.bandwidth == w.bandwidth


def test_compose_no_stable_slices_raises():
    rng = np.random.default_rng(17)
    a = wop_from_tail(random_band(1, 1, rng), 1, 8)
    with pytest.raises(WindowTooSmall):
        wop_compose(a, a)  # the cap S - 2 is negative, nothing left


def test_compose_caps_repair_depth():
    rng = np.random.default_rng(19)
    a = wop_from_tail(random_band(4, 1, rng), 5, 8)
    out = wop_compose(a, a)
    assert out.lam == 3  # capped at S - 2, not the structural 4


# ---------------------------------------------------------------------------
# snapping, retailing


def test_snap_compact_zeros_small_deep_entries():
    ns = 17
    m = np.zeros((ns, ns), dtype=np.complex128)
    m[0, 0] = 1e-13
    m[10, 10] = 5.0
    w = WindowOperator(8, 8, 1, m, None, 0, 0)
    out = snap_compact(w, depth=4, tol=1e-10)
    assert out.matrix[0, 0] == 0.0
    assert out.matrix[10, 10] == 5.0
    assert out.compact and out.depth == 4


def test_snap_compact_large_deep_entry_raises():
    ns = 17
    m = np.zeros((ns, ns), dtype=np.complex128)
    m[0, 0] = 1e-6
    w = WindowOperator(8, 8, 1, m, None, 0, 0)
    with pytest.raises(WindowTooSmall):
        snap_compact(w, depth=4, tol=1e-10)


def test_snap_compact_counts_leftover_tail():
    e = wop_identity(8, 8, 1)
    with pytest.raises(WindowTooSmall):
        snap_compact(e, depth=4, tol=1e-10)


def test_retail_declares_exact_band():
    rng = np.random.default_rng(23)
    c = random_band(1, 1, rng)
    w0 = wop_from_tail(c, 8, 8)
    bare = WindowOperator(8, 8, 1, w0.matrix.copy())
    out, res = retail(bare, c, lam=2)
    assert res < 1e-15
    assert out.lam == 2 and out.bandwidth == 1


def test_retail_rejects_wrong_band():
    rng = np.random.default_rng(29)
    c = random_band(1, 1, rng)
    w0 = wop_from_tail(c, 8, 8)
    bare = WindowOperator(8, 8, 1, w0.matrix.copy())
    with pytest.raises(WindowTooSmall):
        retail(bare, 2.0 * c, lam=2)


def test_retail_edge_skip_forgives_cut_corner():
    rng = np.random.default_rng(31)
    c = random_band(1, 1, rng)
    w0 = wop_from_tail(c, 8, 8)
    m = w0.matrix.copy()
    m[0, 0] += 7.0  # truncation garbage at the bottom corner
    bare = WindowOperator(8, 8, 1, m)
    with pytest.raises(WindowTooSmall):
        retail(bare, c, lam=2)
    out, res = retail(bare, c, lam=2, edge_skip=1)
    assert res < 1e-15
    # and the overwrite replaced the garbage with the Toeplitz value
    assert np.abs(out.matrix - w0.matrix).max() < 1e-15


# ---------------------------------------------------------------------------
# traces


def test_wop_trace_compact_only():
    e = wop_identity(4, 4, 1)
    with pytest.raises(ValueError):
        wop_trace(e)
    c = WindowOperator(4, 4, 1, np.diag(np.arange(9.0)), None, 0, 2)
    assert wop_trace(c) == complex(np.arange(9.0).sum())


def test_reg_trace_of_identity_counts_upper_slices():
    # diagonal is flat: stabilized value is F * L on window [-S, L]
    for S, L, F in ((8, 8, 2), (6, 11, 1)):
        e = wop_identity(S, L, F)
        assert wop_reg_trace(e) == pytest.approx(F * L)


def test_reg_trace_exact_stabilization_required():
    e = wop_identity(8, 8, 1)
    m = e.matrix.copy()
    m[6, 6] += 1e-9  # the checked stabilization pair is no longer flat
    bad = WindowOperator(8, 8, 1, m, e.tail, 0)
    with pytest.raises(WindowTooSmall):
        wop_reg_trace(bad)


def test_reg_trace_shift_pair_defect():
    # 1 - s- s+ is rank F per the anchor convention: reg trace L, so the
    # defect trace is F against the identity's F*L
    S, L, F = 8, 8, 1
    up = band({1: 1.0})
    dn = band({-1: 1.0})
    prod = wop_compose(wop_from_tail(dn, S, L), wop_from_tail(up, S, L))
    e = wop_identity(S, L, F)
    d = e - prod
    val = wop_reg_trace(e) - wop_reg_trace(prod)
    assert val == pytest.approx(1.0)
    assert wop_reg_trace(d) == pytest.approx(1.0)
