"""Both array-kernel backends must agree to the last bit of double precision."""

import numpy as np
import pytest

from etacalc import _kernels_numpy as knp

try:
    from etacalc import _kernels_numba as knb

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

pytestmark = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


def _rc(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_band_conv_agree():
    rng = np.random.default_rng(0)
    for F, w1, w2 in [(1, 0, 0), (2, 1, 2), (4, 3, 1)]:
        c1 = _rc(rng, (2 * w1 + 1, F, F))
        c2 = _rc(rng, (2 * w2 + 1, F, F))
        wv = rng.uniform(0.5, 2.0, F)
        a = knp.band_conv(c1, c2, wv)
        b = knb.band_conv(c1, c2, wv)
        assert np.allclose(a, b, rtol=0, atol=1e-14)


def test_toeplitz_window_agree():
    rng = np.random.default_rng(1)
    for F, w, ns in [(1, 1, 8), (3, 2, 11)]:
        c = _rc(rng, (2 * w + 1, F, F))
        assert np.array_equal(knp.toeplitz_window(c, ns), knb.toeplitz_window(c, ns))


def test_deep_repair_and_residual_agree():
    rng = np.random.default_rng(2)
    F, w, ns, dlo = 2, 1, 10, 4
    c = _rc(rng, (2 * w + 1, F, F))
    m1 = _rc(rng, (ns * F, ns * F))
    m2 = m1.copy()
    r1 = knp.deep_residual(m1, c, ns, F, dlo)
    r2 = knb.deep_residual(m2, c, ns, F, dlo)
    assert r1 == r2
    knp.deep_repair(m1, c, ns, F, dlo)
    knb.deep_repair(m2, c, ns, F, dlo)
    assert np.array_equal(m1, m2)
    assert knp.deep_residual(m1, c, ns, F, dlo) == 0.0


def test_local_products_agree():
    rng = np.random.default_rng(3)
    F, w, nr, nc = 3, 2, 5, 4
    c = _rc(rng, (2 * w + 1, F, F))
    x = _rc(rng, (nr, nc, F, F))
    wv = rng.uniform(0.5, 2.0, F)
    assert np.allclose(
        knp.band_times_local(c, x, wv), knb.band_times_local(c, x, wv), atol=1e-14
    )
    assert np.allclose(
        knp.local_times_band(x, c, wv), knb.local_times_band(x, c, wv), atol=1e-14
    )
