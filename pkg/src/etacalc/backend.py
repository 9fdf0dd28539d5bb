"""Backend selection for the hot array kernels.

``ETACALC_NUMBA=0`` (also ``false``/``off``/``no``) forces the pure-numpy
reference path; anything else uses the numba-jitted kernels when numba is
importable.  Both expose identical functions; ``BACKEND`` names the active
one for diagnostics and the benchmark script.
"""

import os

_flag = os.environ.get("ETACALC_NUMBA", "").strip().lower()

HAS_NUMBA = False
if _flag not in ("0", "false", "off", "no"):
    try:
        from . import _kernels_numba as _impl

        HAS_NUMBA = True
    except ImportError:
        _impl = None
if not HAS_NUMBA:
    from . import _kernels_numpy as _impl

BACKEND = "numba" if HAS_NUMBA else "numpy"

band_conv = _impl.band_conv
toeplitz_window = _impl.toeplitz_window
deep_repair = _impl.deep_repair
deep_residual = _impl.deep_residual
band_times_local = _impl.band_times_local
local_times_band = _impl.local_times_band


def warmup():
    """Trigger jit compilation on tiny inputs (no-op on the numpy path)."""
    import numpy as np

    c = np.zeros((3, 1, 1), dtype=np.complex128)
    c[1, 0, 0] = 1.0
    wv = np.ones(1)
    band_conv(c, c, wv)
    m = toeplitz_window(c, 4)
    deep_repair(m, c, 4, 1, 1)
    deep_residual(m, c, 4, 1, 1)
    x = np.zeros((2, 2, 1, 1), dtype=np.complex128)
    band_times_local(c, x, wv)
    local_times_band(x, c, wv)
