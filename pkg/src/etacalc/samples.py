"""Seeded random kernel factories shared by the residual suites and tests."""

import numpy as np

from .cylinder import CompactKernel, ExtendedKernel, InvariantKernel, toeplitz_extend


def _cplx(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_invariant(geom, w, rng, selfadjoint=False, real=False):
    shape = (2 * w + 1, geom.nY, geom.nY)
    c = rng.standard_normal(shape) if real else _cplx(rng, shape)
    k = InvariantKernel(geom, c)
    if selfadjoint:
        k = 0.5 * (k + k.adjoint())
    return k


def random_compact(geom, depth, rng):
    """Random kernel supported strictly above slice -depth."""
    m = _cplx(rng, (geom.nsites, geom.nsites))
    keep = 1.0 - geom.chi_sites(depth)
    m *= keep[:, None]
    m *= keep[None, :]
    return CompactKernel(geom, m, depth)


def random_extended(geom, w, lam, rng, selfadjoint=False):
    """Random invariant tail plus a random deviation above slice -lam."""
    tail = random_invariant(geom, w, rng, selfadjoint=selfadjoint)
    pert = random_compact(geom, lam, rng)
    if selfadjoint:
        pert = 0.5 * (pert + pert.adjoint())
    return toeplitz_extend(tail) + pert
