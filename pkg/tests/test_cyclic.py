"""Cochain calculus checks on a plain matrix carrier."""

import numpy as np

from etacalc.cyclic import (
    Cochain,
    RelativeCochain,
    cyclic_residual,
    cyclicize,
    hochschild_b,
    relative_coboundary,
    signed_permutations,
    suspension_sum,
)

N = 4


def rmat(rng):
    return rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))


def matmul(a, b):
    return a @ b


def tri_cochain(rng):
    m = rmat(rng)
    n = rmat(rng)

    def fn(a0, a1, a2):
        return complex(np.trace(a0 @ m @ a1 @ n @ a2))

    return Cochain(2, fn, matmul, carrier="matrix", name="psi")


def test_signed_permutations_basics():
    perms = signed_permutations(3)
    assert len(perms) == 6
    assert perms[0] == ((1, 2, 3), 1)
    signs = [s for _, s in perms]
    assert sum(signs) == 0
    assert dict(perms)[(2, 1, 3)] == -1


def test_b_squares_to_zero():
    rng = np.random.default_rng(41)
    psi = tri_cochain(rng)
    bbpsi = hochschild_b(hochschild_b(psi))
    args = [rmat(rng) for _ in range(5)]
    scale = max(abs(hochschild_b(psi)(*args[:4])), 1.0)
    assert abs(bbpsi(*args)) / scale < 1e-10


def test_b_of_trace_vanishes():
    rng = np.random.default_rng(43)
    tau = Cochain(0, lambda a: complex(np.trace(a)), matmul, name="tr")
    btau = hochschild_b(tau)
    a, b = rmat(rng), rmat(rng)
    assert abs(btau(a, b)) < 1e-12


def test_cyclicize_idempotent_and_kills_residual():
    rng = np.random.default_rng(47)
    psi = tri_cochain(rng)
    cpsi = cyclicize(psi)
    ccpsi = cyclicize(cpsi)
    args = [rmat(rng) for _ in range(3)]
    v1, v2 = cpsi(*args), ccpsi(*args)
    assert abs(v1 - v2) < 1e-10 * max(abs(v1), 1.0)
    assert cyclic_residual(cpsi, args) < 1e-10 * max(abs(v1), 1.0)
    # a generic cochain is not cyclic
    assert cyclic_residual(psi, args) > 1e-6


def test_relative_coboundary_squares_to_zero():
    # carrier: block upper-triangular matrices; the quotient map keeps the
    # diagonal blocks and is multiplicative
    rng = np.random.default_rng(53)
    k = N // 2

    def proj(a):
        out = a.copy()
        out[k:, :k] = 0.0
        out[:k, k:] = 0.0
        return out

    def tri(rng):
        a = rmat(rng)
        a[k:, :k] = 0.0
        return a

    m = rmat(rng)
    tau = Cochain(1, lambda a0, a1: complex(np.trace(a0 @ m @ a1)), matmul)
    mq = proj(rmat(rng))
    sigma = Cochain(
        2, lambda a0, a1, a2: complex(np.trace(a0 @ mq @ a1 @ a2)), matmul
    )
    rc = RelativeCochain(tau, sigma, proj).coboundary()
    rc2 = rc.coboundary()
    args = [tri(rng) for _ in range(5)]
    scale = max(abs(rc.tau(*args[:3])), 1.0)
    assert abs(rc2.tau(*args[:4])) / scale < 1e-10
    assert abs(rc2.sigma(*[proj(a) for a in args])) / scale < 1e-10


def test_relative_coboundary_helper_matches_class():
    rng = np.random.default_rng(59)
    tau = Cochain(0, lambda a: complex(np.trace(a)), matmul)
    sigma = Cochain(1, lambda a0, a1: complex(np.trace(a0 @ a1)), matmul)
    rc1 = relative_coboundary(tau, sigma, lambda a: a)
    rc2 = RelativeCochain(tau, sigma, lambda a: a).coboundary()
    a, b = rmat(rng), rmat(rng)
    assert abs(rc1.tau(a, b) - rc2.tau(a, b)) == 0.0


def test_suspension_single_derivation_is_direct_insertion():
    rng = np.random.default_rng(61)
    m1 = rmat(rng)

    def d1(a):
        return m1 @ a - a @ m1

    def omega_chain(parts):
        acc = parts[0]
        for p in parts[1:]:
            acc = acc @ p
        return complex(np.trace(acc))

    l0, l1 = rmat(rng), rmat(rng)
    got = suspension_sum(omega_chain, [d1], [l0, l1])
    want = complex(np.trace(l0 @ d1(l1)))
    assert abs(got - want) < 1e-12 * max(abs(want), 1.0)


def test_suspension_antisymmetry_and_two_slot_expansion():
    rng = np.random.default_rng(67)
    m1, m2 = rmat(rng), rmat(rng)

    def dm(m):
        return lambda a: m @ a - a @ m

    def omega_chain(parts):
        acc = parts[0]
        for p in parts[1:]:
            acc = acc @ p
        return complex(np.trace(acc))

    ells = [rmat(rng) for _ in range(3)]
    got = suspension_sum(omega_chain, [dm(m1), dm(m2)], ells)
    d1, d2 = dm(m1), dm(m2)
    want = 0.5 * (
        np.trace(ells[0] @ d1(ells[1]) @ d2(ells[2]))
        - np.trace(ells[0] @ d2(ells[1]) @ d1(ells[2]))
    )
    assert abs(got - complex(want)) < 1e-12 * max(abs(want), 1.0)
    # equal derivations antisymmetrize to zero
    zero = suspension_sum(omega_chain, [dm(m1), dm(m1)], ells)
    assert abs(zero) < 1e-12 * max(abs(want), 1.0)


def test_suspension_memoization_changes_nothing():
    rng = np.random.default_rng(71)
    m1, m2, m3 = rmat(rng), rmat(rng), rmat(rng)

    def dm(m):
        return lambda a: m @ a - a @ m

    def omega_chain(parts):
        acc = parts[0]
        for p in parts[1:]:
            acc = acc @ p
        return complex(np.trace(acc))

    ells = [rmat(rng) for _ in range(4)]
    derivs = [dm(m1), dm(m2), dm(m3)]
    a = suspension_sum(omega_chain, derivs, ells, memo_products=True)
    b = suspension_sum(omega_chain, derivs, ells, memo_products=False)
    assert a == b


def test_cochain_arity_is_enforced():
    psi = Cochain(2, lambda a, b, c: 0.0, matmul)
    try:
        psi(np.eye(2), np.eye(2))
    except ValueError as e:
        assert "degree" in str(e)
    else:
        raise AssertionError("arity violation not caught")
