"""Cyclic cochain machinery, carrier-agnostic.

A cochain of degree k evaluates on k+1 algebra elements; the algebra product
is supplied per carrier (band convolution, window composition, per-leaf
composition, ...).  Everything here is small combinatorics; the numerical
work happens inside the supplied evaluators.
"""

import math
from itertools import permutations


class Cochain:
    """Multilinear functional of fixed degree with an attached product."""

    def __init__(self, degree, fn, mul, carrier="", name=""):
        self.degree = int(degree)
        self.fn = fn
        self.mul = mul
        self.carrier = carrier
        self.name = name

    def __call__(self, *args):
        if len(args) != self.degree + 1:
            raise ValueError(
                f"cochain of degree {self.degree} takes {self.degree + 1} "
                f"arguments, got {len(args)}"
            )
        return self.fn(*args)


def hochschild_b(psi, mul=None):
    """Hochschild coboundary; degree goes up by one."""
    mul = mul or psi.mul
    k = psi.degree

    def bfn(*a):
        total = 0.0 + 0.0j
        for i in range(k + 1):
            merged = a[:i] + (mul(a[i], a[i + 1]),) + a[i + 2 :]
            total += (-1) ** i * psi(*merged)
        total += (-1) ** (k + 1) * psi(mul(a[-1], a[0]), *a[1:-1])
        return total

    return Cochain(k + 1, bfn, mul, psi.carrier, f"b({psi.name})")


def cyclicize(psi):
    """Average over signed cyclic rotations; idempotent on cyclic cochains."""
    k = psi.degree

    def cfn(*a):
        total = 0.0 + 0.0j
        for j in range(k + 1):
            total += (-1) ** (k * j) * psi(*(a[j:] + a[:j]))
        return total / (k + 1)

    return Cochain(k, cfn, psi.mul, psi.carrier, f"cyc({psi.name})")


def cyclic_residual(psi, args):
    """|psi - cyclicize(psi)| on one argument tuple."""
    return abs(psi(*args) - cyclicize(psi)(*args))


class RelativeCochain:
    """Pair (tau, sigma) of degrees (k, k+1) linked through the symbol map.

    ``pi_map`` sends tau's carrier to sigma's; the relative coboundary is
    (pi* sigma - b tau, b sigma), and applying it twice annihilates any pair
    because pi is multiplicative.
    """

    def __init__(self, tau, sigma, pi_map):
        if sigma.degree != tau.degree + 1:
            raise ValueError("sigma must have degree tau.degree + 1")
        self.tau = tau
        self.sigma = sigma
        self.pi_map = pi_map

    def pullback_sigma(self):
        sig, pi = self.sigma, self.pi_map

        def fn(*a):
            return sig(*[pi(x) for x in a])

        return Cochain(sig.degree, fn, self.tau.mul, self.tau.carrier,
                       f"pi*({sig.name})")

    def coboundary(self):
        ps = self.pullback_sigma()
        bt = hochschild_b(self.tau)

        def first(*a):
            return ps(*a) - bt(*a)

        new_tau = Cochain(self.tau.degree + 1, first, self.tau.mul,
                          self.tau.carrier, f"rc({self.tau.name})")
        return RelativeCochain(new_tau, hochschild_b(self.sigma), self.pi_map)


def relative_coboundary(tau, sigma, pi_map):
    return RelativeCochain(tau, sigma, pi_map).coboundary()


def signed_permutations(n):
    """Permutations of 1..n in a fixed sorted order, with their signs."""
    base = tuple(range(1, n + 1))
    out = []
    for perm in permutations(base):
        out.append((perm, _perm_sign(perm)))
    return out


def _perm_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, clen = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j] - 1
            clen += 1
        if clen % 2 == 0:
            sign = -sign
    return sign


def suspension_sum(omega_chain, derivations, ells, memo_products=True):
    """(1/(k+1)!) sum over signed permutations of derivation placements.

    ``omega_chain(parts)`` evaluates the weight on the ordered product
    ``ells[0] d_1(ells[1]) ... d_{k+1}(ells[k+1])`` given the list of factors;
    ``derivations[i]`` maps a kernel to a kernel.  Derived factors are
    memoized across permutations (each (slot, derivation) pair occurs in many
    permutations).
    """
    kp1 = len(derivations)
    if len(ells) != kp1 + 1:
        raise ValueError("need one more kernel than derivations")
    cache = {}

    def derived(slot, d_idx):
        key = (slot, d_idx)
        if not memo_products or key not in cache:
            cache[key] = derivations[d_idx](ells[slot])
            if not memo_products:
                return cache.pop(key)
        return cache[key]

    total = 0.0 + 0.0j
    for perm, sign in signed_permutations(kp1):
        factors = [ells[0]]
        for slot in range(1, kp1 + 1):
            factors.append(derived(slot, perm[slot - 1] - 1))
        total += sign * omega_chain(factors)
    return total / math.factorial(kp1)
