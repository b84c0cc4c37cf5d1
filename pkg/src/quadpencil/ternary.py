"""Exact isotropic vectors of ternary diagonal forms.

The classical route for a*x^2 + b*y^2 + c*z^2: normalize to squarefree
pairwise coprime coefficients, check the quadratic-residue solvability
conditions, then minimize over the index-|abc| lattice on which the form
vanishes modulo abc; a short lattice search yields an exact zero.  Needs
factorization of the coefficients, so it is a desk-scale tool by design.
"""

from __future__ import annotations

import random
from fractions import Fraction
from math import gcd

from .errors import InternalInvariantError

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_probable_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _SMALL_PRIMES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_rho(n: int, rng: random.Random, budget: list[int]) -> int | None:
    if n % 2 == 0:
        return 2
    while budget[0] > 0:
        x = rng.randrange(2, n - 1)
        y = x
        c = rng.randrange(1, n - 1)
        d = 1
        while d == 1 and budget[0] > 0:
            budget[0] -= 1
            x = (x * x + c) % n
            y = (y * y + c) % n
            y = (y * y + c) % n
            d = gcd(abs(x - y), n)
        if 1 < d < n:
            return d
    return None


def factorize(n: int, rho_budget: int = 400_000) -> dict[int, int] | None:
    """Prime factorization of |n| by trial division plus budgeted Pollard
    rho; None when the budget is exhausted (hard composite)."""
    n = abs(n)
    out: dict[int, int] = {}
    if n <= 1:
        return out
    if n.bit_length() > 160:
        return None
    p = 2
    while p * p <= n and p < 10000:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n == 1:
        return out
    stack = [n]
    rng = random.Random(0xC0FFEE)
    budget = [rho_budget]
    while stack:
        m = stack.pop()
        if m == 1:
            continue
        if is_probable_prime(m):
            out[m] = out.get(m, 0) + 1
            continue
        d = _pollard_rho(m, rng, budget)
        if d is None:
            return None
        stack.append(d)
        stack.append(m // d)
    return out


def sqrt_mod_prime(a: int, p: int) -> int | None:
    """Square root of a modulo a prime p, or None if a is a non-residue."""
    a %= p
    if p == 2 or a == 0:
        return a
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    q = p - 1
    s = 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        t2 = t
        i = 0
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t = t * c % p
        r = r * b % p
    return r


def _ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    return old_r, old_s, old_t


def _crt(res_mods: list[tuple[int, int]]) -> int:
    r, m = 0, 1
    for r2, m2 in res_mods:
        g, s, _ = _ext_gcd(m, m2)
        if (r2 - r) % g:
            raise InternalInvariantError("inconsistent congruences")
        lcm = m // g * m2
        r = (r + m * ((r2 - r) // g * s % (m2 // g))) % lcm
        m = lcm
    return r


def sqrt_mod_squarefree(a: int, m: int, fac: dict[int, int] | None = None) -> int | None:
    """Square root of a modulo squarefree m > 0, or None."""
    if m == 1:
        return 0
    if fac is None:
        fac = factorize(m)
    if fac is None:
        return None
    parts = []
    for p in fac:
        rp = sqrt_mod_prime(a, p)
        if rp is None:
            return None
        parts.append((rp, p))
    return _crt(parts)


def _squarefree_part(n: int) -> tuple[int, int]:
    """n = out * s^2 with out squarefree; returns (out, s)."""
    if n == 0:
        return 0, 1
    sign = 1 if n > 0 else -1
    fac = factorize(n)
    if fac is None:
        return None, None
    out, s = 1, 1
    for p, e in fac.items():
        if e % 2:
            out *= p
        s *= p ** (e // 2)
    return sign * out, s


def solve_ternary_diag(a: int, b: int, c: int) -> tuple[int, int, int] | None:
    """Nonzero integer zero of a*x^2 + b*y^2 + c*z^2, or None.

    None means no zero was found: either the form is anisotropic (the
    residue conditions fail) or, rarely, the bounded lattice search missed;
    callers treat None as "try something else", never as a proof.
    """
    coef = [a, b, c]
    for i in range(3):
        if coef[i] == 0:
            v = [0, 0, 0]
            v[i] = 1
            return tuple(v)
    if all(x > 0 for x in coef) or all(x < 0 for x in coef):
        return None
    mult = [Fraction(1)] * 3
    # squarefree + pairwise coprime normalization with coordinate tracking
    while True:
        changed = False
        for i in range(3):
            sf, s = _squarefree_part(coef[i])
            if sf is None:
                return None
            if s > 1:
                coef[i] = sf
                mult[i] /= s
                changed = True
        for i, j, k in ((0, 1, 2), (0, 2, 1), (1, 2, 0)):
            g = gcd(abs(coef[i]), abs(coef[j]))
            if g > 1:
                coef[i] //= g
                coef[j] //= g
                coef[k] *= g
                mult[k] *= g
                changed = True
        if not changed:
            break
    sol = _solve_coprime(*coef)
    if sol is None:
        return None
    vals = [Fraction(sol[i]) * mult[i] for i in range(3)]
    den = 1
    for v in vals:
        den = den * v.denominator // gcd(den, v.denominator)
    ints = [int(v * den) for v in vals]
    g = gcd(gcd(abs(ints[0]), abs(ints[1])), abs(ints[2]))
    out = tuple(e // g for e in ints)
    if a * out[0] ** 2 + b * out[1] ** 2 + c * out[2] ** 2 != 0:
        raise InternalInvariantError("ternary back-substitution produced a non-zero")
    return out


def _solve_coprime(a: int, b: int, c: int):
    """Squarefree, pairwise coprime, mixed signs."""
    fa, fb, fc = factorize(a), factorize(b), factorize(c)
    if fa is None or fb is None or fc is None:
        return None
    ra = sqrt_mod_squarefree(-b * c, abs(a), fa)
    rb = sqrt_mod_squarefree(-c * a, abs(b), fb)
    rc = sqrt_mod_squarefree(-a * b, abs(c), fc)
    if ra is None or rb is None or rc is None:
        return None
    basis = _congruence_lattice(a, b, c, ra, rb, rc)
    from .oracle import lll_reduce_gram

    aa, ab, ac = abs(a), abs(b), abs(c)
    gram = tuple(
        tuple(
            Fraction(aa * u[0] * v[0] + ab * u[1] * v[1] + ac * u[2] * v[2])
            for v in basis
        )
        for u in basis
    )
    U = lll_reduce_gram(gram)
    reduced = [
        tuple(sum(int(U[i][k]) * basis[k][j] for k in range(3)) for j in range(3))
        for i in range(3)
    ]

    def q(v):
        return a * v[0] * v[0] + b * v[1] * v[1] + c * v[2] * v[2]

    rng = range(-6, 7)
    for c1 in rng:
        for c2 in rng:
            for c3 in rng:
                v = tuple(
                    c1 * reduced[0][j] + c2 * reduced[1][j] + c3 * reduced[2][j]
                    for j in range(3)
                )
                if any(v) and q(v) == 0:
                    g = gcd(gcd(abs(v[0]), abs(v[1])), abs(v[2]))
                    return tuple(e // g for e in v)
    return None


def _congruence_lattice(a, b, c, ra, rb, rc):
    """Basis of {v in Z^3 : q(v) = 0 mod abc} from the modular square roots.

    The three congruences (b*y - ra*z mod |a|, c*z - rb*x mod |b|,
    a*x - rc*y mod |c|) are encoded as the projection of an integer kernel.
    """
    from .linalg import saturated_left_kernel

    aa, ab, ac = abs(a), abs(b), abs(c)
    # build the 6x3 transpose of [M | -D]; its saturated integer kernel
    # projects bijectively onto the congruence lattice
    M = (
        (0, b, -ra),
        (-rb, 0, c),
        (a, -rc, 0),
    )
    D = ((aa, 0, 0), (0, ab, 0), (0, 0, ac))
    six_by_three = []
    for j in range(3):
        six_by_three.append(tuple(Fraction(M[i][j]) for i in range(3)))
    for j in range(3):
        six_by_three.append(tuple(Fraction(-D[i][j]) for i in range(3)))
    kernel = saturated_left_kernel(tuple(six_by_three))
    if len(kernel) != 3:
        raise InternalInvariantError("ternary congruence lattice has wrong rank")
    basis = [tuple(int(r[j]) for j in range(3)) for r in kernel]
    return basis
