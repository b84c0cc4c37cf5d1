"""Exact univariate polynomial arithmetic, Sturm sequences and real root
isolation over the rationals.

Polynomials are tuples of coefficients, lowest degree first, with the zero
polynomial represented by the empty tuple.  Sign queries at rational points
run on denominator-cleared integer coefficients, which keeps isolation fast.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt
from typing import Sequence

from .errors import PreconditionError

Poly = tuple[Fraction, ...]
IntPoly = tuple[int, ...]

_RAT_ROOT_LIMIT = 10**12  # skip divisor enumeration beyond this magnitude


def poly(coeffs: Sequence) -> Poly:
    cs = [Fraction(c) for c in coeffs]
    while cs and cs[-1] == 0:
        cs.pop()
    return tuple(cs)


def degree(p: Poly) -> int:
    """Degree, with the zero polynomial mapped to -1."""
    return len(p) - 1


def poly_eval(p: Poly, x) -> Fraction:
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def poly_add(p: Poly, q: Poly) -> Poly:
    n = max(len(p), len(q))
    return poly([(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)])


def poly_neg(p: Poly) -> Poly:
    return tuple(-c for c in p)


def poly_sub(p: Poly, q: Poly) -> Poly:
    return poly_add(p, poly_neg(q))


def poly_mul(p: Poly, q: Poly) -> Poly:
    if not p or not q:
        return ()
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return poly(out)


def poly_scale(c, p: Poly) -> Poly:
    return poly([Fraction(c) * e for e in p])


def poly_derivative(p: Poly) -> Poly:
    return poly([i * c for i, c in enumerate(p)][1:])


def poly_divmod(p: Poly, q: Poly) -> tuple[Poly, Poly]:
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(p)
    d = degree(q)
    lead = q[-1]
    quo = [Fraction(0)] * max(0, len(p) - d)
    while len(r) - 1 >= d and any(c != 0 for c in r):
        while r and r[-1] == 0:
            r.pop()
        if len(r) - 1 < d:
            break
        f = r[-1] / lead
        shift = len(r) - 1 - d
        quo[shift] = f
        for i, c in enumerate(q):
            r[shift + i] -= f * c
        r.pop()
    return poly(quo), poly(r)


def poly_gcd(p: Poly, q: Poly) -> Poly:
    """Monic gcd over the rationals."""
    a, b = poly(p), poly(q)
    while b:
        a, b = b, poly_divmod(a, b)[1]
    if a:
        a = poly_scale(1 / a[-1], a)
    return a


def is_squarefree(p: Poly) -> bool:
    if degree(p) <= 1:
        return degree(p) >= 0
    return degree(poly_gcd(p, poly_derivative(p))) == 0


def int_primitive(p: Poly) -> IntPoly:
    """Denominator-cleared, content-reduced integer coefficients.

    The scaling factor is positive, so signs of values are preserved.
    """
    if not p:
        return ()
    den = 1
    for c in p:
        den = den * c.denominator // gcd(den, c.denominator)
    ints = [int(c * den) for c in p]
    g = 0
    for c in ints:
        g = gcd(g, c)
    return tuple(c // g for c in ints)


def int_poly_derivative(p: IntPoly) -> IntPoly:
    return tuple(i * c for i, c in enumerate(p))[1:]


def int_poly_hom_value(p: IntPoly, num: int, den: int) -> int:
    """P(num/den) * den^deg(P) as an exact integer (den > 0)."""
    if not p:
        return 0
    acc = p[-1]
    dp = 1
    for c in reversed(p[:-1]):
        dp *= den
        acc = acc * num + c * dp
    return acc


def int_poly_sign_at(p: IntPoly, x: Fraction) -> int:
    v = int_poly_hom_value(p, x.numerator, x.denominator)
    return (v > 0) - (v < 0)


def cauchy_bound(p: Poly) -> Fraction:
    """1 + max |a_i| over the monic normalization; bounds all root moduli."""
    q = poly(p)
    if not q:
        raise PreconditionError("zero polynomial has no root bound")
    lead = q[-1]
    best = Fraction(0)
    for c in q[:-1]:
        m = abs(c / lead)
        if m > best:
            best = m
    return 1 + best


def sturm_chain(p: Poly) -> tuple[IntPoly, ...]:
    """Sturm sequence of a squarefree p, members scaled by positive integers."""
    p0 = int_primitive(p)
    chain = [p0, _int_prim(int_poly_derivative(p0))]
    while chain[-1]:
        prev = tuple(Fraction(c) for c in chain[-2])
        cur = tuple(Fraction(c) for c in chain[-1])
        rem = poly_divmod(prev, cur)[1]
        if not rem:
            break
        chain.append(_int_prim(tuple(-c for c in rem)))
    return tuple(c for c in chain if c)


def _int_prim(p) -> IntPoly:
    cs = list(p)
    while cs and cs[-1] == 0:
        cs.pop()
    if not cs:
        return ()
    if any(isinstance(c, Fraction) for c in cs):
        return int_primitive(tuple(Fraction(c) for c in cs))
    g = 0
    for c in cs:
        g = gcd(g, c)
    return tuple(c // g for c in cs)


def sign_variations_at(chain: Sequence[IntPoly], x: Fraction) -> int:
    signs = [int_poly_sign_at(c, x) for c in chain]
    return _count_changes(signs)


def sign_variations_at_inf(chain: Sequence[IntPoly], positive: bool) -> int:
    signs = []
    for c in chain:
        s = (c[-1] > 0) - (c[-1] < 0)
        if not positive and (len(c) - 1) % 2 == 1:
            s = -s
        signs.append(s)
    return _count_changes(signs)


def _count_changes(signs: Sequence[int]) -> int:
    nz = [s for s in signs if s != 0]
    return sum(1 for a, b in zip(nz, nz[1:]) if a * b < 0)


@dataclass(frozen=True)
class IsolatingInterval:
    """Open interval (lo, hi) containing exactly one real root of poly.

    Endpoints are rational non-roots; exact_root is set when the unique
    root was identified as a rational number.
    """

    lo: Fraction
    hi: Fraction
    poly: IntPoly
    exact_root: Fraction | None = None

    def width(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, x: Fraction) -> bool:
        return self.lo < x < self.hi


def isolate_real_roots(p: Poly) -> tuple[IsolatingInterval, ...]:
    """Disjoint ordered isolating intervals, one per distinct real root.

    Requires a squarefree input (gcd with the derivative constant); all
    intervals lie within [-(cauchy_bound+1), cauchy_bound+1].
    """
    q = poly(p)
    if degree(q) < 1:
        if degree(q) == 0:
            return ()
        raise PreconditionError("cannot isolate roots of the zero polynomial")
    if not is_squarefree(q):
        raise PreconditionError("polynomial is not squarefree")
    ip = int_primitive(q)
    chain = sturm_chain(q)
    bound = cauchy_bound(q) + 1
    lo, hi = -bound, bound
    memo: dict[Fraction, int] = {}

    def var(x: Fraction) -> int:
        if x not in memo:
            memo[x] = sign_variations_at(chain, x)
        return memo[x]

    known_roots = set(rational_roots(q))
    total = var(lo) - var(hi)
    out: list[IsolatingInterval] = []
    stack = [(lo, hi, total)]
    while stack:
        a, b, cnt = stack.pop()
        if cnt == 0:
            continue
        if cnt == 1:
            exact = None
            for r in known_roots:
                if a < r < b:
                    exact = r
                    break
            out.append(IsolatingInterval(a, b, ip, exact))
            continue
        mid = (a + b) / 2
        if int_poly_sign_at(ip, mid) == 0:
            known_roots.add(mid)
            mid = _nonroot_near(ip, mid, b)
        left = var(a) - var(mid)
        stack.append((a, mid, left))
        stack.append((mid, b, cnt - left))
    out.sort(key=lambda iv: iv.lo)
    return tuple(out)


def _nonroot_near(ip: IntPoly, x: Fraction, toward: Fraction) -> Fraction:
    step = (toward - x) / 4
    while True:
        cand = x + step
        if int_poly_sign_at(ip, cand) != 0:
            return cand
        step /= 2


def count_roots_between(p: Poly, lo: Fraction, hi: Fraction) -> int:
    """Number of distinct real roots in (lo, hi] of a squarefree p."""
    chain = sturm_chain(p)
    return sign_variations_at(chain, lo) - sign_variations_at(chain, hi)


def refine_bracket(iv: IsolatingInterval, width: Fraction) -> tuple[Fraction, Fraction]:
    """Shrink an isolating interval to the requested width.

    Bisection with an interleaved Newton step; the returned rational
    bracket keeps nonzero polynomial values at both endpoints.
    """
    if iv.exact_root is not None:
        r = iv.exact_root
        return r, r
    ip = iv.poly
    dp = int_poly_derivative(ip)
    a, b = iv.lo, iv.hi
    sa = int_poly_sign_at(ip, a)
    # dyadic snap precision: keeps Newton candidates from blowing up in size
    snap = max(8, (Fraction(1) / width).numerator.bit_length() + 8)
    use_newton = False
    while b - a > width:
        cand = None
        if use_newton:
            m = (a + b) / 2
            pv = poly_eval(tuple(Fraction(c) for c in ip), m)
            dv = poly_eval(tuple(Fraction(c) for c in dp), m)
            if dv != 0:
                x1 = m - pv / dv
                x1 = Fraction(round(x1 * (1 << snap)), 1 << snap)
                if a < x1 < b:
                    cand = x1
        use_newton = not use_newton
        if cand is None:
            cand = (a + b) / 2
        s = int_poly_sign_at(ip, cand)
        if s == 0:
            return cand, cand
        if s == sa:
            a = cand
        else:
            b = cand
    return a, b


def rational_roots(p: Poly) -> tuple[Fraction, ...]:
    """Rational roots of p by divisor enumeration; best effort.

    Returns the empty tuple when the leading or trailing coefficient is
    too large to factor quickly; callers treat absence as 'unknown'.
    """
    ip = int_primitive(p)
    if len(ip) < 2:
        return ()
    roots: list[Fraction] = []
    while ip and ip[0] == 0:
        roots.append(Fraction(0))
        ip = ip[1:]
    if len(ip) < 2:
        return tuple(roots)
    a0, an = abs(ip[0]), abs(ip[-1])
    if a0 > _RAT_ROOT_LIMIT or an > _RAT_ROOT_LIMIT:
        return tuple(roots)
    nums = _divisors(a0)
    dens = _divisors(an)
    if nums is None or dens is None:
        return tuple(roots)
    for q in dens:
        for r in nums:
            if gcd(r, q) != 1:
                continue
            for num in (r, -r):
                if int_poly_hom_value(ip, num, q) == 0:
                    roots.append(Fraction(num, q))
    return tuple(sorted(set(roots)))


def _divisors(n: int, cap: int = 4096) -> list[int] | None:
    """All positive divisors of n, or None when there would be too many."""
    if n == 0:
        return None
    fac: dict[int, int] = {}
    m = n
    d = 2
    while d * d <= m and d <= 10**6:
        while m % d == 0:
            fac[d] = fac.get(d, 0) + 1
            m //= d
        d += 1 if d == 2 else 2
    if m > 1:
        if m > 10**12:
            return None
        root = isqrt(m)
        if root * root == m and root <= 10**6:
            fac[root] = fac.get(root, 0) + 2
        else:
            fac[m] = fac.get(m, 0) + 1
    divs = [1]
    for prime, mult in fac.items():
        divs = [d * prime**e for d in divs for e in range(mult + 1)]
        if len(divs) > cap:
            return None
    return sorted(divs)


def poly_interpolate(points: Sequence[tuple[Fraction, Fraction]]) -> Poly:
    """Unique polynomial of degree < len(points) through the given points."""
    xs = [Fraction(x) for x, _ in points]
    ys = [Fraction(y) for _, y in points]
    n = len(points)
    coeffs = list(ys)  # Newton divided differences
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            coeffs[i] = (coeffs[i] - coeffs[i - 1]) / (xs[i] - xs[i - j])
    out: Poly = ()
    base: Poly = (Fraction(1),)
    for i in range(n):
        out = poly_add(out, poly_scale(coeffs[i], base))
        base = poly_mul(base, (-xs[i], Fraction(1)))
    return out
