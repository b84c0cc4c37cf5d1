"""Adaptive-precision certified real and complex arithmetic.

Values are midpoint-radius balls over MPFR floats with directed rounding;
every operation returns a ball containing the exact result whenever its
operands do.  Quantities that are provably zero by construction are stored
as structural zeros (`exact_zero`), set by the pipeline rather than
detected numerically.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import gmpy2
from gmpy2 import mpfr, mpz

from .errors import NeedsMorePrecision, PrecisionExhaustedError, PreconditionError
from .roots import IsolatingInterval, refine_bracket


@dataclass(frozen=True)
class PrecisionPolicy:
    """Working-precision ladder for the certified real phase."""

    initial_bits: int = 64
    max_bits: int = 16384
    growth: int = 2

    def __post_init__(self):
        if self.initial_bits > self.max_bits:
            raise ValueError("initial_bits must not exceed max_bits")
        if self.growth < 2:
            raise ValueError("growth multiplier must be at least 2")

    def ladder(self):
        bits = self.initial_bits
        while True:
            yield min(bits, self.max_bits)
            if bits >= self.max_bits:
                return
            bits *= self.growth


DEFAULT_POLICY = PrecisionPolicy()

_PRECISION = 64
_CTX_CACHE: dict[tuple[int, object], gmpy2.context] = {}
# radius arithmetic: low precision, always rounding up (radii are nonnegative)
_RUP = gmpy2.context(precision=32, round=gmpy2.RoundUp)


def get_precision() -> int:
    return _PRECISION


def set_precision(bits: int) -> None:
    global _PRECISION
    if bits < 2:
        raise ValueError("precision must be at least 2 bits")
    _PRECISION = bits


@contextmanager
def precision(bits: int):
    """Temporarily set the working precision for ball construction."""
    global _PRECISION
    old = _PRECISION
    set_precision(bits)
    try:
        yield
    finally:
        _PRECISION = old


def _ctx(rounding):
    key = (_PRECISION, rounding)
    ctx = _CTX_CACHE.get(key)
    if ctx is None:
        ctx = gmpy2.context(precision=_PRECISION, round=rounding)
        _CTX_CACHE[key] = ctx
    return ctx


def _ne():
    return _ctx(gmpy2.RoundToNearest)


def _up():
    return _ctx(gmpy2.RoundUp)


def _dn():
    return _ctx(gmpy2.RoundDown)


_ZERO_F = mpfr(0)
_EXACT_CTX_CACHE: dict[int, gmpy2.context] = {}


def _exact_ctx(bits: int) -> gmpy2.context:
    ctx = _EXACT_CTX_CACHE.get(bits)
    if ctx is None:
        ctx = gmpy2.context(precision=bits)
        _EXACT_CTX_CACHE[bits] = ctx
    return ctx


def _fneg(x):
    """Exact negation of an mpfr (never rounds, unlike bare '-')."""
    return _exact_ctx(x.precision).minus(x)


def _fabs(x):
    """Exact absolute value of an mpfr (bare abs() rounds at the global
    53-bit context)."""
    return _fneg(x) if x < 0 else x


class RealBall:
    """Certified enclosure mid +/- rad of a real number.

    Node identity is meaningful: two references to the same ball denote
    the same real number, which lets arithmetic cancel structurally
    (a - a = 0, sqrt(a)*sqrt(a) = a, (a - b) + b = a) without widening.
    """

    __slots__ = (
        "mid",
        "rad",
        "exact_zero",
        "_neg_of",
        "_sq",
        "_sqrt_of",
        "_addl",
        "_subl",
        "_pc",
    )

    def __init__(self, mid, rad, exact_zero: bool = False, _neg_of=None):
        self.mid = mid
        self.rad = rad
        self.exact_zero = exact_zero
        self._neg_of = _neg_of
        self._sq = None
        self._sqrt_of = None
        self._addl = None
        self._subl = None
        self._pc = None

    # -- constructors -------------------------------------------------

    @staticmethod
    def zero() -> "RealBall":
        return EXACT_ZERO

    @staticmethod
    def from_int(k: int) -> "RealBall":
        if k == 0:
            return EXACT_ZERO
        return RealBall.from_fraction(Fraction(k))

    @staticmethod
    def from_fraction(f) -> "RealBall":
        f = Fraction(f)
        if f == 0:
            return EXACT_ZERO
        lo = _dn().div(mpz(f.numerator), mpz(f.denominator))
        hi = _up().div(mpz(f.numerator), mpz(f.denominator))
        return _from_bounds(lo, hi)

    @staticmethod
    def from_interval(lo: Fraction, hi: Fraction) -> "RealBall":
        """Ball containing the whole rational interval [lo, hi]."""
        lo, hi = Fraction(lo), Fraction(hi)
        if lo > hi:
            raise ValueError("empty interval")
        flo = _dn().div(mpz(lo.numerator), mpz(lo.denominator))
        fhi = _up().div(mpz(hi.numerator), mpz(hi.denominator))
        return _from_bounds(flo, fhi)

    # -- predicates ---------------------------------------------------

    @property
    def is_exact(self) -> bool:
        return self.rad == 0

    def lower(self) -> mpfr:
        if self.exact_zero:
            return _ZERO_F
        return _dn().sub(self.mid, self.rad)

    def upper(self) -> mpfr:
        if self.exact_zero:
            return _ZERO_F
        return _up().add(self.mid, self.rad)

    def bounds_fraction(self) -> tuple[Fraction, Fraction]:
        """Exact rational lower/upper bounds of the ball."""
        lo, hi = self.lower(), self.upper()
        return Fraction(*lo.as_integer_ratio()), Fraction(*hi.as_integer_ratio())

    def contains_zero(self) -> bool:
        return self.exact_zero or (self.lower() <= 0 <= self.upper())

    def contains(self, value) -> bool:
        value = Fraction(value)
        lo, hi = self.bounds_fraction()
        return lo <= value <= hi

    def certified_sign(self) -> int | None:
        """-1/0/+1 when provable at the current enclosure, else None."""
        if self.exact_zero:
            return 0
        if self.lower() > 0:
            return 1
        if self.upper() < 0:
            return -1
        return None

    def mag_upper(self) -> mpfr:
        return _RUP.add(_fabs(self.mid), self.rad)

    # -- arithmetic ---------------------------------------------------

    def __neg__(self) -> "RealBall":
        if self.exact_zero:
            return self
        if self._neg_of is not None:
            return self._neg_of
        return RealBall(_fneg(self.mid), self.rad, _neg_of=self)

    def __abs__(self) -> "RealBall":
        if self.exact_zero:
            return self
        return RealBall(_fabs(self.mid), self.rad)

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if other._neg_of is self or self._neg_of is other:
            return EXACT_ZERO
        if self._subl is not None and self._subl[1] is other:
            return self._subl[0]
        if other._subl is not None and other._subl[1] is self:
            return other._subl[0]
        if other._neg_of is not None:
            return self.__sub__(other._neg_of)
        if self._neg_of is not None:
            return other.__sub__(self._neg_of)
        if self.exact_zero:
            return other
        if other.exact_zero:
            return self
        lo = _dn().add(self.mid, other.mid)
        hi = _up().add(self.mid, other.mid)
        out = _with_radius(lo, hi, _RUP.add(self.rad, other.rad))
        if not out.exact_zero:
            out._addl = (self, other)
        return out

    __radd__ = __add__

    def __sub__(self, other):
        if other is self:
            return EXACT_ZERO
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self._addl is not None:
            if self._addl[0] is other:
                return self._addl[1]
            if self._addl[1] is other:
                return self._addl[0]
            if other._addl is not None and (
                (self._addl[0] is other._addl[0] and self._addl[1] is other._addl[1])
                or (self._addl[0] is other._addl[1] and self._addl[1] is other._addl[0])
            ):
                return EXACT_ZERO
        if other._addl is not None:
            if other._addl[0] is self:
                return -other._addl[1]
            if other._addl[1] is self:
                return -other._addl[0]
        if other.exact_zero:
            return self
        if self.exact_zero:
            return -other
        lo = _dn().sub(self.mid, other.mid)
        hi = _up().sub(self.mid, other.mid)
        out = _with_radius(lo, hi, _RUP.add(self.rad, other.rad))
        if not out.exact_zero:
            out._subl = (self, other)
        return out

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other.__sub__(self)

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.exact_zero or other.exact_zero:
            return EXACT_ZERO
        if self is other:
            if self._sqrt_of is not None:
                return self._sqrt_of
            if self._sq is not None:
                return self._sq
        if _is_exact_one(self):
            return other
        if _is_exact_one(other):
            return self
        if _is_exact_neg_one(self):
            return -other
        if _is_exact_neg_one(other):
            return -self
        if self._neg_of is not None:
            return -(self._neg_of * other)
        if other._neg_of is not None:
            return -(self * other._neg_of)
        if self._pc is not None:
            hit = self._pc.get(id(other))
            if hit is not None:
                return hit[1]
        lo = _dn().mul(self.mid, other.mid)
        hi = _up().mul(self.mid, other.mid)
        cross = _RUP.add(
            _RUP.add(_RUP.mul(_fabs(self.mid), other.rad), _RUP.mul(_fabs(other.mid), self.rad)),
            _RUP.mul(self.rad, other.rad),
        )
        out = _with_radius(lo, hi, cross)
        if not out.exact_zero:
            if self is other:
                self._sq = out
            else:
                # keep a strong reference to the partner so its id stays valid
                if self._pc is None:
                    self._pc = {}
                if other._pc is None:
                    other._pc = {}
                self._pc[id(other)] = (other, out)
                other._pc[id(self)] = (self, out)
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return _div(self, other)

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return _div(other, self)

    def sqrt(self) -> "RealBall":
        if self.exact_zero:
            return self
        hi_in = self.upper()
        if hi_in < 0:
            raise PreconditionError("square root of a provably negative ball")
        lo_in = self.lower()
        if lo_in < 0:
            lo_in = _ZERO_F
        lo = _dn().sqrt(lo_in)
        hi = _up().sqrt(hi_in)
        out = _from_bounds(lo, hi)
        if not out.exact_zero:
            out._sqrt_of = self
        return out

    def __repr__(self) -> str:
        if self.exact_zero:
            return "RealBall(0, structural)"
        return f"RealBall({self.mid!r}, rad={self.rad!r})"


def _coerce(x):
    if isinstance(x, RealBall):
        return x
    if isinstance(x, (int, Fraction)) or isinstance(x, type(mpz(0))):
        return RealBall.from_fraction(Fraction(x))
    return NotImplemented


def _with_radius(lo, hi, extra_rad):
    mid = _ne().div_2exp(_ne().add(lo, hi), 1)
    round_err = _RUP.maxnum(_RUP.sub(hi, mid), _RUP.sub(mid, lo))
    if round_err < 0:
        round_err = _ZERO_F
    rad = _RUP.add(round_err, extra_rad)
    if mid == 0 and rad == 0:
        return EXACT_ZERO
    return RealBall(mid, rad)


def _from_bounds(lo, hi):
    if lo == hi:
        if lo == 0:
            return EXACT_ZERO
        return RealBall(lo, _ZERO_F)
    return _with_radius(lo, hi, _ZERO_F)


def _is_exact_one(b: "RealBall") -> bool:
    return not b.exact_zero and b.rad == 0 and b.mid == 1


def _is_exact_neg_one(b: "RealBall") -> bool:
    return not b.exact_zero and b.rad == 0 and b.mid == -1


def _div(num: RealBall, den: RealBall):
    den_low = _dn().sub(_fabs(den.mid), den.rad)
    if den_low <= 0:
        raise NeedsMorePrecision("division by a ball containing zero")
    if num.exact_zero:
        return EXACT_ZERO
    lo = _dn().div(num.mid, den.mid)
    hi = _up().div(num.mid, den.mid)
    err_num = _RUP.add(_RUP.mul(num.rad, _fabs(den.mid)), _RUP.mul(_fabs(num.mid), den.rad))
    err_den = _dn().mul(_fabs(den.mid), den_low)
    extra = _RUP.div(err_num, err_den)
    return _with_radius(lo, hi, extra)


EXACT_ZERO = RealBall(_ZERO_F, _ZERO_F, True)
ONE_BALL = RealBall(mpfr(1), _ZERO_F)


def exact_one() -> RealBall:
    return ONE_BALL


def ball_sign(
    a: RealBall,
    refine: Callable[[int], RealBall] | None = None,
    policy: PrecisionPolicy = DEFAULT_POLICY,
) -> int:
    """Certified sign of a ball; 0 only for structural zeros.

    When the enclosure is ambiguous, `refine(bits)` is asked for tighter
    enclosures along the policy ladder; without a refiner the decision is
    escalated to the adaptive-precision driver via NeedsMorePrecision.
    """
    s = a.certified_sign()
    if s is not None:
        return s
    if refine is None:
        raise NeedsMorePrecision("sign of a ball straddling zero")
    bits = max(get_precision(), policy.initial_bits)
    while bits < policy.max_bits:
        bits = min(bits * policy.growth, policy.max_bits)
        with precision(bits):
            a = refine(bits)
        s = a.certified_sign()
        if s is not None:
            return s
    raise PrecisionExhaustedError(
        f"sign undecidable at {policy.max_bits} bits; degenerate input or broken guarantee"
    )


def cert_sign(x) -> int:
    """Certified sign for mixed rational/ball scalars (no refinement)."""
    if isinstance(x, RealBall):
        s = x.certified_sign()
        if s is None:
            raise NeedsMorePrecision("sign of a ball straddling zero")
        return s
    x = Fraction(x)
    return (x > 0) - (x < 0)


def known_zero(x) -> bool:
    """True when x is structurally/exactly zero."""
    if isinstance(x, RealBall):
        return x.exact_zero
    return Fraction(x) == 0


def is_ball(x) -> bool:
    return isinstance(x, (RealBall, ComplexBall))


def generic_sqrt(x):
    """Square root that stays exact on rational perfect squares."""
    if isinstance(x, RealBall):
        return x.sqrt()
    f = Fraction(x)
    if f < 0:
        raise PreconditionError("square root of a negative rational")
    rn = _isqrt_exact(f.numerator)
    rd = _isqrt_exact(f.denominator)
    if rn is not None and rd is not None:
        return Fraction(rn, rd)
    return RealBall.from_fraction(f).sqrt()


def _isqrt_exact(n: int) -> int | None:
    from math import isqrt

    r = isqrt(n)
    return r if r * r == n else None


class ComplexBall:
    """Rectangular complex enclosure with RealBall components."""

    __slots__ = ("re", "im")

    def __init__(self, re: RealBall, im: RealBall):
        self.re = re
        self.im = im

    @staticmethod
    def from_real(x) -> "ComplexBall":
        return ComplexBall(_coerce(x), EXACT_ZERO)

    def conj(self) -> "ComplexBall":
        return ComplexBall(self.re, -self.im)

    def __neg__(self):
        return ComplexBall(-self.re, -self.im)

    def __add__(self, other):
        other = _coerce_complex(other)
        if other is NotImplemented:
            return NotImplemented
        return ComplexBall(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce_complex(other)
        if other is NotImplemented:
            return NotImplemented
        return ComplexBall(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        other = _coerce_complex(other)
        if other is NotImplemented:
            return NotImplemented
        return other.__sub__(self)

    def __mul__(self, other):
        other = _coerce_complex(other)
        if other is NotImplemented:
            return NotImplemented
        a, b, c, d = self.re, self.im, other.re, other.im
        return ComplexBall(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce_complex(other)
        if other is NotImplemented:
            return NotImplemented
        n2 = other.abs2()
        den_low = _dn().sub(_fabs(n2.mid), n2.rad)
        if den_low <= 0:
            raise NeedsMorePrecision("complex division by a ball containing zero")
        num = self * other.conj()
        return ComplexBall(num.re / n2, num.im / n2)

    def __rtruediv__(self, other):
        other = _coerce_complex(other)
        if other is NotImplemented:
            return NotImplemented
        return other.__truediv__(self)

    def abs2(self) -> RealBall:
        return self.re * self.re + self.im * self.im

    def mag_upper(self):
        return _RUP.add(self.re.mag_upper(), self.im.mag_upper())

    def contains_zero(self) -> bool:
        return self.re.contains_zero() and self.im.contains_zero()

    def __repr__(self):
        return f"ComplexBall({self.re!r}, {self.im!r})"


def _coerce_complex(x):
    if isinstance(x, ComplexBall):
        return x
    r = _coerce(x)
    if r is NotImplemented:
        return NotImplemented
    return ComplexBall(r, EXACT_ZERO)


def refine_root(iv: IsolatingInterval, bits: int) -> RealBall:
    """Ball of radius <= 2^-bits around the unique root of an isolating
    interval; exact when the root is a dyadic rational."""
    if iv.exact_root is not None:
        work = bits + 16 + abs(iv.exact_root.numerator).bit_length()
        with precision(max(get_precision(), work)):
            return RealBall.from_fraction(iv.exact_root)
    target = Fraction(1, 2 ** (bits + 2))
    lo, hi = refine_bracket(iv, target)
    if lo == hi:
        work = bits + 16 + abs(lo.numerator).bit_length()
        with precision(max(get_precision(), work)):
            return RealBall.from_fraction(lo)
    work = max(get_precision(), bits + 16)
    limit = Fraction(1, 2**bits)
    while True:
        with precision(work):
            ball = RealBall.from_interval(lo, hi)
        if Fraction(*ball.rad.as_integer_ratio()) <= limit:
            return ball
        work *= 2


def ball_vec(entries) -> tuple:
    return tuple(_coerce(e) if not isinstance(e, (RealBall, ComplexBall)) else e for e in entries)


def ball_matrix(rows) -> tuple:
    return tuple(ball_vec(row) for row in rows)


def ball_kernel(lam, Q0, Q1):
    """Kernel generator of lam*Q0 + Q1 for lam enclosing a simple root.

    Works over RealBall or ComplexBall lam; the result is normalized so
    its entry of largest midpoint magnitude is exactly one.  Raises
    NeedsMorePrecision when the enclosure is too wide to certify that the
    rank defect is exactly one.
    """
    n = len(Q0)
    complex_mode = isinstance(lam, ComplexBall)

    def conv(f):
        b = RealBall.from_fraction(f)
        return ComplexBall(b, EXACT_ZERO) if complex_mode else b

    M = [[lam * conv(Q0[i][j]) + conv(Q1[i][j]) for j in range(n)] for i in range(n)]
    rows = list(range(n))
    cols = list(range(n))
    pivots: list[tuple[int, int]] = []
    for _ in range(n - 1):
        best = None
        best_mag = None
        for i in rows:
            for j in cols:
                mag = M[i][j].mag_upper()
                if best_mag is None or mag > best_mag:
                    best, best_mag = (i, j), mag
        bi, bj = best
        piv = M[bi][bj]
        if _mag_lower_positive(piv) <= 0:
            raise NeedsMorePrecision("cannot certify pencil rank during kernel elimination")
        for i in rows:
            if i == bi:
                continue
            f = M[i][bj] / piv
            for j in cols:
                if j == bj:
                    continue
                M[i][j] = M[i][j] - f * M[bi][j]
            M[i][bj] = EXACT_ZERO if not complex_mode else ComplexBall(EXACT_ZERO, EXACT_ZERO)
        pivots.append((bi, bj))
        rows.remove(bi)
        cols.remove(bj)
    free_col = cols[0]
    one = ONE_BALL if not complex_mode else ComplexBall(ONE_BALL, EXACT_ZERO)
    v = [None] * n
    v[free_col] = one
    for bi, bj in reversed(pivots):
        acc = None
        for j in range(n):
            if j == bj or v[j] is None:
                continue
            term = M[bi][j] * v[j]
            acc = term if acc is None else acc + term
        if acc is None:
            v[bj] = EXACT_ZERO if not complex_mode else ComplexBall(EXACT_ZERO, EXACT_ZERO)
        else:
            v[bj] = -(acc / M[bi][bj])
    # normalize: largest-midpoint entry becomes exactly one
    best = max(range(n), key=lambda j: v[j].mag_upper())
    piv = v[best]
    if _mag_lower_positive(piv) <= 0:
        raise NeedsMorePrecision("kernel vector normalization pivot straddles zero")
    out = [v[j] / piv for j in range(n)]
    out[best] = one
    return tuple(out)


def _mag_lower_positive(x):
    if isinstance(x, ComplexBall):
        n2 = x.abs2()
        return _dn().sub(_fabs(n2.mid), n2.rad)
    return _dn().sub(_fabs(x.mid), x.rad)
