"""Signature analysis of the pencil lambda*Q0 + Q1.

Covers the smoothness hypothesis check, the piecewise-constant signature
profile along the real line, detection of definite members (the real
solvability test), and the dichotomy search for a balanced member.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil, floor

from .errors import HypothesisError, InternalInvariantError, PreconditionError
from .linalg import (
    Matrix,
    Signature,
    determinant,
    inertia,
    mat_add,
    mat_scale,
    pencil_det_poly,
    pencil_member,
    sym_matrix,
)
from .roots import (
    IsolatingInterval,
    cauchy_bound,
    degree,
    int_poly_sign_at,
    int_primitive,
    is_squarefree,
    isolate_real_roots,
    poly,
)


@dataclass(frozen=True)
class HypothesisReport:
    """Outcome of the smoothness check with the failing clause named."""

    ok: bool
    det_q0_nonzero: bool
    det_q1_nonzero: bool
    delta_squarefree: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def check_hypothesis_h(Q0: Matrix, Q1: Matrix) -> HypothesisReport:
    """det(Q0) != 0, det(Q1) != 0 and det(lambda*Q0+Q1) squarefree."""
    Q0 = sym_matrix(Q0)
    Q1 = sym_matrix(Q1)
    if len(Q0) != len(Q1):
        raise PreconditionError("forms must have the same dimension")
    d0 = determinant(Q0) != 0
    d1 = determinant(Q1) != 0
    if not d0 or not d1:
        reason = "det(Q0)=0" if not d0 else "det(Q1)=0"
        return HypothesisReport(False, d0, d1, False, reason)
    delta = pencil_det_poly(Q0, Q1)
    sqf = is_squarefree(delta)
    if not sqf:
        return HypothesisReport(False, d0, d1, False, "pencil determinant not squarefree")
    return HypothesisReport(True, True, True, True)


def require_hypothesis(Q0: Matrix, Q1: Matrix) -> None:
    rep = check_hypothesis_h(Q0, Q1)
    if not rep.ok:
        raise HypothesisError(rep.reason)


@dataclass(frozen=True)
class PencilShift:
    """2x2 rational change of pencil basis: new_i = sum_j coeffs[i][j] * old_j."""

    coeffs: tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]

    @property
    def is_identity(self) -> bool:
        (a, b), (c, d) = self.coeffs
        return (a, b, c, d) == (1, 0, 0, 1)


def pencil_basepoint_shift(Q0: Matrix, Q1: Matrix) -> tuple[Matrix, Matrix, PencilShift]:
    """Replace degenerate members by pencil combinations with nonzero
    determinant; common zeros are preserved and the substitution recorded."""
    Q0 = sym_matrix(Q0)
    Q1 = sym_matrix(Q1)
    one, zero = Fraction(1), Fraction(0)
    row0 = (one, zero)
    row1 = (zero, one)
    if determinant(Q0) == 0:
        if all(c == 0 for c in pencil_det_poly(Q0, Q1)):
            raise PreconditionError("pencil determinant vanishes identically")
        c = _first_good(lambda c: determinant(mat_add(Q0, mat_scale(c, Q1))) != 0, len(Q0))
        Q0 = mat_add(Q0, mat_scale(c, Q1))
        row0 = (one, Fraction(c))
    if determinant(Q1) == 0:
        if all(c == 0 for c in pencil_det_poly(Q1, Q0)):
            raise PreconditionError("pencil determinant vanishes identically")
        c = _first_good(lambda c: determinant(mat_add(Q1, mat_scale(c, Q0))) != 0, len(Q0))
        Q1 = mat_add(Q1, mat_scale(c, Q0))
        row1 = (Fraction(c) * row0[0], one + Fraction(c) * row0[1])
    return Q0, Q1, PencilShift((row0, row1))


def _first_good(pred, n: int) -> int:
    c = 1
    for _ in range(2 * (n + 2)):
        if pred(c):
            return c
        c = -c if c > 0 else -c + 1
    raise InternalInvariantError("no nondegenerate pencil combination found")


@dataclass(frozen=True)
class Segment:
    """Open interval between consecutive real roots (None marks +-infinity)."""

    left_root: int | None
    right_root: int | None
    sample: Fraction
    sig: Signature


@dataclass(frozen=True)
class PencilProfile:
    roots: tuple[IsolatingInterval, ...]
    m: int
    n: int
    segments: tuple[Segment, ...]
    at_roots: tuple[Signature, ...]

    def d_values(self) -> tuple[int, ...]:
        return tuple(seg.sig.d for seg in self.segments)


def _segment_samples(roots, bound: Fraction) -> list[Fraction]:
    """One rational sample strictly inside each of the m+1 open segments."""
    m = len(roots)
    if m == 0:
        return [Fraction(0)]
    samples = [-bound]
    for i in range(m - 1):
        a, b = roots[i].hi, roots[i + 1].lo
        if a == b:
            samples.append(a)
        else:
            samples.append(_mediant(a, b))
    samples.append(bound)
    return samples


def _mediant(a: Fraction, b: Fraction) -> Fraction:
    return Fraction(a.numerator + b.numerator, a.denominator + b.denominator)


def signature_profile(Q0: Matrix, Q1: Matrix) -> PencilProfile:
    """Exact signatures on every open segment and at every real root."""
    require_hypothesis(Q0, Q1)
    n = len(Q0)
    delta = pencil_det_poly(Q0, Q1)
    roots = isolate_real_roots(delta)
    m = len(roots)
    bound = cauchy_bound(delta) + 1
    samples = _segment_samples(roots, bound)
    sigs = [inertia(pencil_member(s, Q0, Q1)) for s in samples]
    segments = []
    for i, (s, sig) in enumerate(zip(samples, sigs)):
        left = i - 1 if i > 0 else None
        right = i if i < m else None
        segments.append(Segment(left, right, s, sig))
    at_roots = []
    for i in range(m):
        dl = sigs[i].d
        dr = sigs[i + 1].d
        if (dl + dr) % 2 != 0:
            raise InternalInvariantError("segment d-values must share parity")
        d_root = (dl + dr) // 2
        r = (n - 1 + d_root) // 2
        if (n - 1 + d_root) % 2 != 0:
            raise InternalInvariantError("root signature is not integral")
        at_roots.append(Signature(r, n - 1 - r, n))
    return PencilProfile(roots, m, n, tuple(segments), tuple(at_roots))


def find_definite_lambda(Q0: Matrix, Q1: Matrix) -> Fraction | None:
    """A rational lambda making lambda*Q0 + Q1 definite, if one exists.

    Only the two candidate segments singled out by the signature at the
    far-left sample need testing; with fewer than n real roots no member
    of the pencil is definite.
    """
    require_hypothesis(Q0, Q1)
    n = len(Q0)
    delta = pencil_det_poly(Q0, Q1)
    roots = isolate_real_roots(delta)
    if len(roots) != n:
        return None
    a = cauchy_bound(delta)
    sig = inertia(pencil_member(-a, Q0, Q1))
    samples = _segment_samples(roots, a + 1)
    for idx in (sig.r, sig.s):
        cand = samples[idx]
        cand_sig = inertia(pencil_member(cand, Q0, Q1))
        if cand_sig.is_definite:
            return cand
    return None


@dataclass(frozen=True)
class SolvabilityReport:
    solvable_over_R: bool
    definite_lambda: Fraction | None
    definite_signature: Signature | None
    hypothesis_h: bool
    hypothesis_reason: str = ""


def is_real_solvable(Q0: Matrix, Q1: Matrix) -> SolvabilityReport:
    """Real solvability of q0 = q1 = 0: true iff no pencil member is definite."""
    if len(Q0) < 3:
        raise PreconditionError("the real solvability test applies for n >= 3")
    rep = check_hypothesis_h(Q0, Q1)
    if not rep.ok:
        return SolvabilityReport(False, None, None, False, rep.reason)
    wit = find_definite_lambda(Q0, Q1)
    if wit is None:
        return SolvabilityReport(True, None, None, True)
    return SolvabilityReport(False, wit, inertia(pencil_member(wit, Q0, Q1)), True)


def d_value(Q0: Matrix, Q1: Matrix, lam) -> int:
    return inertia(pencil_member(lam, Q0, Q1)).d


def find_balanced_lambda(Q0: Matrix, Q1: Matrix, step_limit: int | None = None) -> Fraction:
    """Rational lambda* with |r-s| <= 1 and det(lambda* Q0 + Q1) != 0.

    Dichotomy on the signature difference d over [-(a+1), a+1] starting
    from 0; a midpoint landing on a root of the pencil determinant is
    nudged by the mediant toward the right endpoint.
    """
    require_hypothesis(Q0, Q1)
    delta = pencil_det_poly(Q0, Q1)
    ip = int_primitive(delta)
    a = cauchy_bound(delta)
    lam_max = a + 1
    lam_min = -lam_max
    if step_limit is None:
        step_limit = 64 + abs(a.numerator).bit_length() + a.denominator.bit_length()

    def delta_nonzero(x: Fraction) -> bool:
        return int_poly_sign_at(ip, x) != 0

    lam_b = Fraction(0)
    if delta_nonzero(lam_b) and abs(d_value(Q0, Q1, lam_b)) <= 1:
        return lam_b
    d_min = d_value(Q0, Q1, lam_min)
    if abs(d_min) <= 1:
        return lam_min
    if abs(d_value(Q0, Q1, lam_max)) <= 1:
        return lam_max
    for _ in range(step_limit):
        while not delta_nonzero(lam_b):
            lam_b = _mediant(lam_b, lam_max)
        d_b = d_value(Q0, Q1, lam_b)
        if abs(d_b) <= 1:
            return lam_b
        if (d_b > 0) == (d_min > 0):
            lam_min = lam_b
        else:
            lam_max = lam_b
        lam_b = (lam_min + lam_max) / 2
    raise InternalInvariantError("balanced-member dichotomy exceeded its step cap")


def simplest_rational_between(lo: Fraction, hi: Fraction) -> Fraction:
    """Rational of minimal denominator (then numerator magnitude) in [lo, hi]."""
    lo, hi = Fraction(lo), Fraction(hi)
    if lo > hi:
        raise ValueError("empty interval")
    if lo == hi:
        return lo
    il, ih = ceil(lo), floor(hi)
    if il <= ih:
        if il <= 0 <= ih:
            return Fraction(0)
        return Fraction(il if il > 0 else ih)
    base = floor(lo)
    inner = simplest_rational_between(1 / (hi - base), 1 / (lo - base))
    return base + 1 / inner
