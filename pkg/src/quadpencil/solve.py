"""Sign adjustment, rational approximation near a real solution, and the
master pipeline producing an exactly certified rational common zero."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .balls import (
    DEFAULT_POLICY,
    PrecisionPolicy,
    cert_sign,
    get_precision,
    is_ball,
    known_zero,
    precision,
)
from .errors import (
    HypothesisError,
    InternalInvariantError,
    NeedsMorePrecision,
    PrecisionExhaustedError,
    PreconditionError,
    RealInsolvableError,
)
from .linalg import (
    Matrix,
    RatVec,
    bilinear,
    congruence,
    determinant,
    evaluate_form,
    identity,
    inertia,
    kernel_vector,
    mat_add,
    mat_inverse,
    mat_mul,
    mat_scale,
    pencil_det_poly,
    primitive_vector,
    saturated_left_kernel,
    sym_matrix,
    vec_mat,
)
from .oracle import Oracle
from .pencil import (
    check_hypothesis_h,
    d_value,
    find_balanced_lambda,
    is_real_solvable,
    pencil_basepoint_shift,
)
from .realsol import PencilRealData, _real_point_at, prepare_real_data
from .reduction import double_witt, hyperbolic_chain, pin_row_pattern, reduce_qf
from .roots import int_poly_sign_at, int_primitive


def pos_neg(Q0: Matrix, Q1: Matrix, z):
    """From a common zero z, construct z- with q0(z-) = 0 and q1(z-) < 0.

    Uses the shortcut when the relevant diagonal entry vanishes, otherwise
    the doubling walk along the cubic h = g(y) - y2 f(y).
    """
    n = len(Q0)
    if n < 5:
        raise PreconditionError("need at least five variables")
    P = double_witt(Q0, Q1, z)
    q0p = congruence(P, Q0)
    q1p = congruence(P, Q1)
    one = Fraction(1)
    q0p = pin_row_pattern(q0p, 0, {0: Fraction(0), 1: one})
    q1p = pin_row_pattern(q1p, 0, {0: Fraction(0), 2: one})
    f22 = q0p[2][2]
    if known_zero(f22):
        g22 = q1p[2][2]
        zv = [Fraction(0)] * n
        zv[0] = (-1 - g22) / 2
        zv[2] = one
        return vec_mat(tuple(zv), P)
    eps = cert_sign(f22)
    fmat = tuple(tuple(q0p[i][j] for j in range(1, n)) for i in range(1, n))
    gmat = tuple(tuple(q1p[i][j] for j in range(1, n)) for i in range(1, n))
    y = [Fraction(0)] * (n - 1)
    y[0] = Fraction(1)
    y[1] = Fraction(eps)
    cap = 64 + (get_precision() if not _all_exact(Q0) else _entry_bits(Q0, Q1))
    for _ in range(cap):
        fy = evaluate_form(fmat, tuple(y))
        h = evaluate_form(gmat, tuple(y)) - y[1] * fy
        if not known_zero(h):
            s = h.certified_sign() if is_ball(h) else ((h > 0) - (h < 0))
            if s is not None and s < 0:
                zv = [-fy / 2] + list(y)
                return vec_mat(tuple(zv), P)
        y[1] = 2 * y[1]
    raise NeedsMorePrecision("sign walk did not certify a negative value before its cap")


def _all_exact(Q) -> bool:
    return not any(is_ball(e) for row in Q for e in row)


def _entry_bits(*mats) -> int:
    best = 1
    for M in mats:
        for row in M:
            for e in row:
                best = max(best, abs(e.numerator).bit_length() + e.denominator.bit_length())
    return best


def rational_isotropic_near(Q0: Matrix, Q1: Matrix, y, oracle: Oracle, stats: dict | None = None):
    """Exact rational z with q0(z) = 0 and q1(z) < 0, near the certified
    real vector y with those properties.

    After the exact hyperbolic split of q0, a deterministic sweep of small
    isotropic vectors is tried first (it keeps later stages small); the
    fallback approximates y in the split coordinates with epsilon-halving
    until the exact sign checks pass.
    """
    n = len(Q0)
    if n < 5:
        raise PreconditionError("need at least five variables")
    Q0 = sym_matrix(Q0)
    Q1 = sym_matrix(Q1)
    if stats is None:
        stats = {}
    stats.setdefault("halvings", 0)
    w = oracle.isotropic(Q0)
    split = reduce_qf(Q0, w)
    for _ in range(3):
        q0s = congruence(split, Q0)
        _check_split_shape(q0s)
        q1s = congruence(split, Q1)
        cand = _small_candidate_sweep(q0s, q1s)
        if cand is not None:
            stats["path"] = "sweep"
            return primitive_vector(vec_mat(cand, split))
        yprime = vec_mat(y, mat_inverse(split))
        if all(known_zero(e) for e in yprime[1:]):
            cand = tuple(split[0])
            if evaluate_form(Q1, cand) < 0:
                stats["path"] = "short-circuit"
                return primitive_vector(cand)
            raise NeedsMorePrecision("short-circuit candidate fails the exact sign check")
        if _cert_nonzero_or_none(yprime[1]):
            stats["path"] = "approx"
            return _approximate_on_split(q0s, q1s, split, yprime, stats)
        # the pairing coordinate of y vanishes; repair the split so it does not
        split = _repair_split(q0s, split, yprime)
    raise NeedsMorePrecision("could not arrange a nonzero pairing coordinate")


def _check_split_shape(q0s: Matrix) -> None:
    n = len(q0s)
    ok = q0s[0][0] == 0 and q0s[0][1] == 1 and q0s[1][1] == 0
    ok = ok and all(q0s[0][j] == 0 and q0s[1][j] == 0 for j in range(2, n))
    if not ok:
        raise InternalInvariantError("hyperbolic split lost its exact shape")


def _cert_nonzero_or_none(e) -> bool:
    if known_zero(e):
        return False
    if is_ball(e):
        return e.certified_sign() is not None
    return e != 0


def _small_candidate_sweep(q0s: Matrix, q1s: Matrix):
    """Deterministic sweep of exact isotropic vectors of H + F with small
    entries, returning the first with a negative q1 value."""
    n = len(q0s)
    fmat = tuple(tuple(q0s[i][j] for j in range(2, n)) for i in range(2, n))

    def complete(u2: Fraction, tail: list[Fraction]):
        fval = evaluate_form(fmat, tuple(tail)) if n > 2 else Fraction(0)
        u1 = -fval / (2 * u2)
        return (u1, u2, *tail)

    candidates = [complete(Fraction(1), [Fraction(0)] * (n - 2))]
    for i in range(n - 2):
        for a in (1, -1, 2, -2):
            tail = [Fraction(0)] * (n - 2)
            tail[i] = Fraction(a)
            candidates.append(complete(Fraction(1), tail))
    for i in range(n - 2):
        for j in range(i + 1, n - 2):
            for a in (1, -1):
                for b in (1, -1):
                    tail = [Fraction(0)] * (n - 2)
                    tail[i], tail[j] = Fraction(a), Fraction(b)
                    candidates.append(complete(Fraction(1), tail))
    for cand in candidates:
        if evaluate_form(q1s, cand) < 0:
            return cand
    return None


def _repair_split(q0s: Matrix, split: Matrix, yprime) -> Matrix:
    """New split basis whose pairing coordinate of y is provably nonzero."""
    n = len(q0s)
    if _cert_nonzero_or_none(yprime[0]):
        rows = [list(r) for r in split]
        rows[0], rows[1] = rows[1], rows[0]
        return tuple(tuple(r) for r in rows)
    fmat = tuple(tuple(q0s[i][j] for j in range(2, n)) for i in range(2, n))
    ytail = yprime[2:]
    for j in range(n - 2):
        pairing = sum(fmat[k][j] * ytail[k] for k in range(n - 2))
        if _cert_nonzero_or_none(pairing):
            wc = [Fraction(0)] * n
            wc[0] = -fmat[j][j] / 2
            wc[1] = Fraction(1)
            wc[2 + j] = Fraction(1)
            newp = reduce_qf(q0s, tuple(wc))
            return mat_mul(newp, split)
    raise NeedsMorePrecision("cannot certify any pairing direction for the real vector")


def _approximate_on_split(q0s, q1s, split, yprime, stats: dict):
    n = len(q0s)
    fmat = tuple(tuple(q0s[i][j] for j in range(2, n)) for i in range(2, n))
    if not any(is_ball(e) for e in yprime):
        exact = tuple(Fraction(e) for e in yprime)
        u = _project_isotropic(fmat, exact)
        if evaluate_form(q1s, u) < 0:
            return primitive_vector(vec_mat(u, split))
    eps = _lower_bound_abs(yprime[1]) / 2
    if eps <= 0:
        raise NeedsMorePrecision("pairing coordinate has no positive lower bound")
    for _ in range(64):
        z = _round_vector(yprime, eps)
        if z is None:
            raise NeedsMorePrecision("enclosures are wider than the approximation step")
        if evaluate_form(q1s, z) < 0:
            u = _project_isotropic(fmat, z)
            if evaluate_form(q1s, u) < 0:
                return primitive_vector(vec_mat(u, split))
        eps /= 2
        stats["halvings"] += 1
    raise NeedsMorePrecision("epsilon-halving failed to certify a negative value")


def _project_isotropic(fmat, z):
    fval = evaluate_form(fmat, z[2:]) if len(z) > 2 else Fraction(0)
    u1 = -fval / (2 * z[1])
    return (u1,) + tuple(z[1:])


def _lower_bound_abs(e) -> Fraction:
    if is_ball(e):
        lo, hi = e.bounds_fraction()
        if lo > 0:
            return lo
        if hi < 0:
            return -hi
        return Fraction(0)
    return abs(Fraction(e))


def _round_vector(yprime, eps: Fraction):
    depth = max(4, (Fraction(4) / eps).numerator.bit_length())
    den = 1 << depth
    out = []
    for e in yprime:
        if is_ball(e):
            if Fraction(*e.rad.as_integer_ratio()) > eps / 4:
                return None
            mid = Fraction(*e.mid.as_integer_ratio())
        else:
            mid = Fraction(e)
        out.append(Fraction(round(mid * den), den))
    return tuple(out)


# ----------------------------------------------------------------------
# the master pipeline
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class SolutionCertificate:
    """Exactly verified nonzero rational common zero of the input pair."""

    x: RatVec
    residue0: Fraction
    residue1: Fraction
    transcript: tuple[tuple[str, str], ...]

    def digest(self) -> str:
        payload = "\n".join(f"{k}: {v}" for k, v in self.transcript)
        return hashlib.sha256(payload.encode()).hexdigest()

    def replay_ok(self) -> bool:
        return self.residue0 == 0 and self.residue1 == 0 and any(e != 0 for e in self.x)


def solve_pair(
    Q0: Matrix,
    Q1: Matrix,
    oracle: Oracle | None = None,
    rng_seed: int = 0,
    policy: PrecisionPolicy = DEFAULT_POLICY,
) -> SolutionCertificate:
    """Compute an exactly certified nonzero rational solution of
    q0 = q1 = 0 for a smooth pair in n >= 13 variables.

    Raises RealInsolvableError (with a definite witness) when no real
    solution exists; oracle budget and precision-cap failures are the only
    other escapes.
    """
    Q0 = sym_matrix(Q0)
    Q1 = sym_matrix(Q1)
    n = len(Q0)
    if n < 13:
        raise PreconditionError("the pipeline requires at least 13 variables")
    if len(Q1) != n:
        raise PreconditionError("forms must have equal dimension")
    if oracle is None:
        oracle = Oracle()
    transcript: list[tuple[str, str]] = []
    orig = (Q0, Q1)

    Q0s, Q1s, shift = pencil_basepoint_shift(Q0, Q1)
    if not shift.is_identity:
        transcript.append(("basepoint-shift", str(shift.coeffs)))
    rep = check_hypothesis_h(Q0s, Q1s)
    if not rep.ok:
        raise HypothesisError(rep.reason)
    solv = is_real_solvable(Q0s, Q1s)
    if not solv.solvable_over_R:
        raise RealInsolvableError(solv.definite_lambda, solv.definite_signature)

    lam0 = _balanced_shift_coefficient(Q0s, Q1s)
    Q0b = mat_add(Q0s, mat_scale(lam0, Q1s)) if lam0 != 0 else Q0s
    transcript.append(("balance-shift", str(lam0)))

    y = oracle.isotropic(Q0b)
    transcript.append(("isotropic-y", _vec_str(y)))
    c1 = evaluate_form(Q1s, y)
    if c1 == 0:
        return _certify(orig, y, transcript)
    negated = c1 < 0
    Q1w = mat_scale(-1, Q1s) if negated else Q1s
    transcript.append(("q1-negated", str(negated)))

    z, bits_used = _real_to_rational_phase(Q0b, Q1w, oracle, policy)
    transcript.append(("rational-negative", _vec_str(z)))
    transcript.append(("phase-bits", str(bits_used)))

    y, z, extra = _repair_nonorthogonal(Q0b, Q1w, y, z, random.Random(rng_seed))
    if extra is not None:
        return _certify(orig, extra, transcript)
    transcript.append(("witt-pair", _vec_str(y) + " | " + _vec_str(z)))

    x = _final_descent(Q0b, Q1w, y, z, oracle)
    return _certify(orig, x, transcript)


def _balanced_shift_coefficient(Q0s: Matrix, Q1s: Matrix) -> Fraction:
    """Balanced member coefficient lam0 for Q0 + lam0*Q1, of small height.

    The dichotomy guarantees existence; among the balanced values, simple
    candidates are preferred to keep later oracle searches easy.
    """
    lam0 = find_balanced_lambda(Q1s, Q0s)
    delta = pencil_det_poly(Q1s, Q0s)
    ip = int_primitive(delta)
    cands = [Fraction(k) for k in (0, 1, -1, 2, -2, 3, -3, 4, -4)]
    cands += [Fraction(1, 2), Fraction(-1, 2), Fraction(3, 2), Fraction(-3, 2)]
    for c in cands:
        if int_poly_sign_at(ip, c) != 0 and abs(d_value(Q1s, Q0s, c)) <= 1:
            return c
    return lam0


def _real_to_rational_phase(Q0b, Q1w, oracle, policy) -> tuple[RatVec, int]:
    data = prepare_real_data(Q0b, Q1w)
    for bits in policy.ladder():
        try:
            with precision(bits):
                point = _real_point_at(Q0b, Q1w, data, residual_bits=40)
                zminus = pos_neg(Q0b, Q1w, point.y)
                z = rational_isotropic_near(Q0b, Q1w, zminus, oracle)
                return z, bits
        except NeedsMorePrecision:
            continue
    raise PrecisionExhaustedError(
        f"real-to-rational phase failed below {policy.max_bits} bits"
    )


def _repair_nonorthogonal(Q0b, Q1w, y, z, rng: random.Random):
    """Ensure the two isotropic witnesses are non-orthogonal for q0 while
    keeping the sign split q1(y) > 0 > q1(z); an exact common zero found
    on the way is returned immediately."""
    box = 8
    for _ in range(1000):
        if bilinear(Q0b, y, z) != 0:
            return y, z, None
        yp = tuple(Fraction(rng.randint(-box, box)) for _ in range(len(y)))
        pair = bilinear(Q0b, y, yp)
        if pair == 0:
            box *= 2
            continue
        w = primitive_vector(
            tuple(a - (evaluate_form(Q0b, yp) / (2 * pair)) * b for a, b in zip(yp, y))
        )
        val = evaluate_form(Q1w, w)
        if val == 0:
            return y, z, w
        if val > 0:
            y = w
        else:
            z = w
    raise InternalInvariantError("non-orthogonality repair loop exceeded its cap")


def _final_descent(Q0b, Q1w, y, z, oracle: Oracle) -> RatVec:
    n = len(Q0b)
    cols = tuple(zip(vec_mat(y, Q0b), vec_mat(z, Q0b)))
    basis = saturated_left_kernel(cols)
    if len(basis) != n - 2:
        raise InternalInvariantError("orthogonal complement has the wrong dimension")
    p1_rows = list(basis) + [y, z]
    perm = list(range(n))
    perm[0], perm[n - 2] = perm[n - 2], perm[0]
    perm[1], perm[n - 1] = perm[n - 1], perm[1]
    p_rows = [p1_rows[perm[i]] for i in range(n)]
    P = tuple(p_rows)
    if determinant(P) == 0:
        raise InternalInvariantError("assembled basis is singular")
    q0_2 = congruence(P, Q0b)
    _check_pair_block(q0_2)
    q2 = tuple(tuple(q0_2[i][j] for j in range(2, n)) for i in range(2, n))
    chain = hyperbolic_chain(q2, oracle)
    P = mat_mul(_embed2(chain, n), P)
    q0_3 = congruence(P, Q0b)
    q1_3 = congruence(P, Q1w)
    idxs = (1, 2, 4, 6, 8) if q1_3[2][2] > 0 else (0, 2, 4, 6, 8)
    for a in idxs:
        for b in idxs:
            if q0_3[a][b] != 0:
                raise InternalInvariantError("restricted subspace is not totally isotropic")
    # re-basis the totally isotropic subspace by a small saturated lattice
    # basis; the restricted form shrinks drastically while the subspace,
    # hence the contract, is unchanged
    span = tuple(P[i] for i in idxs)
    B = _reduced_subspace_basis(span)
    for row in congruence(B, Q0b):
        if any(e != 0 for e in row):
            raise InternalInvariantError("reduced basis left the isotropic subspace")
    M = congruence(B, Q1w)
    sig = inertia(M)
    if sig.r == 5 or sig.s == 5:
        raise InternalInvariantError("restricted form is definite; sign choice broken")
    if determinant(M) == 0:
        x5 = kernel_vector(M)
    else:
        x5 = oracle.isotropic(M)
    return primitive_vector(vec_mat(tuple(x5), B))


def _reduced_subspace_basis(span):
    """Small integer basis of the saturation of the rational row span."""
    from .linalg import left_nullspace_basis, transpose
    from .oracle import lll_reduce_gram

    comp = left_nullspace_basis(transpose(span))
    sat = saturated_left_kernel(tuple(zip(*comp)))
    if len(sat) != len(span):
        raise InternalInvariantError("saturation changed the subspace dimension")
    gram = tuple(tuple(sum(a * b for a, b in zip(u, v)) for v in sat) for u in sat)
    U = lll_reduce_gram(gram)
    return mat_mul(U, sat)


def _check_pair_block(q0_2: Matrix) -> None:
    n = len(q0_2)
    if q0_2[0][0] != 0 or q0_2[1][1] != 0 or q0_2[0][1] == 0:
        raise InternalInvariantError("witness plane block is malformed")
    for j in range(2, n):
        if q0_2[0][j] != 0 or q0_2[1][j] != 0:
            raise InternalInvariantError("witness plane is not split off exactly")


def _embed2(inner: Matrix, n: int) -> Matrix:
    rows = [tuple((Fraction(1) if i == j else Fraction(0)) for j in range(n)) for i in range(2)]
    for r in inner:
        rows.append((Fraction(0),) * 2 + tuple(r))
    return tuple(rows)


def _vec_str(v) -> str:
    return "(" + ", ".join(str(e) for e in v) + ")"


def _certify(orig, x: RatVec, transcript) -> SolutionCertificate:
    Q0o, Q1o = orig
    x = primitive_vector(x)
    r0 = evaluate_form(Q0o, x)
    r1 = evaluate_form(Q1o, x)
    if r0 != 0 or r1 != 0:
        raise InternalInvariantError("pipeline produced a non-solution; this is a bug")
    if all(e == 0 for e in x):
        raise InternalInvariantError("pipeline produced the zero vector")
    transcript = tuple(transcript) + (("solution", _vec_str(x)),)
    return SolutionCertificate(x, r0, r1, transcript)
