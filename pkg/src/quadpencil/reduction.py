"""Congruence-transform toolkit: completing an isotropic vector to a
hyperbolic plane, iterated hyperbolic splitting, and the two-form variants.

Every operation returns the invertible transform P acting by Q -> P Q P^T;
transforms compose on the left.  The algorithms run unchanged over exact
rationals and over certified balls; nonzero tests go through certified
signs in ball mode and escalate to the precision driver when ambiguous.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

from .balls import EXACT_ZERO, RealBall, cert_sign, exact_one, is_ball, known_zero
from .errors import (
    HypothesisError,
    InternalInvariantError,
    NeedsMorePrecision,
    PreconditionError,
)
from .linalg import (
    Matrix,
    congruence,
    determinant,
    evaluate_form,
    inertia,
    mat_mul,
    primitive_vector,
    sym_matrix,
    vec_content,
)


def _consts(M) -> tuple:
    """(zero, one) constants matching the scalar domain of M's entries."""
    for row in M:
        for e in row:
            if is_ball(e):
                return EXACT_ZERO, exact_one()
    return Fraction(0), Fraction(1)


def _identity_like(n: int, zero, one):
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def _tuples(rows):
    return tuple(tuple(row) for row in rows)


def _is_exact_mode(M) -> bool:
    return not any(is_ball(e) for row in M for e in row)


def _nonzero(x) -> bool:
    """Certified nonzero test; raises NeedsMorePrecision on ambiguity."""
    if known_zero(x):
        return False
    return cert_sign(x) != 0


def _first_nonzero_col(row, start: int) -> int | None:
    """Smallest index >= start whose entry is certifiably nonzero."""
    for j in range(start, len(row)):
        if known_zero(row[j]):
            continue
        if cert_sign(row[j]) != 0:
            return j
    return None


def base_witt(Q: Matrix, y) -> Matrix:
    """Complete an isotropic y to a basis: first row y, entry (1,1) of the
    image zero and (1,2) nonzero."""
    n = len(Q)
    if len(y) != n:
        raise PreconditionError("vector length mismatch")
    exact = _is_exact_mode(Q) and not any(is_ball(e) for e in y)
    if exact:
        y = tuple(Fraction(e) for e in y)
        if all(e == 0 for e in y):
            raise PreconditionError("vector must be nonzero")
        if evaluate_form(Q, y) != 0:
            raise PreconditionError("vector is not isotropic")
        pivot = next(i for i, e in enumerate(y) if e != 0)
    else:
        res = evaluate_form(Q, y)
        if is_ball(res) and not res.exact_zero and res.certified_sign() is not None:
            raise PreconditionError("vector is provably not isotropic")
        pivot = None
        best = None
        for i, e in enumerate(y):
            if known_zero(e):
                continue
            mag = e.mag_upper() if is_ball(e) else abs(e)
            if best is None or mag > best:
                best, pivot = mag, i
        if pivot is None or not _nonzero(y[pivot]):
            raise NeedsMorePrecision("cannot certify a nonzero coordinate of y")
    zero, one = _consts(Q)
    rows = [list(y)]
    for j in range(n):
        if j != pivot:
            rows.append([one if c == j else zero for c in range(n)])
    image = congruence(_tuples(rows), Q)
    i = _first_nonzero_col(image[0], 1)
    if i is None:
        raise InternalInvariantError("isotropic row pairs with no basis vector")
    if i != 1:
        rows[1], rows[i] = rows[i], rows[1]
    return _tuples(rows)


def clear_first_row(Q: Matrix) -> Matrix:
    """With (1,1)=0 and (1,2)!=0, bring row 1 of the image to (0,1,0,...,0)."""
    n = len(Q)
    if not known_zero(Q[0][0]) and (not _is_exact_mode(Q) or Q[0][0] != 0):
        if _is_exact_mode(Q):
            raise PreconditionError("entry (1,1) must vanish")
    a12 = Q[0][1]
    if not _nonzero(a12):
        raise PreconditionError("entry (1,2) must be nonzero")
    zero, one = _consts(Q)
    rows = _identity_like(n, zero, one)
    rows[0][0] = one / a12
    for i in range(2, n):
        rows[i][1] = -(Q[i][0] / a12)
    return _tuples(rows)


def split_h(Q: Matrix) -> Matrix:
    """With first row (0,1,0,...,0), split an exact hyperbolic plane off."""
    n = len(Q)
    if _is_exact_mode(Q):
        expect = [Fraction(0), Fraction(1)] + [Fraction(0)] * (n - 2)
        if list(Q[0]) != expect:
            raise PreconditionError("first row must be (0,1,0,...,0)")
    zero, one = _consts(Q)
    pa = _identity_like(n, zero, one)
    for i in range(1, n):
        pa[i][0] = -Q[i][1]
    pa = _tuples(pa)
    q3 = congruence(pa, Q)
    s = _identity_like(n, zero, one)
    q322 = q3[1][1]
    for c in range(n):
        s[1][c] = 2 * s[1][c] - q322 * s[0][c]
    s[0][0] = one / 2
    return mat_mul(_tuples(s), pa)


def reduce_qf(Q: Matrix, y) -> Matrix:
    """Compose the Witt completion, row clearing and plane splitting so the
    image is exactly H + Q2; det is preserved up to a nonzero square."""
    p1 = base_witt(Q, y)
    q1 = congruence(p1, Q)
    p2 = clear_first_row(q1)
    q2 = congruence(p2, q1)
    p3 = split_h(q2)
    p = mat_mul(p3, mat_mul(p2, p1))
    if _is_exact_mode(p):
        p = _rebalance_split_rows(p)
    return p


def _rebalance_split_rows(P: Matrix) -> Matrix:
    """Entry-growth control: shrink trailing rows by their content when that
    makes them smaller (never scale up, which would inflate the transform
    determinant and with it every later block), and balance the hyperbolic
    pair by a reciprocal power of two (keeps the H block exact)."""
    rows = [list(r) for r in P]
    for i in range(2, len(rows)):
        c = _row_content(rows[i])
        if c is not None and c > 1:
            rows[i] = [e / c for e in rows[i]]
    c1, c2 = _row_content(rows[0]), _row_content(rows[1])
    if c1 and c2:
        k = (_log2_approx(c2) - _log2_approx(c1)) // 2
        if k:
            t = Fraction(2) ** k
            rows[0] = [e * t for e in rows[0]]
            rows[1] = [e / t for e in rows[1]]
    return _tuples(rows)


def _row_content(row) -> Fraction | None:
    if all(e == 0 for e in row):
        return None
    return vec_content(tuple(row))


def _log2_approx(f: Fraction) -> int:
    return abs(f.numerator).bit_length() - f.denominator.bit_length()


def mordell3(Q: Matrix) -> Matrix:
    """With (1,1)=0 and (1,3)!=0, bring row 1 of the image to (0,0,1,0,...,0)
    without touching the first two columns of the transform."""
    n = len(Q)
    if n < 3:
        raise PreconditionError("need at least three variables")
    a13 = Q[0][2]
    if not _nonzero(a13):
        raise PreconditionError("entry (1,3) must be nonzero")
    if _is_exact_mode(Q) and Q[0][0] != 0:
        raise PreconditionError("entry (1,1) must vanish")
    zero, one = _consts(Q)
    rows = _identity_like(n, zero, one)
    rows[2][2] = one / a13
    rows[1][2] = -(Q[0][1] / a13)
    for i in range(3, n):
        rows[i][2] = -(Q[i][0] / a13)
    return _tuples(rows)


def double_witt(Q0: Matrix, Q1: Matrix, z) -> Matrix:
    """Transform sending the first rows of the two images to (0,1,0,...,0)
    and (0,0,1,0,...,0); z must be a common zero of both forms."""
    n = len(Q0)
    if n < 3:
        raise PreconditionError("need at least three variables")
    p = base_witt(Q0, z)
    q0p = congruence(p, Q0)
    p = mat_mul(clear_first_row(q0p), p)
    q1p = congruence(p, Q1)
    i = _scan_row_from(q1p[0], 2)
    if i is None:
        raise HypothesisError("common zero is a singular point of the intersection")
    if i != 2:
        rows = [list(r) for r in p]
        rows[2], rows[i] = rows[i], rows[2]
        p = _tuples(rows)
        q1p = congruence(p, Q1)
    r = mordell3(q1p)
    return mat_mul(r, p)


def _scan_row_from(row, start: int) -> int | None:
    for j in range(start, len(row)):
        if known_zero(row[j]):
            continue
        s = row[j].certified_sign() if is_ball(row[j]) else ((row[j] > 0) - (row[j] < 0))
        if s is None:
            raise NeedsMorePrecision("row scan entry straddles zero")
        if s != 0:
            return j
    return None


def hyperbolic_chain(Q: Matrix, oracle, compress: bool = True) -> Matrix:
    """Split hyperbolic planes off a balanced rational form until the
    remainder has size 3 (odd n) or 4 (even n).

    The oracle provides isotropic vectors for the successive remainders;
    an optional lattice-reduction pass keeps the trailing block small.
    """
    Q = sym_matrix(Q)
    n = len(Q)
    if n < 5:
        raise PreconditionError("chain splitting needs at least five variables")
    if determinant(Q) == 0:
        raise PreconditionError("form must be nondegenerate")
    if not inertia(Q).is_balanced:
        raise PreconditionError("form must be balanced")
    from .linalg import identity
    from .oracle import lll_reduce_gram

    P = identity(n)
    work = Q
    i = 0
    while n - i >= 5:
        sub = tuple(tuple(work[r][c] for c in range(i, n)) for r in range(i, n))
        if compress:
            U = lll_reduce_gram(_abs_majorant(sub))
            C = _embed(identity(i), U, n)
            P = mat_mul(C, P)
            work = congruence(C, work)
            sub = tuple(tuple(work[r][c] for c in range(i, n)) for r in range(i, n))
        z = oracle.isotropic(sub)
        p_sub = _split_plane_unimodular(sub, z)
        C = _embed(identity(i), p_sub, n)
        P = mat_mul(C, P)
        work = congruence(C, work)
        _assert_plane(work, i)
        i += 2
    return P


def _split_plane_unimodular(Q: Matrix, z) -> Matrix:
    """Split H off using an integer near-unimodular completion of z.

    The pairing partner is chosen by a Bezout combination achieving the
    gcd of z*Q, and the complement is a saturated integer kernel; only the
    final normalization divides by that gcd, which keeps determinant and
    entry growth across chain iterations tame.
    """
    from .linalg import saturated_left_kernel, vec_mat

    n = len(Q)
    z = primitive_vector(tuple(Fraction(e) for e in z))
    zq = vec_mat(z, Q)
    den = 1
    for e in zq:
        den = den * e.denominator // gcd(den, e.denominator)
    c = [int(e * den) for e in zq]
    u = _bezout_combination(c)
    if u is None:
        raise PreconditionError("isotropic vector pairs with nothing; form degenerate?")
    uq = vec_mat(tuple(Fraction(e) for e in u), Q)
    kernel = saturated_left_kernel(tuple(zip(zq, uq)))
    if len(kernel) != n - 2:
        raise InternalInvariantError("plane complement has the wrong dimension")
    rows = [list(z), [Fraction(e) for e in u]] + [list(r) for r in kernel]
    T = _tuples(rows)
    qt = congruence(T, Q)
    p2 = clear_first_row(qt)
    q2 = congruence(p2, qt)
    p3 = split_h(q2)
    p = mat_mul(p3, mat_mul(p2, T))
    if _is_exact_mode(p):
        p = _rebalance_split_rows(p)
    return p


def _bezout_combination(c: list[int]) -> list[int] | None:
    """Integer u with sum(u_i c_i) = gcd(c) > 0."""
    n = len(c)
    g = 0
    coeffs: list[int] = []
    for ci in c:
        if g == 0:
            coeffs = [0] * len(coeffs) + [1 if ci > 0 else (-1 if ci < 0 else 0)]
            g = abs(ci)
            continue
        gg, x, y = _ext_gcd(g, ci)
        coeffs = [k * x for k in coeffs] + [y]
        g = gg
    if g == 0:
        return None
    return coeffs + [0] * (n - len(coeffs))


def _ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    if b == 0:
        return (abs(a), 1 if a >= 0 else -1, 0)
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def _abs_majorant(Q: Matrix) -> Matrix:
    from .linalg import diagonalize_congruence, mat_inverse

    S, d = diagonalize_congruence(Q)
    Sinv = mat_inverse(S)
    absd = tuple(
        tuple(abs(d[i]) if i == j else Fraction(0) for j in range(len(Q)))
        for i in range(len(Q))
    )
    return congruence(Sinv, absd)


def _embed(top: Matrix, bottom: Matrix, n: int) -> Matrix:
    k = len(top)
    rows = []
    for i in range(k):
        rows.append(tuple(top[i]) + (Fraction(0),) * (n - k))
    for i in range(n - k):
        rows.append((Fraction(0),) * k + tuple(bottom[i]))
    return _tuples(rows)


def _assert_plane(Q: Matrix, i: int) -> None:
    n = len(Q)
    ok = Q[i][i] == 0 and Q[i + 1][i + 1] == 0 and Q[i][i + 1] == 1
    if ok:
        for j in range(i + 2, n):
            if Q[i][j] != 0 or Q[i + 1][j] != 0:
                ok = False
                break
    if not ok:
        raise InternalInvariantError("hyperbolic plane is not exact after splitting")


def pin_row_pattern(M, row: int, pattern: dict[int, Fraction]):
    """Overwrite structurally known entries of a symmetric ball matrix.

    Every position of `pattern` in the given row (and its mirror) is
    replaced by the exact value it provably equals; the computed enclosure
    must contain that value, otherwise a broken guarantee is reported.
    """
    rows = [list(r) for r in M]
    n = len(rows)
    for j in range(n):
        if j == row:
            continue
        target = pattern.get(j, Fraction(0))
        cur = rows[row][j]
        if is_ball(cur):
            if not cur.contains(target):
                raise InternalInvariantError(
                    f"entry ({row},{j}) should be {target} but encloses something else"
                )
            val = EXACT_ZERO if target == 0 else RealBall.from_fraction(target)
        else:
            if cur != target:
                raise InternalInvariantError(f"entry ({row},{j}) is {cur}, expected {target}")
            val = target
        rows[row][j] = val
        rows[j][row] = val
    diag_target = pattern.get(row)
    if diag_target is not None:
        cur = rows[row][row]
        if is_ball(cur):
            if not cur.contains(diag_target):
                raise InternalInvariantError("diagonal pin misses its enclosure")
            rows[row][row] = EXACT_ZERO if diag_target == 0 else RealBall.from_fraction(diag_target)
        else:
            if cur != diag_target:
                raise InternalInvariantError("diagonal pin mismatch")
    return _tuples(rows)
