"""Simultaneous block diagonalization over certified reals and the
construction of a nonzero real common zero of the pair.

The diagonalizing basis is assembled from kernels of lam*Q0 + Q1 at the
roots of the pencil determinant: exact rational kernels at rational roots,
ball kernels at irrational ones, and real/imaginary parts of a certified
complex kernel for each conjugate pair.  A closed-form solver then handles
each shape of the block spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import gmpy2
import mpmath
from gmpy2 import mpfr

from .balls import (
    EXACT_ZERO,
    ComplexBall,
    DEFAULT_POLICY,
    PrecisionPolicy,
    RealBall,
    ball_kernel,
    cert_sign,
    exact_one,
    generic_sqrt,
    get_precision,
    is_ball,
    known_zero,
    precision,
    refine_root,
)
from .errors import (
    InternalInvariantError,
    NeedsMorePrecision,
    PrecisionExhaustedError,
    PreconditionError,
)
from .linalg import (
    Matrix,
    congruence,
    evaluate_form,
    kernel_vector,
    pencil_det_poly,
    pencil_member,
    sym_matrix,
    vec_mat,
)
from .pencil import require_hypothesis
from .roots import (
    IsolatingInterval,
    degree,
    isolate_real_roots,
    poly_derivative,
)


@dataclass(frozen=True)
class BlockDiagPair:
    """Result of the simultaneous reduction: P Q0 P^T = diag(+-1) and
    P Q1 P^T block diagonal with m singletons then trace-zero 2x2 blocks."""

    P: tuple
    d0: tuple[int, ...]
    D1: tuple
    m: int
    layout: tuple[tuple[int, int], ...]

    @property
    def n(self) -> int:
        return len(self.d0)

    def D0(self) -> tuple:
        n = self.n
        return tuple(
            tuple(Fraction(self.d0[i]) if i == j else Fraction(0) for j in range(n))
            for i in range(n)
        )


@dataclass(frozen=True)
class PencilRealData:
    """Exact data shared across precision restarts."""

    delta: tuple
    roots: tuple[IsolatingInterval, ...]
    m: int


def prepare_real_data(Q0: Matrix, Q1: Matrix) -> PencilRealData:
    require_hypothesis(Q0, Q1)
    delta = pencil_det_poly(Q0, Q1)
    roots = isolate_real_roots(delta)
    return PencilRealData(delta, roots, len(roots))


def simultaneous_block_diag(
    Q0: Matrix, Q1: Matrix, prepared: PencilRealData | None = None
) -> BlockDiagPair:
    """Certified simultaneous reduction at the current working precision."""
    Q0 = sym_matrix(Q0)
    Q1 = sym_matrix(Q1)
    data = prepared if prepared is not None else prepare_real_data(Q0, Q1)
    n = len(Q0)
    m = data.m
    bits = get_precision()
    rows: list[tuple] = []
    for iv in data.roots:
        if iv.exact_root is not None:
            rows.append(kernel_vector(pencil_member(iv.exact_root, Q0, Q1)))
        else:
            lam = refine_root(iv, bits)
            rows.append(ball_kernel(lam, Q0, Q1))
    for lam in _certified_complex_pairs(data.delta, (n - m) // 2, bits):
        v = ball_kernel(lam, Q0, Q1)
        rows.append(tuple(e.re for e in v))
        rows.append(tuple(e.im for e in v))
    P = tuple(rows)
    A = _pin_block_structure(congruence(P, Q0), m, n)
    B = _pin_block_structure(congruence(P, Q1), m, n)

    d0: list[int] = []
    d1_diag: list = []
    d1_blocks: list[tuple] = []
    new_rows = [list(r) for r in P]
    for i in range(m):
        aii = A[i][i]
        s = cert_sign(aii)
        if s == 0:
            raise InternalInvariantError("diagonal entry of the reduced form is zero")
        scale = 1 / generic_sqrt(abs(aii))
        new_rows[i] = [scale * e for e in new_rows[i]]
        d0.append(s)
        d1_diag.append(B[i][i] / abs(aii))
    k = m
    while k < n:
        alpha, beta = A[k][k], A[k][k + 1]
        h = (alpha * alpha + beta * beta).sqrt() if is_ball(alpha) else generic_sqrt(
            alpha * alpha + beta * beta
        )
        if cert_sign(h) <= 0:
            raise NeedsMorePrecision("cannot certify a nonzero 2x2 block")
        mid_sign = _rough_sign(alpha)
        if mid_sign >= 0:
            u1, u2 = alpha + h, beta
        else:
            u1, u2 = beta, h - alpha
        nrm2 = u1 * u1 + u2 * u2
        den = generic_sqrt(nrm2) * generic_sqrt(h) if not is_ball(nrm2) else (
            nrm2.sqrt() * h.sqrt()
        )
        if cert_sign(den) <= 0:
            raise NeedsMorePrecision("degenerate rotation denominator")
        r1 = (u1 / den, u2 / den)
        r2 = (-(u2 / den), u1 / den)
        w_k, w_k1 = new_rows[k], new_rows[k + 1]
        new_rows[k] = [r1[0] * a + r1[1] * b for a, b in zip(w_k, w_k1)]
        new_rows[k + 1] = [r2[0] * a + r2[1] * b for a, b in zip(w_k, w_k1)]
        blk = ((B[k][k], B[k][k + 1]), (B[k][k + 1], B[k + 1][k + 1]))
        c_new = _rot_entry(r1, r1, blk)
        d_new = _rot_entry(r1, r2, blk)
        d0.extend((1, -1))
        d1_blocks.append((c_new, d_new))
        k += 2

    D1 = _assemble_d1(m, n, d1_diag, d1_blocks)
    layout = tuple((i, 1) for i in range(m)) + tuple((m + 2 * t, 2) for t in range((n - m) // 2))
    return BlockDiagPair(tuple(tuple(r) for r in new_rows), tuple(d0), D1, m, layout)


def _rough_sign(x) -> int:
    if is_ball(x):
        if x.exact_zero:
            return 0
        return 1 if x.mid >= 0 else -1
    return 1 if x >= 0 else -1


def _rot_entry(ra, rb, blk):
    return (
        ra[0] * (blk[0][0] * rb[0] + blk[0][1] * rb[1])
        + ra[1] * (blk[1][0] * rb[0] + blk[1][1] * rb[1])
    )


def _pin_block_structure(M, m: int, n: int):
    """Structural zeros for off-block entries; proven by root orthogonality."""
    rows = [list(r) for r in M]
    for i in range(n):
        for j in range(n):
            if i == j or _same_block(i, j, m):
                continue
            cur = rows[i][j]
            if is_ball(cur):
                if not cur.contains(0):
                    raise InternalInvariantError(
                        f"off-block entry ({i},{j}) does not enclose zero"
                    )
                rows[i][j] = EXACT_ZERO
            else:
                if cur != 0:
                    raise InternalInvariantError(f"off-block entry ({i},{j}) is {cur} != 0")
    # share the single symmetric node inside each 2x2 block
    k = m
    while k < n:
        rows[k + 1][k] = rows[k][k + 1]
        k += 2
    return tuple(tuple(r) for r in rows)


def _same_block(i: int, j: int, m: int) -> bool:
    if i >= m and j >= m:
        return (i - m) // 2 == (j - m) // 2
    return i == j


def _assemble_d1(m: int, n: int, diag_entries, blocks):
    zero = EXACT_ZERO if _any_ball(diag_entries, blocks) else Fraction(0)
    rows = [[zero] * n for _ in range(n)]
    for i, e in enumerate(diag_entries):
        rows[i][i] = e
    for t, (c, d) in enumerate(blocks):
        k = m + 2 * t
        rows[k][k] = c
        rows[k][k + 1] = d
        rows[k + 1][k] = d
        rows[k + 1][k + 1] = -c
    return tuple(tuple(r) for r in rows)


def _any_ball(diag_entries, blocks) -> bool:
    return any(is_ball(e) for e in diag_entries) or any(
        is_ball(c) or is_ball(d) for c, d in blocks
    )


# ----------------------------------------------------------------------
# certified complex roots (one representative per conjugate pair)
# ----------------------------------------------------------------------


def _certified_complex_pairs(delta, count: int, bits: int) -> list[ComplexBall]:
    if count == 0:
        return []
    seeds = _upper_half_seeds(delta, count)
    dp = poly_derivative(delta)
    work = bits + 48
    enclosures: list[ComplexBall] = []
    with precision(work):
        coeffs = [RealBall.from_fraction(c) for c in delta]
        dcoeffs = [RealBall.from_fraction(c) for c in dp]
        for seed in seeds:
            z = _newton_polish(delta, dp, seed, work)
            enclosures.append(_krawczyk_certify(coeffs, dcoeffs, z, bits))
    _check_disjoint_upper(enclosures)
    enclosures.sort(key=lambda cb: (float(cb.re.mid), float(cb.im.mid)))
    return enclosures


def _upper_half_seeds(delta, count: int) -> list[complex]:
    n = degree(delta)
    dps = 30 + 2 * n
    for _ in range(4):
        with mpmath.workdps(dps):
            cs = [mpmath.mpf(c.numerator) / mpmath.mpf(c.denominator) for c in reversed(delta)]
            try:
                rts = mpmath.polyroots(cs, maxsteps=300, extraprec=160)
            except Exception:
                dps *= 2
                continue
        upper = [complex(r) for r in rts if mpmath.im(r) > 0]
        if len(upper) == count:
            return sorted(upper, key=lambda z: (z.real, z.imag))
        dps *= 2
    raise NeedsMorePrecision("could not separate complex conjugate root pairs")


def _newton_polish(delta, dp, seed: complex, work: int):
    ctx = gmpy2.context(precision=work)
    z = gmpy2.mpc(seed.real, seed.imag, precision=work)
    cs = [gmpy2.mpc(mpfr(c.numerator, work)) / gmpy2.mpc(mpfr(c.denominator, work)) for c in delta]
    ds = [gmpy2.mpc(mpfr(c.numerator, work)) / gmpy2.mpc(mpfr(c.denominator, work)) for c in dp]

    def horner(coeffs, x):
        acc = coeffs[-1]
        for c in reversed(coeffs[:-1]):
            acc = ctx.add(ctx.mul(acc, x), c)
        return acc

    tol = mpfr(2) ** (-(work - 16))
    for _ in range(120):
        pv = horner(cs, z)
        dv = horner(ds, z)
        if dv == 0:
            break
        step = ctx.div(pv, dv)
        z = ctx.sub(z, step)
        if abs(step) <= tol * max(mpfr(1), abs(z)):
            break
    return z


def _krawczyk_certify(coeffs, dcoeffs, z, bits: int) -> ComplexBall:
    z0 = ComplexBall(RealBall(z.real, mpfr(0)), RealBall(z.imag, mpfr(0)))
    pz = _horner_ball(coeffs, z0)
    dz = _horner_ball(dcoeffs, z0)
    newton = pz / dz
    base = max(float(newton.mag_upper()) * 16, 2.0 ** (-(2 * bits)))
    rho = base
    for _ in range(40):
        disc = ComplexBall(
            RealBall(z.real, mpfr(rho)), RealBall(z.imag, mpfr(rho))
        )
        dD = _horner_ball(dcoeffs, disc)
        try:
            K = z0 - pz / dz + (ComplexBall.from_real(1) - dD / dz) * (disc - z0)
        except NeedsMorePrecision:
            rho *= 4
            continue
        if _strictly_inside(K, disc):
            return disc
        rho *= 4
        if rho > 1e30:
            break
    raise NeedsMorePrecision("complex root certification failed at this precision")


def _horner_ball(coeffs, x: ComplexBall) -> ComplexBall:
    acc = ComplexBall.from_real(coeffs[-1])
    for c in reversed(coeffs[:-1]):
        acc = acc * x + ComplexBall.from_real(c)
    return acc


def _strictly_inside(K: ComplexBall, D: ComplexBall) -> bool:
    klo, khi = K.re.bounds_fraction()
    dlo, dhi = D.re.bounds_fraction()
    if not (dlo < klo and khi < dhi):
        return False
    klo, khi = K.im.bounds_fraction()
    dlo, dhi = D.im.bounds_fraction()
    return dlo < klo and khi < dhi


def _check_disjoint_upper(encls: list[ComplexBall]) -> None:
    for e in encls:
        lo, _ = e.im.bounds_fraction()
        if lo <= 0:
            raise NeedsMorePrecision("complex enclosure touches the real axis")
    for i in range(len(encls)):
        for j in range(i + 1, len(encls)):
            a, b = encls[i], encls[j]
            re_disjoint = a.re.bounds_fraction()[1] < b.re.bounds_fraction()[0] or b.re.bounds_fraction()[1] < a.re.bounds_fraction()[0]
            im_disjoint = a.im.bounds_fraction()[1] < b.im.bounds_fraction()[0] or b.im.bounds_fraction()[1] < a.im.bounds_fraction()[0]
            if not (re_disjoint or im_disjoint):
                raise NeedsMorePrecision("complex enclosures overlap")


# ----------------------------------------------------------------------
# diagonal view and the closed-form solvers
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class DiagonalPairView:
    """Both forms diagonal: q0 with +-1 entries a, q1 with entries b."""

    a: tuple[int, ...]
    b: tuple

    def __post_init__(self):
        if len(self.a) != len(self.b):
            raise PreconditionError("coefficient lists differ in length")
        if any(x not in (1, -1) for x in self.a):
            raise PreconditionError("q0 coefficients must be +-1")

    @staticmethod
    def from_blockdiag(bdp: BlockDiagPair) -> "DiagonalPairView":
        if bdp.m != bdp.n:
            raise PreconditionError("view requires all roots real")
        return DiagonalPairView(bdp.d0, tuple(bdp.D1[i][i] for i in range(bdp.n)))

    def plus_indices(self) -> tuple[int, ...]:
        return tuple(i for i, x in enumerate(self.a) if x == 1)

    def minus_indices(self) -> tuple[int, ...]:
        return tuple(i for i, x in enumerate(self.a) if x == -1)


def _cert_lt(x, y) -> bool:
    """Certified strict x < y over mixed scalars."""
    return cert_sign(y - x) > 0


def _cert_le(x, y) -> bool:
    diff = y - x
    if known_zero(diff):
        return True
    return cert_sign(diff) >= 0


def _arg_extreme(view: DiagonalPairView, idxs, want_max: bool) -> int:
    best = idxs[0]
    for i in idxs[1:]:
        diff = view.b[i] - view.b[best]
        if known_zero(diff):
            continue
        s = cert_sign(diff)
        if (s > 0) == want_max and s != 0:
            best = i
    return best


def lemma_positive_definite_exists(view: DiagonalPairView) -> bool:
    """Some real lambda makes lambda*q0 + q1 positive definite."""
    plus, minus = view.plus_indices(), view.minus_indices()
    if not plus and not minus:
        raise PreconditionError("empty form")
    if not minus:
        return True
    if not plus:
        return True
    m_plus = view.b[_arg_extreme(view, plus, want_max=False)]
    m_minus = view.b[_arg_extreme(view, minus, want_max=False)]
    return _cert_lt(-m_minus, m_plus)


def lemma_real_solvable(view: DiagonalPairView) -> bool:
    """The diagonal system has a nonzero real solution."""
    plus, minus = view.plus_indices(), view.minus_indices()
    if not plus or not minus:
        return False
    m_plus = view.b[_arg_extreme(view, plus, want_max=False)]
    M_plus = view.b[_arg_extreme(view, plus, want_max=True)]
    m_minus = view.b[_arg_extreme(view, minus, want_max=False)]
    M_minus = view.b[_arg_extreme(view, minus, want_max=True)]
    return _cert_le(m_plus, -m_minus) and _cert_le(-M_minus, M_plus)


def solve_all_real(view: DiagonalPairView):
    """Nonzero w with both diagonal forms vanishing; two or three nonzero
    coordinates, one of them exactly 1."""
    if not lemma_real_solvable(view):
        raise PreconditionError("diagonal system has no nonzero real solution")
    a = list(view.a)
    n = len(a)
    flips = 0
    while True:
        plus = [i for i in range(n) if a[i] == 1]
        minus = [i for i in range(n) if a[i] == -1]
        i_m = _arg_extreme(view, plus, want_max=False)
        i_M = _arg_extreme(view, plus, want_max=True)
        b_m, b_M = view.b[i_m], view.b[i_M]
        pick = None
        for k in minus:
            if _cert_le(b_m, -view.b[k]) and _cert_le(-view.b[k], b_M):
                pick = k
                break
        if pick is not None:
            break
        flips += 1
        if flips > 1:
            raise InternalInvariantError("sign flip recurred; solvability was violated")
        a = [-x for x in a]
    b_k = view.b[pick]
    zero = Fraction(0)
    w = [zero] * n
    if known_zero(b_m + b_k):
        w[i_m] = Fraction(1)
        w[pick] = Fraction(1)
        return tuple(w)
    x_m2 = (-b_M - b_k) / (b_m + b_k)
    if is_ball(x_m2):
        one = exact_one()
        x_m = x_m2.sqrt()
        x_k = (x_m * x_m + one * one).sqrt()
        w[i_M] = one
    else:
        x_m = generic_sqrt(x_m2)
        x_k2 = (x_m * x_m) + 1
        x_k = generic_sqrt(x_k2) if not is_ball(x_k2) else x_k2.sqrt()
        w[i_M] = Fraction(1)
    w[i_m] = x_m
    w[pick] = x_k
    return tuple(w)


def solve_mixed(lam1, a, b):
    """Common zero of x^2+y^2-z^2 and lam1*x^2 + a*y^2 - 2b*yz - a*z^2.

    The quadratic in y is solved by the root inside the unit interval,
    computed by a cancellation-free formula; when a = lam1 the solution is
    exactly (1, 0, 1).
    """
    A = a - lam1
    if known_zero(A):
        return (Fraction(1), Fraction(0), Fraction(1))
    if known_zero(b):
        raise PreconditionError("cross coefficient must be nonzero when a != lam1")
    sb = cert_sign(b)
    s2 = A * A + b * b
    s = generic_sqrt(s2) if not is_ball(s2) else s2.sqrt()
    den = s + abs(b)
    y = -(sb * (A / den))
    if is_ball(y):
        one = exact_one()
        x = (one * one - y * y).sqrt()
        return (x, y, one)
    x2 = 1 - y * y
    x = generic_sqrt(x2) if not is_ball(x2) else x2.sqrt()
    return (x, y, Fraction(1))


def solve_two_complex_blocks(a, b, c, d):
    """Common zero of x^2-y^2+z^2-w^2 and a x^2-2b xy-a y^2+c z^2-2d zw-c w^2."""
    if known_zero(b) or known_zero(d):
        raise PreconditionError("cross coefficients must be nonzero")
    eps = cert_sign(b)
    epsp = cert_sign(d)
    x1 = generic_sqrt(abs(d)) if not is_ball(d) else abs(d).sqrt()
    w1 = generic_sqrt(abs(b)) if not is_ball(b) else abs(b).sqrt()
    third = -(eps * epsp) * w1
    return (x1, x1, third, w1)


# ----------------------------------------------------------------------
# the real common zero of a general pair
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class RealPoint:
    y: tuple
    residual0: object
    residual1: object
    bits: int


def real_point(
    Q0: Matrix,
    Q1: Matrix,
    policy: PrecisionPolicy = DEFAULT_POLICY,
    residual_bits: int = 40,
) -> RealPoint:
    """Nonzero real common zero with certified residual enclosures."""
    Q0 = sym_matrix(Q0)
    Q1 = sym_matrix(Q1)
    data = prepare_real_data(Q0, Q1)
    for bits in policy.ladder():
        try:
            with precision(bits):
                return _real_point_at(Q0, Q1, data, residual_bits)
        except NeedsMorePrecision:
            continue
    raise PrecisionExhaustedError("real solution could not be certified within the precision cap")


def _real_point_at(Q0: Matrix, Q1: Matrix, data: PencilRealData, residual_bits: int) -> RealPoint:
    n = len(Q0)
    m = data.m
    bdp = simultaneous_block_diag(Q0, Q1, prepared=data)
    if m == n:
        view = DiagonalPairView.from_blockdiag(bdp)
        w = solve_all_real(view)
    elif m == 0:
        if n < 4:
            raise PreconditionError("all-complex case needs at least four variables")
        c1, d1 = bdp.D1[0][0], bdp.D1[0][1]
        c2, d2 = bdp.D1[2][2], bdp.D1[2][3]
        v4 = solve_two_complex_blocks(c1, -d1, c2, -d2)
        w = tuple(v4) + (Fraction(0),) * (n - 4)
    else:
        if n < 3:
            raise PreconditionError("mixed case needs at least three variables")
        i0 = m - 1
        eps = bdp.d0[i0]
        lam1 = bdp.D1[i0][i0]
        alpha = bdp.D1[m][m]
        beta = bdp.D1[m][m + 1]
        if eps == 1:
            sx, sy, sz = solve_mixed(lam1, alpha, -beta)
            window = {i0: sx, m: sy, m + 1: sz}
        else:
            su, sv, sw = solve_mixed(lam1, -alpha, -beta)
            window = {i0: su, m: sw, m + 1: sv}
        w = tuple(window.get(i, Fraction(0)) for i in range(n))
    y = vec_mat(w, bdp.P)
    res0 = evaluate_form(Q0, y)
    res1 = evaluate_form(Q1, y)
    _require_residual(res0, residual_bits)
    _require_residual(res1, residual_bits)
    return RealPoint(y, res0, res1, get_precision())


def _require_residual(res, residual_bits: int) -> None:
    if is_ball(res):
        if not res.contains(0):
            raise InternalInvariantError("residual enclosure excludes zero")
        if Fraction(*res.rad.as_integer_ratio()) > Fraction(1, 2**residual_bits):
            raise NeedsMorePrecision("residual enclosure is too wide")
    else:
        if res != 0:
            raise InternalInvariantError("exact residual is nonzero")
