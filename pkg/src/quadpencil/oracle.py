"""Isotropic vectors of nondegenerate indefinite rational quadratic forms.

The baseline search is elementary but effective at desk scale: immediate
hits from zero diagonal entries and binary subforms with square
discriminant, lattice-reduction preconditioning of the Gram matrix, exact
congruence diagonalization, then a meet-in-the-middle enumeration over
small-support integer vectors in boxes of doubling radius.  Every result,
including those of a delegated external solver, is re-verified exactly
before being returned.
"""

from __future__ import annotations

import os
import shlex
import subprocess
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, isqrt

from .errors import (
    DefiniteFormError,
    OracleBudgetError,
    OracleExternalError,
)
from .linalg import (
    Matrix,
    RatVec,
    congruence,
    diagonalize_congruence,
    evaluate_form,
    identity,
    kernel_vector,
    left_nullspace_basis,
    mat_inverse,
    mat_mul,
    primitive_vector,
    sym_matrix,
    vec_mat,
)

DEFAULT_BUDGET = 10**7


def _radius_ladder(n: int) -> tuple[int, ...]:
    # small dimensions afford much deeper boxes within the same budget
    if n <= 6:
        return (2, 4, 8, 16, 32, 64, 128, 256, 512, 1024)
    if n <= 9:
        return (2, 4, 8, 16, 32, 64, 128, 256)
    return (2, 4, 8, 16, 32, 64, 128)


@dataclass(frozen=True)
class OracleRequest:
    Q: Matrix
    effort: int = DEFAULT_BUDGET
    allow_external: bool = True


@dataclass(frozen=True)
class OracleResult:
    y: RatVec
    verified: bool


@dataclass
class Oracle:
    """Pluggable isotropic-vector provider used throughout the pipeline."""

    budget: int = DEFAULT_BUDGET
    external_cmd: str | list[str] | None = None
    timeout: float | None = None
    calls: int = field(default=0, repr=False)

    def isotropic(self, Q: Matrix) -> RatVec:
        self.calls += 1
        if self.external_cmd is not None:
            return external_solve(Q, self.external_cmd, self.timeout).y
        return isotropic_vector(OracleRequest(Q, self.budget, False)).y


def isotropic_vector(req: OracleRequest) -> OracleResult:
    """Nonzero rational y with y Q y^T = 0, exactly verified."""
    Q = sym_matrix(req.Q)
    v = _baseline_search(Q, req.effort)
    return OracleResult(_verify(Q, v), True)


def _verify(Q: Matrix, v: RatVec) -> RatVec:
    v = primitive_vector(v)
    if all(e == 0 for e in v):
        raise OracleExternalError("isotropic vector is zero")
    if evaluate_form(Q, v) != 0:
        raise OracleExternalError("vector is not isotropic for the given form")
    return v


# ----------------------------------------------------------------------
# baseline search
# ----------------------------------------------------------------------


def _baseline_search(Q: Matrix, budget: int) -> RatVec:
    n = len(Q)
    Qi = _integer_gram(Q)
    hit = _quick_pass(Qi)
    if hit is not None:
        return hit
    # degenerate forms have their kernel as witness; definite forms have none
    from .linalg import determinant, inertia

    if determinant(Qi) == 0:
        return kernel_vector(Qi)
    sig = inertia(Qi)
    if sig.is_definite:
        raise DefiniteFormError("definite forms have no nonzero isotropic vector")

    U = _lll_precondition(Qi)
    Qr = _integer_gram(congruence(U, Qi))
    hit = _quick_pass(Qr)
    if hit is None:
        hit = _ternary_sweep(Qr)
    if hit is not None:
        return vec_mat(hit, U)

    S, dvec = diagonalize_congruence(Qr)
    back = mat_mul(S, U)  # rows: diagonalizing basis in original coordinates
    scales = []
    dd = []
    for d in dvec:
        c = Fraction(d.denominator)
        val = d.numerator * d.denominator
        val, sq = _strip_square(val)
        scales.append(c / sq)
        dd.append(val)
    hit = _diag_pairs(dd)
    if hit is None and n <= 7:
        pat = _pattern_sweep(Qr)
        if pat is not None:
            return vec_mat(pat, U)
        hit = _ternary_descent_diag(dd)
        if hit is None:
            hit = _ternary_descent_mixed(dd)
        if hit is None:
            pat = _ternary_descent_subspaces(Qr)
            if pat is not None:
                return vec_mat(pat, U)
    if hit is None:
        hit = _mitm_search(dd, budget)
    x = tuple(h * s for h, s in zip(hit, scales))
    return vec_mat(x, back)


def _ternary_descent_diag(dd: list[int]):
    """Exact ternary solver on mixed-sign coordinate triples of the
    diagonalized form."""
    from .ternary import solve_ternary_diag

    n = len(dd)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                trip = (dd[i], dd[j], dd[k])
                if all(t > 0 for t in trip) or all(t < 0 for t in trip):
                    continue
                sol = solve_ternary_diag(*trip)
                if sol is None:
                    continue
                v = [Fraction(0)] * n
                v[i], v[j], v[k] = (Fraction(e) for e in sol)
                return tuple(v)
    return None


def _ternary_descent_mixed(dd: list[int], attempts: int = 600):
    """Ternary descent over planes spanned by pairs of diagonal directions.

    For disjoint index pairs (i, j) and (k, l), the vector a*e_i + b*e_j is
    orthogonal to e_k and e_l, so (a^2 d_i + b^2 d_j, d_k, d_l) is again a
    diagonal ternary; sweeping small (a, b) varies its arithmetic until one
    passes the local conditions.  Coordinates are used smallest-first to
    keep the factorizations easy.
    """
    from .ternary import solve_ternary_diag

    n = len(dd)
    order = sorted(range(n), key=lambda i: abs(dd[i]))
    small = order[: min(n, 5)]
    tried = 0
    for amp in (1, 2, 3, 4, 6, 8, 12, 16, 24, 32):
        for i in small:
            for j in small:
                if j <= i:
                    continue
                for k in small:
                    for l in small:
                        if l <= k or k in (i, j) or l in (i, j):
                            continue
                        for a in range(1, amp + 1):
                            for b in range(amp + 1):
                                if max(a, b) != amp:
                                    continue
                                cp = a * a * dd[i] + b * b * dd[j]
                                if cp == 0:
                                    v = [Fraction(0)] * n
                                    v[i], v[j] = Fraction(a), Fraction(b)
                                    return tuple(v)
                                trip = (cp, dd[k], dd[l])
                                if all(t > 0 for t in trip) or all(t < 0 for t in trip):
                                    continue
                                tried += 1
                                if tried > attempts:
                                    return None
                                sol = solve_ternary_diag(*trip)
                                if sol is None:
                                    continue
                                x, y, z = sol
                                v = [Fraction(0)] * n
                                v[i] = Fraction(x * a)
                                v[j] = Fraction(x * b)
                                v[k] = Fraction(y)
                                v[l] = Fraction(z)
                                return tuple(v)
    return None


def _ternary_descent_subspaces(Q: Matrix, attempts: int = 40):
    """Exact ternary solver on seeded random three-dimensional subspaces."""
    import random

    from .ternary import solve_ternary_diag

    n = len(Q)
    rng = random.Random(0x5EED)
    for _ in range(attempts):
        V = tuple(
            tuple(Fraction(rng.randint(-2, 2)) for _ in range(n)) for _ in range(3)
        )
        G3 = mat_mul(mat_mul(V, Q), tuple(zip(*V)))
        if determinant_3(G3) == 0:
            continue
        S3, d3 = diagonalize_congruence(sym_part(G3))
        den = 1
        trip = []
        scales3 = []
        for d in d3:
            val = d.numerator * d.denominator
            val, sq = _strip_square(val)
            scales3.append(Fraction(d.denominator) / sq)
            trip.append(val)
        if all(t > 0 for t in trip) or all(t < 0 for t in trip) or 0 in trip:
            continue
        sol = solve_ternary_diag(*trip)
        if sol is None:
            continue
        x3 = tuple(Fraction(sol[i]) * scales3[i] for i in range(3))
        sub = vec_mat(x3, S3)
        full = vec_mat(sub, V)
        if any(e != 0 for e in full) and evaluate_form(Q, full) == 0:
            return primitive_vector(full)
    return None


def determinant_3(M) -> Fraction:
    from .linalg import determinant

    return determinant(tuple(tuple(Fraction(e) for e in row) for row in M))


def sym_part(M):
    n = len(M)
    return tuple(
        tuple((Fraction(M[i][j]) + Fraction(M[j][i])) / 2 for j in range(n)) for i in range(n)
    )


def _integer_gram(Q: Matrix) -> Matrix:
    den = 1
    for row in Q:
        for e in row:
            den = den * e.denominator // gcd(den, e.denominator)
    g = 0
    for row in Q:
        for e in row:
            g = gcd(g, int(e * den))
    g = g or 1
    return tuple(tuple(Fraction(int(e * den) // g) for e in row) for row in Q)


def _quick_pass(Q: Matrix) -> RatVec | None:
    """Zero diagonal entries and binary subforms with square discriminant."""
    n = len(Q)
    for i in range(n):
        if Q[i][i] == 0:
            return tuple(Fraction(1 if j == i else 0) for j in range(n))
    for i in range(n):
        for j in range(i + 1, n):
            a, b, c = Q[i][i], Q[i][j], Q[j][j]
            disc = b * b - a * c
            if disc < 0:
                continue
            r = _sqrt_fraction(disc)
            if r is None:
                continue
            t1, t2 = (-b + r) / c, (-b - r) / c
            t = t1 if t1 > 0 else (t2 if t2 > 0 else t1)
            v = [Fraction(0)] * n
            v[i] = Fraction(1)
            v[j] = t
            return primitive_vector(tuple(v))
    return None


def _ternary_sweep(Q: Matrix, box: int = 3) -> RatVec | None:
    """Small ternary subforms: fix two coordinates, solve the quadratic in
    the third exactly via a square-discriminant test."""
    n = len(Q)
    for k in range(n):
        ck = Q[k][k]
        if ck == 0:
            continue
        for i in range(n):
            if i == k:
                continue
            for j in range(i + 1, n):
                if j == k:
                    continue
                for xi in range(1, box + 1):
                    for xj in range(-box, box + 1):
                        # q(xi e_i + xj e_j + t e_k) = 0 as quadratic in t
                        const = (
                            Q[i][i] * xi * xi
                            + 2 * Q[i][j] * xi * xj
                            + Q[j][j] * xj * xj
                        )
                        lin = Q[i][k] * xi + Q[j][k] * xj
                        disc = lin * lin - ck * const
                        if disc < 0:
                            continue
                        r = _sqrt_fraction(disc)
                        if r is None:
                            continue
                        t = (-lin + r) / ck
                        if t == 0 and const != 0:
                            t = (-lin - r) / ck
                        v = [Fraction(0)] * n
                        v[i], v[j], v[k] = Fraction(xi), Fraction(xj), t
                        if any(e != 0 for e in v):
                            return primitive_vector(tuple(v))
    return None


from itertools import combinations, product


def _pattern_sweep(Q: Matrix) -> RatVec | None:
    """Sign patterns with small coefficients over supports of size 4 and 5."""
    n = len(Q)

    def value(idx, coef):
        tot = 0
        for a in range(len(idx)):
            ia, ca = idx[a], coef[a]
            tot += Q[ia][ia] * ca * ca
            for b in range(a + 1, len(idx)):
                tot += 2 * Q[ia][idx[b]] * ca * coef[b]
        return tot

    for size, coefsets in ((4, (1, -1, 2, -2)), (5, (1, -1))):
        if n < size:
            continue
        for idx in combinations(range(n), size):
            for coef in product(coefsets, repeat=size - 1):
                full = (1,) + coef
                if value(idx, full) == 0:
                    v = [Fraction(0)] * n
                    for pos, cv in zip(idx, full):
                        v[pos] = Fraction(cv)
                    return primitive_vector(tuple(v))
    return None


def _sqrt_fraction(f: Fraction):
    rn = isqrt(f.numerator)
    if rn * rn != f.numerator:
        return None
    rd = isqrt(f.denominator)
    if rd * rd != f.denominator:
        return None
    return Fraction(rn, rd)


def _strip_square(v: int) -> tuple[int, int]:
    """v = out * sq^2 with sq maximal among smooth factors; returns (out, sq)."""
    if v == 0:
        return 0, 1
    sq = 1
    p = 2
    av = abs(v)
    sign = 1 if v > 0 else -1
    while p * p <= av and p <= 1000:
        while av % (p * p) == 0:
            av //= p * p
            sq *= p
        p += 1 if p == 2 else 2
    r = isqrt(av)
    if r * r == av:
        av = 1
        sq *= r
    return sign * av, sq


def _diag_pairs(dd: list[int]) -> tuple | None:
    """x_i^2 |d_i| = x_j^2 |d_j| over opposite-sign pairs with square product."""
    n = len(dd)
    for i in range(n):
        if dd[i] == 0:
            return tuple(Fraction(1 if k == i else 0) for k in range(n))
    for i in range(n):
        for j in range(i + 1, n):
            if dd[i] * dd[j] >= 0:
                continue
            prod = -dd[i] * dd[j]
            r = isqrt(prod)
            if r * r != prod:
                continue
            # (x_i, x_j) = (|d_j|, r) satisfies d_i x_i^2 + d_j x_j^2 = 0
            v = [Fraction(0)] * n
            v[i] = Fraction(abs(dd[j]))
            v[j] = Fraction(r)
            return primitive_vector(tuple(v))
    return None


def _mitm_search(dd: list[int], budget: int) -> tuple | None:
    """Meet-in-the-middle over supports of size <= 4 in doubling boxes."""
    n = len(dd)
    evaluated = 0
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    last_radius = 0
    for radius in _radius_ladder(n):
        last_radius = radius
        tables: dict[tuple[int, int], dict[int, tuple[int, int]]] = {}
        for i, j in pairs:
            tab: dict[int, tuple[int, int]] = {}
            di, dj = dd[i], dd[j]
            for x in range(radius + 1):
                vx = di * x * x
                for y in range(radius + 1):
                    val = vx + dj * y * y
                    if val not in tab:
                        tab[val] = (x, y)
                    evaluated += 1
                    if evaluated > budget:
                        raise OracleBudgetError(evaluated, radius)
            tables[(i, j)] = tab
        for ai in range(len(pairs)):
            i, j = pairs[ai]
            ta = tables[(i, j)]
            sa_min = min(0, dd[i], dd[j])
            sa_max = max(0, dd[i], dd[j])
            for bi in range(ai + 1, len(pairs)):
                k, l = pairs[bi]
                if k in (i, j) or l in (i, j):
                    continue
                # sign filter: the two value ranges must be able to cancel
                sb_min = min(0, dd[k], dd[l])
                sb_max = max(0, dd[k], dd[l])
                if (sa_min >= 0 and sb_min >= 0 and sa_max + sb_max > 0) or (
                    sa_max <= 0 and sb_max <= 0 and sa_min + sb_min < 0
                ):
                    continue
                tb = tables[(k, l)]
                for val, (x, y) in ta.items():
                    evaluated += 1
                    if evaluated > budget:
                        raise OracleBudgetError(evaluated, radius)
                    other = tb.get(-val)
                    if other is None:
                        continue
                    z, w = other
                    if x == y == z == w == 0:
                        continue
                    v = [Fraction(0)] * n
                    v[i], v[j], v[k], v[l] = map(Fraction, (x, y, z, w))
                    return primitive_vector(tuple(v))
        if n <= 7:
            # stream triples against the pair tables: covers full support 5
            hit, evaluated = _stream_triples(dd, pairs, tables, radius, evaluated, budget)
            if hit is not None:
                return hit
    raise OracleBudgetError(evaluated, last_radius)


def _stream_triples(dd, pairs, tables, radius, evaluated, budget):
    n = len(dd)
    for t in combinations(range(n), 3):
        dt = [dd[t[0]], dd[t[1]], dd[t[2]]]
        for i, j in pairs:
            if i in t or j in t:
                continue
            tab = tables[(i, j)]
            for a in range(radius + 1):
                va = dt[0] * a * a
                for b in range(radius + 1):
                    vb = va + dt[1] * b * b
                    for c in range(radius + 1):
                        evaluated += 1
                        if evaluated > budget:
                            raise OracleBudgetError(evaluated, radius)
                        val = vb + dt[2] * c * c
                        other = tab.get(-val)
                        if other is None:
                            continue
                        x, y = other
                        if a == b == c == x == y == 0:
                            continue
                        v = [Fraction(0)] * n
                        v[t[0]], v[t[1]], v[t[2]] = Fraction(a), Fraction(b), Fraction(c)
                        v[i], v[j] = Fraction(x), Fraction(y)
                        return primitive_vector(tuple(v)), evaluated
    return None, evaluated


# ----------------------------------------------------------------------
# LLL preconditioning on the positive majorant of the form
# ----------------------------------------------------------------------


def _lll_precondition(Q: Matrix) -> Matrix:
    """Unimodular U shrinking the entries of U Q U^T via the |Q| majorant.

    The majorant depends on the congruence diagonalization, which improves
    as the form shrinks; a few rounds reach a stable reduced form.
    """
    n = len(Q)
    U = identity(n)
    cur = Q
    best_bits = _entry_bits_int(cur)
    for _ in range(4):
        P, d = diagonalize_congruence(cur)
        if any(e == 0 for e in d):
            break
        Pinv = mat_inverse(P)
        absd = tuple(
            tuple(abs(d[i]) if i == j else Fraction(0) for j in range(n)) for i in range(n)
        )
        majorant = congruence(Pinv, absd)
        step = lll_reduce_gram(majorant)
        nxt = _integer_gram(congruence(step, cur))
        bits = _entry_bits_int(nxt)
        if bits >= best_bits:
            break
        best_bits = bits
        U = mat_mul(step, U)
        cur = nxt
    return U


def _entry_bits_int(Q: Matrix) -> int:
    return max(abs(e.numerator).bit_length() for row in Q for e in row)


def lll_reduce_gram(G: Matrix, delta: Fraction = Fraction(3, 4)) -> Matrix:
    """LLL reduction given a positive definite Gram matrix; returns the
    integer unimodular transform U with U G U^T reduced."""
    n = len(G)
    A = [[Fraction(e) for e in row] for row in G]
    U = [[1 if i == j else 0 for j in range(n)] for i in range(n)]

    mu = [[Fraction(0)] * n for _ in range(n)]
    B = [Fraction(0)] * n

    def gs_recompute():
        for i in range(n):
            for j in range(i):
                s = A[i][j]
                for k in range(j):
                    s -= mu[j][k] * mu[i][k] * B[k]
                mu[i][j] = s / B[j]
            s = A[i][i]
            for k in range(i):
                s -= mu[i][k] * mu[i][k] * B[k]
            B[i] = s

    def row_op(k, j, q):
        # b_k <- b_k - q b_j
        for c in range(n):
            U[k][c] -= q * U[j][c]
        for c in range(n):
            A[k][c] -= q * A[j][c]
        for r in range(n):
            A[r][k] -= q * A[r][j]

    def swap_rows(k):
        U[k - 1], U[k] = U[k], U[k - 1]
        A[k - 1], A[k] = A[k], A[k - 1]
        for r in range(n):
            A[r][k - 1], A[r][k] = A[r][k], A[r][k - 1]

    gs_recompute()
    k = 1
    steps = 0
    while k < n:
        steps += 1
        if steps > 120_000:
            break  # bail out; reduction is best-effort preconditioning
        for j in range(k - 1, -1, -1):
            if abs(mu[k][j]) > Fraction(1, 2):
                q = round(mu[k][j])
                row_op(k, j, q)
                for c in range(j):
                    mu[k][c] -= q * mu[j][c]
                mu[k][j] -= q
        if B[k] >= (delta - mu[k][k - 1] ** 2) * B[k - 1]:
            k += 1
        else:
            swap_rows(k)
            gs_recompute()
            k = max(k - 1, 1)
    return tuple(tuple(Fraction(e) for e in row) for row in U)


# ----------------------------------------------------------------------
# external solver protocol
# ----------------------------------------------------------------------


def format_wire_matrix(Q: Matrix) -> str:
    lines = [str(len(Q))]
    for row in Q:
        lines.append(" ".join(_fmt_rat(e) for e in row))
    return "\n".join(lines) + "\n"


def _fmt_rat(e: Fraction) -> str:
    return str(e.numerator) if e.denominator == 1 else f"{e.numerator}/{e.denominator}"


def parse_wire_vector(line: str, n: int) -> RatVec:
    parts = line.split()
    if len(parts) != n:
        raise OracleExternalError(f"expected {n} entries, got {len(parts)}")
    try:
        return tuple(Fraction(p) for p in parts)
    except (ValueError, ZeroDivisionError) as exc:
        raise OracleExternalError(f"malformed rational in response: {exc}") from exc


def external_solve(
    Q: Matrix, command: str | list[str], timeout: float | None = None
) -> OracleResult:
    """Delegate to a subprocess speaking the line-oriented wire format.

    Responses are never trusted: the vector is re-verified exactly and a
    wrong answer surfaces as an error, not a result.
    """
    Q = sym_matrix(Q)
    if timeout is None:
        timeout = float(os.environ.get("ORACLE_TIMEOUT_SECS", "60"))
    cmd = shlex.split(command) if isinstance(command, str) else list(command)
    try:
        proc = subprocess.run(
            cmd,
            input=format_wire_matrix(Q),
            capture_output=True,
            text=True,
            timeout=timeout,
        )
    except subprocess.TimeoutExpired as exc:
        raise OracleBudgetError(0, 0, f"external solver timed out after {timeout}s") from exc
    except OSError as exc:
        raise OracleExternalError(f"cannot run external solver: {exc}") from exc
    out = proc.stdout.strip().splitlines()
    if proc.returncode != 0 or not out:
        raise OracleExternalError(
            f"external solver exited with code {proc.returncode}", proc.stderr
        )
    line = out[0].strip()
    if line == "FAIL":
        raise OracleBudgetError(0, 0, "external solver reported FAIL")
    vec = parse_wire_vector(line, len(Q))
    try:
        verified = _verify(Q, vec)
    except OracleExternalError as exc:
        raise OracleExternalError(f"external result failed verification: {exc}", proc.stderr)
    return OracleResult(verified, True)
