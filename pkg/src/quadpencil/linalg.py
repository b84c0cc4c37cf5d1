"""Exact rational linear algebra over `fractions.Fraction`.

Vectors are rows and quadratic forms act as x Q x^T; change of basis is the
congruence Q -> P Q P^T with transforms composing on the left.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Iterable, NamedTuple, Sequence

from .errors import DimensionError, RankError, SingularMatrixError, SymmetryError

Rat = Fraction
RatVec = tuple[Fraction, ...]
Matrix = tuple[tuple[Fraction, ...], ...]

ZERO = Fraction(0)
ONE = Fraction(1)


class Signature(NamedTuple):
    """Inertia counts of a real symmetric matrix: r positive, s negative."""

    r: int
    s: int
    n: int

    @property
    def rank(self) -> int:
        return self.r + self.s

    @property
    def d(self) -> int:
        return self.r - self.s

    @property
    def is_definite(self) -> bool:
        return self.n > 0 and (self.r == self.n or self.s == self.n)

    @property
    def is_balanced(self) -> bool:
        return abs(self.r - self.s) <= 1


def as_vector(entries: Iterable) -> RatVec:
    return tuple(Fraction(e) for e in entries)


def as_matrix(rows: Sequence[Sequence]) -> Matrix:
    mat = tuple(tuple(Fraction(e) for e in row) for row in rows)
    if mat and any(len(row) != len(mat[0]) for row in mat):
        raise DimensionError("ragged rows")
    return mat


def sym_matrix(rows: Sequence[Sequence]) -> Matrix:
    """Validate and normalize a square symmetric matrix of rationals."""
    mat = as_matrix(rows)
    n = len(mat)
    if any(len(row) != n for row in mat):
        raise DimensionError(f"expected square matrix, got {len(mat)}x{len(mat[0]) if mat else 0}")
    for i in range(n):
        for j in range(i + 1, n):
            if mat[i][j] != mat[j][i]:
                raise SymmetryError(f"entries ({i},{j}) and ({j},{i}) differ")
    return mat


def identity(n: int) -> Matrix:
    return tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n))


def zero_matrix(n: int, m: int | None = None) -> Matrix:
    m = n if m is None else m
    return tuple((ZERO,) * m for _ in range(n))


def diag(entries: Sequence) -> Matrix:
    es = [Fraction(e) for e in entries]
    n = len(es)
    return tuple(tuple(es[i] if i == j else ZERO for j in range(n)) for i in range(n))


def block_diag(*blocks: Matrix) -> Matrix:
    n = sum(len(b) for b in blocks)
    out = [[ZERO] * n for _ in range(n)]
    ofs = 0
    for b in blocks:
        for i, row in enumerate(b):
            for j, e in enumerate(row):
                out[ofs + i][ofs + j] = Fraction(e)
        ofs += len(b)
    return tuple(tuple(row) for row in out)


def transpose(A: Matrix) -> Matrix:
    return tuple(zip(*A)) if A else ()


def mat_mul(A: Matrix, B: Matrix) -> Matrix:
    if not A or not B or len(A[0]) != len(B):
        raise DimensionError(f"cannot multiply {_shape(A)} by {_shape(B)}")
    Bt = tuple(zip(*B))
    return tuple(
        tuple(sum(a * b for a, b in zip(row, col)) for col in Bt) for row in A
    )


def mat_add(A: Matrix, B: Matrix) -> Matrix:
    if _shape(A) != _shape(B):
        raise DimensionError("shape mismatch")
    return tuple(tuple(a + b for a, b in zip(ra, rb)) for ra, rb in zip(A, B))


def mat_scale(c, A: Matrix) -> Matrix:
    c = Fraction(c)
    return tuple(tuple(c * e for e in row) for row in A)


def pencil_member(lam, Q0: Matrix, Q1: Matrix) -> Matrix:
    """The symmetric matrix lam*Q0 + Q1."""
    return mat_add(mat_scale(lam, Q0), Q1)


def vec_mat(x: RatVec, A: Matrix) -> RatVec:
    if len(x) != len(A):
        raise DimensionError("vector/matrix mismatch")
    return tuple(sum(xi * A[i][j] for i, xi in enumerate(x)) for j in range(len(A[0])))


def congruence(P: Matrix, Q: Matrix) -> Matrix:
    """Change of basis P Q P^T for a symmetric Q; exactly symmetric output."""
    n = len(Q)
    if len(P[0]) != n:
        raise DimensionError(f"transform is {_shape(P)} but form is {n}x{n}")
    PQ = mat_mul(P, Q)
    return mat_mul(PQ, transpose(P))


def evaluate_form(Q: Matrix, x: RatVec) -> Fraction:
    """Value x Q x^T of the quadratic form."""
    n = len(Q)
    if len(x) != n:
        raise DimensionError(f"vector length {len(x)} but form is {n}x{n}")
    total = ZERO
    for i in range(n):
        total += Q[i][i] * (x[i] * x[i])
        for j in range(i + 1, n):
            total += 2 * Q[i][j] * (x[i] * x[j])
    return total


def bilinear(Q: Matrix, x: RatVec, y: RatVec) -> Fraction:
    """Associated bilinear form x Q y^T."""
    n = len(Q)
    if len(x) != n or len(y) != n:
        raise DimensionError("vector length mismatch")
    return sum(x[i] * sum(Q[i][j] * y[j] for j in range(n)) for i in range(n))


def _shape(A: Matrix) -> tuple[int, int]:
    return (len(A), len(A[0]) if A else 0)


def _int_rows(M: Matrix) -> list[list[int]]:
    """Clear denominators row-uniformly (matrix-wide scale), keeping det sign.

    Returns integer rows of D*M where D is the lcm of all denominators.
    """
    d = 1
    for row in M:
        for e in row:
            d = d * e.denominator // gcd(d, e.denominator)
    return [[int(e * d) for e in row] for row in M], d


def determinant(M: Matrix) -> Fraction:
    """Exact determinant via fraction-free (Bareiss) elimination."""
    n = len(M)
    if n == 0:
        return ONE
    if any(len(row) != n for row in M):
        raise DimensionError("determinant of non-square matrix")
    a, d = _int_rows(M)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return ZERO
        pivot = a[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * pivot - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = pivot
    return Fraction(sign * a[n - 1][n - 1], d**n)


def diagonalize_congruence(Q: Matrix) -> tuple[Matrix, tuple[Fraction, ...]]:
    """Find invertible P with P Q P^T diagonal; returns (P, diagonal entries).

    Symmetric Gaussian congruence with diagonal pivoting; when every
    remaining diagonal entry vanishes but the block is nonzero, a row
    addition (a congruence in characteristic 0) creates a nonzero diagonal
    pivot.  Zero trailing blocks yield zero diagonal entries.
    """
    n = len(Q)
    a = [[Fraction(e) for e in row] for row in Q]
    p = [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]
    for k in range(n):
        if a[k][k] == 0:
            # prefer the largest remaining diagonal pivot
            best = None
            for i in range(k, n):
                if a[i][i] != 0 and (best is None or abs(a[i][i]) > abs(a[best][best])):
                    best = i
            if best is not None:
                _swap_sym(a, p, k, best)
            else:
                hit = None
                for i in range(k, n):
                    for j in range(i + 1, n):
                        if a[i][j] != 0:
                            hit = (i, j)
                            break
                    if hit:
                        break
                if hit is None:
                    break  # trailing block is zero
                i, j = hit
                _add_row_sym(a, p, i, j)  # makes a[i][i] = 2*a[i][j] != 0
                if i != k:
                    _swap_sym(a, p, k, i)
        pivot = a[k][k]
        if pivot == 0:
            continue
        for i in range(k + 1, n):
            if a[i][k] == 0:
                continue
            f = a[i][k] / pivot
            for j in range(n):
                a[i][j] -= f * a[k][j]
            for j in range(n):
                a[j][i] -= f * a[j][k]
            for j in range(n):
                p[i][j] -= f * p[k][j]
    return tuple(tuple(row) for row in p), tuple(a[i][i] for i in range(n))


def _swap_sym(a, p, i, j):
    a[i], a[j] = a[j], a[i]
    for row in a:
        row[i], row[j] = row[j], row[i]
    p[i], p[j] = p[j], p[i]


def _add_row_sym(a, p, i, j):
    for col in range(len(a)):
        a[i][col] += a[j][col]
    for row in a:
        row[i] += row[j]
    for col in range(len(p[i])):
        p[i][col] += p[j][col]


def inertia(Q: Matrix) -> Signature:
    """Exact inertia [r, s] of a rational symmetric matrix."""
    QQ = sym_matrix(Q)
    _, d = diagonalize_congruence(QQ)
    r = sum(1 for e in d if e > 0)
    s = sum(1 for e in d if e < 0)
    return Signature(r, s, len(QQ))


def kernel_vector(M: Matrix) -> RatVec:
    """Generator of the left kernel of a square matrix of rank n-1.

    Returns a primitive integer vector v with v M = 0; raises
    SingularMatrixError when M is invertible and RankError when the rank
    defect exceeds one.
    """
    basis = left_nullspace_basis(M)
    if len(basis) == 0:
        raise SingularMatrixError("matrix is invertible; kernel is trivial")
    if len(basis) > 1:
        raise RankError(f"kernel has dimension {len(basis)}, expected 1")
    return basis[0]


def left_nullspace_basis(M: Matrix) -> tuple[RatVec, ...]:
    """Primitive basis of {x : x M = 0} via elimination on M^T."""
    n = len(M)
    if n == 0:
        return ()
    cols = len(M[0])
    # row-reduce M^T: kernel of M^T (as column vectors) = left kernel of M
    a = [[M[j][i] for j in range(n)] for i in range(cols)]
    pivots: list[int] = []
    row = 0
    for col in range(n):
        piv = None
        for i in range(row, len(a)):
            if a[i][col] != 0:
                piv = i
                break
        if piv is None:
            continue
        a[row], a[piv] = a[piv], a[row]
        inv = a[row][col]
        a[row] = [e / inv for e in a[row]]
        for i in range(len(a)):
            if i != row and a[i][col] != 0:
                f = a[i][col]
                a[i] = [e - f * g for e, g in zip(a[i], a[row])]
        pivots.append(col)
        row += 1
        if row == len(a):
            break
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        v = [ZERO] * n
        v[fc] = ONE
        for r, pc in enumerate(pivots):
            v[pc] = -a[r][fc]
        basis.append(primitive_vector(tuple(v)))
    return tuple(basis)


def saturated_left_kernel(cols: Matrix) -> tuple[RatVec, ...]:
    """Basis of the saturated integer left kernel {x in Z^n : x*cols = 0}.

    Row-reduces the column matrix by unimodular integer operations (gcd
    elimination), so the returned rows extend to a basis of Z^n; this keeps
    the covolume of any completion minimal.
    """
    n = len(cols)
    k = len(cols[0]) if cols else 0
    den = 1
    for row in cols:
        for e in row:
            e = Fraction(e)
            den = den * e.denominator // gcd(den, e.denominator)
    a = [[int(Fraction(e) * den) for e in row] for row in cols]
    u = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    r = 0
    for c in range(k):
        while True:
            piv = None
            for i in range(r, n):
                if a[i][c] != 0 and (piv is None or abs(a[i][c]) < abs(a[piv][c])):
                    piv = i
            if piv is None:
                break
            a[r], a[piv] = a[piv], a[r]
            u[r], u[piv] = u[piv], u[r]
            done = True
            for i in range(r + 1, n):
                if a[i][c] == 0:
                    continue
                q = a[i][c] // a[r][c]
                a[i] = [x - q * y for x, y in zip(a[i], a[r])]
                u[i] = [x - q * y for x, y in zip(u[i], u[r])]
                if a[i][c] != 0:
                    done = False
            if done:
                r += 1
                break
    return tuple(tuple(Fraction(e) for e in row) for row in u[r:])


def mat_inverse(M: Matrix) -> Matrix:
    """Exact inverse; raises SingularMatrixError on singular input."""
    n = len(M)
    a = [list(row) + [ONE if i == j else ZERO for j in range(n)] for i, row in enumerate(M)]
    for col in range(n):
        piv = None
        for i in range(col, n):
            if a[i][col] != 0:
                piv = i
                break
        if piv is None:
            raise SingularMatrixError("matrix is singular")
        a[col], a[piv] = a[piv], a[col]
        inv = a[col][col]
        a[col] = [e / inv for e in a[col]]
        for i in range(n):
            if i != col and a[i][col] != 0:
                f = a[i][col]
                a[i] = [e - f * g for e, g in zip(a[i], a[col])]
    return tuple(tuple(row[n:]) for row in a)


def vec_content(v: RatVec) -> Fraction:
    """Positive rational c such that v / c is a primitive integer vector."""
    num = 0
    den = 1
    for e in v:
        num = gcd(num, e.numerator)
        den = den * e.denominator // gcd(den, e.denominator)
    if num == 0:
        raise ValueError("zero vector has no content")
    return Fraction(num, den)


def primitive_vector(v: RatVec) -> RatVec:
    """Scale v to a primitive integer vector whose first nonzero entry is > 0."""
    c = vec_content(v)
    w = [e / c for e in v]
    for e in w:
        if e != 0:
            if e < 0:
                w = [-x for x in w]
            break
    return tuple(w)


def is_zero_vector(v: RatVec) -> bool:
    return all(e == 0 for e in v)


def pencil_det_poly(Q0: Matrix, Q1: Matrix):
    """Coefficients of det(lambda*Q0 + Q1) as a polynomial in lambda.

    Exact, via evaluation at n+1 rational points and interpolation; the
    degree equals n exactly when det(Q0) != 0.
    """
    from .roots import poly_interpolate

    n = len(Q0)
    if len(Q1) != n:
        raise DimensionError("pencil members must have equal dimension")
    pts = []
    lam = 0
    while len(pts) < n + 1:
        pts.append((Fraction(lam), determinant(pencil_member(lam, Q0, Q1))))
        lam = -lam if lam > 0 else -lam + 1
    return poly_interpolate(pts)
