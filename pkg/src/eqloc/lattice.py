"""Integer linear algebra on small dense matrices.

Everything here works on lists of Python ints (or Fractions) so results are
exact; matrices are tiny (rank <= 4 in practice), so clarity wins over speed.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Sequence

Vector = tuple[int, ...]
Matrix = list[list[int]]


def vgcd(v: Sequence[int]) -> int:
    g = 0
    for x in v:
        g = gcd(g, x)
    return g


def primitive(v: Sequence[int]) -> Vector:
    g = vgcd(v)
    if g == 0:
        raise ValueError("zero vector has no primitive part")
    return tuple(x // g for x in v)


def dot(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(x * y for x, y in zip(a, b))


def first_nonzero_positive(v: Sequence[int]) -> bool:
    for x in v:
        if x:
            return x > 0
    return False


def normalize_sign(v: Sequence[int]) -> Vector:
    """Return v or -v, whichever has a positive first nonzero coordinate."""
    v = tuple(v)
    return v if first_nonzero_positive(v) else tuple(-x for x in v)


def identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def transpose(a: Sequence[Sequence[int]]) -> Matrix:
    return [list(r) for r in zip(*a)] if a else []


def matmul(a: Sequence[Sequence[int]], b: Sequence[Sequence[int]]) -> Matrix:
    bt = transpose(b)
    return [[dot(r, c) for c in bt] for r in a]


def det(a: Sequence[Sequence[int]]) -> int:
    """Bareiss fraction-free determinant."""
    n = len(a)
    if n == 0:
        return 1
    m = [list(r) for r in a]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def rank(a: Sequence[Sequence[int]]) -> int:
    if not a:
        return 0
    m = [[Fraction(x) for x in r] for r in a]
    rows, cols = len(m), len(m[0])
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        for i in range(r + 1, rows):
            f = m[i][c] / m[r][c]
            if f:
                for j in range(c, cols):
                    m[i][j] -= f * m[r][j]
        r += 1
        if r == rows:
            break
    return r


def solve(a: Sequence[Sequence[int]], b: Sequence[int]) -> list[Fraction] | None:
    """Solve a x = b over Q for square or overdetermined a.

    Returns None when the system is inconsistent. If the solution is not
    unique a particular one (free variables zero) is returned.
    """
    rows = len(a)
    cols = len(a[0]) if rows else 0
    m = [[Fraction(x) for x in r] + [Fraction(y)] for r, y in zip(a, b)]
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        pv = m[r][c]
        m[r] = [x / pv for x in m[r]]
        for i in range(rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    for i in range(r, rows):
        if m[i][cols] != 0:
            return None
    x = [Fraction(0)] * cols
    for i, c in enumerate(pivots):
        x[c] = m[i][cols]
    return x


def column_reduce(a: Sequence[Sequence[int]]) -> tuple[Matrix, Matrix, int]:
    """Unimodular column reduction.

    Returns (h, q, r) with a @ q = h, q unimodular, and the nonzero columns
    of h being exactly the first r. The last n - r columns of q are then a
    basis of the integer kernel {x : a x = 0}, and that basis is saturated.
    """
    rows = len(a)
    n = len(a[0]) if rows else 0
    h = [list(r) for r in a]
    q = identity(n)

    def colop(i: int, j: int, aii: int, aij: int, aji: int, ajj: int) -> None:
        # columns (i, j) <- (aii*ci + aji*cj, aij*ci + ajj*cj)
        for mat in (h, q):
            for row in mat:
                ci, cj = row[i], row[j]
                row[i] = aii * ci + aji * cj
                row[j] = aij * ci + ajj * cj

    r = 0
    for row in range(rows):
        if r == n:
            break
        for j in range(r + 1, n):
            x, y = h[row][r], h[row][j]
            if y == 0:
                continue
            g, s, t = _xgcd(x, y)
            # [s -y/g; t x/g] has determinant 1
            colop(r, j, s, -y // g, t, x // g)
        if h[row][r] != 0:
            if h[row][r] < 0:
                for mat in (h, q):
                    for rr in mat:
                        rr[r] = -rr[r]
            r += 1
    return h, q, r


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        k, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - k * x1
        y0, y1 = y1, y0 - k * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def kernel(a: Sequence[Sequence[int]], n: int | None = None) -> list[Vector]:
    """Saturated integer basis of {x in Z^n : a x = 0}."""
    if not a:
        assert n is not None
        return [tuple(r) for r in identity(n)]
    _, q, r = column_reduce(a)
    cols = len(q)
    return [tuple(q[i][j] for i in range(cols)) for j in range(r, cols)]


def saturated_span(vectors: Sequence[Sequence[int]], n: int) -> list[Vector]:
    """Basis of the saturation of the lattice spanned by the given vectors."""
    if not vectors:
        return []
    perp = kernel([list(v) for v in vectors], n)
    if not perp:
        return [tuple(r) for r in identity(n)]
    return kernel([list(v) for v in perp], n)


def extend_to_unimodular(basis: Sequence[Sequence[int]], n: int) -> tuple[Matrix, Matrix]:
    """Extend a saturated basis to a basis of Z^n.

    Returns (u, w) with w = u^{-1}, both integer; the first len(basis) rows
    of u span the same lattice as ``basis``.
    """
    k = len(basis)
    if k == 0:
        return identity(n), identity(n)
    h, q, r = column_reduce([list(b) for b in basis])
    if r != k:
        raise ValueError("basis vectors are linearly dependent")
    # basis = h[:, :k] @ (q^{-1})[:k]; h[:, :k] must be unimodular for saturation
    if abs(det([row[:k] for row in h])) != 1:
        raise ValueError("basis does not span a saturated sublattice")
    u = inverse_unimodular(q)
    return u, q


def inverse_unimodular(a: Sequence[Sequence[int]]) -> Matrix:
    n = len(a)
    inv = []
    cols = []
    for j in range(n):
        e = [int(i == j) for i in range(n)]
        x = solve(a, e)
        assert x is not None
        cols.append(x)
    for i in range(n):
        row = []
        for j in range(n):
            v = cols[j][i]
            if v.denominator != 1:
                raise ValueError("matrix is not unimodular")
            row.append(int(v))
        inv.append(row)
    return inv
