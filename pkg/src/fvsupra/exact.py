"""Small dense linear algebra that works for both floats and Fractions.

Matrices are lists of lists (or tuples of tuples) of Python numbers.  All
routines stay in the scalar type they are given, so feeding Fractions in
yields exact results.  This is deliberately tiny: it only has to cover the
stencil-sized systems used during scheme assembly (reconstruction fits,
ray intersections, constraint elimination).
"""

from fractions import Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


def frac(x):
    """Exact Fraction from int/float/str/Fraction (floats converted exactly)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)  # exact binary expansion
    raise TypeError(f"cannot convert {type(x)} to Fraction")


def as_float(x):
    """Recursively convert scalars / nested sequences to floats."""
    if isinstance(x, (list, tuple)):
        return type(x)(as_float(v) for v in x)
    return float(x)


def vec_sub(a, b):
    return tuple(ai - bi for ai, bi in zip(a, b))


def vec_add(a, b):
    return tuple(ai + bi for ai, bi in zip(a, b))


def vec_scale(s, a):
    return tuple(s * ai for ai in a)


def dot(a, b):
    return sum(ai * bi for ai, bi in zip(a, b))


def cross2(a, b):
    return a[0] * b[1] - a[1] * b[0]


def mat_vec(m, v):
    return tuple(dot(row, v) for row in m)


def mat_mat(a, b):
    bt = list(zip(*b))
    return tuple(tuple(dot(row, col) for col in bt) for row in a)


def mat_add(a, b):
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_scale(s, a):
    return tuple(tuple(s * x for x in row) for row in a)


def identity(n, one=ONE):
    z = one - one
    return tuple(tuple(one if i == j else z for j in range(n)) for i in range(n))


def solve_dense(a, b):
    """Solve a x = b by Gaussian elimination with partial pivoting.

    ``a`` is a square matrix, ``b`` a vector or a matrix (list of rows).
    Works for Fractions (exact) and floats.  Raises ValueError on a
    singular system.
    """
    n = len(a)
    many = isinstance(b[0], (list, tuple))
    rhs = [list(row) for row in b] if many else [[x] for x in b]
    m = [list(row) + rhs[i] for i, row in enumerate(a)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(m[r][col]))
        if m[piv][col] == 0:
            raise ValueError("singular system in solve_dense")
        m[col], m[piv] = m[piv], m[col]
        inv = m[col][col]
        for r in range(n):
            if r == col:
                continue
            f = m[r][col] / inv
            if f == 0:
                continue
            for c in range(col, len(m[r])):
                m[r][c] -= f * m[col][c]
    out = [[m[i][n + k] / m[i][i] for k in range(len(m[0]) - n)] for i in range(n)]
    if many:
        return [tuple(row) for row in out]
    return tuple(row[0] for row in out)


def lstsq_rows(rows, weights, ncols):
    """Solution operator of a weighted LS problem as a matrix.

    Returns C with shape (ncoef, npts) such that c = C u solves
    min sum_i w_i (rows_i . c - u_i)^2 for any data vector u.
    """
    npts = len(rows)
    ncoef = ncols
    ata = [[0] * ncoef for _ in range(ncoef)]
    for row, w in zip(rows, weights):
        for i in range(ncoef):
            wri = w * row[i]
            for j in range(i, ncoef):
                ata[i][j] += wri * row[j]
    for i in range(ncoef):
        for j in range(i):
            ata[i][j] = ata[j][i]
    # At W has shape (ncoef, npts)
    atw = [[weights[k] * rows[k][i] for k in range(npts)] for i in range(ncoef)]
    return solve_dense(ata, atw)
