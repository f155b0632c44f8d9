"""Small dense linear algebra on nested lists.

Entries may be floats or :class:`~vhckit.dual.Dual` numbers, which is why we
cannot defer to numpy here. Matrices in this toolkit are at most 3x3, so
Gaussian elimination with partial pivoting is plenty.
"""

from __future__ import annotations

from .dual import real


class SingularMatrixError(ArithmeticError):
    pass


def mat_vec(A, v):
    return [sum(A[i][j] * v[j] for j in range(len(v))) for i in range(len(A))]


def mat_mul(A, B):
    n, k, m = len(A), len(B), len(B[0])
    return [[sum(A[i][p] * B[p][j] for p in range(k)) for j in range(m)]
            for i in range(n)]


def transpose(A):
    return [list(col) for col in zip(*A)]


def solve(A, B):
    """Solve A X = B. ``B`` may be a vector or a matrix (list of rows)."""
    n = len(A)
    vector = not isinstance(B[0], (list, tuple))
    rhs = [[b] for b in B] if vector else [list(row) for row in B]
    m = len(rhs[0])
    a = [list(row) for row in A]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(real(a[r][col])))
        if real(a[piv][col]) == 0.0:
            raise SingularMatrixError("singular matrix in solve()")
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            rhs[col], rhs[piv] = rhs[piv], rhs[col]
        inv = 1.0 / a[col][col]
        for r in range(col + 1, n):
            f = a[r][col] * inv
            if real(f) == 0.0 and not _has_eps(f):
                continue
            for c in range(col + 1, n):
                a[r][c] = a[r][c] - f * a[col][c]
            for c in range(m):
                rhs[r][c] = rhs[r][c] - f * rhs[col][c]
    x = [[0.0] * m for _ in range(n)]
    for r in range(n - 1, -1, -1):
        inv = 1.0 / a[r][r]
        for c in range(m):
            s = rhs[r][c]
            for k in range(r + 1, n):
                s = s - a[r][k] * x[k][c]
            x[r][c] = s * inv
    if vector:
        return [row[0] for row in x]
    return x


def _has_eps(x):
    from .dual import Dual
    return isinstance(x, Dual)


def inverse(A):
    n = len(A)
    eye = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    return solve(A, eye)
