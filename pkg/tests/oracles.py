"""Independent reference implementations used by the test suite."""

from __future__ import annotations


def normal_equations_solve(A, b):
    """Solve ``A^H A x = A^H b`` by Gaussian elimination with partial pivoting.

    Pure Python on lists of complex numbers, so it shares no code path with
    the LAPACK-backed solver under test.
    """
    rows = len(A)
    n = len(A[0])
    M = [[0j] * (n + 1) for _ in range(n)]
    for i in range(n):
        for j in range(n):
            M[i][j] = sum(A[r][i].conjugate() * A[r][j] for r in range(rows))
        M[i][n] = sum(A[r][i].conjugate() * b[r] for r in range(rows))
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(M[r][col]))
        M[col], M[piv] = M[piv], M[col]
        for r in range(col + 1, n):
            f = M[r][col] / M[col][col]
            for c in range(col, n + 1):
                M[r][c] -= f * M[col][c]
    x = [0j] * n
    for i in reversed(range(n)):
        x[i] = (M[i][n] - sum(M[i][j] * x[j] for j in range(i + 1, n))) / M[i][i]
    return x
