"""Exact integer linear algebra: Hermite and Smith normal forms.

All routines work on lists of lists of Python ints, so entries may grow
without overflow during elimination.  Matrices here are tiny (rows and
columns number in the tens), so asymptotics do not matter; determinism
does.  Pivoting rules are fixed: scan top-to-bottom, left-to-right, and
among candidate pivots take the one of smallest absolute value, breaking
ties by position.
"""

from __future__ import annotations


def _copy(mat):
    return [list(row) for row in mat]


def _identity(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def _row_sub(mat, i, j, q):
    row_i, row_j = mat[i], mat[j]
    for k in range(len(row_i)):
        row_i[k] -= q * row_j[k]


def hermite_normal_form(mat):
    """Row-style Hermite normal form.

    Returns (H, U) with U unimodular and U @ mat == H.  H is in row
    echelon form with positive pivots and entries above each pivot
    reduced to the range [0, pivot).
    """
    H = _copy(mat)
    m = len(H)
    n = len(H[0]) if m else 0
    U = _identity(m)

    pivot_row = 0
    for col in range(n):
        if pivot_row == m:
            break
        while True:
            best = None
            for i in range(pivot_row, m):
                v = H[i][col]
                if v != 0 and (best is None or abs(v) < abs(H[best][col])):
                    best = i
            if best is None:
                break
            if best != pivot_row:
                H[pivot_row], H[best] = H[best], H[pivot_row]
                U[pivot_row], U[best] = U[best], U[pivot_row]
            p = H[pivot_row][col]
            clean = True
            for i in range(pivot_row + 1, m):
                if H[i][col] != 0:
                    q = H[i][col] // p
                    _row_sub(H, i, pivot_row, q)
                    _row_sub(U, i, pivot_row, q)
                    if H[i][col] != 0:
                        clean = False
            if clean:
                break
        if H[pivot_row][col] == 0:
            continue
        if H[pivot_row][col] < 0:
            H[pivot_row] = [-v for v in H[pivot_row]]
            U[pivot_row] = [-v for v in U[pivot_row]]
        p = H[pivot_row][col]
        for i in range(pivot_row):
            q = H[i][col] // p
            if q:
                _row_sub(H, i, pivot_row, q)
                _row_sub(U, i, pivot_row, q)
        pivot_row += 1
    return H, U


def rank(mat):
    H, _ = hermite_normal_form(mat)
    return sum(1 for row in H if any(row))


def kernel_basis(mat):
    """Basis of the integer kernel {x : mat @ x == 0}.

    The returned rows span the full kernel lattice (saturated: every
    integer kernel vector is an integer combination of them).
    """
    m = len(mat)
    n = len(mat[0]) if m else 0
    if m == 0 or n == 0:
        return _identity(n)
    # Row-reduce the transpose; U rows that map to zero rows of H are
    # exactly the kernel of the original matrix acting on column vectors.
    transposed = [[mat[i][j] for i in range(m)] for j in range(n)]
    H, U = hermite_normal_form(transposed)
    return [list(U[i]) for i in range(n) if not any(H[i])]


def solve_in_lattice(basis, target):
    """Integer coefficients c with sum_i c_i * basis_i == target, or None."""
    rows = [list(b) for b in basis]
    m = len(rows)
    if m == 0:
        return [] if not any(target) else None
    H, U = hermite_normal_form(rows)
    t = list(target)
    coeff_h = [0] * m
    for i, row in enumerate(H):
        lead = _leading_index(row)
        if lead is None:
            continue
        if t[lead] == 0:
            continue
        if t[lead] % row[lead] != 0:
            return None
        q = t[lead] // row[lead]
        for k in range(len(t)):
            t[k] -= q * row[k]
        coeff_h[i] = q
    if any(t):
        return None
    out = [0] * m
    for i, c in enumerate(coeff_h):
        if c:
            for k in range(m):
                out[k] += c * U[i][k]
    return out


def _leading_index(row):
    for k, v in enumerate(row):
        if v != 0:
            return k
    return None


def smith_normal_form(mat):
    """Smith normal form.  Returns (diag, U, V) with U @ mat @ V diagonal.

    `diag` holds the diagonal entries: non-negative, each dividing the
    next, with zeros trailing.  U and V are unimodular.
    """
    A = _copy(mat)
    m = len(A)
    n = len(A[0]) if m else 0
    U = _identity(m)
    V = _identity(n)

    def col_sub(j, k, q):
        for i in range(m):
            A[i][j] -= q * A[i][k]
        for i in range(n):
            V[i][j] -= q * V[i][k]

    def col_swap(j, k):
        for i in range(m):
            A[i][j], A[i][k] = A[i][k], A[i][j]
        for i in range(n):
            V[i][j], V[i][k] = V[i][k], V[i][j]

    def diagonalize():
        t = 0
        while t < min(m, n):
            best = None
            for i in range(t, m):
                for j in range(t, n):
                    v = A[i][j]
                    if v != 0 and (best is None or abs(v) < abs(A[best[0]][best[1]])):
                        best = (i, j)
            if best is None:
                break
            bi, bj = best
            if bi != t:
                A[t], A[bi] = A[bi], A[t]
                U[t], U[bi] = U[bi], U[t]
            if bj != t:
                col_swap(t, bj)
            while True:
                p = A[t][t]
                moved = False
                for i in range(t + 1, m):
                    if A[i][t] != 0:
                        q = A[i][t] // p
                        _row_sub(A, i, t, q)
                        _row_sub(U, i, t, q)
                        if A[i][t] != 0:
                            A[t], A[i] = A[i], A[t]
                            U[t], U[i] = U[i], U[t]
                            moved = True
                            break
                if moved:
                    continue
                for j in range(t + 1, n):
                    if A[t][j] != 0:
                        q = A[t][j] // p
                        col_sub(j, t, q)
                        if A[t][j] != 0:
                            col_swap(t, j)
                            moved = True
                            break
                if not moved:
                    break
            if A[t][t] < 0:
                for i in range(m):
                    A[i][t] = -A[i][t]
                for i in range(n):
                    V[i][t] = -V[i][t]
            t += 1
        return t

    r = diagonalize()
    # enforce d_i | d_{i+1}; mixing column i+1 into column i breaks the
    # diagonal locally, so rediagonalize until stable (terminates since
    # gcds strictly divide)
    while True:
        bad = None
        for i in range(r - 1):
            if A[i][i] != 0 and A[i + 1][i + 1] % A[i][i] != 0:
                bad = i
                break
        if bad is None:
            break
        col_sub(bad, bad + 1, -1)
        r = diagonalize()

    diag = [A[i][i] for i in range(min(m, n))]
    return diag, U, V


def invariant_factors(mat):
    """Nonzero diagonal entries of the Smith normal form."""
    diag, _, _ = smith_normal_form(mat)
    return [d for d in diag if d != 0]
