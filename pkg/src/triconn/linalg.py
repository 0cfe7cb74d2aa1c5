"""Small dense-matrix helpers shared by the curvature and holonomy code.

Matrices are lists of row lists.  Entries may be Fraction, complex, or plain
int (0/1 from identities mix transparently with both scalar models).
Pivoting uses exact nonzero tests for rationals and largest-modulus pivots
for complex.
"""


def identity(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def mat_mul(a, b):
    rows, inner, cols = len(a), len(b), len(b[0])
    out = []
    for i in range(rows):
        row_a = a[i]
        row = []
        for j in range(cols):
            acc = row_a[0] * b[0][j]
            for k in range(1, inner):
                acc += row_a[k] * b[k][j]
            row.append(acc)
        out.append(row)
    return out


def mat_vec(a, v):
    out = []
    for row in a:
        acc = row[0] * v[0]
        for k in range(1, len(v)):
            acc += row[k] * v[k]
        out.append(acc)
    return out


def mat_close(a, b, field, tol):
    from .field import close
    return all(
        close(a[i][j], b[i][j], field, tol)
        for i in range(len(a))
        for j in range(len(a[0]))
    )


def permutation_matrix(perm):
    """Matrix P with P[perm[j]][j] = 1: sends slot j to slot perm[j]."""
    n = len(perm)
    out = [[0] * n for _ in range(n)]
    for j in range(n):
        out[perm[j]][j] = 1
    return out


def det(matrix):
    """Determinant by Gaussian elimination (exact for Fraction entries)."""
    n = len(matrix)
    m = [list(row) for row in matrix]
    result = 1
    for col in range(n):
        pivot = None
        best = None
        for r in range(col, n):
            entry = m[r][col]
            if entry != 0:
                size = abs(entry)
                if best is None or size > best:
                    best = size
                    pivot = r
        if pivot is None:
            return 0 * m[0][0]
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            result = -result
        result = result * m[col][col]
        inv = 1 / m[col][col]
        for r in range(col + 1, n):
            factor = m[r][col] * inv
            if factor != 0:
                m[r] = [a - factor * b for a, b in zip(m[r], m[col])]
    return result


def kernel_vector(rows_in, ncols):
    """Spanning vector of a one-dimensional kernel, or None.

    Returns None when the kernel is trivial or has dimension above one
    (i.e. the matrix does not have rank ncols-1).
    """
    rows = [list(r) for r in rows_in]
    nrows = len(rows)
    pivots = {}
    rank = 0
    for col in range(ncols):
        pivot = None
        best = None
        for r in range(rank, nrows):
            entry = rows[r][col]
            if entry != 0:
                size = abs(entry)
                if best is None or size > best:
                    best = size
                    pivot = r
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inv = 1 / rows[rank][col]
        rows[rank] = [a * inv for a in rows[rank]]
        for r in range(nrows):
            if r != rank and rows[r][col] != 0:
                factor = rows[r][col]
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[rank])]
        pivots[col] = rank
        rank += 1
    free = [c for c in range(ncols) if c not in pivots]
    if len(free) != 1:
        return None
    fc = free[0]
    vec = [None] * ncols
    vec[fc] = 1
    for col, r in pivots.items():
        vec[col] = -rows[r][fc]
    return vec
