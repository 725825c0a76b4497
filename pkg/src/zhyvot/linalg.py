"""Gaussian elimination over exact fields (Fraction or QuadraticNumber entries)."""

from __future__ import annotations

from fractions import Fraction


def rref(rows):
    """Reduced row echelon form; returns (matrix, pivot columns)."""
    m = [list(r) for r in rows]
    if not m:
        return m, []
    ncols = len(m[0])
    pivots, r = [], 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c] if not isinstance(m[r][c], int) else Fraction(1, m[r][c])
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def nullspace(rows, ncols=None):
    """Basis of {x : rows @ x = 0}, one vector per free column."""
    if ncols is None:
        ncols = len(rows[0])
    if not rows:
        return [[Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    m, pivots = rref(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fcol in free:
        x = [Fraction(0)] * ncols
        x[fcol] = Fraction(1)
        for i, pc in enumerate(pivots):
            x[pc] = -m[i][fcol]
        basis.append(x)
    return basis


def solve(A, b):
    """Unique solution of A x = b; raises ValueError if singular or inconsistent."""
    n = len(A)
    aug = [list(A[i]) + [b[i]] for i in range(n)]
    m, pivots = rref(aug)
    if pivots != list(range(len(A[0]))):
        raise ValueError("singular system")
    return [m[i][-1] for i in range(len(A[0]))]
