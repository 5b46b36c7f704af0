"""Small exact linear algebra over the rationals (fractions.Fraction)."""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .multigraph import Multigraph, require_connected


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)  # exact binary value of a float


def rref(rows: Sequence[Sequence[Fraction]], ncols: int | None = None):
    """Reduced row echelon form; returns (matrix, pivot columns)."""
    M = [[to_fraction(x) for x in r] for r in rows]
    if ncols is None:
        ncols = len(M[0]) if M else 0
    pivots = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        inv = 1 / M[r][c]
        M[r] = [x * inv for x in M[r]]
        piv = M[r]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                row = M[i]
                M[i] = [a - f * b for a, b in zip(row, piv)]
        pivots.append(c)
        r += 1
        if r == len(M):
            break
    return M, pivots


def nullspace(rows: Sequence[Sequence[Fraction]], ncols: int) -> list[list[Fraction]]:
    """Basis (as columns, returned as lists) of {x : A x = 0}."""
    if not rows:
        return [[Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    R, pivots = rref(rows, ncols)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for i, c in enumerate(pivots):
            v[c] = -R[i][f]
        basis.append(v)
    return basis


def solve(A: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> list[Fraction] | None:
    """A particular solution of A x = b, or None when inconsistent."""
    n = len(A[0]) if A else 0
    aug = [list(r) + [to_fraction(bi)] for r, bi in zip(A, b)]
    R, pivots = rref(aug, n + 1)
    if n in pivots:
        return None
    x = [Fraction(0)] * n
    for i, c in enumerate(pivots):
        x[c] = R[i][n]
    return x


def dot(a, b) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def exact_effective_resistance(g: Multigraph, sigma=None) -> list[Fraction]:
    """Effective resistances with rational conductances (default all ones).

    Grounds the last vertex and solves the reduced Laplacian exactly.
    """
    require_connected(g)
    n, m = g.n_vertices, g.n_edges
    s = [Fraction(1)] * m if sigma is None else [to_fraction(x) for x in sigma]
    L = [[Fraction(0)] * n for _ in range(n)]
    for w, (a, b) in zip(s, g.edge_index_pairs):
        L[a][a] += w
        L[b][b] += w
        L[a][b] -= w
        L[b][a] -= w
    k = n - 1
    red = [row[:k] for row in L[:k]]
    # invert the grounded Laplacian once, then read off quadratic forms
    eye = [[Fraction(int(i == j)) for j in range(k)] for i in range(k)]
    R, _ = rref([red[i] + eye[i] for i in range(k)], 2 * k)
    inv = [row[k:] for row in R]
    out = []
    for a, b in g.edge_index_pairs:
        def entry(i, j):
            return inv[i][j] if i < k and j < k else Fraction(0)
        out.append(entry(a, a) + entry(b, b) - entry(a, b) - entry(b, a))
    return out
