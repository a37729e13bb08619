"""Exact rational linear algebra used as an independent oracle.

Everything here runs in `fractions.Fraction` arithmetic, so results are exact
and suitable for validating the floating-point routes. Determinant-based
probability computations are capped at ground sets of size 12 (the table and
cylinder routes grow exponentially / cubically in exact arithmetic).
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Sequence, Tuple

from .errors import CapacityExceeded, InvalidArgument
from .graphs import Graph

EXACT_GROUND_CAP = 12

FracMatrix = List[List[Fraction]]


def _as_frac_matrix(mat) -> FracMatrix:
    return [[Fraction(x) for x in row] for row in mat]


def frac_det(mat: Sequence[Sequence[Fraction]]) -> Fraction:
    """Determinant by fraction-exact Gaussian elimination."""
    n = len(mat)
    a = [list(row) for row in mat]
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            det = -det
        det *= a[col][col]
        inv = Fraction(1) / a[col][col]
        for r in range(col + 1, n):
            if a[r][col] == 0:
                continue
            factor = a[r][col] * inv
            for c in range(col, n):
                a[r][c] -= factor * a[col][c]
    return det


def frac_inv(mat: Sequence[Sequence[Fraction]]) -> FracMatrix:
    """Inverse by Gauss-Jordan elimination; InvalidArgument if singular."""
    n = len(mat)
    a = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(mat)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            raise InvalidArgument("matrix is singular")
        a[col], a[pivot] = a[pivot], a[col]
        inv = Fraction(1) / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                factor = a[r][col]
                a[r] = [x - factor * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


def rational_laplacian_pinv(g: Graph) -> FracMatrix:
    """Moore-Penrose pseudoinverse of the Laplacian of a connected graph.

    On a connected graph the Laplacian's null space is the constants, so
    L⁺ = (L + J/n)⁻¹ − J/n with J the all-ones matrix.
    """
    if not g.is_connected():
        raise InvalidArgument("graph must be connected")
    n = g.num_vertices
    lap = [[Fraction(0)] * n for _ in range(n)]
    for (u, v) in g.edges:
        if u == v:
            continue
        lap[u][u] += 1
        lap[v][v] += 1
        lap[u][v] -= 1
        lap[v][u] -= 1
    jn = Fraction(1, n)
    shifted = [[lap[i][j] + jn for j in range(n)] for i in range(n)]
    inv = frac_inv(shifted)
    return [[inv[i][j] - jn for j in range(n)] for i in range(n)]


def rational_transfer_current(g: Graph) -> FracMatrix:
    """Exact transfer current matrix Y[e,f] over all edges (loops give zeros)."""
    n = g.num_vertices
    m = g.num_edges
    pinv = rational_laplacian_pinv(g)
    cols: List[List[Fraction]] = []
    for (u, v) in g.edges:
        col = [Fraction(0)] * n
        if u != v:
            col[u] += 1
            col[v] -= 1
        cols.append(col)
    out = [[Fraction(0)] * m for _ in range(m)]
    for e in range(m):
        tmp = [sum(pinv[i][j] * cols[e][j] for j in range(n)) for i in range(n)]
        for f in range(m):
            out[f][e] = sum(cols[f][i] * tmp[i] for i in range(n))
    return out


def rational_cylinder(q: Sequence[Sequence[Fraction]], include: Sequence[int], exclude: Sequence[int]) -> Fraction:
    """P[include ⊆ 𝔄, exclude ∩ 𝔄 = ∅] = (−1)^{|C|} det[(Q − I_C)↾(A∪C)]."""
    a = sorted(include)
    c = sorted(exclude)
    if set(a) & set(c):
        raise InvalidArgument("include and exclude sets overlap")
    idx = a + c
    if len(idx) > EXACT_GROUND_CAP:
        raise CapacityExceeded(f"exact cylinder limited to {EXACT_GROUND_CAP} indices")
    cset = set(c)
    sub = [
        [q[i][j] - (1 if (i == j and i in cset) else 0) for j in idx]
        for i in idx
    ]
    sign = -1 if len(c) % 2 else 1
    return sign * frac_det(sub)


def rational_distribution(q: Sequence[Sequence[Fraction]]) -> Dict[int, Fraction]:
    """Exact law over subsets (bitmask keyed), via full-size signed determinants."""
    n = len(q)
    if n > EXACT_GROUND_CAP:
        raise CapacityExceeded(f"exact distribution limited to {EXACT_GROUND_CAP} indices")
    table: Dict[int, Fraction] = {}
    for mask in range(1 << n):
        inc = [i for i in range(n) if mask >> i & 1]
        exc = [i for i in range(n) if not mask >> i & 1]
        table[mask] = rational_cylinder(q, inc, exc)
    return table


def spanning_tree_count(g: Graph) -> int:
    """Matrix-tree count: determinant of the Laplacian with row/col 0 removed."""
    n = g.num_vertices
    if n == 0:
        raise InvalidArgument("graph has no vertices")
    if n == 1:
        return 1
    lap = [[Fraction(0)] * n for _ in range(n)]
    for (u, v) in g.edges:
        if u == v:
            continue
        lap[u][u] += 1
        lap[v][v] += 1
        lap[u][v] -= 1
        lap[v][u] -= 1
    reduced = [row[1:] for row in lap[1:]]
    det = frac_det(reduced)
    if det.denominator != 1:
        raise InvalidArgument("matrix-tree determinant is not an integer")
    return int(det)


def enumerate_spanning_trees(g: Graph) -> List[frozenset]:
    """All spanning trees as frozensets of edge ids (brute force, small graphs)."""
    n = g.num_vertices
    ids = [e for e in range(g.num_edges) if g.edges[e][0] != g.edges[e][1]]
    if n - 1 > len(ids):
        return []
    trees = []
    for combo in combinations(ids, n - 1):
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        acyclic = True
        for e in combo:
            u, v = g.edges[e]
            ru, rv = find(u), find(v)
            if ru == rv:
                acyclic = False
                break
            parent[ru] = rv
        if acyclic:
            trees.append(frozenset(combo))
    return trees
