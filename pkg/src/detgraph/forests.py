"""Spanning-tree and bounded-girth forest kernels.

The oriented edge space of a graph is R^m over the non-loop edges, each edge
given the orientation it was stored with. The star space (row space of the
incidence matrix) carries the uniform spanning tree as a determinantal
measure via the transfer current projection; the orthocomplement of the span
of short cycles gives the bounded-cycle forest measures, supported on
subgraphs whose girth exceeds the cycle-length cutoff.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .dpp import DeterminantalMeasure
from .errors import InvalidArgument, NumericalFailure
from .graphs import Graph, girth_upto, simple_cycles_upto
from .kernels import wilson_core
from .operators import OperatorMatrix
from .rng import as_stream
from .schreier import build_torus

RANK_TOL = 1e-9
ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class Subspace:
    """A linear subspace of R^ambient with an orthonormal basis as columns."""

    ambient: int
    basis: np.ndarray  # shape (ambient, dim)

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=np.float64)
        if b.ndim != 2 or b.shape[0] != self.ambient:
            raise InvalidArgument("basis must be ambient x dim")
        gram = b.T @ b
        if gram.size and np.max(np.abs(gram - np.eye(b.shape[1]))) > ORTHO_TOL:
            raise InvalidArgument("basis columns are not orthonormal within 1e-10")
        b = b.copy()
        b.flags.writeable = False
        object.__setattr__(self, "basis", b)

    @staticmethod
    def span(vectors, ambient: int) -> "Subspace":
        """Subspace spanned by the rows of `vectors` (rank tolerance 1e-9)."""
        arr = np.asarray(vectors, dtype=np.float64)
        if arr.size == 0:
            return Subspace(ambient, np.zeros((ambient, 0)))
        if arr.ndim != 2 or arr.shape[1] != ambient:
            raise InvalidArgument("spanning vectors must have ambient length")
        u, s, _ = np.linalg.svd(arr.T, full_matrices=False)
        rank = int(np.count_nonzero(s > RANK_TOL * s[0])) if s.size else 0
        return Subspace(ambient, u[:, :rank])

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projection(self) -> np.ndarray:
        p = self.basis @ self.basis.T
        return 0.5 * (p + p.T)

    def contains(self, vec, tol: float = RANK_TOL) -> bool:
        v = np.asarray(vec, dtype=np.float64)
        nrm = np.linalg.norm(v)
        if nrm == 0.0:
            return True
        resid = v - self.basis @ (self.basis.T @ v)
        return bool(np.linalg.norm(resid) <= tol * nrm)

    def contains_subspace(self, other: "Subspace", tol: float = RANK_TOL) -> bool:
        return all(self.contains(other.basis[:, j], tol) for j in range(other.dim))


@dataclass(frozen=True)
class OrientedEdgeSpace:
    """Non-loop edges with their stored orientations; rows of `incidence_rows`
    have -1 at the tail and +1 at the head."""

    graph: Graph
    edge_ids: Tuple[int, ...]
    incidence_rows: np.ndarray  # (m, |V|)

    @staticmethod
    def of(g: Graph) -> "OrientedEdgeSpace":
        ids = tuple(g.nonloop_edge_ids())
        rows = np.zeros((len(ids), g.num_vertices))
        for pos, e in enumerate(ids):
            u, v = g.edges[e]
            rows[pos, u] = -1.0
            rows[pos, v] = 1.0
        rows.flags.writeable = False
        return OrientedEdgeSpace(g, ids, rows)

    @property
    def dim(self) -> int:
        return len(self.edge_ids)

    def position_of(self, edge_id: int) -> int:
        try:
            return self.edge_ids.index(edge_id)
        except ValueError:
            raise InvalidArgument(f"edge {edge_id} is a loop or out of range") from None


def graph_spaces(g: Graph) -> Tuple[Subspace, Subspace]:
    """(star, cycle): the incidence row space and its orthocomplement."""
    space = OrientedEdgeSpace.of(g)
    m = space.dim
    if m == 0:
        return Subspace(0, np.zeros((0, 0))), Subspace(0, np.zeros((0, 0)))
    u, s, _ = np.linalg.svd(space.incidence_rows, full_matrices=True)
    rank = int(np.count_nonzero(s > RANK_TOL * s[0])) if s.size else 0
    star = Subspace(m, u[:, :rank])
    cycle = Subspace(m, u[:, rank:])
    return star, cycle


def bounded_cycle_space(g: Graph, max_len: int, budget: int = 10 ** 6) -> Subspace:
    """Span of signed indicators of simple cycles of length <= max_len,
    restricted to the non-loop edge coordinates."""
    if max_len < 0:
        raise InvalidArgument("cycle length cutoff must be nonnegative")
    space = OrientedEdgeSpace.of(g)
    vecs = simple_cycles_upto(g, max_len, budget=budget)
    if len(vecs) == 0:
        return Subspace(space.dim, np.zeros((space.dim, 0)))
    arr = np.asarray(vecs, dtype=np.float64)[:, list(space.edge_ids)]
    return Subspace.span(arr, space.dim)


def transfer_current(g: Graph) -> OperatorMatrix:
    """Projection onto the star space: Y = B L^+ B^T over non-loop edges.

    On a connected graph L^+ = (L + J/n)^{-1} - J/n. Idempotency beyond 1e-9
    is a numerical failure.
    """
    if not g.is_connected():
        raise InvalidArgument("graph must be connected")
    space = OrientedEdgeSpace.of(g)
    if space.dim == 0:
        raise InvalidArgument("graph must have at least one non-loop edge")
    n = g.num_vertices
    lap = space.incidence_rows.T @ space.incidence_rows
    jn = np.full((n, n), 1.0 / n)
    pinv = np.linalg.inv(lap + jn) - jn
    y = space.incidence_rows @ pinv @ space.incidence_rows.T
    y = 0.5 * (y + y.T)
    if np.max(np.abs(y @ y - y)) > 1e-9:
        raise NumericalFailure("transfer current is not idempotent within 1e-9")
    return OperatorMatrix(y, space.edge_ids, symmetric=True)


def ust_measure(g: Graph) -> DeterminantalMeasure:
    y = transfer_current(g)
    return DeterminantalMeasure(y.entries, y.ground_labels)


def wilson_sample(g: Graph, rng) -> Tuple[int, ...]:
    """Uniform spanning tree via loop-erased random walks; sorted edge ids."""
    if not g.is_connected():
        raise InvalidArgument("graph must be connected")
    n = g.num_vertices
    if n <= 1:
        return ()
    stream = as_stream(rng)
    ptr, nbr_v, nbr_e = g.adjacency_csr()
    tree, counter = wilson_core(
        ptr, nbr_v, nbr_e, n, 0, np.uint64(stream.key), np.uint64(stream.counter)
    )
    stream.counter = int(counter)
    return tuple(sorted(int(e) for e in tree))


def fsf_L_kernel(
    g: Graph,
    max_len: int,
    cycle_space: Optional[Subspace] = None,
    budget: int = 10 ** 6,
) -> DeterminantalMeasure:
    """Determinantal measure with kernel I - P onto the bounded cycle span.

    `cycle_space` overrides the enumerated span (used by the torus fast path);
    it must live in the same non-loop edge coordinates.
    """
    space = OrientedEdgeSpace.of(g)
    cs = cycle_space if cycle_space is not None else bounded_cycle_space(g, max_len, budget)
    if cs.ambient != space.dim:
        raise InvalidArgument("cycle space ambient does not match the edge space")
    kernel = np.eye(space.dim) - cs.projection()
    return DeterminantalMeasure(kernel, space.edge_ids)


def girth_check(edge_ids: Sequence[int], g: Graph, max_len: int) -> bool:
    """True iff the subgraph on `edge_ids` has no cycle of length <= max_len."""
    if max_len < 0:
        raise InvalidArgument("length cutoff must be nonnegative")
    return girth_upto(g, edge_ids, max_len) is None


def expected_degree(d: DeterminantalMeasure, g: Graph) -> float:
    """2 * (sum of inclusion probabilities) / |V| for a measure on edges of g."""
    if g.num_vertices == 0:
        raise InvalidArgument("graph has no vertices")
    return 2.0 * d.trace / g.num_vertices


# ---------------------------------------------------------------------------
# square-lattice torus experiment helpers
# ---------------------------------------------------------------------------

def torus_graph(n: int) -> Graph:
    """Underlying multigraph of the n x n torus (2n^2 edges for n >= 3)."""
    if n < 1:
        raise InvalidArgument("torus side must be positive")
    return build_torus([n, n]).underlying_graph()


def torus_square_cycle_space(g: Graph, n: int) -> Subspace:
    """Span of the n^2 unit-square cycles of the n x n torus (dimension n^2 - 1).

    Fast path for the length-4 cycle span used in the degree-limit experiment;
    cross-checked against full enumeration on small n in the test suite.
    """
    if n < 3:
        raise InvalidArgument("square fast path needs n >= 3 (no parallel edges)")
    space = OrientedEdgeSpace.of(g)
    marks = g.edge_marks if g.edge_marks is not None else (0,) * g.num_edges
    lookup: Dict[Tuple[int, int, int], Tuple[int, float]] = {}
    for pos, e in enumerate(space.edge_ids):
        u, v = g.edges[e]
        axis = 0 if marks[e] == 0 else 1
        lookup[(u, v, axis)] = (pos, 1.0)
        lookup[(v, u, axis)] = (pos, -1.0)

    def shift(v: int, axis: int) -> int:
        i, j = divmod(v, n)
        return ((i + 1) % n) * n + j if axis == 0 else i * n + (j + 1) % n

    vectors = np.zeros((n * n, space.dim))
    for v in range(n * n):
        a = shift(v, 0)
        b = shift(a, 1)
        c = shift(v, 1)
        for (x, y, axis) in ((v, a, 0), (a, b, 1), (b, c, 0), (c, v, 1)):
            pos, sign = lookup[(x, y, axis)]
            vectors[v, pos] += sign
    return Subspace.span(vectors, space.dim)


def degree_limit_rows(n_values: Sequence[int], max_len: int = 4) -> List[dict]:
    """Per-torus rows of the cycle-span dimension and expected forest degree."""
    rows = []
    for n in n_values:
        g = torus_graph(int(n))
        if max_len == 4 and n >= 3:
            cs = torus_square_cycle_space(g, int(n))
        else:
            cs = bounded_cycle_space(g, max_len)
        meas = fsf_L_kernel(g, max_len, cycle_space=cs)
        rows.append(
            {
                "n": int(n),
                "L": int(max_len),
                "num_edges": g.num_edges,
                "dim_cycle_span": cs.dim,
                "dim_per_vertex": cs.dim / g.num_vertices,
                "expected_degree": expected_degree(meas, g),
            }
        )
    return rows
