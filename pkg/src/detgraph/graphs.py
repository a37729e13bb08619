"""Finite undirected multigraphs with loops, plus the small amount of graph
machinery the rest of the package needs: incidence/Laplacian matrices, BFS
distances, bounded simple-cycle enumeration, subdivision, wired contraction,
and girth checks.

Edges are identified by their index in ``edges``; parallel edges are separate
entries and loops have equal endpoints. Edge order is part of the data (kernels
and CSV artifacts are indexed by it), so every constructor is deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .errors import CapacityExceeded, InvalidArgument

Edge = Tuple[int, int]


@dataclass(frozen=True)
class Graph:
    num_vertices: int
    edges: Tuple[Edge, ...]
    vertex_marks: Optional[Tuple[object, ...]] = None
    edge_marks: Optional[Tuple[object, ...]] = None

    def __post_init__(self):
        if self.num_vertices < 0:
            raise InvalidArgument("num_vertices must be nonnegative")
        for (u, v) in self.edges:
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise InvalidArgument(f"edge ({u},{v}) out of range")
        if self.vertex_marks is not None and len(self.vertex_marks) != self.num_vertices:
            raise InvalidArgument("vertex_marks length mismatch")
        if self.edge_marks is not None and len(self.edge_marks) != len(self.edges):
            raise InvalidArgument("edge_marks length mismatch")

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def loop_edge_ids(self) -> list:
        return [i for i, (u, v) in enumerate(self.edges) if u == v]

    def nonloop_edge_ids(self) -> list:
        return [i for i, (u, v) in enumerate(self.edges) if u != v]

    def degrees(self) -> np.ndarray:
        """Vertex degrees; loops count twice."""
        d = np.zeros(self.num_vertices, dtype=np.int64)
        for (u, v) in self.edges:
            d[u] += 1
            d[v] += 1
        return d

    def incidence(self) -> np.ndarray:
        """|V| x |E| signed incidence; +1 at head v, -1 at tail u, loops zero."""
        n = np.zeros((self.num_vertices, len(self.edges)))
        for i, (u, v) in enumerate(self.edges):
            if u != v:
                n[v, i] += 1.0
                n[u, i] -= 1.0
        return n

    def laplacian(self) -> np.ndarray:
        ninc = self.incidence()
        return ninc @ ninc.T

    def adjacency_csr(self):
        """Non-loop incidence CSR: (ptr, neighbor vertex, edge id) flat arrays."""
        deg = np.zeros(self.num_vertices, dtype=np.int64)
        for (u, v) in self.edges:
            if u != v:
                deg[u] += 1
                deg[v] += 1
        ptr = np.zeros(self.num_vertices + 1, dtype=np.int64)
        np.cumsum(deg, out=ptr[1:])
        nbr_v = np.empty(ptr[-1], dtype=np.int64)
        nbr_e = np.empty(ptr[-1], dtype=np.int64)
        fill = ptr[:-1].copy()
        for i, (u, v) in enumerate(self.edges):
            if u == v:
                continue
            nbr_v[fill[u]] = v
            nbr_e[fill[u]] = i
            fill[u] += 1
            nbr_v[fill[v]] = u
            nbr_e[fill[v]] = i
            fill[v] += 1
        return ptr, nbr_v, nbr_e

    def components(self) -> Tuple[int, np.ndarray]:
        """(count, label array) of connected components."""
        ptr, nbr_v, _ = self.adjacency_csr()
        label = np.full(self.num_vertices, -1, dtype=np.int64)
        comp = 0
        for s in range(self.num_vertices):
            if label[s] >= 0:
                continue
            stack = [s]
            label[s] = comp
            while stack:
                v = stack.pop()
                for k in range(ptr[v], ptr[v + 1]):
                    w = nbr_v[k]
                    if label[w] < 0:
                        label[w] = comp
                        stack.append(w)
            comp += 1
        return comp, label

    def is_connected(self) -> bool:
        return self.num_vertices <= 1 or self.components()[0] == 1

    def bfs_distances(self, source: int) -> np.ndarray:
        ptr, nbr_v, _ = self.adjacency_csr()
        dist = np.full(self.num_vertices, -1, dtype=np.int64)
        dist[source] = 0
        queue = [source]
        while queue:
            nxt = []
            for v in queue:
                for k in range(ptr[v], ptr[v + 1]):
                    w = nbr_v[k]
                    if dist[w] < 0:
                        dist[w] = dist[v] + 1
                        nxt.append(w)
            queue = nxt
        return dist

    def to_json(self) -> str:
        payload = {
            "edges": [[int(u), int(v)] for (u, v) in self.edges],
            "num_vertices": self.num_vertices,
        }
        if self.vertex_marks is not None:
            payload["vertex_marks"] = list(self.vertex_marks)
        if self.edge_marks is not None:
            payload["edge_marks"] = list(self.edge_marks)
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @staticmethod
    def from_json(text: str) -> "Graph":
        data = json.loads(text)
        marks = data.get("vertex_marks")
        emarks = data.get("edge_marks")

        def _freeze(m):
            return tuple(tuple(x) if isinstance(x, list) else x for x in m) if m is not None else None

        return Graph(
            num_vertices=int(data["num_vertices"]),
            edges=tuple((int(u), int(v)) for u, v in data["edges"]),
            vertex_marks=_freeze(marks),
            edge_marks=_freeze(emarks),
        )


# -- constructors -----------------------------------------------------------

def complete_graph(n: int) -> Graph:
    return Graph(n, tuple((u, v) for u in range(n) for v in range(u + 1, n)))


def cycle_graph(n: int) -> Graph:
    if n < 1:
        raise InvalidArgument("cycle needs at least one vertex")
    if n == 1:
        return Graph(1, ((0, 0),))
    if n == 2:
        return Graph(2, ((0, 1), (0, 1)))
    return Graph(n, tuple((i, (i + 1) % n) for i in range(n)))


def path_graph(n: int) -> Graph:
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)))


def grid_graph(rows: int, cols: int) -> Graph:
    """rows x cols grid (no wrap-around)."""
    vid = lambda r, c: r * cols + c
    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((vid(r, c), vid(r, c + 1)))
            if r + 1 < rows:
                edges.append((vid(r, c), vid(r + 1, c)))
    return Graph(rows * cols, tuple(edges))


def subdivide(g: Graph) -> Graph:
    """Insert a midpoint vertex on every edge.

    The new vertex for edge e is |V| + e; it inherits e's mark and carries a
    second coordinate 1 so subdivision vertices are distinguishable from the
    originals (which get second coordinate 0). |V'| = |V| + |E|, |E'| = 2|E|.
    """
    n = g.num_vertices
    edges = []
    for i, (u, v) in enumerate(g.edges):
        x = n + i
        edges.append((u, x))
        edges.append((x, v))
    vmarks = list(g.vertex_marks) if g.vertex_marks is not None else [0] * n
    emarks = list(g.edge_marks) if g.edge_marks is not None else [0] * len(g.edges)
    marks = tuple((m, 0) for m in vmarks) + tuple((m, 1) for m in emarks)
    return Graph(n + len(g.edges), tuple(edges), vertex_marks=marks)


def wired_contraction(g: Graph, boundary: Iterable[int]) -> Tuple[Graph, np.ndarray]:
    """Merge `boundary` into a single vertex; keep parallel edges, drop the
    loops this creates (and any pre-existing loops inside the boundary).

    Returns (contracted graph, vertex map old->new). The wired vertex is 0.
    """
    bset = sorted(set(int(b) for b in boundary))
    if not bset:
        raise InvalidArgument("boundary must be nonempty")
    for b in bset:
        if not (0 <= b < g.num_vertices):
            raise InvalidArgument(f"boundary vertex {b} out of range")
    vmap = np.empty(g.num_vertices, dtype=np.int64)
    nxt = 1
    inb = set(bset)
    for v in range(g.num_vertices):
        if v in inb:
            vmap[v] = 0
        else:
            vmap[v] = nxt
            nxt += 1
    edges = []
    for (u, v) in g.edges:
        uu, vv = int(vmap[u]), int(vmap[v])
        if uu == vv:
            continue
        edges.append((uu, vv))
    return Graph(nxt, tuple(edges)), vmap


# -- bounded cycle enumeration ----------------------------------------------

def simple_cycles_upto(g: Graph, max_len: int, budget: int = 10 ** 6):
    """Signed indicator vectors (in R^{|E|}) of all simple cycles of length
    <= max_len, each exactly once.

    A cycle is rooted at its minimum edge id e0 = (u, v), traversed u -> v, and
    closed by a simple path v -> u through edges with larger ids; this yields
    one canonical traversal per cycle. Loops are length-1 cycles with a bare
    unit vector. `budget` caps DFS expansions; beyond it CapacityExceeded.
    """
    ne = g.num_edges
    inc = [[] for _ in range(g.num_vertices)]
    for i, (u, v) in enumerate(g.edges):
        if u != v:
            inc[u].append((i, v, 1.0))
            inc[v].append((i, u, -1.0))
    vecs = []
    steps = 0
    for e0, (u0, v0) in enumerate(g.edges):
        if u0 == v0:
            if max_len >= 1:
                w = np.zeros(ne)
                w[e0] = 1.0
                vecs.append(w)
            continue
        if max_len < 2:
            continue
        # DFS over simple paths v0 -> u0 with edge ids > e0
        stack = [(v0, (e0,), (1.0,), frozenset((u0, v0)))]
        while stack:
            v, pe, ps, used = stack.pop()
            steps += 1
            if steps > budget:
                raise CapacityExceeded(
                    f"cycle enumeration exceeded budget {budget}"
                )
            for (i, t, s) in inc[v]:
                if i <= e0 or i in pe:
                    continue
                if t == u0:
                    w = np.zeros(ne)
                    for j, sg in zip(pe + (i,), ps + (s,)):
                        w[j] = sg
                    vecs.append(w)
                    if len(vecs) > budget:
                        raise CapacityExceeded(
                            f"cycle enumeration found more than {budget} cycles"
                        )
                elif t not in used and len(pe) + 1 < max_len:
                    stack.append((t, pe + (i,), ps + (s,), used | {t}))
    return vecs


def girth_upto(g: Graph, edge_ids: Sequence[int], max_len: int) -> Optional[int]:
    """Length of a shortest cycle of length <= max_len in the subgraph spanned
    by `edge_ids`, or None if there is none.

    Loops are 1-cycles and parallel edges form 2-cycles. Longer cycles are
    found by per-vertex truncated BFS.
    """
    ids = sorted(set(int(e) for e in edge_ids))
    for e in ids:
        if not (0 <= e < g.num_edges):
            raise InvalidArgument(f"edge id {e} out of range")
    pairs = {}
    best = None
    for e in ids:
        u, v = g.edges[e]
        if u == v:
            return 1 if max_len >= 1 else None
        key = (min(u, v), max(u, v))
        if key in pairs and max_len >= 2:
            best = 2
        pairs.setdefault(key, e)
    if best is not None:
        return best

    # BFS girth on the deduplicated simple graph (cycles of length >= 3);
    # min over all roots of dist[x] + dist[y] + 1 at non-tree collisions is
    # the exact girth, and every candidate certifies a cycle of at most that
    # length, so the <= max_len decision is exact.
    adj = {}
    for e in ids:
        u, v = g.edges[e]
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    adj = {v: sorted(ws) for v, ws in adj.items()}
    shortest = None
    for root in sorted(adj):
        dist = {root: 0}
        par = {root: -1}
        queue = [root]
        level = 0
        while queue and 2 * level <= max_len:
            nxt = []
            for x in queue:
                for y in adj[x]:
                    if y == par[x]:
                        continue
                    if y in dist:
                        cyc = dist[x] + dist[y] + 1
                        if shortest is None or cyc < shortest:
                            shortest = cyc
                    else:
                        dist[y] = dist[x] + 1
                        par[y] = x
                        nxt.append(y)
            queue = nxt
            level += 1
    if shortest is not None and shortest <= max_len:
        return int(shortest)
    return None
