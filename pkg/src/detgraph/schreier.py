"""S-labelled Schreier graphs.

A Schreier graph here is a finite vertex set with one permutation action per
symbol in a generator set S, where S carries an involution pairing each symbol
with its inverse and the inverse symbol acts by the inverse permutation. Every
vertex then has exactly one outgoing and one incoming edge per symbol.

Provided operations: torus quotients of Z^d, uniformly random Schreier graphs
(independent uniform permutations per free symbol), the greedy random-priority
labelling that turns an arbitrary bounded-degree multigraph into a Schreier
graph over self-inverse symbols (padding with flagged loops), edge subdivision,
exact local ball statistics with canonical ball classes, and total-variation
distance between ball statistics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidArgument
from .graphs import Graph, subdivide as _graph_subdivide
from .rng import as_stream

_LETTERS = "stuvwxyzabcdefghijklmnopqr"


@dataclass(frozen=True)
class GeneratorSet:
    """Symbol names plus the involution pairing each symbol with its inverse."""

    symbols: Tuple[str, ...]
    involution: Tuple[int, ...]

    def __post_init__(self):
        k = len(self.symbols)
        if len(set(self.symbols)) != k:
            raise InvalidArgument("symbol names must be distinct")
        if sorted(self.involution) != list(range(k)):
            raise InvalidArgument("involution must be a permutation of symbol indices")
        for i, j in enumerate(self.involution):
            if self.involution[j] != i:
                raise InvalidArgument("involution must be an involution")

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index(self, name: str) -> int:
        try:
            return self.symbols.index(name)
        except ValueError:
            raise InvalidArgument(f"unknown symbol {name!r}") from None

    def inverse(self, idx: int) -> int:
        return self.involution[idx]

    def word_indices(self, word: str) -> Tuple[int, ...]:
        """Translate a letter string into symbol indices.

        Lowercase letters name symbols directly; an uppercase letter means the
        involution of the corresponding lowercase symbol.
        """
        out = []
        for ch in word:
            if ch.islower():
                out.append(self.index(ch))
            elif ch.isupper():
                out.append(self.involution[self.index(ch.lower())])
            else:
                raise InvalidArgument(f"invalid word character {ch!r}")
        return tuple(out)


def paired_generators(k: int) -> GeneratorSet:
    """k generator/inverse pairs named s,S,t,T,... (2k symbols)."""
    if not (1 <= k <= len(_LETTERS)):
        raise InvalidArgument(f"k must be in 1..{len(_LETTERS)}")
    symbols = []
    involution = []
    for i in range(k):
        symbols.append(_LETTERS[i])
        symbols.append(_LETTERS[i].upper())
        involution.extend([2 * i + 1, 2 * i])
    return GeneratorSet(tuple(symbols), tuple(involution))


def self_inverse_generators(k: int) -> GeneratorSet:
    """k self-inverse symbols named s,t,u,... (identity involution)."""
    if not (1 <= k <= len(_LETTERS)):
        raise InvalidArgument(f"k must be in 1..{len(_LETTERS)}")
    return GeneratorSet(tuple(_LETTERS[:k]), tuple(range(k)))


@dataclass(frozen=True)
class SchreierGraph:
    generators: GeneratorSet
    actions: Tuple[Tuple[int, ...], ...]
    vertex_marks: Tuple[int, ...]
    loop_flags: frozenset  # of (symbol index, vertex) pairs

    def __post_init__(self):
        k = self.generators.size
        if len(self.actions) != k:
            raise InvalidArgument("one action per symbol required")
        n = self.num_vertices
        rng_n = list(range(n))
        for s, act in enumerate(self.actions):
            if sorted(act) != rng_n:
                raise InvalidArgument(f"action of symbol {s} is not a permutation")
        for s in range(k):
            inv = self.generators.involution[s]
            fwd = self.actions[s]
            bwd = self.actions[inv]
            for v in range(n):
                if bwd[fwd[v]] != v:
                    raise InvalidArgument(
                        f"action of symbol {inv} is not inverse to symbol {s}"
                    )
        if len(self.vertex_marks) != n:
            raise InvalidArgument("vertex_marks length mismatch")
        for (s, v) in self.loop_flags:
            if not (0 <= s < k and 0 <= v < n):
                raise InvalidArgument("loop flag out of range")
            if self.actions[s][v] != v:
                raise InvalidArgument(f"flagged loop ({s},{v}) is not a fixed point")

    @property
    def num_vertices(self) -> int:
        return len(self.actions[0]) if self.actions else 0

    def act(self, v: int, symbol: int) -> int:
        return self.actions[symbol][v]

    def act_word(self, v: int, word: Sequence[int]) -> int:
        for s in word:
            v = self.actions[s][v]
        return v

    def word_permutation(self, word: Sequence[int]) -> np.ndarray:
        """Array p with p[v] = v.w."""
        p = np.arange(self.num_vertices, dtype=np.int64)
        for s in word:
            p = np.asarray(self.actions[s], dtype=np.int64)[p]
        return p

    def neighbors(self, v: int) -> Tuple[int, ...]:
        return tuple(self.actions[s][v] for s in range(self.generators.size))

    def underlying_graph(self, include_flagged_loops: bool = True) -> Graph:
        """The unoriented multigraph: darts (v, s) pair with (v.s, inv(s)).

        Each unoriented edge is recorded at its lexicographically smaller dart,
        so edge ids are deterministic. Edge marks are the smaller symbol index
        of the dart pair.
        """
        k = self.generators.size
        inv = self.generators.involution
        edges = []
        marks = []
        for v in range(self.num_vertices):
            for s in range(k):
                w = self.actions[s][v]
                if not include_flagged_loops and w == v and (s, v) in self.loop_flags:
                    continue
                partner = (w, inv[s])
                if (v, s) <= partner:
                    edges.append((v, w))
                    marks.append(min(s, inv[s]))
        return Graph(
            self.num_vertices,
            tuple(edges),
            vertex_marks=tuple(self.vertex_marks),
            edge_marks=tuple(marks),
        )

    def to_json(self) -> str:
        payload = {
            "actions": [list(a) for a in self.actions],
            "involution": list(self.generators.involution),
            "loop_flags": sorted([s, v] for (s, v) in self.loop_flags),
            "symbols": list(self.generators.symbols),
            "vertex_marks": list(self.vertex_marks),
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @staticmethod
    def from_json(text: str) -> "SchreierGraph":
        data = json.loads(text)
        gens = GeneratorSet(tuple(data["symbols"]), tuple(data["involution"]))
        return SchreierGraph(
            generators=gens,
            actions=tuple(tuple(int(x) for x in a) for a in data["actions"]),
            vertex_marks=tuple(data["vertex_marks"]),
            loop_flags=frozenset((int(s), int(v)) for s, v in data["loop_flags"]),
        )


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def build_torus(dims: Sequence[int]) -> SchreierGraph:
    """Quotient of Z^d by prod(dims): one +1/-1 shift pair per coordinate.

    Vertices are mixed-radix indices (row-major in dims order).
    """
    dims = [int(d) for d in dims]
    if len(dims) < 1:
        raise InvalidArgument("dims must have at least one entry")
    if any(d < 1 for d in dims):
        raise InvalidArgument("each torus dimension must be >= 1")
    d = len(dims)
    gens = paired_generators(d)
    n = int(np.prod(dims))
    strides = np.ones(d, dtype=np.int64)
    for i in range(d - 2, -1, -1):
        strides[i] = strides[i + 1] * dims[i + 1]
    idx = np.arange(n, dtype=np.int64)
    coords = [(idx // strides[i]) % dims[i] for i in range(d)]
    actions = []
    for i in range(d):
        for step in (1, -1):
            shifted = idx + (((coords[i] + step) % dims[i]) - coords[i]) * strides[i]
            actions.append(tuple(int(x) for x in shifted))
    return SchreierGraph(
        generators=gens,
        actions=tuple(actions),
        vertex_marks=(0,) * n,
        loop_flags=frozenset(),
    )


def random_schreier(k: int, n: int, rng) -> SchreierGraph:
    """k independent uniform permutations on n points; symbol 2i acts by the
    i-th permutation and symbol 2i+1 (its involution partner) by the inverse."""
    if k < 1 or n < 1:
        raise InvalidArgument("k and n must be positive")
    stream = as_stream(rng)
    gens = paired_generators(k)
    actions = []
    for _ in range(k):
        perm = stream.permutation(n)
        inv = np.empty(n, dtype=np.int64)
        inv[perm] = np.arange(n, dtype=np.int64)
        actions.append(tuple(int(x) for x in perm))
        actions.append(tuple(int(x) for x in inv))
    return SchreierGraph(
        generators=gens,
        actions=tuple(actions),
        vertex_marks=(0,) * n,
        loop_flags=frozenset(),
    )


def label_as_schreier(g: Graph, num_symbols: int, rng) -> SchreierGraph:
    """Greedy random-priority edge labelling over self-inverse symbols.

    Rounds draw fresh iid uniforms on the unlabelled edges; an edge whose
    uniform is minimal within the unlabelled part of its closed edge
    neighborhood N(e) receives the lowest-indexed symbol unused in N(e).
    Afterwards every vertex is padded to degree |S| with flagged loops.
    Requires num_symbols >= twice the maximum degree. Ties (a probability-zero
    event) break by edge id, which follows vertex order.
    """
    degs = g.degrees()
    maxdeg = int(degs.max()) if g.num_vertices else 0
    if num_symbols < 2 * maxdeg:
        raise InvalidArgument(
            f"need at least {2 * maxdeg} symbols for max degree {maxdeg}"
        )
    if num_symbols > len(_LETTERS):
        raise InvalidArgument(f"at most {len(_LETTERS)} symbols supported")
    gens = self_inverse_generators(num_symbols)
    stream = as_stream(rng)

    m = g.num_edges
    incident = [[] for _ in range(g.num_vertices)]
    for i, (u, v) in enumerate(g.edges):
        incident[u].append(i)
        if v != u:
            incident[v].append(i)
    nbrs = []
    for i, (u, v) in enumerate(g.edges):
        around = set(incident[u]) | set(incident[v])
        around.discard(i)
        nbrs.append(sorted(around))

    label = np.full(m, -1, dtype=np.int64)
    unlabelled = m
    while unlabelled > 0:
        priority = stream.uniforms(m)
        chosen = []
        for e in range(m):
            if label[e] >= 0:
                continue
            key = (priority[e], e)
            is_min = True
            for f in nbrs[e]:
                if label[f] < 0 and (priority[f], f) < key:
                    is_min = False
                    break
            if is_min:
                chosen.append(e)
        for e in chosen:
            used = set()
            for f in nbrs[e]:
                if label[f] >= 0:
                    used.add(int(label[f]))
            j = 0
            while j in used:
                j += 1
            if j >= num_symbols:
                raise InvalidArgument("ran out of symbols; degree bound violated")
            label[e] = j
        unlabelled -= len(chosen)

    slots = np.tile(np.arange(g.num_vertices, dtype=np.int64), (num_symbols, 1))
    for e, (u, v) in enumerate(g.edges):
        j = int(label[e])
        slots[j][u] = v
        slots[j][v] = u
    flags = set()
    for v in range(g.num_vertices):
        used = {int(label[e]) for e in incident[v]}
        for j in range(num_symbols):
            if j not in used:
                flags.add((j, v))
    marks = tuple(g.vertex_marks) if g.vertex_marks is not None else (0,) * g.num_vertices
    return SchreierGraph(
        generators=gens,
        actions=tuple(tuple(int(x) for x in row) for row in slots),
        vertex_marks=marks,
        loop_flags=frozenset(flags),
    )


def subdivide(g) -> Graph:
    """Edge subdivision; accepts a Graph or a SchreierGraph (which is first
    unfolded to its underlying multigraph, edge marks = symbol class)."""
    if isinstance(g, SchreierGraph):
        g = g.underlying_graph()
    if not isinstance(g, Graph):
        raise InvalidArgument("subdivide expects a Graph or SchreierGraph")
    return _graph_subdivide(g)


# ---------------------------------------------------------------------------
# local statistics: canonical rooted balls
# ---------------------------------------------------------------------------

MAX_BALL_RADIUS = 3


@dataclass(frozen=True)
class RootedBallClass:
    """Canonical encoding of a rooted, labelled, marked r-ball.

    For S-labelled Schreier graphs a root- and label-preserving isomorphism is
    unique when it exists (every ball vertex is pinned down by a labelled
    geodesic), so symbol-ordered BFS numbering is already canonical and two
    balls are isomorphic iff their encodings are equal.
    """

    radius: int
    symbols: Tuple[str, ...]
    involution: Tuple[int, ...]
    table: Tuple[Tuple[int, ...], ...]  # table[i][s] = BFS index of i.s, -1 if outside
    marks: Tuple[int, ...]
    flags: Tuple[Tuple[int, ...], ...]  # flags[i][s] = 1 if flagged loop


def ball_class(g: SchreierGraph, root: int, radius: int) -> RootedBallClass:
    if not (0 <= radius <= MAX_BALL_RADIUS):
        raise InvalidArgument(f"radius must be in 0..{MAX_BALL_RADIUS}")
    k = g.generators.size
    dist = {root: 0}
    frontier = [root]
    for d in range(radius):
        nxt = []
        for v in frontier:
            for s in range(k):
                w = g.actions[s][v]
                if w not in dist:
                    dist[w] = d + 1
                    nxt.append(w)
        frontier = nxt

    index = {root: 0}
    order = [root]
    head = 0
    while head < len(order):
        v = order[head]
        head += 1
        for s in range(k):
            w = g.actions[s][v]
            if w in dist and w not in index:
                index[w] = len(order)
                order.append(w)
    table = []
    flags = []
    for v in order:
        row = []
        frow = []
        for s in range(k):
            w = g.actions[s][v]
            row.append(index[w] if w in dist else -1)
            frow.append(1 if (w == v and (s, v) in g.loop_flags) else 0)
        table.append(tuple(row))
        flags.append(tuple(frow))
    return RootedBallClass(
        radius=radius,
        symbols=g.generators.symbols,
        involution=g.generators.involution,
        table=tuple(table),
        marks=tuple(g.vertex_marks[v] for v in order),
        flags=tuple(flags),
    )


def local_statistics(g: SchreierGraph, radius: int) -> Dict[RootedBallClass, float]:
    """Exact law of the ball class at a uniform root."""
    n = g.num_vertices
    if n == 0:
        raise InvalidArgument("graph has no vertices")
    counts: Dict[RootedBallClass, int] = {}
    for v in range(n):
        cls = ball_class(g, v, radius)
        counts[cls] = counts.get(cls, 0) + 1
    return {cls: c / n for cls, c in counts.items()}


def ball_distance(stats1: Dict[RootedBallClass, float], stats2: Dict[RootedBallClass, float]) -> float:
    """Total variation distance between two ball-class laws (same radius)."""
    radii = {cls.radius for cls in stats1} | {cls.radius for cls in stats2}
    if len(radii) > 1:
        raise InvalidArgument(f"mixed ball radii {sorted(radii)}")
    keys = set(stats1) | set(stats2)
    return 0.5 * sum(abs(stats1.get(c, 0.0) - stats2.get(c, 0.0)) for c in keys)


def ball_is_tree(g: SchreierGraph, root: int, radius: int) -> bool:
    """True if the induced ball is a tree (no loops, no multi-edges, no cycles)."""
    cls = ball_class(g, root, radius)
    m = len(cls.table)
    inv = g.generators.involution
    edge_keys = set()
    for i, row in enumerate(cls.table):
        for s, j in enumerate(row):
            if j < 0:
                continue
            if j == i:
                return False  # loop
            a, b = (i, s), (j, inv[s])
            edge_keys.add((a, b) if a <= b else (b, a))
    return len(edge_keys) == m - 1
