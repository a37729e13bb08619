"""Couplings of subset-valued laws: Strassen feasibility, exact transport
distance, domination bounds, independence range checks, and heat-trace
comparisons under coupled sparser/denser environments.

Subsets are bitmasks over the shared ground labels. The per-site distance
between two laws is the minimum over couplings of E|X1 xor X2| / n, computed
exactly as a transportation problem over the support product.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .dpp import (
    DeterminantalMeasure,
    SubsetDistribution,
    cylinder_prob,
    exact_distribution,
)
from .errors import (
    CapacityExceeded,
    InvalidArgument,
    InvalidState,
    NumericalFailure,
)
from .graphs import Graph
from .kernels import dinic_core, transport_core
from .operators import schatten_norm, validate_contraction
from .rng import as_stream

FLOW_CAP = 12
TRANSPORT_CAP = 10
MASS_TOL = 1e-9


def _popcounts(masks: np.ndarray) -> np.ndarray:
    out = np.zeros_like(masks)
    m = masks.copy()
    while np.any(m):
        out += m & 1
        m >>= 1
    return out


@dataclass(frozen=True)
class Coupling:
    """Sparse joint law over pairs of subsets with validated marginals."""

    ground_labels: Tuple[int, ...]
    atoms: Tuple[Tuple[int, int, float], ...]  # (mask1, mask2, probability)
    monotone: bool = False

    def __post_init__(self):
        n = len(self.ground_labels)
        full = (1 << n) - 1
        total = 0.0
        for m1, m2, p in self.atoms:
            if not (0 <= m1 <= full and 0 <= m2 <= full):
                raise InvalidArgument("atom mask out of range")
            if p <= 0:
                raise InvalidArgument("atom probabilities must be positive")
            if self.monotone and (m1 & ~m2):
                raise InvalidArgument("monotone coupling has an atom with X1 not in X2")
            total += p
        if abs(total - 1.0) > MASS_TOL:
            raise InvalidArgument(f"atom masses sum to {total!r}, not 1")

    @property
    def num_sites(self) -> int:
        return len(self.ground_labels)

    def marginal(self, side: int) -> SubsetDistribution:
        if side not in (1, 2):
            raise InvalidArgument("side must be 1 or 2")
        probs = np.zeros(1 << self.num_sites)
        for m1, m2, p in self.atoms:
            probs[m1 if side == 1 else m2] += p
        return SubsetDistribution(self.ground_labels, probs)

    def expected_hamming(self) -> float:
        """E |X1 xor X2| (unnormalized site count)."""
        return float(sum(p * bin(m1 ^ m2).count("1") for m1, m2, p in self.atoms))

    def per_site_distance(self) -> float:
        return self.expected_hamming() / self.num_sites

    def to_json(self) -> str:
        payload = {
            "atoms": [
                [int(m1), int(m2), repr(float(p))]
                for m1, m2, p in sorted(self.atoms)
            ],
            "ground_labels": list(self.ground_labels),
            "monotone": self.monotone,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @staticmethod
    def from_json(text: str) -> "Coupling":
        data = json.loads(text)
        return Coupling(
            ground_labels=tuple(int(x) for x in data["ground_labels"]),
            atoms=tuple(
                (int(m1), int(m2), float(p)) for m1, m2, p in data["atoms"]
            ),
            monotone=bool(data["monotone"]),
        )

    @staticmethod
    def from_draws(
        ground_labels: Sequence[int],
        pairs: Iterable[Tuple[int, int]],
        monotone: bool = False,
    ) -> "Coupling":
        """Empirical coupling: each (mask1, mask2) draw gets equal weight."""
        counts: Dict[Tuple[int, int], int] = {}
        total = 0
        for m1, m2 in pairs:
            counts[(int(m1), int(m2))] = counts.get((int(m1), int(m2)), 0) + 1
            total += 1
        if total == 0:
            raise InvalidArgument("no draws given")
        atoms = tuple(
            (m1, m2, c / total) for (m1, m2), c in sorted(counts.items())
        )
        return Coupling(tuple(int(x) for x in ground_labels), atoms, monotone=monotone)


@dataclass(frozen=True)
class NotDominated:
    """Witness of a failed domination: an increasing event with more mass
    under the first law. `generators` are the minimal masks of the event."""

    generators: Tuple[int, ...]
    mass1: float
    mass2: float

    def event_masks(self, num_sites: int) -> Tuple[int, ...]:
        out = []
        for mask in range(1 << num_sites):
            if any(mask & g == g for g in self.generators):
                out.append(mask)
        return tuple(out)


def _require_same_ground(d1: SubsetDistribution, d2: SubsetDistribution):
    if d1.ground_labels != d2.ground_labels:
        raise InvalidArgument("distributions live on different ground sets")


def monotone_coupling(
    d1: SubsetDistribution, d2: SubsetDistribution
) -> Union[Coupling, NotDominated]:
    """Strassen check by max-flow over support atoms with subset-relation arcs.

    Returns a monotone Coupling when the flow saturates (value 1 within 1e-9),
    otherwise a NotDominated witness read off the final residual cut.
    """
    _require_same_ground(d1, d2)
    n = d1.num_sites
    if n > FLOW_CAP:
        raise CapacityExceeded(f"monotone coupling limited to {FLOW_CAP} sites")
    sup1 = [int(m) for m in d1.support()]
    sup2 = [int(m) for m in d2.support()]
    a, b = len(sup1), len(sup2)
    num_nodes = a + b + 2
    source, sink = 0, num_nodes - 1

    frm: List[int] = []
    arc_to: List[int] = []
    cap: List[float] = []

    def add_arc(u: int, v: int, c: float):
        frm.append(u)
        arc_to.append(v)
        cap.append(c)
        frm.append(v)
        arc_to.append(u)
        cap.append(0.0)

    for i, m1 in enumerate(sup1):
        add_arc(source, 1 + i, float(d1.probs[m1]))
    pair_arc_start = len(cap)
    for i, m1 in enumerate(sup1):
        for j, m2 in enumerate(sup2):
            if m1 & ~m2 == 0:
                add_arc(1 + i, 1 + a + j, 2.0)
    for j, m2 in enumerate(sup2):
        add_arc(1 + a + j, sink, float(d2.probs[m2]))

    arc_to_arr = np.asarray(arc_to, dtype=np.int64)
    cap_arr = np.asarray(cap, dtype=np.float64)
    cap_init = cap_arr.copy()
    counts = np.zeros(num_nodes + 1, dtype=np.int64)
    for u in frm:
        counts[u + 1] += 1
    ptr = np.cumsum(counts).astype(np.int64)
    fill = ptr[:-1].copy()
    arc_idx = np.empty(len(frm), dtype=np.int64)
    for k, u in enumerate(frm):
        arc_idx[fill[u]] = k
        fill[u] += 1

    value = dinic_core(num_nodes, ptr, arc_idx, arc_to_arr, cap_arr, source, sink)
    if abs(value - 1.0) <= MASS_TOL:
        atoms = []
        k = pair_arc_start
        for i, m1 in enumerate(sup1):
            for j, m2 in enumerate(sup2):
                if m1 & ~m2 == 0:
                    f = cap_init[k] - cap_arr[k]
                    if f > 1e-15:
                        atoms.append((m1, m2, float(f)))
                    k += 2
        return Coupling(d1.ground_labels, tuple(sorted(atoms)), monotone=True)

    # residual reachability from the source gives the min cut
    reach = np.zeros(num_nodes, dtype=bool)
    reach[source] = True
    queue = [source]
    while queue:
        u = queue.pop()
        for k in range(ptr[u], ptr[u + 1]):
            arc = arc_idx[k]
            if cap_arr[arc] > 1e-12 and not reach[arc_to_arr[arc]]:
                reach[arc_to_arr[arc]] = True
                queue.append(int(arc_to_arr[arc]))
    cut_masks = sorted(m1 for i, m1 in enumerate(sup1) if reach[1 + i])
    generators = [
        m for m in cut_masks if not any(m != g and m & g == g for g in cut_masks)
    ]
    gens = tuple(sorted(generators))
    mass1 = sum(
        float(d1.probs[m])
        for m in range(1 << n)
        if d1.probs[m] > 0 and any(m & g == g for g in gens)
    )
    mass2 = sum(
        float(d2.probs[m])
        for m in range(1 << n)
        if d2.probs[m] > 0 and any(m & g == g for g in gens)
    )
    return NotDominated(gens, mass1, mass2)


@lru_cache(maxsize=8)
def _upsets(n: int) -> Tuple[int, ...]:
    """All up-closed families over subsets of an n-set, as 2^n-bit numbers."""
    if n > 4:
        raise CapacityExceeded("exhaustive increasing events limited to 4 sites")
    num_masks = 1 << n
    closure = []
    for m in range(num_masks):
        bits = 0
        rest = ((1 << n) - 1) & ~m
        sub = rest
        while True:
            bits |= 1 << (m | sub)
            if sub == 0:
                break
            sub = (sub - 1) & rest
        closure.append(bits)
    fams = []
    for fam in range(1 << num_masks):
        ok = True
        for m in range(num_masks):
            if fam >> m & 1 and closure[m] & ~fam:
                ok = False
                break
        if ok:
            fams.append(fam)
    return tuple(fams)


def dominates_exhaustive(
    d1: SubsetDistribution, d2: SubsetDistribution, tol: float = MASS_TOL
) -> bool:
    """Check P1(A) <= P2(A) for every increasing event A by enumeration (n <= 4)."""
    _require_same_ground(d1, d2)
    n = d1.num_sites
    for fam in _upsets(n):
        p1 = p2 = 0.0
        for m in range(1 << n):
            if fam >> m & 1:
                p1 += float(d1.probs[m])
                p2 += float(d2.probs[m])
        if p1 > p2 + tol:
            return False
    return True


# ---------------------------------------------------------------------------
# exact per-site transport distance
# ---------------------------------------------------------------------------

def dbar(
    d1: SubsetDistribution, d2: SubsetDistribution
) -> Tuple[float, Coupling]:
    """Minimum per-site disagreement over all couplings, solved exactly.

    The two arguments are canonicalized into a fixed order before solving so
    the function is symmetric to the last bit.
    """
    _require_same_ground(d1, d2)
    n = d1.num_sites
    if n > TRANSPORT_CAP:
        raise CapacityExceeded(f"transport distance limited to {TRANSPORT_CAP} sites")

    def order_key(d: SubsetDistribution):
        sup = d.support()
        return (tuple(int(m) for m in sup), d.probs[sup].tobytes())

    swapped = order_key(d2) < order_key(d1)
    a_dist, b_dist = (d2, d1) if swapped else (d1, d2)

    sup_a = [int(m) for m in a_dist.support()]
    sup_b = [int(m) for m in b_dist.support()]
    masks_a = np.asarray(sup_a, dtype=np.int64)
    masks_b = np.asarray(sup_b, dtype=np.int64)
    cost = _popcounts(masks_a[:, None] ^ masks_b[None, :]).astype(np.float64) / n
    supply = a_dist.probs[sup_a].astype(np.float64)
    demand = b_dist.probs[sup_b].astype(np.float64)
    flow, leftover = transport_core(np.ascontiguousarray(cost), supply, demand)
    if leftover > MASS_TOL:
        raise NumericalFailure(f"transport left {leftover!r} mass unshipped")
    value = float(np.sum(flow * cost))
    atoms = []
    for i, ma in enumerate(sup_a):
        for j, mb in enumerate(sup_b):
            f = float(flow[i, j])
            if f > 1e-15:
                atoms.append((mb, ma, f) if swapped else (ma, mb, f))
    coupling = Coupling(d1.ground_labels, tuple(sorted(atoms)))
    return value, coupling


def dbar_monotone(d1: SubsetDistribution, d2: SubsetDistribution) -> float:
    """Per-site distance of a dominated pair from the marginal gap alone."""
    result = monotone_coupling(d1, d2)
    if isinstance(result, NotDominated):
        raise InvalidState(
            "pair is not stochastically ordered; no monotone coupling exists"
        )
    gaps = d2.inclusion_marginals() - d1.inclusion_marginals()
    return float(np.sum(gaps)) / d1.num_sites


def dbar_monotone_kernels(q1, q2, tol: float = 1e-10) -> float:
    """Trace-gap distance for kernels with q1 <= q2 in the semidefinite order.

    Certifies the ordering spectrally, then returns (tr q2 - tr q1)/n, the
    per-site distance realized by any monotone coupling of the two measures.
    """
    m1 = np.asarray(q1, dtype=np.float64)
    m2 = np.asarray(q2, dtype=np.float64)
    if m1.shape != m2.shape or m1.ndim != 2:
        raise InvalidArgument("kernels must share a square shape")
    diff = m2 - m1
    w = np.linalg.eigvalsh(0.5 * (diff + diff.T))
    if w.size and w[0] < -tol:
        raise InvalidState(f"kernels are not semidefinite-ordered (min eig {w[0]:.3e})")
    return float(np.trace(diff)) / m1.shape[0]


def relative_product(c12: Coupling, c23: Coupling) -> Coupling:
    """Glue two couplings through their shared middle marginal by conditional
    independence."""
    if c12.ground_labels != c23.ground_labels:
        raise InvalidArgument("couplings live on different ground sets")
    mid_a = c12.marginal(2)
    mid_b = c23.marginal(1)
    if float(np.max(np.abs(mid_a.probs - mid_b.probs))) > MASS_TOL:
        raise InvalidArgument("middle marginals disagree beyond 1e-9")

    by_mid_12: Dict[int, List[Tuple[int, float]]] = {}
    for m1, m2, p in c12.atoms:
        by_mid_12.setdefault(m2, []).append((m1, p))
    by_mid_23: Dict[int, List[Tuple[int, float]]] = {}
    mass_23: Dict[int, float] = {}
    for m2, m3, p in c23.atoms:
        by_mid_23.setdefault(m2, []).append((m3, p))
        mass_23[m2] = mass_23.get(m2, 0.0) + p

    acc: Dict[Tuple[int, int], float] = {}
    for mid, left in by_mid_12.items():
        right = by_mid_23.get(mid)
        if right is None:
            continue
        denom = mass_23[mid]
        for m1, p12 in left:
            for m3, p23 in right:
                key = (m1, m3)
                acc[key] = acc.get(key, 0.0) + p12 * p23 / denom
    atoms = tuple((m1, m3, p) for (m1, m3), p in sorted(acc.items()) if p > 1e-15)
    return Coupling(
        c12.ground_labels,
        atoms,
        monotone=c12.monotone and c23.monotone,
    )


# ---------------------------------------------------------------------------
# bound suite
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundReport:
    num_sites: int
    dbar: float
    op_norm_diff: float
    trace_norm_diff: float  # normalized (mean singular value)
    trace_norm_diff_unnormalized: float
    norm_bound: float
    schatten_bound: float
    conjecture_bound: float
    conjecture_bound_unnormalized: float

    @property
    def slack_norm(self) -> float:
        return self.norm_bound - self.dbar

    @property
    def slack_schatten(self) -> float:
        return self.schatten_bound - self.dbar

    @property
    def slack_conjecture(self) -> float:
        return self.conjecture_bound - self.dbar

    @property
    def slack_conjecture_unnormalized(self) -> float:
        return self.conjecture_bound_unnormalized - self.dbar


def bound_suite(q1, q2, labels: Optional[Sequence[int]] = None) -> BoundReport:
    """Exact per-site distance of two contraction kernels against the closed
    -form bounds in the operator norm and the normalized trace norm, plus the
    conjectured trace-norm bound (reported in both normalizations)."""
    meas1 = DeterminantalMeasure(q1, labels)
    meas2 = DeterminantalMeasure(q2, labels if labels is not None else meas1.ground_labels)
    if meas1.ground_labels != meas2.ground_labels:
        raise InvalidArgument("kernels must share ground labels")
    n = meas1.size
    value, _ = dbar(exact_distribution(meas1), exact_distribution(meas2))
    diff = meas1.kernel - meas2.kernel
    r = schatten_norm(diff, np.inf)
    t1 = schatten_norm(diff, 1)
    return BoundReport(
        num_sites=n,
        dbar=value,
        op_norm_diff=r,
        trace_norm_diff=t1,
        trace_norm_diff_unnormalized=t1 * n,
        norm_bound=6.0 * r / (1.0 + 2.0 * r),
        schatten_bound=6.0 * 3.0 ** (2.0 / 3.0) * t1 ** (1.0 / 3.0),
        conjecture_bound=t1,
        conjecture_bound_unnormalized=t1 * n,
    )


# ---------------------------------------------------------------------------
# finite-range checks
# ---------------------------------------------------------------------------

def mdependence_check(
    d: DeterminantalMeasure, m: int, window_size: int
) -> float:
    """Max factorization defect over all placements of two windows separated
    by cyclic distance > m, all joint 0/1 patterns, via cylinder probabilities."""
    n = d.size
    w = window_size
    if w < 1 or w > 4:
        raise InvalidArgument("window size must be in 1..4")
    if m < 0:
        raise InvalidArgument("separation must be nonnegative")
    if n < 2 * (w + m):
        raise InvalidArgument("cycle too small to place two separated windows")

    def window(start: int) -> Tuple[int, ...]:
        return tuple((start + k) % n for k in range(w))

    def min_sep(w1: Sequence[int], w2: Sequence[int]) -> int:
        best = n
        for x in w1:
            for y in w2:
                dxy = abs(x - y)
                best = min(best, dxy, n - dxy)
        return best

    single_cache: Dict[Tuple[Tuple[int, ...], int], float] = {}

    def window_prob(sites: Tuple[int, ...], pattern: int) -> float:
        key = (sites, pattern)
        if key not in single_cache:
            inc = [sites[k] for k in range(w) if pattern >> k & 1]
            exc = [sites[k] for k in range(w) if not pattern >> k & 1]
            single_cache[key] = cylinder_prob(d, inc, exc)
        return single_cache[key]

    defect = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            w1, w2 = window(i), window(j)
            if set(w1) & set(w2):
                continue
            if min_sep(w1, w2) <= m:
                continue
            for pat1 in range(1 << w):
                for pat2 in range(1 << w):
                    inc = [w1[k] for k in range(w) if pat1 >> k & 1]
                    exc = [w1[k] for k in range(w) if not pat1 >> k & 1]
                    inc += [w2[k] for k in range(w) if pat2 >> k & 1]
                    exc += [w2[k] for k in range(w) if not pat2 >> k & 1]
                    joint = cylinder_prob(d, inc, exc)
                    split = window_prob(w1, pat1) * window_prob(w2, pat2)
                    defect = max(defect, abs(joint - split))
    return defect


def circulant_kernel(coeffs: Sequence[float], n: int) -> np.ndarray:
    """Symmetric circulant a_0 I + sum_k a_k (S^k + S^-k) on n cyclic sites."""
    if n < 1:
        raise InvalidArgument("need at least one site")
    if len(coeffs) > n:
        raise InvalidArgument("more coefficients than sites")
    mat = np.zeros((n, n))
    idx = np.arange(n)
    mat[idx, idx] = coeffs[0]
    for k in range(1, len(coeffs)):
        if coeffs[k] == 0.0:
            continue
        mat[idx, (idx + k) % n] += coeffs[k]
        mat[idx, (idx - k) % n] += coeffs[k]
    return mat


def finitely_dependent_approx(
    coeffs: Sequence[float], n: int, band: int, window: int = 8
) -> Tuple[DeterminantalMeasure, float]:
    """Band-truncate a circulant contraction symbol and measure the exact
    per-site distance to the untruncated law on a window of at most 10 sites."""
    if band < 0:
        raise InvalidArgument("band must be nonnegative")
    if not 1 <= window <= TRANSPORT_CAP:
        raise InvalidArgument(f"window must be in 1..{TRANSPORT_CAP}")
    full = circulant_kernel(coeffs, n)
    truncated_coeffs = [c if k <= band else 0.0 for k, c in enumerate(coeffs)]
    trunc = circulant_kernel(truncated_coeffs, n)
    DeterminantalMeasure(full)  # validates the untruncated symbol
    check = validate_contraction(trunc, tol=1e-9)
    trunc_mat = check.matrix
    trunc_meas = DeterminantalMeasure(trunc_mat)
    sites = list(range(min(n, window)))
    d_full = exact_distribution(
        DeterminantalMeasure(full[np.ix_(sites, sites)], sites)
    )
    d_trunc = exact_distribution(
        DeterminantalMeasure(trunc_mat[np.ix_(sites, sites)], sites)
    )
    value, _ = dbar(d_full, d_trunc)
    return trunc_meas, value


# ---------------------------------------------------------------------------
# heat-trace comparison under a monotone environment coupling
# ---------------------------------------------------------------------------

def _subgraph_laplacian(g: Graph, mask: int, positions: Sequence[int]) -> np.ndarray:
    lap = np.zeros((g.num_vertices, g.num_vertices))
    for bit, e in enumerate(positions):
        if mask >> bit & 1:
            u, v = g.edges[e]
            if u == v:
                continue
            lap[u, u] += 1.0
            lap[v, v] += 1.0
            lap[u, v] -= 1.0
            lap[v, u] -= 1.0
    return lap


def return_prob_compare(
    g: Graph,
    coupling: Coupling,
    t_grid: Sequence[float],
    samples: int,
    rng,
) -> List[dict]:
    """Average normalized heat traces of coupled sparse/dense edge environments.

    Coupling masks are over `coupling.ground_labels`, which must be edge ids of
    g. The sparser marginal's trace dominates the denser one's on every single
    draw (eigenvalue interlacing of ordered Laplacians); the per-draw maximum
    violation is reported alongside the averages.
    """
    if not coupling.monotone:
        raise InvalidArgument("heat-trace comparison needs a monotone coupling")
    if not g.is_connected():
        raise InvalidArgument("graph must be connected")
    for e in coupling.ground_labels:
        if not 0 <= e < g.num_edges:
            raise InvalidArgument(f"coupling labels mention unknown edge {e}")
    if samples < 1:
        raise InvalidArgument("need at least one sample")
    times = [float(t) for t in t_grid]
    if any(t < 0 for t in times):
        raise InvalidArgument("times must be nonnegative")
    stream = as_stream(rng)
    cum = np.cumsum([p for _, _, p in coupling.atoms])
    rows = [
        {"t": t, "mean_trace_sparse": 0.0, "mean_trace_dense": 0.0, "max_violation": 0.0}
        for t in times
    ]
    positions = coupling.ground_labels
    lap_cache: Dict[int, np.ndarray] = {}

    def spectrum(mask: int) -> np.ndarray:
        if mask not in lap_cache:
            lap = _subgraph_laplacian(g, mask, positions)
            lap_cache[mask] = np.clip(np.linalg.eigvalsh(lap), 0.0, None)
        return lap_cache[mask]

    for _ in range(samples):
        u = stream.uniform()
        k = int(np.searchsorted(cum, u, side="right"))
        if k >= len(coupling.atoms):
            k = len(coupling.atoms) - 1
        m1, m2, _ = coupling.atoms[k]
        v1 = spectrum(m1)
        v2 = spectrum(m2)
        for row, t in zip(rows, times):
            tr1 = float(np.mean(np.exp(-v1 * t)))
            tr2 = float(np.mean(np.exp(-v2 * t)))
            row["mean_trace_sparse"] += tr1 / samples
            row["mean_trace_dense"] += tr2 / samples
            row["max_violation"] = max(row["max_violation"], tr2 - tr1)
    for row in rows:
        row["max_violation"] = max(0.0, row["max_violation"])
    return rows
