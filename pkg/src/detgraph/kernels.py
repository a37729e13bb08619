"""Hot numeric kernels: loop-erased walks, sequential DPP sampling, exact
transportation (successive shortest paths), and Dinic max-flow.

Each kernel is written once in numba-compatible Python and compiled twice: a
jitted variant (``*_nb``) and the plain interpreted variant (``*_py``, the
pure-numpy fallback). The public wrappers dispatch on :func:`backend.use_numba`
at call time. Both paths consume the same SplitMix64 counter stream (see
``rng.py``), so sampling results are reproducible under either backend.

All randomness enters through (key, counter) pairs; kernels return the advanced
counter so callers can chain draws deterministically.
"""

from __future__ import annotations

import numpy as np

from .backend import HAS_NUMBA, njit, use_numba

_U64_1 = np.uint64(1)
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_SH30 = np.uint64(30)
_SH27 = np.uint64(27)
_SH31 = np.uint64(31)
_SH11 = np.uint64(11)
_INV53 = 1.0 / float(1 << 53)


# ---------------------------------------------------------------------------
# Wilson's algorithm: loop-erased random walks onto a growing tree
# ---------------------------------------------------------------------------

def _wilson_impl(ptr, nbr_v, nbr_e, n, root, key, counter):
    """Sample a uniform spanning tree via next-pointer loop erasure.

    ptr/nbr_v/nbr_e: CSR incidence over non-loop edges (slot -> neighbor vertex,
    edge id). Returns (tree edge ids, advanced counter). The caller guarantees
    the graph is connected.
    """
    in_tree = np.zeros(n, dtype=np.uint8)
    nxt_v = np.full(n, -1, dtype=np.int64)
    nxt_e = np.full(n, -1, dtype=np.int64)
    tree = np.empty(n - 1, dtype=np.int64)
    in_tree[root] = 1
    cnt = 0
    c = counter
    for start in range(n):
        if in_tree[start] == 1:
            continue
        u = start
        while in_tree[u] == 0:
            c = c + _U64_1
            z = key + c * _GAMMA
            z = (z ^ (z >> _SH30)) * _MIX1
            z = (z ^ (z >> _SH27)) * _MIX2
            z = z ^ (z >> _SH31)
            uni = (z >> _SH11) * _INV53
            deg = ptr[u + 1] - ptr[u]
            slot = int(uni * deg)
            if slot >= deg:
                slot = deg - 1
            k = ptr[u] + slot
            nxt_v[u] = nbr_v[k]
            nxt_e[u] = nbr_e[k]
            u = nbr_v[k]
        u = start
        while in_tree[u] == 0:
            in_tree[u] = 1
            tree[cnt] = nxt_e[u]
            cnt += 1
            u = nxt_v[u]
    return tree, c


# ---------------------------------------------------------------------------
# Sequential sampler for determinantal measures
# ---------------------------------------------------------------------------

def _dpp_sample_impl(evecs, evals, key, counter, mask):
    """One draw: Bernoulli eigenvector selection, then sequential sampling of
    the projection measure by Householder updates of an orthonormal basis.

    Writes the 0/1 configuration into ``mask``; returns (sample size, leftover
    basis rank, advanced counter). Leftover rank must be 0 for a valid draw.
    """
    n, m = evecs.shape
    c = counter

    keep = np.empty(m, dtype=np.int64)
    r = 0
    for j in range(m):
        c = c + _U64_1
        z = key + c * _GAMMA
        z = (z ^ (z >> _SH30)) * _MIX1
        z = (z ^ (z >> _SH27)) * _MIX2
        z = z ^ (z >> _SH31)
        if (z >> _SH11) * _INV53 < evals[j]:
            keep[r] = j
            r += 1

    B = np.empty((n, r))
    for jj in range(r):
        B[:, jj] = evecs[:, keep[jj]]

    w = np.empty(max(r, 1))
    size = 0
    for e in range(n):
        p = 0.0
        for j in range(r):
            p += B[e, j] * B[e, j]
        c = c + _U64_1
        z = key + c * _GAMMA
        z = (z ^ (z >> _SH30)) * _MIX1
        z = (z ^ (z >> _SH27)) * _MIX2
        z = z ^ (z >> _SH31)
        u = (z >> _SH11) * _INV53

        if r == 0 or p <= 1e-14:
            mask[e] = 0
            continue
        take = u < p
        if p >= 1.0 - 1e-12:
            take = True

        if r > 1:
            # Householder rotation of the columns: row e collapses onto col 0.
            nrm = np.sqrt(p)
            for j in range(r):
                w[j] = B[e, j]
            if w[0] >= 0.0:
                w[0] += nrm
            else:
                w[0] -= nrm
            wsq = 0.0
            for j in range(r):
                wsq += w[j] * w[j]
            if wsq > 0.0:
                for i in range(n):
                    dot = 0.0
                    for j in range(r):
                        dot += B[i, j] * w[j]
                    f = 2.0 * dot / wsq
                    for j in range(r):
                        B[i, j] -= f * w[j]

        if take:
            mask[e] = 1
            size += 1
            for j in range(r - 1):  # drop column 0
                B[:, j] = B[:, j + 1]
            r -= 1
        else:
            mask[e] = 0
            B[e, 0] = 0.0
            scale = 1.0 / np.sqrt(1.0 - p)
            for i in range(n):
                B[i, 0] *= scale
    return size, r, c


# ---------------------------------------------------------------------------
# Exact dense transportation: successive shortest paths with potentials
# ---------------------------------------------------------------------------

def _transport_impl(cost, supply, demand):
    """Min-cost transport of `supply` onto `demand` under `cost`.

    Returns (flow matrix, unshipped mass). Deterministic: Dijkstra scans nodes
    in index order, so ties resolve to the lowest index.
    """
    a, b = cost.shape
    nn = a + b
    eps = 1e-14
    flow = np.zeros((a, b))
    phi = np.zeros(nn)
    sup = supply.copy()
    dem = demand.copy()
    dist = np.empty(nn)
    visited = np.empty(nn, dtype=np.uint8)
    parent = np.empty(nn, dtype=np.int64)
    inf = 1e300

    max_rounds = a * b + nn + 16
    for _round in range(max_rounds):
        remaining = 0.0
        for i in range(a):
            if sup[i] > eps:
                remaining += sup[i]
        if remaining <= 1e-12:
            break

        for v in range(nn):
            dist[v] = inf
            visited[v] = 0
            parent[v] = -1
        for i in range(a):
            if sup[i] > eps:
                dist[i] = 0.0
        sink = -1
        while True:
            u = -1
            du = inf
            for v in range(nn):
                if visited[v] == 0 and dist[v] < du:
                    du = dist[v]
                    u = v
            if u < 0:
                break
            visited[u] = 1
            if u >= a and dem[u - a] > eps:
                sink = u
                break
            if u < a:
                for j in range(b):
                    rc = cost[u, j] + phi[u] - phi[a + j]
                    if rc < 0.0:
                        rc = 0.0
                    if du + rc < dist[a + j]:
                        dist[a + j] = du + rc
                        parent[a + j] = u
            else:
                j = u - a
                for i in range(a):
                    if flow[i, j] > eps:
                        rc = -cost[i, j] + phi[u] - phi[i]
                        if rc < 0.0:
                            rc = 0.0
                        if du + rc < dist[i]:
                            dist[i] = du + rc
                            parent[i] = u
        if sink < 0:
            break
        dt = dist[sink]
        for v in range(nn):
            dv = dist[v]
            if dv > dt:
                dv = dt
            phi[v] += dv

        # bottleneck along the parent chain
        bn = dem[sink - a]
        v = sink
        while parent[v] >= 0:
            p = parent[v]
            if v >= a:  # arc p -> v is forward (source -> sink)
                pass
            else:  # arc p -> v is backward, bounded by flow[v, p - a]
                if flow[v, p - a] < bn:
                    bn = flow[v, p - a]
            v = p
        if sup[v] < bn:
            bn = sup[v]
        if bn <= eps:
            break

        v = sink
        while parent[v] >= 0:
            p = parent[v]
            if v >= a:
                flow[p, v - a] += bn
            else:
                flow[v, p - a] -= bn
            v = p
        sup[v] -= bn
        dem[sink - a] -= bn

    leftover = 0.0
    for i in range(a):
        if sup[i] > 0.0:
            leftover += sup[i]
    return flow, leftover


# ---------------------------------------------------------------------------
# Dinic max-flow (paired arcs: arc 2k is forward, 2k+1 its reverse)
# ---------------------------------------------------------------------------

def _dinic_impl(num_nodes, ptr, arc_idx, arc_to, cap, s, t):
    """Blocking-flow max-flow on a prebuilt residual graph.

    ``cap`` is modified in place to the residual capacities. Returns the flow
    value. Arc pairing is a XOR 1.
    """
    eps = 1e-15
    m = cap.shape[0]
    level = np.empty(num_nodes, dtype=np.int64)
    it = np.empty(num_nodes, dtype=np.int64)
    queue = np.empty(num_nodes, dtype=np.int64)
    path = np.empty(m + 1, dtype=np.int64)
    total = 0.0
    while True:
        for v in range(num_nodes):
            level[v] = -1
        qh = 0
        qt = 0
        queue[qt] = s
        qt += 1
        level[s] = 0
        while qh < qt:
            v = queue[qh]
            qh += 1
            for k in range(ptr[v], ptr[v + 1]):
                aa = arc_idx[k]
                w = arc_to[aa]
                if cap[aa] > eps and level[w] < 0:
                    level[w] = level[v] + 1
                    queue[qt] = w
                    qt += 1
        if level[t] < 0:
            break
        for v in range(num_nodes):
            it[v] = ptr[v]
        while True:
            v = s
            top = 0
            found = False
            while True:
                if v == t:
                    found = True
                    break
                advanced = False
                while it[v] < ptr[v + 1]:
                    aa = arc_idx[it[v]]
                    w = arc_to[aa]
                    if cap[aa] > eps and level[w] == level[v] + 1:
                        path[top] = aa
                        top += 1
                        v = w
                        advanced = True
                        break
                    it[v] += 1
                if advanced:
                    continue
                if v == s:
                    break
                level[v] = -2
                top -= 1
                aa = path[top]
                v = arc_to[aa ^ 1]
                it[v] += 1
            if not found:
                break
            bn = 1e300
            for k in range(top):
                if cap[path[k]] < bn:
                    bn = cap[path[k]]
            for k in range(top):
                aa = path[k]
                cap[aa] -= bn
                cap[aa ^ 1] += bn
            total += bn
    return total


_wilson_py = _wilson_impl
_dpp_sample_py = _dpp_sample_impl
_transport_py = _transport_impl
_dinic_py = _dinic_impl

if HAS_NUMBA:
    _wilson_nb = njit(cache=True)(_wilson_impl)
    _dpp_sample_nb = njit(cache=True)(_dpp_sample_impl)
    _transport_nb = njit(cache=True)(_transport_impl)
    _dinic_nb = njit(cache=True)(_dinic_impl)
else:  # pragma: no cover
    _wilson_nb = _wilson_py
    _dpp_sample_nb = _dpp_sample_py
    _transport_nb = _transport_py
    _dinic_nb = _dinic_py


def wilson_core(ptr, nbr_v, nbr_e, n, root, key, counter):
    if use_numba():
        return _wilson_nb(ptr, nbr_v, nbr_e, n, root, np.uint64(key), np.uint64(counter))
    with np.errstate(over="ignore"):
        return _wilson_py(ptr, nbr_v, nbr_e, n, root, np.uint64(key), np.uint64(counter))


def dpp_sample_core(evecs, evals, key, counter, mask):
    if use_numba():
        return _dpp_sample_nb(evecs, evals, np.uint64(key), np.uint64(counter), mask)
    with np.errstate(over="ignore"):
        return _dpp_sample_py(evecs, evals, np.uint64(key), np.uint64(counter), mask)


def transport_core(cost, supply, demand):
    if use_numba():
        return _transport_nb(cost, supply, demand)
    return _transport_py(cost, supply, demand)


def dinic_core(num_nodes, ptr, arc_idx, arc_to, cap, s, t):
    if use_numba():
        return _dinic_nb(num_nodes, ptr, arc_idx, arc_to, cap, s, t)
    return _dinic_py(num_nodes, ptr, arc_idx, arc_to, cap, s, t)
