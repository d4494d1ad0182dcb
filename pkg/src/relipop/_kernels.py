"""Compiled inner loops for cluster-popping and the samplers built on it.

All kernels take the flat arrays of :class:`relipop.graph.GraphArrays` and a
numpy ``Generator``. Workspaces are allocated once per batch. Random draws
happen in a fixed order (arc id order for the first draw, then vertex order
and out-arc order per popping round), so output is a pure function of the
generator state.
"""
import numpy as np
from numba import njit

# workspace rows
_IDX, _LOW, _ONST, _STK, _CSV, _CSK, _SCC, _SINK, _BFS = range(9)
WS_ROWS = 9


@njit(cache=True)
def reach_root(n, root, in_ptr, in_arc, tails, present, mark, ws):
    """Mark vertices that reach the root through present arcs; return count."""
    stack = ws[_BFS]
    for v in range(n):
        mark[v] = False
    mark[root] = True
    stack[0] = root
    top = 1
    count = 1
    while top > 0:
        top -= 1
        v = stack[top]
        for k in range(in_ptr[v], in_ptr[v + 1]):
            e = in_arc[k]
            if present[e]:
                w = tails[e]
                if not mark[w]:
                    mark[w] = True
                    stack[top] = w
                    top += 1
                    count += 1
    return count


@njit(cache=True)
def sink_clusters(n, out_ptr, out_arc, heads, present, mark, label, ws):
    """Label the minimal clusters among vertices not reaching the root.

    ``label[v]`` is a cluster number for vertices in a minimal cluster and
    -1 elsewhere. Returns the number of minimal clusters.
    """
    idx = ws[_IDX]
    low = ws[_LOW]
    onst = ws[_ONST]
    stk = ws[_STK]
    cs_v = ws[_CSV]
    cs_k = ws[_CSK]
    scc = ws[_SCC]
    sink = ws[_SINK]
    for v in range(n):
        idx[v] = -1
        label[v] = -1
    counter = 0
    sp = 0
    nscc = 0
    for s in range(n):
        if mark[s] or idx[s] != -1:
            continue
        idx[s] = counter
        low[s] = counter
        counter += 1
        stk[sp] = s
        sp += 1
        onst[s] = 1
        cs_v[0] = s
        cs_k[0] = out_ptr[s]
        csp = 1
        while csp > 0:
            v = cs_v[csp - 1]
            k = cs_k[csp - 1]
            if k < out_ptr[v + 1]:
                cs_k[csp - 1] = k + 1
                e = out_arc[k]
                if not present[e]:
                    continue
                w = heads[e]
                if mark[w]:
                    continue
                if idx[w] == -1:
                    idx[w] = counter
                    low[w] = counter
                    counter += 1
                    stk[sp] = w
                    sp += 1
                    onst[w] = 1
                    cs_v[csp] = w
                    cs_k[csp] = out_ptr[w]
                    csp += 1
                elif onst[w] == 1 and idx[w] < low[v]:
                    low[v] = idx[w]
            else:
                csp -= 1
                if csp > 0:
                    u = cs_v[csp - 1]
                    if low[v] < low[u]:
                        low[u] = low[v]
                if low[v] == idx[v]:
                    while True:
                        sp -= 1
                        w = stk[sp]
                        onst[w] = 0
                        scc[w] = nscc
                        if w == v:
                            break
                    nscc += 1
    for c in range(nscc):
        sink[c] = 1
    for v in range(n):
        if mark[v]:
            continue
        for k in range(out_ptr[v], out_ptr[v + 1]):
            e = out_arc[k]
            if present[e]:
                w = heads[e]
                if mark[w] or scc[w] != scc[v]:
                    sink[scc[v]] = 0
                    break
    count = 0
    for c in range(nscc):
        if sink[c] == 1:
            sink[c] = count
            count += 1
        else:
            sink[c] = -1
    for v in range(n):
        if not mark[v]:
            label[v] = sink[scc[v]]
    return count


@njit(cache=True)
def pop(n, root, tails, heads, q, out_ptr, out_arc, in_ptr, in_arc, present, rng, round_cap, mark, label, ws, stats):
    """Draw every arc afresh, then pop minimal clusters until root-connected.

    ``stats`` accumulates (popped clusters, rounds, arcs re-randomized).
    Returns the clusters popped for this sample, or -1 when ``round_cap``
    (if non-negative) was reached first.
    """
    m = q.shape[0]
    for e in range(m):
        present[e] = rng.random() < q[e]
    popped = 0
    rounds = 0
    while reach_root(n, root, in_ptr, in_arc, tails, present, mark, ws) < n:
        if round_cap >= 0 and rounds >= round_cap:
            return -1
        k = sink_clusters(n, out_ptr, out_arc, heads, present, mark, label, ws)
        popped += k
        rounds += 1
        stats[1] += 1
        for v in range(n):
            if label[v] >= 0:
                for kk in range(out_ptr[v], out_ptr[v + 1]):
                    e = out_arc[kk]
                    present[e] = rng.random() < q[e]
                    stats[2] += 1
    stats[0] += popped
    return popped


@njit(cache=True)
def pop_batch(n, root, tails, heads, q, out_ptr, out_arc, in_ptr, in_arc, count, rng, round_cap, out, popped, stats):
    """Fill ``out[i]`` with the i-th sample and ``popped[i]`` with its pops.

    Returns -1 on success or the index of the sample that hit the cap.
    """
    m = q.shape[0]
    present = np.empty(m, dtype=np.bool_)
    mark = np.empty(max(n, 1), dtype=np.bool_)
    label = np.empty(max(n, 1), dtype=np.int64)
    ws = np.empty((WS_ROWS, max(n, 1)), dtype=np.int64)
    for i in range(count):
        t = pop(n, root, tails, heads, q, out_ptr, out_arc, in_ptr, in_arc, present, rng, round_cap, mark, label, ws, stats)
        if t < 0:
            return i
        popped[i] = t
        for e in range(m):
            out[i, e] = present[e]
    return -1


@njit(cache=True)
def minimal_cluster_labels(n, root, tails, heads, out_ptr, out_arc, in_ptr, in_arc, present, label):
    """Single evaluation of the popping round's cluster detection."""
    mark = np.empty(max(n, 1), dtype=np.bool_)
    ws = np.empty((WS_ROWS, max(n, 1)), dtype=np.int64)
    if reach_root(n, root, in_ptr, in_arc, tails, present, mark, ws) == n:
        for v in range(n):
            label[v] = -1
        return 0
    return sink_clusters(n, out_ptr, out_arc, heads, present, mark, label, ws)


@njit(cache=True)
def ratio_hits(
    a_n, a_root, a_tails, a_heads, a_q, a_out_ptr, a_out_arc, a_in_ptr, a_in_arc,
    b_n, b_root, b_tails, b_q, b_in_ptr, b_in_arc,
    lift, removed, count, rng, stats,
):
    """Count draws whose lift to the uncontracted graph is root-connected.

    ``a_*`` describe the contracted graph, ``b_*`` the graph before the
    contraction; ``lift[j]`` is the pre-contraction id of arc ``j`` and
    ``removed`` lists the deleted arcs between the merged pair.
    """
    a_m = a_q.shape[0]
    b_m = b_q.shape[0]
    present = np.empty(a_m, dtype=np.bool_)
    lifted = np.empty(b_m, dtype=np.bool_)
    mark = np.empty(max(a_n, b_n, 1), dtype=np.bool_)
    label = np.empty(max(a_n, 1), dtype=np.int64)
    ws = np.empty((WS_ROWS, max(a_n, b_n, 1)), dtype=np.int64)
    hits = 0
    for i in range(count):
        pop(a_n, a_root, a_tails, a_heads, a_q, a_out_ptr, a_out_arc, a_in_ptr, a_in_arc,
            present, rng, -1, mark, label, ws, stats)
        for e in range(b_m):
            lifted[e] = False
        for j in range(a_m):
            lifted[lift[j]] = present[j]
        for k in range(removed.shape[0]):
            e = removed[k]
            lifted[e] = rng.random() < b_q[e]
        if reach_root(b_n, b_root, b_in_ptr, b_in_arc, b_tails, lifted, mark, ws) == b_n:
            hits += 1
    return hits


@njit(cache=True)
def highp_batch(n, root, tails, heads, q_star, out_ptr, out_arc, in_ptr, in_arc, keep_ratio, count, rng, out, stats):
    """Rejection-corrected draws at a lowered failure probability.

    Each candidate with ``k`` arcs is kept with probability
    ``keep_ratio ** (k - n + 1)``. Returns the number of candidates drawn.
    """
    m = q_star.shape[0]
    present = np.empty(m, dtype=np.bool_)
    mark = np.empty(max(n, 1), dtype=np.bool_)
    label = np.empty(max(n, 1), dtype=np.int64)
    ws = np.empty((WS_ROWS, max(n, 1)), dtype=np.int64)
    attempts = 0
    for i in range(count):
        while True:
            pop(n, root, tails, heads, q_star, out_ptr, out_arc, in_ptr, in_arc,
                present, rng, -1, mark, label, ws, stats)
            attempts += 1
            size = 0
            for e in range(m):
                if present[e]:
                    size += 1
            if rng.random() < keep_ratio ** (size - n + 1):
                break
        for e in range(m):
            out[i, e] = present[e]
    return attempts


@njit(cache=True)
def psi_image(n, root, in_ptr, in_arc, tails, edge_of_arc, present, edges, explored, active):
    """Explore from the root along present arcs pointing inward.

    The active vertex with the smallest id is processed next; for every
    unexplored tail ``u`` of a present arc ``u -> v`` the underlying edge is
    added. Returns the number of explored vertices.
    """
    for v in range(n):
        explored[v] = False
        active[v] = False
    for k in range(edges.shape[0]):
        edges[k] = False
    active[root] = True
    nexp = 0
    while True:
        v = -1
        for x in range(n):
            if active[x]:
                v = x
                break
        if v < 0:
            break
        for k in range(in_ptr[v], in_ptr[v + 1]):
            e = in_arc[k]
            u = tails[e]
            if present[e] and not explored[u]:
                edges[edge_of_arc[e]] = True
                active[u] = True
        active[v] = False
        explored[v] = True
        nexp += 1
    return nexp


@njit(cache=True)
def connected_batch(n, root, tails, heads, q, out_ptr, out_arc, in_ptr, in_arc, edge_of_arc, n_edges, count, rng, out, sizes, stats):
    """Connected edge subsets: pop on the bi-directed lift, then map back.

    ``out`` may have zero rows, in which case only ``sizes`` is filled.
    """
    m = q.shape[0]
    present = np.empty(m, dtype=np.bool_)
    mark = np.empty(max(n, 1), dtype=np.bool_)
    label = np.empty(max(n, 1), dtype=np.int64)
    ws = np.empty((WS_ROWS, max(n, 1)), dtype=np.int64)
    edges = np.empty(n_edges, dtype=np.bool_)
    explored = np.empty(max(n, 1), dtype=np.bool_)
    active = np.empty(max(n, 1), dtype=np.bool_)
    keep = out.shape[0] > 0
    for i in range(count):
        pop(n, root, tails, heads, q, out_ptr, out_arc, in_ptr, in_arc, present, rng, -1, mark, label, ws, stats)
        psi_image(n, root, in_ptr, in_arc, tails, edge_of_arc, present, edges, explored, active)
        size = 0
        for k in range(n_edges):
            if edges[k]:
                size += 1
            if keep:
                out[i, k] = edges[k]
        sizes[i] = size
    return 0
