"""Graph builders and brute-force checks shared by the test modules.

The brute-force routines here deliberately avoid the package's own SCC,
cluster and determinant code.
"""
from itertools import combinations

from relipop.graph import Arc, DirectedMultigraph, Edge, UndirectedGraph, pair_twins


def undirected(n, pairs, p=0.5):
    ps = p if isinstance(p, (list, tuple)) else [p] * len(pairs)
    return UndirectedGraph(n, tuple(Edge(u, v, q) for (u, v), q in zip(pairs, ps)))


def complete(n, p=0.5):
    return undirected(n, list(combinations(range(n), 2)), p)


def cycle(n, p=0.5):
    return undirected(n, [(i, (i + 1) % n) for i in range(n)], p)


def path(n, p=0.5):
    return undirected(n, [(i, i + 1) for i in range(n - 1)], p)


def digraph(n, arcs, root=0):
    arcs = tuple(Arc(*a) for a in arcs)
    return DirectedMultigraph(n, root, arcs, pair_twins(arcs))


def reach_set(n, root, arcs):
    """Vertices that reach ``root`` using (tail, head) pairs, by fixpoint."""
    reach = {root}
    changed = True
    while changed:
        changed = False
        for t, h in arcs:
            if h in reach and t not in reach:
                reach.add(t)
                changed = True
    return reach


def brute_minimal_clusters(g, s):
    """Minimal clusters straight from the definition, over all vertex sets."""
    others = [v for v in range(g.n) if v != g.root]
    present = [(g.arcs[e].tail, g.arcs[e].head) for e in s]

    def is_cluster(c):
        return all(not (t in c and h not in c) for t, h in present)

    clusters = [frozenset(c) for k in range(1, len(others) + 1) for c in combinations(others, k)
                if is_cluster(set(c))]
    return sorted((c for c in clusters if not any(d < c for d in clusters)), key=min)


def brute_arborescences(g):
    count = 0
    for sub in combinations(range(g.m), g.n - 1):
        tails = [g.arcs[e].tail for e in sub]
        if g.root in tails or len(set(tails)) != g.n - 1:
            continue
        if len(reach_set(g.n, g.root, [(g.arcs[e].tail, g.arcs[e].head) for e in sub])) == g.n:
            count += 1
    return count


def connected(n, edges):
    comp = list(range(n))
    for u, v in edges:
        a, b = comp[u], comp[v]
        if a != b:
            comp = [a if c == b else c for c in comp]
    return len(set(comp)) == 1


def brute_spanning_trees(g):
    return sum(
        1 for sub in combinations(g.edges, g.n - 1) if connected(g.n, [(e.u, e.v) for e in sub])
    )


def brute_connected_counts(g):
    counts = {}
    for k in range(g.m + 1):
        for sub in combinations(g.edges, k):
            if connected(g.n, [(e.u, e.v) for e in sub]):
                counts[k] = counts.get(k, 0) + 1
    return counts
