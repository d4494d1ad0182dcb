"""Coupling between connected edge subsets of an undirected graph and
root-connected arc subsets of its bi-directed lift.

Both explorations grow the explored set from the root, always expanding the
active vertex with the smallest id. ``phi`` orients every explored edge
toward the endpoint explored first; ``psi`` keeps an edge exactly when its
arc pointing toward the earlier endpoint is present.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .graph import (
    DirectedMultigraph,
    EdgeSubset,
    ArcSubset,
    GraphError,
    UndirectedGraph,
    bidirect,
    is_connected,
)
from .popping import PoppingStats
from .rng import BLOCK_SIZE, as_generator, blocks, run_tasks


class DisconnectedGraphError(ValueError):
    pass


@dataclass
class TraversalCertificate:
    image: frozenset[int]
    order: list[int]
    excluded: frozenset[int] = field(default_factory=frozenset)


def _explore(n: int, root: int, incident, take):
    """Shared exploration loop.

    ``incident(v)`` yields (u, id) candidates at ``v``; ``take(id)`` says
    whether the candidate is kept. Returns kept ids and the visit order.
    """
    explored = [False] * n
    queued = [False] * n
    heap = [root]
    queued[root] = True
    kept: list[int] = []
    order: list[int] = []
    while heap:
        v = heapq.heappop(heap)
        for u, ident in incident(v):
            if explored[u] or not take(ident):
                continue
            kept.append(ident)
            if not queued[u]:
                queued[u] = True
                heapq.heappush(heap, u)
        explored[v] = True
        order.append(v)
    return kept, order


def phi(g: UndirectedGraph, s: EdgeSubset, root: int = 0) -> TraversalCertificate:
    """Orient the edges of ``s`` toward the root along the exploration.

    Arc ids refer to ``bidirect(g, root)``: edge ``i = {u, v}`` is arc
    ``2i`` as ``u -> v`` and ``2i+1`` as ``v -> u``. ``excluded`` holds the
    arcs outside the image whose head was explored before their tail.
    """
    if not 0 <= root < g.n:
        raise GraphError(f"root {root} is not a vertex")
    s = frozenset(s)
    adj: list[list[tuple[int, int]]] = [[] for _ in range(g.n)]
    for i, (u, v, _) in enumerate(g.edges):
        # arc whose head is the key vertex
        adj[v].append((u, 2 * i))
        adj[u].append((v, 2 * i + 1))
    arcs, order = _explore(g.n, root, lambda v: adj[v], lambda a: a // 2 in s)
    image = frozenset(arcs)
    rank = {v: k for k, v in enumerate(order)}
    excluded = set()
    for i, (u, v, _) in enumerate(g.edges):
        for arc, tail, head in ((2 * i, u, v), (2 * i + 1, v, u)):
            if arc in image or tail not in rank or head not in rank:
                continue
            if rank[head] < rank[tail]:
                excluded.add(arc)
    return TraversalCertificate(image, order, frozenset(excluded))


def psi(g: DirectedMultigraph, s_arcs: ArcSubset, root: int | None = None) -> TraversalCertificate:
    """Map a root-connected arc subset back to an edge subset.

    Edge ids are those of :meth:`DirectedMultigraph.edge_of_arc`.
    """
    if g.twin is None:
        raise GraphError("psi needs a bi-directed graph with a twin map")
    root = g.root if root is None else root
    edge = g.edge_of_arc()
    s_arcs = frozenset(s_arcs)
    into: list[list[tuple[int, int]]] = [[] for _ in range(g.n)]
    for e, (t, h, _) in enumerate(g.arcs):
        into[h].append((t, e))
    arcs, order = _explore(g.n, root, lambda v: into[v], lambda e: e in s_arcs)
    return TraversalCertificate(frozenset(edge[e] for e in arcs), order)


def _connected_block(h: DirectedMultigraph, n_edges: int, rng, count: int, keep: bool):
    a = h.arrays
    edge_of_arc = np.array(h.edge_of_arc(), dtype=np.int64)
    out = np.zeros((count if keep else 0, n_edges), dtype=np.bool_)
    sizes = np.zeros(count, dtype=np.int64)
    stats = np.zeros(3, dtype=np.int64)
    _kernels.connected_batch(
        a.n, a.root, a.tails, a.heads, a.q, a.out_ptr, a.out_arc, a.in_ptr, a.in_arc,
        edge_of_arc, n_edges, count, rng, out, sizes, stats,
    )
    return out, sizes, PoppingStats.from_array(stats)


def _seeded_connected_block(h, n_edges, seed, key, block, count, keep):
    return _connected_block(h, n_edges, as_generator(seed, *key, block), count, keep)


def _lift(g: UndirectedGraph, root: int) -> DirectedMultigraph:
    if not is_connected(g):
        raise DisconnectedGraphError(f"{g.describe()} is disconnected")
    return bidirect(g, root)


def sample_connected(g: UndirectedGraph, root: int, seed: int | np.random.Generator) -> tuple[frozenset[int], PoppingStats]:
    """One exact draw from the connected-subgraph distribution of ``g``."""
    h = _lift(g, root)
    out, _, stats = _connected_block(h, g.m, as_generator(seed), 1, True)
    return frozenset(np.flatnonzero(out[0]).tolist()), stats


def sample_connected_batch(
    g: UndirectedGraph,
    count: int,
    seed: int | np.random.Generator,
    root: int = 0,
    key: tuple[int, ...] = (),
    keep: bool = True,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray, PoppingStats]:
    """Many draws; returns (edge masks, edge counts, stats).

    With an integer seed, draw ``i`` uses stream ``(seed, *key, i //
    BLOCK_SIZE)``. A Generator is consumed directly in one block. With
    ``keep=False`` only the edge counts are produced.
    """
    h = _lift(g, root)
    if isinstance(seed, np.random.Generator):
        return _connected_block(h, g.m, seed, count, keep)
    tasks = [(h, g.m, seed, key, b, size, keep) for b, _, size in blocks(count, BLOCK_SIZE)]
    parts = run_tasks(_seeded_connected_block, tasks, threads)
    stats = PoppingStats()
    for _, _, st in parts:
        stats = stats.merge(st)
    if not parts:
        return np.zeros((0, g.m), dtype=np.bool_), np.zeros(0, dtype=np.int64), stats
    return np.vstack([p[0] for p in parts]), np.concatenate([p[1] for p in parts]), stats
