"""Cluster-popping: exact sampling of root-connected arc subsets.

Also hosts the repair map, which sends a subgraph with a single minimal
cluster to a root-connected one plus a (vertex, arc) witness from which the
original can be recovered. It is used by the tests to audit the bound on
the expected number of popped clusters.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .graph import (
    ArcSubset,
    DirectedMultigraph,
    GraphError,
    is_root_connected,
    reaching_root,
    scc_condensation,
    strongly_connected_components,
    successors,
)
from .rng import BLOCK_SIZE, as_generator, blocks, run_tasks

DIRECTED_ROUND_CAP = 10**6


class NotRootConnectedError(ValueError):
    pass


class RoundCapExceeded(RuntimeError):
    pass


@dataclass
class MinimalClusterReport:
    clusters: list[frozenset[int]]
    resample_arcs: frozenset[int]


@dataclass
class PoppingStats:
    popped_clusters: int = 0
    rounds: int = 0
    arcs_rerandomized: int = 0

    def merge(self, other: "PoppingStats") -> "PoppingStats":
        return PoppingStats(
            self.popped_clusters + other.popped_clusters,
            self.rounds + other.rounds,
            self.arcs_rerandomized + other.arcs_rerandomized,
        )

    @classmethod
    def from_array(cls, a) -> "PoppingStats":
        return cls(int(a[0]), int(a[1]), int(a[2]))


def find_minimal_clusters(g: DirectedMultigraph, s: ArcSubset) -> MinimalClusterReport:
    """Minimal clusters of ``(V, s)``: sink SCCs that avoid the root."""
    comp, dag = scc_condensation(g, s)
    root_comp = comp[g.root]
    members: dict[int, set[int]] = {}
    for v, c in enumerate(comp):
        if c != root_comp and not dag[c]:
            members.setdefault(c, set()).add(v)
    clusters = sorted((frozenset(c) for c in members.values()), key=min)
    inside = set().union(*clusters) if clusters else set()
    resample = frozenset(e for e, a in enumerate(g.arcs) if a.tail in inside)
    return MinimalClusterReport(clusters, resample)


def default_round_cap(g: DirectedMultigraph) -> int | None:
    return None if g.is_bidirected else DIRECTED_ROUND_CAP


def _check_sampleable(g: DirectedMultigraph) -> None:
    if not is_root_connected(g):
        raise NotRootConnectedError(f"{g.describe()} is not root-connected; cluster-popping cannot terminate")


def _pop_block(g: DirectedMultigraph, count: int, rng: np.random.Generator, round_cap: int | None):
    a = g.arrays
    out = np.zeros((count, g.m), dtype=np.bool_)
    popped = np.zeros(count, dtype=np.int64)
    stats = np.zeros(3, dtype=np.int64)
    cap = -1 if round_cap is None else int(round_cap)
    bad = _kernels.pop_batch(
        a.n, a.root, a.tails, a.heads, a.q, a.out_ptr, a.out_arc, a.in_ptr, a.in_arc,
        count, rng, cap, out, popped, stats,
    )
    if bad >= 0:
        raise RoundCapExceeded(f"sample {bad} did not finish within {cap} popping rounds")
    return out, popped, PoppingStats.from_array(stats)


def cluster_popping_sample(
    g: DirectedMultigraph, seed: int | np.random.Generator, round_cap: int | None = -1
) -> tuple[frozenset[int], PoppingStats]:
    """One exact draw from the root-connected distribution of ``g``.

    ``round_cap=-1`` selects the default: unlimited for bi-directed graphs,
    :data:`DIRECTED_ROUND_CAP` otherwise.
    """
    _check_sampleable(g)
    if round_cap == -1:
        round_cap = default_round_cap(g)
    out, _, stats = _pop_block(g, 1, as_generator(seed), round_cap)
    return frozenset(np.flatnonzero(out[0]).tolist()), stats


def _sample_block(g, seed, key, block, count, round_cap):
    return _pop_block(g, count, as_generator(seed, *key, block), round_cap)


def sample_reach(
    g: DirectedMultigraph,
    count: int,
    seed: int,
    key: tuple[int, ...] = (),
    round_cap: int | None = -1,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray, PoppingStats]:
    """``count`` independent draws as a boolean matrix (one row per sample).

    Draw ``i`` comes from stream ``(seed, *key, i // BLOCK_SIZE)``, so the
    result does not depend on ``threads``. Also returns popped clusters per
    sample and the merged statistics.
    """
    _check_sampleable(g)
    if round_cap == -1:
        round_cap = default_round_cap(g)
    tasks = [(g, seed, key, b, size, round_cap) for b, _, size in blocks(count, BLOCK_SIZE)]
    parts = run_tasks(_sample_block, tasks, threads)
    if not parts:
        return np.zeros((0, g.m), dtype=np.bool_), np.zeros(0, dtype=np.int64), PoppingStats()
    stats = PoppingStats()
    for _, _, st in parts:
        stats = stats.merge(st)
    return np.vstack([p[0] for p in parts]), np.concatenate([p[1] for p in parts]), stats


# ------------------------------------------------------------ repair map


@dataclass
class RepairWitness:
    s_fix: frozenset[int]
    v: int
    bridge_arc: int
    s_flip: frozenset[int] = field(default_factory=frozenset)
    w_set: frozenset[int] = field(default_factory=frozenset)


class RepairError(ValueError):
    pass


def _reachable_components(dag: list[list[int]], start: int) -> set[int]:
    seen = {start}
    todo = [start]
    while todo:
        c = todo.pop()
        for d in dag[c]:
            if d not in seen:
                seen.add(d)
                todo.append(d)
    return seen


def _components_on(g: DirectedMultigraph, s: ArcSubset, part: set[int]):
    comp = strongly_connected_components(g.n, successors(g, s, within=part))
    dag: dict[int, set[int]] = {}
    for e in s:
        t, h, _ = g.arcs[e]
        if t in part and h in part and comp[t] != comp[h]:
            dag.setdefault(comp[t], set()).add(comp[h])
    k = max(comp) + 1
    return comp, [sorted(dag.get(c, ())) for c in range(k)]


def _flip_zone(g: DirectedMultigraph, s: ArcSubset, part: set[int], start: int) -> tuple[set[int], set[int]]:
    """Vertices of ``part`` reachable from ``start``'s component in the
    condensation of ``s`` restricted to ``part``, and the inter-component
    arcs of ``s`` among them."""
    comp, dag = _components_on(g, s, part)
    zone_comps = _reachable_components(dag, comp[start])
    zone = {x for x in part if comp[x] in zone_comps}
    flip = {e for e in s if g.arcs[e].tail in zone and g.arcs[e].head in zone
            and comp[g.arcs[e].tail] != comp[g.arcs[e].head]}
    return zone, flip


def repair_map(g: DirectedMultigraph, s: ArcSubset) -> RepairWitness:
    """Repair a subgraph with exactly one minimal cluster.

    Adds the first arc leading from the vertices that cannot reach the root
    into those that can, and reverses the inter-component arcs downstream of
    that arc's tail so everything drains into it.
    """
    if not g.is_bidirected:
        raise GraphError("repair map needs a bi-directed graph")
    s = frozenset(s)
    report = find_minimal_clusters(g, s)
    if len(report.clusters) != 1:
        raise RepairError(f"subset has {len(report.clusters)} minimal clusters, need exactly 1")
    v = min(report.clusters[0])
    reach = reaching_root(g, s)
    unreached = set(range(g.n)) - reach
    bridge = next((e for e, a in enumerate(g.arcs) if a.tail in unreached and a.head in reach), None)
    if bridge is None:
        raise NotRootConnectedError("graph is not root-connected")
    zone, flip = _flip_zone(g, s, unreached, g.arcs[bridge].tail)
    flipped = {g.twin[e] for e in flip}
    s_fix = (s | {bridge} | flipped) - flip
    return RepairWitness(frozenset(s_fix), v, bridge, frozenset(flip), frozenset(zone))


def repair_invert(g: DirectedMultigraph, witness: RepairWitness) -> frozenset[int]:
    """Recover the subgraph that :func:`repair_map` repaired."""
    if not g.is_bidirected:
        raise GraphError("repair map needs a bi-directed graph")
    if witness.bridge_arc not in witness.s_fix:
        raise RepairError("bridge arc is missing from the repaired subgraph")
    rest = frozenset(witness.s_fix - {witness.bridge_arc})
    reach = reaching_root(g, rest)
    unreached = set(range(g.n)) - reach
    bridge = g.arcs[witness.bridge_arc]
    if witness.v not in unreached or bridge.tail not in unreached or bridge.head not in reach:
        raise RepairError("witness is inconsistent with the repaired subgraph")
    _, flip = _flip_zone(g, rest, unreached, witness.v)
    return frozenset((rest - flip) | {g.twin[e] for e in flip})
